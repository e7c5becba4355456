"""Shared fixture builders for the test suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from stableclust import EUCLIDEAN, Instance, Point
from stableclust.reductions import GridReductionSpec, GridTilingInstance, PvcGraph


def line_instance(objective: str = "kmedian") -> Instance:
    """X = C = {0, 1, 4, 5} on a line with k = 2; ids equal coordinates."""
    xs = (0, 1, 4, 5)
    pts = [Point(x, (x,)) for x in xs]
    cts = [Point(x, (x,), role="centre") for x in xs]
    return Instance(objective, pts, cts, EUCLIDEAN, 2)


def penalty_pair(objective: str = "kmedian") -> Instance:
    """X = {0, 10}, C = {0}, k = 1, p(0) = 5, p(10) = 3."""
    pts = [Point(0, (0,)), Point(10, (10,))]
    return Instance(objective, pts, [Point(0, (0,), role="centre")], EUCLIDEAN, 1, {0: 5, 10: 3})


def two_optima() -> Instance:
    """X = C = {0, 1}, k = 1: two cost-tied optima one unit apart."""
    pts = [Point(0, (0,)), Point(1, (1,))]
    cts = [Point(0, (0,), role="centre"), Point(1, (1,), role="centre")]
    return Instance("kmedian", pts, cts, EUCLIDEAN, 1)


def random_instance(rng: np.random.Generator, n_points: int = 8, n_centres: int = 5, k: int = 2,
                    objective: str = "kmedian", penalties: bool = False, side: int = 12) -> Instance:
    """Distinct integer points in a square; centres sit on a random subset of the points."""
    cells = rng.choice(side * side, size=n_points, replace=False)
    pts = [Point(j, (int(c) // side, int(c) % side)) for j, c in enumerate(cells)]
    ids = sorted(int(i) for i in rng.choice(n_points, size=n_centres, replace=False))
    cts = [Point(i, pts[i].coords, role="centre") for i in ids]
    pen = {p.id: Fraction(int(rng.integers(1, 2 * side))) for p in pts} if penalties else None
    return Instance(objective, pts, cts, EUCLIDEAN, k, pen)


_RING = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]


def planted_instance(rng: np.random.Generator, k: int, objective: str = "kmedian",
                     per_cluster: int = 7, decoys: int = 2, spread: int = 60,
                     penalties: bool = False) -> Instance:
    """k tight clusters far apart; each offers its core and a few decoy candidates.

    Decoys sit two or three units off the core, so the core choice is strictly
    cheaper by a margin that survives small multiplicative perturbations.
    """
    anchors = [(spread * c + int(rng.integers(0, 5)), int(rng.integers(0, 5))) for c in range(k)]
    pts, cts = [], []
    for a in anchors:
        offs = [_RING[i] for i in rng.choice(len(_RING), size=per_cluster, replace=False)]
        if (0, 0) not in offs:
            offs[0] = (0, 0)
        for dx, dy in offs:
            pts.append(Point(len(pts), (a[0] + dx, a[1] + dy)))
        cts.append(Point(len(cts), a, role="centre"))
        for _ in range(decoys):
            dx, dy = (int(v) for v in rng.choice([-3, -2, 2, 3], size=2))
            cts.append(Point(len(cts), (a[0] + dx, a[1] + dy), role="centre"))
    perm = [int(i) for i in rng.permutation(len(cts))]
    cts = [Point(perm[n], c.coords, role="centre") for n, c in enumerate(cts)]
    pen = {p.id: Fraction(spread) ** (2 if objective == "kmeans" else 1) for p in pts} if penalties else None
    return Instance(objective, pts, cts, EUCLIDEAN, k, pen)


def p3() -> PvcGraph:
    return PvcGraph(3, ((1, 2), (2, 3)), 1, 2)


def triangle() -> PvcGraph:
    return PvcGraph(3, ((1, 2), (2, 3), (1, 3)), 1, 2)


def star() -> PvcGraph:
    return PvcGraph(4, ((1, 2), (1, 3), (1, 4)), 1, 3)


def c4() -> PvcGraph:
    return PvcGraph(4, ((1, 2), (2, 3), (3, 4), (1, 4)), 2, 4)


def random_graph(rng: np.random.Generator, max_n: int = 8, max_k: int = 3) -> PvcGraph:
    n = int(rng.integers(3, max_n + 1))
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    m = int(rng.integers(1, min(len(pairs), 10) + 1))
    edges = [pairs[i] for i in sorted(rng.choice(len(pairs), size=m, replace=False))]
    k = int(rng.integers(1, min(max_k, n) + 1))
    return PvcGraph(n, tuple(edges), k, 0)


def row_grid(k: int) -> GridTilingInstance:
    """n = 2 tiling whose every cell holds the horizontal pair {(1,1), (2,1)}."""
    return GridTilingInstance(2, k, {(i, j): {(1, 1), (2, 1)} for i in range(1, k + 1) for j in range(1, k + 1)})


def contradiction_grid() -> GridTilingInstance:
    return GridTilingInstance(2, 2, {(1, 1): {(2, 2)}, (2, 1): {(1, 1)}, (1, 2): {(1, 1)}, (2, 2): {(2, 2)}})


def grid_spec(gt: GridTilingInstance, eps=Fraction(1, 2)) -> GridReductionSpec:
    return GridReductionSpec(gt, Fraction(eps))
