"""Grid tiling (inequality version) and its clustering encodings.

Cells ``(i, j)`` and pairs ``(a, b)`` are 1-based.  A selection picks one pair
``s[i, j]`` per cell so that first coordinates do not decrease from row ``i``
to row ``i + 1`` and second coordinates do not decrease from column ``j`` to
column ``j + 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..errors import BudgetExceeded, InstanceError
from ..exact import format_exact, to_fraction
from ..instance import Instance
from ..metric import CYLINDER_MAX, EUCLIDEAN, Point
from ..oracle import DEFAULT_BUDGET, solve_exact
from .certificate import ReductionCertificate

__all__ = [
    "GridTilingInstance",
    "GridReductionSpec",
    "solve_grid_tiling",
    "is_valid_selection",
    "grid_centre_labels",
    "build_grid_instance",
    "build_cylinder_instance",
    "compute_nu",
    "certify_grid_equivalence",
]


@dataclass(frozen=True)
class GridTilingInstance:
    n: int
    k: int
    sets: Mapping

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise InstanceError("grid tiling needs n >= 1 and k >= 1")
        cells = {(i, j) for i in range(1, self.k + 1) for j in range(1, self.k + 1)}
        sets = {tuple(c): frozenset(tuple(p) for p in v) for c, v in self.sets.items()}
        if set(sets) != cells:
            raise InstanceError("grid tiling needs exactly one set per cell of [k] x [k]")
        for c, v in sets.items():
            if not v:
                raise InstanceError(f"set of cell {c} is empty")
            for a, b in v:
                if not (1 <= a <= self.n and 1 <= b <= self.n):
                    raise InstanceError(f"pair {(a, b)} of cell {c} outside [n] x [n]")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def full(cls, n: int, k: int) -> "GridTilingInstance":
        pairs = frozenset(itertools.product(range(1, n + 1), repeat=2))
        return cls(n, k, {(i, j): pairs for i in range(1, k + 1) for j in range(1, k + 1)})


def is_valid_selection(gt: GridTilingInstance, sel: Mapping) -> bool:
    for (i, j), (a, b) in sel.items():
        if (a, b) not in gt.sets[i, j]:
            return False
        if i < gt.k and a > sel[i + 1, j][0]:
            return False
        if j < gt.k and b > sel[i, j + 1][1]:
            return False
    return len(sel) == gt.k * gt.k


def solve_grid_tiling(gt: GridTilingInstance, budget: int = DEFAULT_BUDGET) -> dict | None:
    """A valid selection, or None; cells are filled in row-major order with pruning."""
    total = math.prod(len(v) for v in gt.sets.values())
    if total > budget:
        raise BudgetExceeded("grid tiling combinations", total, budget)
    cells = [(i, j) for i in range(1, gt.k + 1) for j in range(1, gt.k + 1)]
    options = {c: sorted(gt.sets[c]) for c in cells}
    sel: dict = {}

    def place(pos: int) -> bool:
        if pos == len(cells):
            return True
        i, j = cells[pos]
        for a, b in options[i, j]:
            if i > 1 and sel[i - 1, j][0] > a:
                continue
            if j > 1 and sel[i, j - 1][1] > b:
                continue
            sel[i, j] = (a, b)
            if place(pos + 1):
                return True
            del sel[i, j]
        return False

    return dict(sel) if place(0) else None


@dataclass(frozen=True)
class GridReductionSpec:
    """Grid tiling instance plus lattice spacing ``eps`` and optional threshold ``nu``."""

    gt: GridTilingInstance
    eps: Fraction
    nu: Fraction | None = None

    def __post_init__(self):
        eps = to_fraction(self.eps)
        if eps <= 0:
            raise InstanceError("eps must be positive")
        steps = 2 * self.gt.k / eps
        if steps.denominator != 1:
            raise InstanceError("2k/eps must be an integer so the lattice fills the square")
        object.__setattr__(self, "eps", eps)

    @property
    def side(self) -> Fraction:
        return 2 * self.gt.k + self.eps * (self.gt.n - 1)

    @property
    def lattice_steps(self) -> int:
        return int(2 * self.gt.k / self.eps) + self.gt.n

    @property
    def sigma_count(self) -> int:
        return self.lattice_steps ** 2

    @property
    def beta_certified(self) -> Fraction:
        """``k^2 * eps * (n - 1)``, the matching distance the construction certifies."""
        return self.gt.k ** 2 * self.eps * (self.gt.n - 1)


def grid_centre_labels(spec: GridReductionSpec) -> list:
    """``(centre id, (i, j), (u, v), coords)`` in id order."""
    out = []
    cid = 0
    for i in range(1, spec.gt.k + 1):
        for j in range(1, spec.gt.k + 1):
            for u, v in sorted(spec.gt.sets[i, j]):
                xy = (2 * i - 1 + spec.eps * (u - 1), 2 * j - 1 + spec.eps * (v - 1))
                out.append((cid, (i, j), (u, v), xy))
                cid += 1
    return out


def _lattice(spec: GridReductionSpec) -> list:
    m = spec.lattice_steps
    return [(spec.eps * x, spec.eps * y) for x in range(m) for y in range(m)]


def _provenance(spec: GridReductionSpec, kind: str) -> dict:
    sets = ";".join(
        f"{i},{j}:" + ",".join(f"{a}.{b}" for a, b in sorted(spec.gt.sets[i, j]))
        for i in range(1, spec.gt.k + 1) for j in range(1, spec.gt.k + 1)
    )
    return {
        "source": kind,
        "n": str(spec.gt.n),
        "k": str(spec.gt.k),
        "eps": format_exact(spec.eps),
        "sigma": str(spec.sigma_count),
        "sets": sets,
    }


def build_grid_instance(spec: GridReductionSpec) -> Instance:
    """k-median with unit penalties on the eps-lattice; opens ``k^2`` centres."""
    points = [Point(n, xy) for n, xy in enumerate(_lattice(spec))]
    centres = [Point(cid, xy, role="centre") for cid, _, _, xy in grid_centre_labels(spec)]
    penalties = {p.id: Fraction(1) for p in points}
    return Instance("kmedian", points, centres, EUCLIDEAN, spec.gt.k ** 2, penalties,
                    provenance=_provenance(spec, "grid-tiling"))


def build_cylinder_instance(spec: GridReductionSpec) -> Instance:
    """Penalty-free variant under the cylinder metric; opens ``3 k^2`` centres.

    Lattice points and grid centres sit at height 0.  Each cell adds sentinel
    centres at ``(2i - 1, 2j, 1)`` and ``(2i, 2j - 1, 1)``, each carrying a data
    point of multiplicity Sigma.
    """
    sigma = spec.sigma_count
    lattice = _lattice(spec)
    points = [Point(n, (x, y, 0)) for n, (x, y) in enumerate(lattice)]
    labels = grid_centre_labels(spec)
    centres = [Point(cid, (x, y, 0), role="centre") for cid, _, _, (x, y) in labels]
    pid, cid = len(points), len(centres)
    for i in range(1, spec.gt.k + 1):
        for j in range(1, spec.gt.k + 1):
            for xyz in ((2 * i - 1, 2 * j, 1), (2 * i, 2 * j - 1, 1)):
                points.append(Point(pid, xyz, sigma))
                centres.append(Point(cid, xyz, role="centre"))
                pid += 1
                cid += 1
    prov = _provenance(spec, "grid-tiling-cylinder")
    prov["sentinels_from"] = str(len(labels))
    return Instance("kmedian", points, centres, CYLINDER_MAX, 3 * spec.gt.k ** 2, provenance=prov)


def compute_nu(spec: GridReductionSpec, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Threshold for the equivalence: optimum of the all-pairs instance with the same n, k, eps.

    Falls back to the cost of the all-``(1, 1)`` selection (always valid) when
    the all-pairs instance is too large to enumerate.
    """
    if spec.nu is not None:
        return spec.nu
    full = GridReductionSpec(GridTilingInstance.full(spec.gt.n, spec.gt.k), spec.eps)
    inst = build_grid_instance(full)
    try:
        return solve_exact(inst, budget).optimal_cost
    except BudgetExceeded:
        ids = [cid for cid, _, uv, _ in grid_centre_labels(full) if uv == (1, 1)]
        return inst.cost(ids)


def certify_grid_equivalence(spec: GridReductionSpec, budget: int = DEFAULT_BUDGET) -> ReductionCertificate:
    """Solve both sides and compare: tiling solvable iff clustering optimum <= nu."""
    sel = solve_grid_tiling(spec.gt, budget)
    inst = build_grid_instance(spec)
    opt = solve_exact(inst, budget)
    nu = compute_nu(spec, budget)
    labels = {cid: ij for cid, ij, _, _ in grid_centre_labels(spec)}
    one_per_cell = all(
        sorted(labels[c] for c in O) == _cells(spec) for O in opt.solutions
    )
    cert = ReductionCertificate(
        "grid-tiling",
        {"n": spec.gt.n, "k": spec.gt.k, "eps": format_exact(spec.eps), "sigma": spec.sigma_count},
        "solvable" if sel is not None else "unsolvable",
        opt.optimal_cost,
        nu,
    )
    cert.checks["iff"] = (sel is not None) == (opt.optimal_cost <= nu)
    cert.details["one_centre_per_cell"] = str(one_per_cell).lower()
    cert.details["optima"] = len(opt.solutions)
    cert.details["nu_source"] = "given" if spec.nu is not None else "all-pairs optimum"
    if sel is not None:
        cert.details["selection"] = " ".join(f"{i},{j}={a}.{b}" for (i, j), (a, b) in sorted(sel.items()))
    return cert


def _cells(spec: GridReductionSpec) -> list:
    return [(i, j) for i in range(1, spec.gt.k + 1) for j in range(1, spec.gt.k + 1)]
