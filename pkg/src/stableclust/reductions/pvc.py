"""Partial vertex cover encoded on the moment curve.

Vertices ``1..n`` become centres on the moment curve; every edge becomes a
data point at the centre of a sphere tangent to the curve at its endpoints,
lifted along an extra axis so that every edge point sits at distance exactly
``r_q`` from both endpoint centres.  Any other vertex centre is at squared
distance at least ``r_q^2 + 1/4``.

Two variants are built:

``pvc4``
    k-median with penalties in R^4; every edge point has penalty
    ``sqrt(r_q^2 + 1/4)``.
``pvc6``
    plain k'-median in R^6 with ``k' = k + 1``; a sentinel centre at
    ``(1, 1, 1, 1, 0, 1/2)`` plays the role of the penalty and carries
    ``ceil(m * r_q)`` co-located data points.

Either way, a solution whose vertices cover ``s`` edges costs
``r_q * s + sqrt(r_q^2 + 1/4) * (m - s)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from ..errors import BudgetExceeded, InstanceError
from ..exact import Exact, ceil_exact, format_exact, sqrt_rational
from ..instance import Instance
from ..metric import EUCLIDEAN, Point, squared_distance
from ..oracle import DEFAULT_BUDGET, all_subset_costs, solve_exact
from .certificate import ReductionCertificate
from .spheres import fit_sphere_3d, fit_sphere_4d, moment_point

__all__ = [
    "PvcGraph",
    "PvcReduction",
    "coverage",
    "solve_pvc",
    "build_pvc4_instance",
    "build_pvc6_instance",
    "build_pvc_instance",
    "pvc_cost_formula",
    "separation_gaps",
    "certify_pvc_equivalence",
]


@dataclass(frozen=True)
class PvcGraph:
    """Simple graph on vertices ``1..n_vertices`` with cover size ``k`` and target ``s``."""

    n_vertices: int
    edges: tuple
    k: int
    s: int = 0

    def __post_init__(self):
        if self.n_vertices < 1:
            raise InstanceError("graph needs at least one vertex")
        if not 1 <= self.k <= self.n_vertices:
            raise InstanceError(f"k={self.k} outside [1, {self.n_vertices}]")
        if self.s < 0:
            raise InstanceError("s must be nonnegative")
        seen = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise InstanceError(f"self-loop at vertex {u}")
            if not (1 <= u <= self.n_vertices and 1 <= v <= self.n_vertices):
                raise InstanceError(f"edge {e} has an endpoint outside [1, {self.n_vertices}]")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InstanceError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def m(self) -> int:
        return len(self.edges)


def coverage(g: PvcGraph, vertices) -> int:
    vs = set(vertices)
    return sum(1 for u, v in g.edges if u in vs or v in vs)


def solve_pvc(g: PvcGraph, budget: int = DEFAULT_BUDGET) -> tuple[int, list]:
    """Best coverage ``s*`` over all k-vertex sets and every set achieving it."""
    count = math.comb(g.n_vertices, g.k)
    if count > budget:
        raise BudgetExceeded("vertex subsets", count, budget)
    best, winners = -1, []
    for combo in itertools.combinations(range(1, g.n_vertices + 1), g.k):
        c = coverage(g, combo)
        if c > best:
            best, winners = c, [frozenset(combo)]
        elif c == best:
            winners.append(frozenset(combo))
    return best, winners


@dataclass(frozen=True)
class PvcReduction:
    """A generated instance with the exact constants of its construction.

    Centre ``i`` is vertex ``i``; in the pvc6 variant the sentinel is centre
    ``n + 1`` and its co-located data point has id ``m``.  Data point ``e`` is
    the ``e``-th edge of the sorted edge list.
    """

    variant: str
    graph: PvcGraph
    instance: Instance
    r_q_sq: Fraction
    eps: Exact
    eps_prime: Exact
    sentinel: int | None = None

    @property
    def r_q(self) -> Exact:
        return sqrt_rational(self.r_q_sq)

    @property
    def far(self) -> Exact:
        """``r_q * (1 + eps)``, the cost of an uncovered edge."""
        return sqrt_rational(self.r_q_sq + Fraction(1, 4))

    @property
    def alpha(self) -> Exact:
        return 1 + self.eps_prime


def _check_graph(g: PvcGraph) -> None:
    if g.m == 0:
        raise InstanceError("the reduction needs at least one edge")


def _eps(r_q_sq: Fraction, m: int) -> tuple[Exact, Exact]:
    eps = sqrt_rational((r_q_sq + Fraction(1, 4)) / r_q_sq) - 1
    return eps, eps / (2 * m)


def _provenance(variant: str, g: PvcGraph, r_q_sq, eps, eps_prime) -> dict:
    return {
        "source": variant,
        "n": str(g.n_vertices),
        "k": str(g.k),
        "s": str(g.s),
        "edges": ";".join(f"{u},{v}" for u, v in g.edges),
        "r_q_sq": format_exact(r_q_sq),
        "eps": format_exact(eps),
        "eps_prime": format_exact(eps_prime),
    }


def build_pvc4_instance(g: PvcGraph) -> PvcReduction:
    _check_graph(g)
    fits = [fit_sphere_3d(u, v) for u, v in g.edges]
    r_q_sq = max(f.radius_sq for f in fits)
    eps, eps_prime = _eps(r_q_sq, g.m)
    points = [Point(e, f.centre, lift_sq=(r_q_sq - f.radius_sq,)) for e, f in enumerate(fits)]
    centres = [Point(i, moment_point(i, 3), lift_sq=(Fraction(0),), role="centre")
               for i in range(1, g.n_vertices + 1)]
    pen = sqrt_rational(r_q_sq + Fraction(1, 4))
    inst = Instance("kmedian", points, centres, EUCLIDEAN, g.k, {p.id: pen for p in points},
                    provenance=_provenance("pvc4", g, r_q_sq, eps, eps_prime))
    return PvcReduction("pvc4", g, inst, r_q_sq, eps, eps_prime)


def build_pvc6_instance(g: PvcGraph) -> PvcReduction:
    _check_graph(g)
    z = (1, 1, 1, 1)
    fits = [fit_sphere_4d(1, u + 1, v + 1, through_point=z) for u, v in g.edges]
    r_q_sq = max(f.radius_sq for f in fits)
    eps, eps_prime = _eps(r_q_sq, g.m)
    points = [Point(e, f.centre, lift_sq=(r_q_sq - f.radius_sq, Fraction(0))) for e, f in enumerate(fits)]
    centres = [Point(i, moment_point(i + 1, 4), lift_sq=(Fraction(0), Fraction(0)), role="centre")
               for i in range(1, g.n_vertices + 1)]
    sentinel = g.n_vertices + 1
    z_lift = (Fraction(0), Fraction(1, 4))
    centres.append(Point(sentinel, z, lift_sq=z_lift, role="centre"))
    heavy = ceil_exact(g.m * sqrt_rational(r_q_sq))
    points.append(Point(g.m, z, heavy, lift_sq=z_lift))
    prov = _provenance("pvc6", g, r_q_sq, eps, eps_prime)
    prov["sentinel"] = str(sentinel)
    prov["sentinel_multiplicity"] = str(heavy)
    inst = Instance("kmedian", points, centres, EUCLIDEAN, g.k + 1, provenance=prov)
    return PvcReduction("pvc6", g, inst, r_q_sq, eps, eps_prime, sentinel)


def build_pvc_instance(g: PvcGraph, variant: str) -> PvcReduction:
    if variant == "pvc4":
        return build_pvc4_instance(g)
    if variant == "pvc6":
        return build_pvc6_instance(g)
    raise InstanceError(f"unknown variant {variant!r}")


def pvc_cost_formula(red: PvcReduction, s: int) -> Exact:
    """``r_q * (m + (m - s) * eps)``, written as ``s * r_q + (m - s) * r_q (1 + eps)``."""
    m = red.graph.m
    return s * red.r_q + (m - s) * red.far


def separation_gaps(red: PvcReduction) -> list:
    """``delta^2(edge point, v_t) - r_q^2`` for every edge and every non-endpoint vertex."""
    inst = red.instance
    out = []
    for e, (u, v) in enumerate(red.graph.edges):
        p = inst.points[e]
        for c in inst.centres:
            if c.id in (u, v) or c.id == red.sentinel:
                continue
            out.append((e, c.id, squared_distance(inst.metric, p, c) - red.r_q_sq))
    return out


def _vertices(red: PvcReduction, S) -> frozenset:
    return frozenset(c for c in S if c != red.sentinel)


def certify_pvc_equivalence(g: PvcGraph, variant: str = "pvc4", budget: int = DEFAULT_BUDGET) -> ReductionCertificate:
    """Run both oracles and check the reduction exhaustively.

    Checks: every solution costs what the formula predicts (pvc6: solutions
    holding the sentinel; the others must cost strictly more than the
    optimum); for every ``s`` in ``[0, m]`` a cover of ``s`` edges exists iff
    some solution costs at most ``formula(s)``; the clustering optima are
    exactly the best covers (plus the sentinel for pvc6).
    """
    red = build_pvc_instance(g, variant)
    inst = red.instance
    s_star, covers = solve_pvc(g, budget)
    table = all_subset_costs(inst, budget)
    opt = solve_exact(inst, budget)
    formula_ok = True
    without_sentinel_dearer = True
    for S, cost in table:
        if red.sentinel is not None and red.sentinel not in S:
            without_sentinel_dearer &= cost > opt.optimal_cost
            continue
        formula_ok &= cost == pvc_cost_formula(red, coverage(g, _vertices(red, S)))
    sweep = {}
    for s in range(g.m + 1):
        threshold = pvc_cost_formula(red, s)
        sweep[s] = (s_star >= s) == (opt.optimal_cost <= threshold)
    expected = {c | ({red.sentinel} if red.sentinel is not None else set()) for c in covers}
    cert = ReductionCertificate(
        variant,
        {"n": g.n_vertices, "m": g.m, "k": g.k, "s": g.s,
         "r_q_sq": format_exact(red.r_q_sq), "eps": format_exact(red.eps)},
        f"s_star {s_star}",
        opt.optimal_cost,
        pvc_cost_formula(red, g.s) if g.s <= g.m else None,
    )
    cert.checks["cost_formula"] = formula_ok
    cert.checks["iff_sweep"] = all(sweep.values())
    cert.checks["optima_correspondence"] = set(opt.solutions) == expected
    cert.checks["separation"] = all(gap >= Fraction(1, 4) for _, _, gap in separation_gaps(red))
    if red.sentinel is not None:
        cert.checks["sentinel_in_optima"] = all(red.sentinel in S for S in opt.solutions)
        cert.checks["sentinel_solutions_dearer"] = without_sentinel_dearer
        far_sq = squared_distance(inst.metric, inst.centres[-1], inst.centres[0])
        cert.checks["sentinel_far_from_v1"] = far_sq >= 4
    cert.details["sweep"] = " ".join(f"{s}:{'ok' if v else 'bad'}" for s, v in sweep.items())
    cert.details["optima"] = len(opt.solutions)
    cert.details["verdict_at_s"] = str(s_star >= g.s).lower()
    return cert
