"""Brute-force ground truth over all k-subsets of candidate centres.

Enumeration runs in two passes.  A vectorised float pass discards subsets
whose approximate cost is clearly above the running minimum; the survivors are
re-evaluated exactly, so every reported cost and every optimum is exact.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import BudgetExceeded
from .exact import Exact, format_exact
from .instance import Instance, enumeration_target, penalty_view, psi_pen

__all__ = [
    "DEFAULT_BUDGET",
    "OptimaSet",
    "CostDropReport",
    "NearlyGoodReport",
    "subset_count",
    "solve_exact",
    "all_subset_costs",
    "colex_key",
    "verify_cost_drop_theorem",
    "certify_nearly_good_implies_optimal",
]

DEFAULT_BUDGET = 10 ** 7
_BATCH = 1 << 15
# relative slack of the float pass; far above accumulated rounding error
_REL_TOL = 1e-9


def colex_key(ids: Iterable[int]) -> tuple:
    return tuple(sorted(ids, reverse=True))


@dataclass(frozen=True)
class OptimaSet:
    optimal_cost: Exact
    solutions: tuple
    enumeration_complete: bool = True
    evaluated: int = 0

    def __contains__(self, S) -> bool:
        return frozenset(S) in set(self.solutions)

    def to_text(self) -> str:
        lines = [
            f"optimal_cost {format_exact(self.optimal_cost)}",
            f"optimal_cost_float {float(self.optimal_cost):.12g}",
            f"optima {len(self.solutions)}",
            f"enumeration_complete {str(self.enumeration_complete).lower()}",
            f"evaluated {self.evaluated}",
        ]
        lines += ["solution " + " ".join(str(c) for c in sorted(S)) for S in self.solutions]
        return "\n".join(lines) + "\n"


def subset_count(inst: Instance, pins: frozenset = frozenset()) -> int:
    free = len(inst.centres) - len(pins)
    return math.comb(free, inst.k - len(pins))


def _batch_size(inst: Instance) -> int:
    # keep the (points, batch, k) float block near 16M entries
    return max(64, min(_BATCH, (1 << 24) // max(1, len(inst.points) * inst.k)))


def _batches(n_free: int, r: int, free_idx: np.ndarray, pin_idx: list, size: int = _BATCH):
    it = itertools.combinations(range(n_free), r)
    pins = np.asarray(pin_idx, dtype=np.intp)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        arr = free_idx[np.asarray(chunk, dtype=np.intp).reshape(len(chunk), r)]
        if len(pins):
            arr = np.hstack([arr, np.broadcast_to(pins, (len(arr), len(pins)))])
        yield arr


def _prefilter(ft, fpen, weights, power, subsets):
    best = ft[:, subsets].min(axis=2)
    if fpen is not None:
        best = np.minimum(best, fpen[:, None])
    if power == 1:
        best = np.sqrt(best)
    costs = weights @ best
    lo = float(costs.min())
    keep = costs <= lo + _REL_TOL * abs(lo) + 1e-12
    return lo, subsets[keep], costs[keep]


def _merge(parts):
    lo = min(p[0] for p in parts)
    cut = lo + _REL_TOL * abs(lo) + 1e-12
    rows = [p[1][p[2] <= cut] for p in parts]
    return np.vstack(rows) if rows else np.empty((0, 0), dtype=np.intp)


def solve_exact(obj, limit: int = DEFAULT_BUDGET, jobs: int = 1) -> OptimaSet:
    """Exact optimum cost and every optimal k-subset.

    For an :class:`AugmentedInstance` the dummy centre is kept in every
    subset and the reported solutions include it.
    """
    inst, pins = enumeration_target(obj)
    count = subset_count(inst, pins)
    if count > limit:
        raise BudgetExceeded("subsets", count, limit)
    pin_idx = [inst.centre_index[c] for c in sorted(pins)]
    free_idx = np.array([i for i in range(len(inst.centres)) if i not in set(pin_idx)], dtype=np.intp)
    r = inst.k - len(pins)
    args = (inst.float_table, inst.float_penalties, np.asarray(inst.multiplicities, dtype=float), inst.power)
    batches = _batches(len(free_idx), r, free_idx, pin_idx, _batch_size(inst))
    if jobs and jobs > 1 and count > _batch_size(inst):
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=jobs)(delayed(_prefilter)(*args, b) for b in batches)
    else:
        parts = [_prefilter(*args, b) for b in batches]
    candidates = _merge(parts)
    best: Exact | None = None
    winners: list = []
    for row in candidates:
        c = inst.cost_of_indices(row)
        if best is None or c < best:
            best, winners = c, [row]
        elif c == best:
            winners.append(row)
    sols = sorted({inst.subset_ids(row) for row in winners}, key=colex_key)
    return OptimaSet(best, tuple(sols), True, count)


def all_subset_costs(obj, limit: int = DEFAULT_BUDGET) -> list:
    """Every feasible solution with its exact cost, in colex order."""
    inst, pins = enumeration_target(obj)
    count = subset_count(inst, pins)
    if count > limit:
        raise BudgetExceeded("subsets", count, limit)
    ids = sorted(inst.centre_ids)
    free = [c for c in ids if c not in pins]
    out = []
    for combo in itertools.combinations(free, inst.k - len(pins)):
        S = frozenset(combo) | pins
        out.append((S, inst.cost(S)))
    out.sort(key=lambda t: colex_key(t[0]))
    return out


@dataclass
class CostDropReport:
    """Outcome of the exhaustive cost-drop check.

    ``min_rho`` maps each premise pair ``(S, O)`` to the smallest swap size at
    which a qualifying neighbour exists.  ``counterexamples`` lists pairs with
    no qualifying neighbour at ``|S - O|``; ``failures_at_rho`` those without
    one at the requested ``rho``.
    """

    eps: Fraction
    rho: int | None
    pairs: int = 0
    premise_pairs: int = 0
    min_rho: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)
    failures_at_rho: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    @property
    def max_min_rho(self) -> int:
        return max(self.min_rho.values(), default=0)

    def to_text(self) -> str:
        hist: dict = {}
        for v in self.min_rho.values():
            hist[v] = hist.get(v, 0) + 1
        lines = [
            f"eps {self.eps}",
            f"pairs {self.pairs}",
            f"premise_pairs {self.premise_pairs}",
            f"counterexamples {len(self.counterexamples)}",
            f"max_min_rho {self.max_min_rho}",
        ]
        lines += [f"min_rho {r} pairs {hist[r]}" for r in sorted(hist)]
        if self.rho is not None:
            lines.append(f"failures_at_rho {self.rho} {len(self.failures_at_rho)}")
        return "\n".join(lines) + "\n"


def verify_cost_drop_theorem(obj, eps, rho: int | None = None, limit: int = DEFAULT_BUDGET) -> CostDropReport:
    """Check the cost-drop statement for every ordered pair of solutions.

    A pair ``(S, O)`` is a premise pair when ``cost(S) > cost(O) + eps*Psi(S, O)``;
    a neighbour ``S'`` qualifies when
    ``cost(S') <= cost(S) + (cost(O) - cost(S) + eps*Psi(S, O)) / k``.
    Penalty instances use the penalised cost and ``psi_pen``.
    """
    inst = penalty_view(obj)
    eps = Fraction(eps)
    table = all_subset_costs(inst, limit)
    if len(table) ** 2 > limit:
        raise BudgetExceeded("solution pairs", len(table) ** 2, limit)
    order = sorted(range(len(table)), key=lambda n: table[n][1])
    sorted_costs = [table[n][1] for n in order]
    report = CostDropReport(eps, rho)
    k = inst.k
    for S, cS in table:
        dists = [len(S - table[n][0]) for n in order]
        prefix, run = [], k + 1
        for d in dists:
            run = min(run, d)
            prefix.append(run)
        for O, cO in table:
            report.pairs += 1
            if O == S:
                continue
            slack = eps * psi_pen(inst, S, O)
            if not cS > cO + slack:
                continue
            report.premise_pairs += 1
            bound = cS + (cO - cS + slack) / k
            pos = bisect.bisect_right(sorted_costs, bound)
            need = prefix[pos - 1] if pos else None
            report.min_rho[S, O] = need
            if need is None or need > len(S - O):
                report.counterexamples.append((S, O))
            if rho is not None and (need is None or need > rho):
                report.failures_at_rho.append((S, O))
    return report


@dataclass
class NearlyGoodReport:
    eps: Fraction
    optima: OptimaSet
    nearly_good: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = [
            f"eps {self.eps}",
            f"optima {len(self.optima.solutions)}",
            f"nearly_good {len(self.nearly_good)}",
            f"violations {len(self.violations)}",
        ]
        lines += ["violation " + " ".join(map(str, sorted(S))) for S in self.violations]
        return "\n".join(lines) + "\n"


def certify_nearly_good_implies_optimal(obj, eps, limit: int = DEFAULT_BUDGET) -> NearlyGoodReport:
    """List nearly-good solutions that are not optimal.

    On stable instances (with eps tied to the stability factor) the list
    should be empty; on unstable ones a nonempty list is a diagnostic.
    """
    from .local_search import is_nearly_good

    inst = penalty_view(obj)
    eps = Fraction(eps)
    optima = solve_exact(inst, limit)
    report = NearlyGoodReport(eps, optima)
    opt_set = set(optima.solutions)
    for S, _ in all_subset_costs(inst, limit):
        good, _ = is_nearly_good(inst, S, optima, eps)
        if good:
            report.nearly_good.append(S)
            if S not in opt_set:
                report.violations.append(S)
    return report
