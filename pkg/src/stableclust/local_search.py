"""Best-improvement rho-swap local search and the nearly-good diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import BudgetExceeded, InstanceError
from .exact import Exact, format_exact
from .instance import (
    AugmentedInstance,
    Instance,
    Solution,
    enumeration_target,
    penalty_view,
    psi_pen,
    solution_cost,
)

__all__ = [
    "NEIGHBOURHOOD_LIMIT",
    "SearchConfig",
    "TraceStep",
    "SearchTrace",
    "neighbourhood_size",
    "rho_swap_search",
    "is_nearly_good",
    "cost_drop_witness",
]

NEIGHBOURHOOD_LIMIT = 10 ** 8
_REL_TOL = 1e-9


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the search.

    ``rho`` is clamped to what the instance admits (``k - |pins|`` and the
    number of closed centres).  ``epsilon`` is only used for diagnostics.
    """

    rho: int = 2
    max_iters: int | None = None
    epsilon: Fraction = Fraction(1, 10)
    pin_centres: frozenset = frozenset()
    seed_solution: frozenset | None = None
    force: bool = False

    def __post_init__(self):
        if self.rho < 1:
            raise InstanceError("rho must be at least 1")
        if self.max_iters is not None and self.max_iters < 1:
            raise InstanceError("max_iters must be positive")
        object.__setattr__(self, "pin_centres", frozenset(self.pin_centres))
        if self.seed_solution is not None:
            object.__setattr__(self, "seed_solution", frozenset(self.seed_solution))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    solution: frozenset
    cost: Exact
    swap_in: tuple = ()
    swap_out: tuple = ()


@dataclass
class SearchTrace:
    iterations: list = field(default_factory=list)
    terminated_reason: str = "local_opt"
    theoretical_bound: float = 0.0
    evaluations: int = 0
    rho: int = 0

    @property
    def swaps(self) -> int:
        return max(len(self.iterations) - 1, 0)

    def to_text(self) -> str:
        lines = [
            f"rho {self.rho}",
            f"terminated {self.terminated_reason}",
            f"bound {self.theoretical_bound:.6f}",
            f"evaluations {self.evaluations}",
        ]
        for st in self.iterations:
            ins = ",".join(map(str, st.swap_in)) or "-"
            outs = ",".join(map(str, st.swap_out)) or "-"
            sol = ",".join(map(str, sorted(st.solution)))
            lines.append(f"iter {st.iteration} in {ins} out {outs} cost {format_exact(st.cost)} solution {sol}")
        return "\n".join(lines) + "\n"


def neighbourhood_size(k: int, n_centres: int, n_pins: int, rho: int) -> int:
    free = k - n_pins
    return sum(math.comb(free, s) * math.comb(n_centres - k, s) for s in range(1, rho + 1))


def _seed(inst: Instance, pins: frozenset, cfg: SearchConfig) -> frozenset:
    if cfg.seed_solution is not None:
        S = cfg.seed_solution
        if len(S) != inst.k or not pins <= S:
            raise InstanceError("seed solution must have k centres and contain every pin")
        inst._indices(S)
        return S
    chosen = list(pins)
    for c in inst.centre_order:
        if len(chosen) == inst.k:
            break
        if c not in pins:
            chosen.append(c)
    return frozenset(chosen)


def _neighbours(inside: list, outside: list, rho: int):
    for s in range(1, rho + 1):
        for out in itertools.combinations(inside, s):
            for inn in itertools.combinations(outside, s):
                yield inn, out


def rho_swap_search(obj, cfg: SearchConfig | None = None) -> tuple[Solution, SearchTrace]:
    """Run best-improvement rho-swap search until no neighbour is strictly cheaper.

    Every iteration moves to the cheapest solution within ``rho`` swaps; ties
    go to the lexicographically smallest (sorted in-set, sorted out-set) pair
    of centre ids.  Pinned centres are never swapped out; the dummy centre of an
    :class:`AugmentedInstance` is pinned automatically and the returned solution
    belongs to the lifted instance.
    """
    cfg = cfg or SearchConfig()
    inst, auto_pins = enumeration_target(obj)
    pins = cfg.pin_centres | auto_pins
    unknown = pins - set(inst.centre_ids)
    if unknown:
        raise InstanceError(f"pinned centres {sorted(unknown)} are not candidate centres")
    if len(pins) > inst.k or (len(pins) == inst.k and inst.k < len(inst.centres)):
        raise InstanceError(f"cannot pin {len(pins)} centres with k={inst.k}")
    rho = min(cfg.rho, inst.k - len(pins), len(inst.centres) - inst.k)
    size = neighbourhood_size(inst.k, len(inst.centres), len(pins), max(rho, 0))
    if size > NEIGHBOURHOOD_LIMIT and not cfg.force:
        raise BudgetExceeded("neighbourhood evaluations per iteration", size, NEIGHBOURHOOD_LIMIT)

    n = inst.n_points
    delta = float(inst.delta_max)
    bound = 2 * inst.k * math.log(n * delta) if n * delta > 1 else 0.0
    trace = SearchTrace(theoretical_bound=bound, rho=max(rho, 0))

    S = _seed(inst, pins, cfg)
    cost = inst.cost(S)
    trace.iterations.append(TraceStep(0, S, cost))
    if rho <= 0:
        return solution_cost(inst, S), trace

    ft, fpen = inst.float_table, inst.float_penalties
    weights = np.asarray(inst.multiplicities, dtype=float)
    index = inst.centre_index
    it = 0
    while True:
        if cfg.max_iters is not None and it >= cfg.max_iters:
            trace.terminated_reason = "max_iters"
            break
        inside = sorted(S - pins)
        outside = sorted(set(inst.centre_ids) - S)
        moves = list(_neighbours(inside, outside, rho))
        trace.evaluations += len(moves)
        rows = np.empty((len(moves), inst.k), dtype=np.intp)
        for r, (inn, out) in enumerate(moves):
            rows[r] = [index[c] for c in sorted((S - set(out)) | set(inn))]
        best = ft[:, rows].min(axis=2)
        if fpen is not None:
            best = np.minimum(best, fpen[:, None])
        if inst.power == 1:
            best = np.sqrt(best)
        fcost = weights @ best
        lo = float(fcost.min())
        cand = np.flatnonzero(fcost <= lo + _REL_TOL * abs(lo) + 1e-12)
        chosen, chosen_cost = None, None
        for r in cand:
            c = inst.cost_of_indices(rows[r])
            inn, out = moves[r]
            key = (inn, out)
            if chosen is None or c < chosen_cost or (c == chosen_cost and key < chosen):
                chosen, chosen_cost = key, c
        if not chosen_cost < cost:
            trace.terminated_reason = "local_opt"
            break
        inn, out = chosen
        S = (S - set(out)) | set(inn)
        cost = chosen_cost
        it += 1
        trace.iterations.append(TraceStep(it, S, cost, inn, out))
    return solution_cost(inst, S), trace


def _ids(S) -> frozenset:
    return S.centres if isinstance(S, Solution) else frozenset(S)


def _optima_list(optima) -> list:
    sols = getattr(optima, "solutions", optima)
    return [_ids(F) for F in sols]


def is_nearly_good(obj, S, optima, eps) -> tuple[bool, frozenset | None]:
    """Whether ``cost(S) <= cost(F) + 2*eps*Psi(S, F)`` for every listed optimum F.

    Penalty instances use the penalised cost and ``psi_pen``.  Solutions of a
    lifted instance may be passed; the dummy centre is dropped first.
    """
    inst = penalty_view(obj)
    strip = obj.restrict if isinstance(obj, AugmentedInstance) else (lambda X: X)
    eps = Fraction(eps)
    S = frozenset(strip(_ids(S)))
    opts = [frozenset(strip(F)) for F in _optima_list(optima)]
    if not opts:
        raise InstanceError("is_nearly_good needs at least one optimum")
    cS = inst.cost(S)
    for F in opts:
        if cS > inst.cost(F) + 2 * eps * psi_pen(inst, S, F):
            return False, F
    return True, None


def cost_drop_witness(obj, S, O, eps, rho: int) -> frozenset | None:
    """A neighbour within ``rho`` swaps meeting the cost-drop bound, if any.

    Returns None when the premise ``cost(S) > cost(O) + eps*Psi(S, O)`` fails or
    when no neighbour qualifies.  Among qualifying neighbours the cheapest is
    returned, ties broken as in the search.
    """
    inst = penalty_view(obj)
    eps = Fraction(eps)
    S, O = _ids(S), _ids(O)
    cS, cO = inst.cost(S), inst.cost(O)
    slack = eps * psi_pen(inst, S, O)
    if not cS > cO + slack:
        return None
    bound = cS + (cO - cS + slack) / inst.k
    outside = sorted(set(inst.centre_ids) - S)
    best, best_cost, best_key = None, None, None
    for inn, out in _neighbours(sorted(S), outside, min(rho, inst.k, len(outside))):
        T = (S - set(out)) | set(inn)
        c = inst.cost(T)
        if c <= bound and (best is None or c < best_cost or (c == best_cost and (inn, out) < best_key)):
            best, best_cost, best_key = T, c, (inn, out)
    return best
