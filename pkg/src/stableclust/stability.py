"""Perturbations, solution distances and one-sided stability checks.

A perturbation rescales every point-centre distance by a factor in
``[1, alpha]`` and every penalty by a factor in ``[1, alpha**power]``.  Only
point-centre distances enter the cost, so a perturbation is stored as a sparse
map over (point id, centre id) pairs; missing entries mean factor 1.

Nothing here proves stability.  :func:`falsify_stability` searches for a
violating perturbation and :func:`certify_stable_family` checks the
canonical perturbation family only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from .errors import BudgetExceeded, InstanceError, PerturbationError
from .exact import Exact, RadicalSum, format_exact, rational_upper_bound, sqrt_rational, to_fraction
from .instance import Instance, Solution
from .metric import Metric, exact_distance, squared_distance
from .oracle import DEFAULT_BUDGET, OptimaSet, _batch_size, _batches, _merge, _prefilter, colex_key, solve_exact, subset_count

__all__ = [
    "Perturbation",
    "StabilityWitness",
    "StabilityVerdict",
    "FamilyCertificate",
    "canonical_perturbation",
    "random_perturbation",
    "apply_perturbation",
    "perturbed_optima",
    "dist_bij",
    "dist_bij_bruteforce",
    "falsify_stability",
    "certify_stable_family",
]

CANONICAL_LIMIT = 20000


@dataclass(frozen=True)
class Perturbation:
    """Entrywise distance factors and penalty factors, stored sparsely."""

    alpha: object
    scale: dict = field(default_factory=dict)
    penalty_scale: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scale", {k: Fraction(v) for k, v in self.scale.items() if v != 1})
        object.__setattr__(self, "penalty_scale", {k: Fraction(v) for k, v in self.penalty_scale.items() if v != 1})

    def factor(self, j: int, i: int) -> Fraction:
        return self.scale.get((j, i), Fraction(1))

    def penalty_factor(self, j: int) -> Fraction:
        return self.penalty_scale.get(j, Fraction(1))

    def is_identity(self) -> bool:
        return not self.scale and not self.penalty_scale

    def to_text(self) -> str:
        lines = [f"alpha {format_exact(self.alpha)}"]
        lines += [f"scale {j} {i} {format_exact(v)}" for (j, i), v in sorted(self.scale.items())]
        lines += [f"penalty_scale {j} {format_exact(v)}" for j, v in sorted(self.penalty_scale.items())]
        return "\n".join(lines) + "\n"


def _ids(S) -> frozenset:
    return S.centres if isinstance(S, Solution) else frozenset(S)


def _rational_alpha(alpha) -> Fraction:
    return rational_upper_bound(alpha) if isinstance(alpha, RadicalSum) else to_fraction(alpha)


def check_perturbation(inst: Instance, pert: Perturbation) -> None:
    """Raise :class:`PerturbationError` unless every factor is within its bound."""
    alpha = pert.alpha
    if alpha < 1:
        raise PerturbationError(f"alpha {alpha} below 1")
    pidx, cidx = inst.point_index, inst.centre_index
    for (j, i), s in pert.scale.items():
        if j not in pidx or i not in cidx:
            raise PerturbationError(f"scale given for unknown pair ({j}, {i})")
        if s < 1 or s > alpha:
            raise PerturbationError(f"scale {s} of pair ({j}, {i}) outside [1, {format_exact(alpha)}]")
    if pert.penalty_scale and not inst.has_penalties:
        raise PerturbationError("penalty factors given for an instance without penalties")
    top = alpha * alpha if inst.power == 2 else alpha
    for j, s in pert.penalty_scale.items():
        if j not in pidx:
            raise PerturbationError(f"penalty factor given for unknown point {j}")
        if s < 1 or s > top:
            raise PerturbationError(f"penalty factor {s} of point {j} outside [1, {format_exact(top)}]")


def canonical_perturbation(inst: Instance, S, eps_prime) -> Perturbation:
    """Stretch every distance except each point's own S-assignment by ``1 + eps_prime``.

    Penalties of points that S serves strictly below their penalty are raised
    by ``(1 + eps_prime)**power``; the cost of S itself is unchanged.
    """
    S = _ids(S)
    eps_prime = Fraction(eps_prime)
    if eps_prime < 0:
        raise PerturbationError("eps_prime must be nonnegative")
    up = 1 + eps_prime
    scale, pen_scale = {}, {}
    if eps_prime:
        idx = inst._indices(S)
        sigma = inst.assignment_indices(idx)
        pen = inst.penalty_keys
        for j, p in enumerate(inst.points):
            own = inst.centres[sigma[j]].id
            for c in inst.centres:
                if c.id != own:
                    scale[p.id, c.id] = up
            if pen is not None and inst.sq_table[j][sigma[j]] < pen[j]:
                pen_scale[p.id] = up ** inst.power
    return Perturbation(up, scale, pen_scale)


def _twin_pairs(inst: Instance) -> list:
    # (point index, centre index) pairs that mirror each other: a point and a
    # centre with the same id at distance 0 represent one vertex
    twins = {}
    for j, p in enumerate(inst.points):
        i = inst.centre_index.get(p.id)
        if i is not None and inst.sq_table[j][i] == 0:
            twins[p.id] = (j, i)
    out = []
    for a in sorted(twins):
        for b in sorted(twins):
            if a < b:
                out.append(((twins[a][0], twins[b][1]), (twins[b][0], twins[a][1])))
    return out


def _draw_steps(inst: Instance, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray | None]:
    # factor = 1 + (top - 1) * step / 1000, step in {0, 1000, uniform 0..1000}
    shape = (len(inst.points), len(inst.centres))
    kind = rng.integers(3, size=shape)
    steps = np.where(kind == 0, 0, np.where(kind == 1, 1000, rng.integers(0, 1001, size=shape)))
    for (a, b) in _twin_pairs(inst):
        steps[b] = steps[a]
    pen = None
    if inst.has_penalties:
        kind = rng.integers(3, size=shape[0])
        pen = np.where(kind == 0, 0, np.where(kind == 1, 1000, rng.integers(0, 1001, size=shape[0])))
    return steps, pen


def _from_steps(inst: Instance, alpha: Fraction, steps, pen_steps) -> Perturbation:
    scale = {}
    for j, p in enumerate(inst.points):
        for i, c in enumerate(inst.centres):
            m = int(steps[j, i])
            if m:
                scale[p.id, c.id] = 1 + (alpha - 1) * Fraction(m, 1000)
    pen = {}
    if pen_steps is not None:
        top = alpha ** inst.power
        pen = {p.id: 1 + (top - 1) * Fraction(int(pen_steps[j]), 1000) for j, p in enumerate(inst.points)}
    return Perturbation(alpha, scale, pen)


def random_perturbation(inst: Instance, alpha, rng: np.random.Generator) -> Perturbation:
    """Draw factors from ``{1, alpha, uniform(1, alpha)}`` with equal weight.

    Uniform draws have denominator 1000 relative to ``alpha - 1``.  When a
    point and a centre represent the same vertex (same id, distance 0), the
    pairs ``(a, b)`` and ``(b, a)`` share one factor so the perturbed distance
    stays symmetric.
    """
    alpha = Fraction(alpha)
    return _from_steps(inst, alpha, *_draw_steps(inst, rng))


def apply_perturbation(inst: Instance, pert: Perturbation) -> Instance:
    """The perturbed instance, with an explicit (not necessarily metric) distance table."""
    check_perturbation(inst, pert)
    table = {}
    for j, p in enumerate(inst.points):
        for i, c in enumerate(inst.centres):
            s = pert.factor(p.id, c.id)
            table[p.site, c.site] = inst.sq_table[j][i] * s * s
    for a, ca in enumerate(inst.centres):
        for cb in inst.centres[a + 1:]:
            try:
                table[ca.site, cb.site] = squared_distance(inst.metric, ca, cb)
            except Exception:
                pass
    penalties = None
    if inst.has_penalties:
        penalties = {j: pert.penalty_factor(j) * v for j, v in inst.penalties.items()}
    prov = dict(inst.provenance)
    prov["perturbed"] = "true"
    return Instance(
        inst.objective,
        tuple(p.__class__(p.id, (), p.multiplicity) for p in inst.points),
        tuple(c.__class__(c.id, (), role="centre") for c in inst.centres),
        Metric.from_squares(table, triangle=False),
        inst.k,
        penalties,
        inst.centre_order,
        prov,
    )


class _Dense:
    """Dense factor tables of a perturbation: floats eagerly, exact values on demand."""

    def __init__(self, inst: Instance, factor, pfactor, scf: np.ndarray, psf: np.ndarray | None):
        self.factor, self.pfactor = factor, pfactor
        self.ft = inst.float_table * scf * scf
        self.fpen = None
        if inst.has_penalties:
            self.fpen = inst.float_penalties * (psf if inst.power == 2 else psf * psf)

    @classmethod
    def of(cls, inst: Instance, pert: Perturbation) -> "_Dense":
        pids, cids = [p.id for p in inst.points], inst.centre_ids
        scf = np.array([[float(pert.factor(j, i)) for i in cids] for j in pids], dtype=float)
        scf = scf.reshape(inst.float_table.shape)
        psf = np.array([float(pert.penalty_factor(j)) for j in pids]) if inst.has_penalties else None
        return cls(inst, lambda j, i: pert.factor(pids[j], cids[i]), lambda j: pert.penalty_factor(pids[j]), scf, psf)

    def exact_cost(self, inst: Instance, idx) -> Exact:
        return _exact_cost(inst, self, idx)


class _StepDense:
    """Factors ``1 + (top - 1) * step / 1000`` on a common denominator.

    Candidate subsets are then compared in integer arithmetic, which keeps
    random trials cheap.
    """

    def __init__(self, inst: Instance, alpha: Fraction, steps: np.ndarray, pen_steps: np.ndarray | None):
        a1 = alpha - 1
        self.D = 1000 * a1.denominator
        self.N = [[self.D + a1.numerator * int(m) for m in row] for row in steps]
        scf = np.asarray(self.N, dtype=float).reshape(inst.float_table.shape) / self.D
        self.ft = inst.float_table * scf * scf
        self.fpen = None
        if pen_steps is not None:
            t1 = alpha ** inst.power - 1
            self.Dp = 1000 * t1.denominator
            self.Np = [self.Dp + t1.numerator * int(m) for m in pen_steps]
            psf = np.asarray(self.Np, dtype=float) / self.Dp
            self.fpen = inst.float_penalties * (psf if inst.power == 2 else psf * psf)

    def exact_cost(self, inst: Instance, idx) -> Exact:
        L, K, P = inst._scaled
        D, mult = self.D, inst.multiplicities
        D2 = D * D
        kmeans = inst.power == 2
        if P is not None:
            Dp = self.Dp
            pen_w = Dp if kmeans else Dp * Dp
        assigned = 0
        radicals: dict = {}
        penal: dict = {}
        for j, row in enumerate(K):
            Nj = self.N[j]
            best_i = min(idx, key=lambda i: row[i] * Nj[i] * Nj[i])
            key = row[best_i] * Nj[best_i] * Nj[best_i]
            if P is not None:
                npj = self.Np[j]
                pk = P[j] * (npj if kmeans else npj * npj) * D2
                if pk < key * pen_w:
                    v = inst.penalties[inst.points[j].id]
                    penal[v] = penal.get(v, 0) + mult[j] * npj
                    continue
            if kmeans:
                assigned += mult[j] * key
            else:
                radicals[row[best_i]] = radicals.get(row[best_i], 0) + mult[j] * Nj[best_i]
        total: Exact = Fraction(assigned, L * D2) if kmeans else Fraction(0)
        for r, coef in sorted(radicals.items()):
            total = total + sqrt_rational(Fraction(r, L)) * Fraction(coef, D)
        for v, coef in penal.items():
            total = total + v * Fraction(coef, self.Dp)
        return total


def _exact_cost(inst: Instance, d: _Dense, idx) -> Exact:
    pen = inst.penalty_keys
    total: Exact = Fraction(0)
    for j, row in enumerate(inst.sq_table):
        sc = {i: d.factor(j, i) for i in idx}
        best_i = min(idx, key=lambda i: row[i] * sc[i] * sc[i])
        key = row[best_i] * sc[best_i] * sc[best_i]
        if pen is not None:
            ps = d.pfactor(j)
            pkey = pen[j] * (ps if inst.power == 2 else ps * ps)
            if pkey < key:
                total = total + inst.points[j].multiplicity * ps * inst.penalties[inst.points[j].id]
                continue
        unit = key if inst.power == 2 else sc[best_i] * sqrt_rational(row[best_i])
        total = total + inst.points[j].multiplicity * unit
    return total


def _optima_of(inst: Instance, d: _Dense, limit: int) -> OptimaSet:
    count = subset_count(inst)
    if count > limit:
        raise BudgetExceeded("subsets", count, limit)
    free = np.arange(len(inst.centres), dtype=np.intp)
    w = np.asarray(inst.multiplicities, dtype=float)
    parts = [_prefilter(d.ft, d.fpen, w, inst.power, b) for b in _batches(len(free), inst.k, free, [], _batch_size(inst))]
    cand = _merge(parts)
    if len(cand) == 1:
        row = cand[0]
        return OptimaSet(d.exact_cost(inst, row), (inst.subset_ids(row),), True, count)
    best, winners = None, []
    for row in cand:
        c = d.exact_cost(inst, row)
        if best is None or c < best:
            best, winners = c, [row]
        elif c == best:
            winners.append(row)
    sols = sorted({inst.subset_ids(r) for r in winners}, key=colex_key)
    return OptimaSet(best, tuple(sols), True, count)


def perturbed_optima(inst: Instance, pert: Perturbation, limit: int = DEFAULT_BUDGET) -> OptimaSet:
    """Optima of the perturbed instance without materialising it."""
    check_perturbation(inst, pert)
    return _optima_of(inst, _Dense.of(inst, pert), limit)


# dist_bij -------------------------------------------------------------------

def _centre_distances(inst: Instance, S1, S2) -> list:
    c1 = [inst.centres[inst.centre_index[c]] for c in sorted(S1)]
    c2 = [inst.centres[inst.centre_index[c]] for c in sorted(S2)]
    return [[exact_distance(inst.metric, a, b) for b in c2] for a in c1]


def _check_sizes(inst: Instance, S1, S2) -> None:
    if len(S1) != len(S2):
        raise InstanceError(f"dist_bij needs equal sizes, got {len(S1)} and {len(S2)}")
    inst._indices(S1)
    inst._indices(S2)


def _hungarian(a: list) -> Exact:
    # shortest augmenting path with potentials; exact over any ordered field
    n = len(a)
    if n == 0:
        return Fraction(0)
    big = Fraction(1)
    for row in a:
        for v in row:
            big = big + v
    inf = big * (n + 1) + 1
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = a[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j], way[j] = cur, j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] = u[p[j]] + delta
                    v[j] = v[j] - delta
                else:
                    minv[j] = minv[j] - delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    total: Exact = Fraction(0)
    for j in range(1, n + 1):
        total = total + a[p[j] - 1][j - 1]
    return total


def dist_bij(inst: Instance, S1, S2) -> Exact:
    """Minimum total original distance over bijections between two centre sets."""
    S1, S2 = _ids(S1), _ids(S2)
    _check_sizes(inst, S1, S2)
    common = S1 & S2 if inst.metric.triangle else frozenset()
    # under the triangle inequality shared centres may be matched to themselves
    rest1, rest2 = S1 - common, S2 - common
    return _hungarian(_centre_distances(inst, rest1, rest2))


def dist_bij_bruteforce(inst: Instance, S1, S2) -> Exact:
    """Factorial-time reference for :func:`dist_bij`."""
    S1, S2 = _ids(S1), _ids(S2)
    _check_sizes(inst, S1, S2)
    a = _centre_distances(inst, S1, S2)
    n = len(a)
    best: Exact | None = None
    for perm in itertools.permutations(range(n)):
        total: Exact = Fraction(0)
        for r, c in enumerate(perm):
            total = total + a[r][c]
        if best is None or total < best:
            best = total
    return best if best is not None else Fraction(0)


# falsification -----------------------------------------------------------

@dataclass(frozen=True)
class StabilityWitness:
    trial: int
    perturbation: Perturbation
    perturbed_optimum: frozenset
    original_optimum: frozenset
    distance: Exact

    def to_text(self) -> str:
        return (
            f"trial {self.trial}\n"
            f"perturbed_optimum {' '.join(map(str, sorted(self.perturbed_optimum)))}\n"
            f"original_optimum {' '.join(map(str, sorted(self.original_optimum)))}\n"
            f"dist_bij {format_exact(self.distance)}\n" + self.perturbation.to_text()
        )


@dataclass(frozen=True)
class StabilityVerdict:
    alpha: object
    beta: object
    status: str
    witness: StabilityWitness | None
    trials: int
    max_distance: Exact = Fraction(0)

    @property
    def violated(self) -> bool:
        return self.status == "violated"

    def to_text(self) -> str:
        lines = [
            f"alpha {format_exact(self.alpha)}",
            f"beta {format_exact(self.beta)}",
            f"status {self.status}",
            f"trials {self.trials}",
            f"max_dist_bij {format_exact(self.max_distance)}",
        ]
        out = "\n".join(lines) + "\n"
        return out + self.witness.to_text() if self.witness is not None else out


class _DistCache:
    def __init__(self, inst: Instance):
        self.inst = inst
        self.memo: dict = {}

    def __call__(self, a: frozenset, b: frozenset) -> Exact:
        key = (a, b) if colex_key(a) <= colex_key(b) else (b, a)
        if key not in self.memo:
            self.memo[key] = dist_bij(self.inst, *key)
        return self.memo[key]


def _trial_score(dist: _DistCache, originals: tuple, perturbed: tuple, quantifier: str):
    best = None
    for Op in perturbed:
        vals = [(dist(O, Op), O) for O in originals]
        if quantifier == "max_min":
            val, O = min(vals, key=lambda t: t[0])
        else:
            val, O = max(vals, key=lambda t: t[0])
        if best is None or val > best[0]:
            best = (val, Op, O)
    return best


def _run_trials(inst, originals, canon, random_range, alpha, seed, limit, quantifier):
    dist = _DistCache(inst)
    out = []
    for t, pert in canon:
        opt = _optima_of(inst, _Dense.of(inst, pert), limit)
        out.append((t, *_trial_score(dist, originals, opt.solutions, quantifier)))
    lo, hi, offset = random_range
    for t in range(lo, hi):
        steps, pen = _draw_steps(inst, np.random.default_rng([seed, t]))
        opt = _optima_of(inst, _StepDense(inst, alpha, steps, pen), limit)
        out.append((offset + t, *_trial_score(dist, originals, opt.solutions, quantifier)))
    return out


def falsify_stability(inst: Instance, alpha, beta, budget: int = 1000, seed: int = 0, limit: int = DEFAULT_BUDGET,
                      jobs: int = 1, quantifier: str = "max_max", canonical: bool = True) -> StabilityVerdict:
    """Search for a perturbation whose optimum lies farther than ``beta`` from the original optima.

    Trials are the canonical perturbation of every feasible solution (when
    there are at most 20000 of them) followed by ``budget`` random ones; random
    trial ``t`` draws from ``default_rng([seed, t])`` so results do not depend
    on ``jobs``.  ``quantifier="max_max"`` compares each perturbed optimum with
    every original optimum; ``"max_min"`` only with the closest one.
    """
    if quantifier not in ("max_max", "max_min"):
        raise InstanceError(f"unknown quantifier {quantifier!r}")
    alpha_q = _rational_alpha(alpha)
    beta = beta if isinstance(beta, RadicalSum) else to_fraction(beta)
    if alpha_q < 1:
        raise PerturbationError("alpha must be at least 1")
    if budget < 0:
        raise InstanceError("budget must be nonnegative")
    originals = solve_exact(inst, limit).solutions
    canon: list = []
    if canonical and subset_count(inst) <= CANONICAL_LIMIT:
        for S in itertools.combinations(sorted(inst.centre_ids), inst.k):
            canon.append((len(canon), canonical_perturbation(inst, S, alpha_q - 1)))
    n_canon = len(canon)
    args = (alpha_q, seed, limit, quantifier)
    if jobs and jobs > 1 and budget > 1:
        from joblib import Parallel, delayed

        step = max(1, -(-budget // (4 * jobs)))
        ranges = [(lo, min(lo + step, budget), n_canon) for lo in range(0, budget, step)]
        results = _run_trials(inst, originals, canon, (0, 0, n_canon), *args)
        for part in Parallel(n_jobs=jobs)(
            delayed(_run_trials)(inst, originals, [], r, *args) for r in ranges
        ):
            results.extend(part)
    else:
        results = _run_trials(inst, originals, canon, (0, budget, n_canon), *args)

    results.sort(key=lambda r: r[0])
    total = n_canon + budget
    top = None
    for r in results:
        if top is None or r[1] > top[1]:
            top = r
    if top is None:
        return StabilityVerdict(alpha, beta, "no_violation_found", None, 0)
    t, val, Op, O = top
    if val > beta:
        if t < n_canon:
            pert = canon[t][1]
        else:
            pert = _from_steps(inst, alpha_q, *_draw_steps(inst, np.random.default_rng([seed, t - n_canon])))
        wit = StabilityWitness(t, pert, Op, O, val)
        return StabilityVerdict(alpha, beta, "violated", wit, total, val)
    return StabilityVerdict(alpha, beta, "no_violation_found", None, total, val)


@dataclass(frozen=True)
class FamilyCertificate:
    ok: bool
    alpha: object
    checked: int
    witness: tuple | None = None  # (S, perturbed optimum outside the original optima)

    def __bool__(self) -> bool:
        return self.ok


def certify_stable_family(inst: Instance, alpha, limit: int = DEFAULT_BUDGET) -> FamilyCertificate:
    """Check that every canonical perturbation keeps its optima among the original optima.

    An irrational ``alpha`` is replaced by a rational upper bound, which only
    enlarges the perturbations tried.
    """
    alpha_q = _rational_alpha(alpha)
    if alpha_q < 1:
        raise PerturbationError("alpha must be at least 1")
    count = subset_count(inst)
    if count * count > limit:
        raise BudgetExceeded("canonical perturbation evaluations", count * count, limit)
    optima = set(solve_exact(inst, limit).solutions)
    checked = 0
    for S in itertools.combinations(sorted(inst.centre_ids), inst.k):
        pert = canonical_perturbation(inst, S, alpha_q - 1)
        checked += 1
        # canonical factors are in range by construction
        for Op in _optima_of(inst, _Dense.of(inst, pert), limit).solutions:
            if Op not in optima:
                return FamilyCertificate(False, alpha, checked, (frozenset(S), Op))
    return FamilyCertificate(True, alpha, checked)
