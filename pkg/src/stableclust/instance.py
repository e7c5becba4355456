"""Clustering instances, solutions and their costs.

An :class:`Instance` bundles data points ``X``, candidate centres ``C``, a
metric, optional per-point penalties and the number of centres ``k``.  Costs
are exact: rationals for k-means, sums of square roots for k-median.

Internally every point-centre pair is represented by its squared distance.
A point ``j`` served by ``S`` pays ``g(min(min_{i in S} d2(j, i), q_j))`` where
``g`` is the identity (k-means) or the square root (k-median) and ``q_j`` is the
penalty expressed on the squared-distance scale (``p`` resp. ``p**2``).  Ties
between the nearest centre and the penalty resolve to the centre.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InstanceError
from .exact import Exact, RadicalSum, exact_square, parse_exact, sqrt_rational, to_fraction
from .metric import Metric, Point, squared_distance

__all__ = [
    "PENALTY",
    "Instance",
    "Solution",
    "AugmentedInstance",
    "Partition",
    "nearest_centre",
    "solution_cost",
    "lift_penalties",
    "psi",
    "psi_pen",
    "partition_x1_x4",
    "enumeration_target",
    "penalty_view",
]

PENALTY = "PENALTY"
OBJECTIVES = ("kmeans", "kmedian")


def _as_penalty(v) -> Exact:
    if isinstance(v, str):
        v = parse_exact(v)
    if not isinstance(v, RadicalSum):
        v = to_fraction(v)
    return v


@dataclass(frozen=True, eq=False)
class Instance:
    """A k-means or k-median instance, with or without penalties.

    Parameters
    ----------
    objective : {"kmeans", "kmedian"}
    points, centres : sequence of Point
        Roles are normalised to ``"point"`` and ``"centre"``.
    metric : Metric
    k : int
        Number of centres to open, ``1 <= k <= len(centres)``.
    penalties : mapping point id -> positive exact value, optional
    centre_order : sequence of centre ids, optional
        Tie-breaking order for nearest-centre queries; defaults to ascending id.
    provenance : mapping str -> str
        Free-form metadata carried through serialisation.
    """

    objective: str
    points: tuple
    centres: tuple
    metric: Metric
    k: int
    penalties: Mapping | None = None
    centre_order: tuple | None = None
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise InstanceError(f"unknown objective {self.objective!r}")
        pts = tuple(p if p.role == "point" else replace(p, role="point") for p in self.points)
        cts = tuple(c if c.role == "centre" else replace(c, role="centre", multiplicity=1) for c in self.centres)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "centres", cts)
        if not cts:
            raise InstanceError("instance has no candidate centres")
        if len({p.id for p in pts}) != len(pts):
            raise InstanceError("duplicate data point id")
        cids = [c.id for c in cts]
        if len(set(cids)) != len(cids):
            raise InstanceError("duplicate centre id")
        if not 1 <= self.k <= len(cts):
            raise InstanceError(f"k={self.k} outside [1, {len(cts)}]")
        order = tuple(sorted(cids)) if self.centre_order is None else tuple(self.centre_order)
        if sorted(order) != sorted(cids):
            raise InstanceError("centre_order is not a permutation of the centre ids")
        object.__setattr__(self, "centre_order", order)
        if self.penalties is not None:
            pen = {int(j): _as_penalty(v) for j, v in self.penalties.items()}
            missing = {p.id for p in pts} - set(pen)
            if missing:
                raise InstanceError(f"penalty missing for points {sorted(missing)}")
            if set(pen) - {p.id for p in pts}:
                raise InstanceError("penalty given for an unknown point")
            for j, v in pen.items():
                if not v > 0:
                    raise InstanceError(f"penalty of point {j} must be positive")
            object.__setattr__(self, "penalties", pen)
        object.__setattr__(self, "provenance", dict(self.provenance))

    # basic views --------------------------------------------------------
    @property
    def power(self) -> int:
        return 2 if self.objective == "kmeans" else 1

    @property
    def has_penalties(self) -> bool:
        return self.penalties is not None

    @cached_property
    def point_index(self) -> dict:
        return {p.id: n for n, p in enumerate(self.points)}

    @cached_property
    def centre_index(self) -> dict:
        return {c.id: n for n, c in enumerate(self.centres)}

    @cached_property
    def centre_rank(self) -> list:
        """Tie-break rank of each centre, indexed by centre position."""
        rank = {cid: r for r, cid in enumerate(self.centre_order)}
        return [rank[c.id] for c in self.centres]

    @cached_property
    def centre_ids(self) -> list:
        return [c.id for c in self.centres]

    @cached_property
    def multiplicities(self) -> list:
        return [p.multiplicity for p in self.points]

    @property
    def n_points(self) -> int:
        """Number of data points counted with multiplicity."""
        return sum(self.multiplicities)

    # tables -------------------------------------------------------------
    @cached_property
    def sq_table(self) -> list:
        """Squared distances, ``sq_table[j][i]`` for point index j, centre index i."""
        return [[squared_distance(self.metric, p, c) for c in self.centres] for p in self.points]

    @cached_property
    def penalty_keys(self) -> list | None:
        """Penalties on the squared-distance scale, indexed by point position."""
        if self.penalties is None:
            return None
        out = []
        for p in self.points:
            v = self.penalties[p.id]
            out.append(exact_square(v) if self.power == 1 else _require_rational(v, p.id))
        return out

    @cached_property
    def _scaled(self):
        dens = {q.denominator for row in self.sq_table for q in row}
        if self.penalty_keys is not None:
            dens |= {q.denominator for q in self.penalty_keys}
        scale = math.lcm(*dens) if dens else 1
        keys = [[int(q * scale) for q in row] for row in self.sq_table]
        pen = None if self.penalty_keys is None else [int(q * scale) for q in self.penalty_keys]
        return scale, keys, pen

    @cached_property
    def float_table(self) -> np.ndarray:
        return np.array([[float(q) for q in row] for row in self.sq_table], dtype=float).reshape(
            len(self.points), len(self.centres))

    @cached_property
    def float_penalties(self) -> np.ndarray | None:
        if self.penalty_keys is None:
            return None
        return np.array([float(q) for q in self.penalty_keys], dtype=float)

    @cached_property
    def delta_max(self) -> Fraction:
        """``max d(i, j)^2`` over data points and candidate centres."""
        return max(q for row in self.sq_table for q in row)

    def unit_cost(self, key: Fraction) -> Exact:
        """Cost of one point whose squared distance (or penalty key) is ``key``."""
        return key if self.power == 2 else sqrt_rational(key)

    # cost evaluation ----------------------------------------------------
    def _indices(self, S: Iterable[int]) -> list:
        try:
            idx = [self.centre_index[c] for c in S]
        except KeyError as exc:
            raise InstanceError(f"unknown centre id {exc.args[0]}") from None
        if len(set(idx)) != len(idx):
            raise InstanceError("solution repeats a centre")
        return idx

    def cost_of_indices(self, idx: Sequence[int]) -> Exact:
        """Exact cost of the centre positions ``idx`` (size not checked)."""
        scale, keys, pen = self._scaled
        mult = self.multiplicities
        if self.power == 2:
            total = 0
            for j, row in enumerate(keys):
                best = min(row[i] for i in idx)
                if pen is not None and pen[j] < best:
                    best = pen[j]
                total += mult[j] * best
            return Fraction(total, scale)
        counts: Counter = Counter()
        for j, row in enumerate(keys):
            best = min(row[i] for i in idx)
            if pen is not None and pen[j] < best:
                best = pen[j]
            counts[best] += mult[j]
        total: Exact = Fraction(0)
        for key, cnt in sorted(counts.items()):
            if key:
                total = total + cnt * sqrt_rational(Fraction(key, scale))
        return total

    def cost(self, S: Iterable[int]) -> Exact:
        """Exact cost of a set of centre ids (penalised cost when penalties exist)."""
        idx = self._indices(S)
        if len(idx) != self.k:
            raise InstanceError(f"solution has {len(idx)} centres, expected k={self.k}")
        return self.cost_of_indices(idx)

    def float_costs(self, subsets: np.ndarray) -> np.ndarray:
        """Approximate costs for a batch of centre-position subsets, shape (B, size)."""
        subsets = np.asarray(subsets, dtype=np.intp)
        if subsets.ndim != 2 or subsets.shape[0] == 0:
            return np.zeros(subsets.shape[0] if subsets.ndim else 0)
        ft = self.float_table
        best = ft[:, subsets].min(axis=2)  # (points, B)
        if self.float_penalties is not None:
            best = np.minimum(best, self.float_penalties[:, None])
        if self.power == 1:
            best = np.sqrt(best)
        w = np.asarray(self.multiplicities, dtype=float)
        return w @ best

    def assignment_indices(self, idx: Sequence[int]) -> list:
        """Nearest centre position for every point, ties broken by centre_order."""
        scale, keys, _ = self._scaled
        rank = self.centre_rank
        return [min(idx, key=lambda i: (row[i], rank[i])) for row in keys]

    def subset_ids(self, idx: Iterable[int]) -> frozenset:
        return frozenset(self.centres[i].id for i in idx)


def _require_rational(v: Exact, j) -> Fraction:
    if isinstance(v, RadicalSum):
        raise InstanceError(f"k-means penalty of point {j} must be rational")
    return v


@dataclass(frozen=True)
class Solution:
    """A feasible solution with its assignment and exact cost breakdown.

    ``per_point_cost`` includes the point's multiplicity; ``cost`` is the sum.
    """

    centres: frozenset
    assignment: Mapping
    cost: object
    per_point_cost: Mapping

    def __contains__(self, cid) -> bool:
        return cid in self.centres


def _centre_ids(S) -> frozenset:
    if isinstance(S, Solution):
        return S.centres
    return frozenset(S)


def nearest_centre(inst: Instance, j: int, S: Iterable[int]) -> int:
    """Centre of ``S`` nearest to data point ``j``; ties go to the earlier centre in centre_order."""
    S = list(S)
    if not S:
        raise InstanceError("nearest_centre needs a nonempty centre set")
    try:
        row = inst.sq_table[inst.point_index[j]]
    except KeyError:
        raise InstanceError(f"unknown data point id {j}") from None
    idx = inst._indices(S)
    rank = inst.centre_rank
    best = min(idx, key=lambda i: (row[i], rank[i]))
    return inst.centres[best].id


def solution_cost(inst: Instance, S: Iterable[int]) -> Solution:
    """Evaluate a k-subset of centre ids into a full :class:`Solution`."""
    S = _centre_ids(S)
    idx = inst._indices(S)
    if len(idx) != inst.k:
        raise InstanceError(f"solution has {len(idx)} centres, expected k={inst.k}")
    sigma = inst.assignment_indices(idx)
    pen = inst.penalty_keys
    assignment, per_point = {}, {}
    for j, p in enumerate(inst.points):
        i = sigma[j]
        key = inst.sq_table[j][i]
        if pen is not None and pen[j] < key:
            assignment[p.id] = PENALTY
            per_point[p.id] = p.multiplicity * inst.penalties[p.id]
        else:
            assignment[p.id] = inst.centres[i].id
            per_point[p.id] = p.multiplicity * inst.unit_cost(key)
    total: Exact = Fraction(0)
    for v in per_point.values():
        total = total + v
    return Solution(frozenset(S), assignment, total, per_point)


@dataclass(frozen=True, eq=False)
class AugmentedInstance:
    """A penalty instance rewritten as a (k+1)-instance with a dummy centre.

    The dummy centre ``z*`` sits at squared distance equal to each point's
    penalty key and at distance 0 from every centre.  ``lifted`` does not
    satisfy the triangle inequality; its metric is flagged accordingly.
    """

    base: Instance
    dummy_id: int
    lifted: Instance

    @property
    def pins(self) -> frozenset:
        return frozenset({self.dummy_id})

    def restrict(self, S: Iterable[int]) -> frozenset:
        """Drop the dummy centre from a lifted solution."""
        return frozenset(S) - {self.dummy_id}


def lift_penalties(inst: Instance) -> AugmentedInstance:
    """Replace penalties by a dummy centre that every solution keeps open."""
    if not inst.has_penalties:
        raise InstanceError("lift_penalties needs an instance with penalties")
    dummy_id = max(inst.centre_ids) + 1
    z = Point(dummy_id, (), role="centre")
    table: dict = {}
    for j, p in enumerate(inst.points):
        for i, c in enumerate(inst.centres):
            table[p.site, c.site] = inst.sq_table[j][i]
        table[p.site, z.site] = inst.penalty_keys[j]
    for a in range(len(inst.centres)):
        ca = inst.centres[a]
        for b in range(a + 1, len(inst.centres)):
            cb = inst.centres[b]
            table[ca.site, cb.site] = squared_distance(inst.metric, ca, cb)
        table[ca.site, z.site] = Fraction(0)
    metric = Metric.from_squares(table, triangle=False)
    bare_points = tuple(Point(p.id, (), p.multiplicity) for p in inst.points)
    bare_centres = tuple(Point(c.id, (), role="centre") for c in inst.centres) + (z,)
    lifted = Instance(
        inst.objective, bare_points, bare_centres, metric, inst.k + 1,
        None, tuple(inst.centre_order) + (dummy_id,), dict(inst.provenance),
    )
    return AugmentedInstance(inst, dummy_id, lifted)


# Psi and the X^1..X^4 partition ------------------------------------------

def _per_point_view(inst: Instance, S: frozenset):
    idx = inst._indices(S)
    sigma = inst.assignment_indices(idx)
    return sigma, {inst.centres[i].id for i in idx}


def _psi(inst: Instance, S, O, with_penalties: bool) -> Exact:
    S, O = _centre_ids(S), _centre_ids(O)
    sig_s, _ = _per_point_view(inst, S)
    sig_o, _ = _per_point_view(inst, O)
    only_s, only_o = S - O, O - S
    pen = inst.penalty_keys if with_penalties else None
    total: Exact = Fraction(0)
    for j, p in enumerate(inst.points):
        cs, co = inst.centres[sig_s[j]].id, inst.centres[sig_o[j]].id
        if cs not in only_s or co not in only_o:
            continue
        ks, ko = inst.sq_table[j][sig_s[j]], inst.sq_table[j][sig_o[j]]
        if pen is not None and not (ks < pen[j] and ko < pen[j]):
            continue
        total = total + p.multiplicity * (inst.unit_cost(ks) + inst.unit_cost(ko))
    return total


def psi(inst: Instance, S, O) -> Exact:
    """Sum of ``d(j, S)^p + d(j, O)^p`` over points served by unshared centres in both."""
    return _psi(inst, S, O, with_penalties=False)


def psi_pen(inst: Instance, S, O) -> Exact:
    """As :func:`psi`, restricted to points that pay no penalty under S or O."""
    if not inst.has_penalties:
        return psi(inst, S, O)
    return _psi(inst, S, O, with_penalties=True)


@dataclass(frozen=True)
class Partition:
    """Point ids split by where their nearest centres sit relative to S and O.

    ``residual`` collects points matched by none of the four predicates: a
    point whose nearest centres in S and O are both unshared and which pays the
    penalty under exactly one of the two solutions.
    """

    x1: frozenset
    x2: frozenset
    x3: frozenset
    x4: frozenset
    residual: frozenset

    def parts(self) -> tuple:
        return (self.x1, self.x2, self.x3, self.x4)


def partition_x1_x4(inst: Instance, S, O) -> Partition:
    S, O = _centre_ids(S), _centre_ids(O)
    sig_s, _ = _per_point_view(inst, S)
    sig_o, _ = _per_point_view(inst, O)
    shared = S & O
    pen = inst.penalty_keys
    sets = ([], [], [], [], [])
    for j, p in enumerate(inst.points):
        cs, co = inst.centres[sig_s[j]].id, inst.centres[sig_o[j]].id
        ks, ko = inst.sq_table[j][sig_s[j]], inst.sq_table[j][sig_o[j]]
        live_s = pen is None or ks < pen[j]
        live_o = pen is None or ko < pen[j]
        if (cs in shared and co in shared) or (not live_s and not live_o):
            sets[2].append(p.id)
        elif cs not in shared and co in shared and live_s:
            sets[0].append(p.id)
        elif cs in shared and co not in shared and live_o:
            sets[1].append(p.id)
        elif cs not in shared and co not in shared and live_s and live_o:
            sets[3].append(p.id)
        else:
            sets[4].append(p.id)
    return Partition(*(frozenset(s) for s in sets))


def enumeration_target(obj) -> tuple:
    """Instance to enumerate over and the centre ids every solution must keep."""
    if isinstance(obj, AugmentedInstance):
        return obj.lifted, obj.pins
    if isinstance(obj, Instance):
        return obj, frozenset()
    raise InstanceError(f"expected an Instance or AugmentedInstance, got {type(obj).__name__}")


def penalty_view(obj) -> Instance:
    """The instance whose cost_pen and psi_pen define the penalty-form statements."""
    return obj.base if isinstance(obj, AugmentedInstance) else obj
