"""Distance functions over exact rational point sets.

Three metric kinds are supported:

``euclidean``
    the usual L2 norm over rational coordinates, optionally extended by
    *lifted* coordinates whose squares are stored (their roots may be
    irrational).
``cylinder_max``
    ``max(||(x1, x2) - (y1, y2)||, |x3 - y3|)`` on points of R^3.
``explicit``
    a table of pairwise distances keyed by point *sites*.

Every distance used in this package is the square root of a rational, so the
primitive is :func:`squared_distance`, which is always an exact rational.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import MetricError
from .exact import Exact, RadicalSum, _is_square, exact_square, parse_exact, sqrt_rational, to_fraction

__all__ = [
    "Point",
    "Metric",
    "Violation",
    "squared_distance",
    "exact_distance",
    "distance",
    "validate_metric",
    "doubling_ball_cover_check",
    "uncovered_points",
    "EUCLIDEAN",
    "CYLINDER_MAX",
]

KINDS = ("euclidean", "explicit", "cylinder_max")


@dataclass(frozen=True)
class Point:
    """A data point or candidate centre.

    ``lift_sq`` holds the squares of extra nonnegative coordinates appended
    after ``coords``; ``multiplicity`` counts co-located copies of a data point.
    ``role`` separates the id namespaces of data points and centres.
    """

    id: int
    coords: tuple = ()
    multiplicity: int = 1
    lift_sq: tuple = ()
    role: str = "point"

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(to_fraction(c) for c in self.coords))
        object.__setattr__(self, "lift_sq", tuple(to_fraction(c) for c in self.lift_sq))
        if self.multiplicity < 1:
            raise MetricError(f"multiplicity of {self.site} must be positive")
        if any(v < 0 for v in self.lift_sq):
            raise MetricError(f"lifted squares of {self.site} must be nonnegative")

    @property
    def site(self) -> tuple[str, int]:
        return (self.role, self.id)

    @property
    def dimension(self) -> int:
        return len(self.coords) + len(self.lift_sq)


@dataclass(frozen=True)
class Metric:
    """A distance function; ``sq_table`` is only used by the explicit kind.

    ``sq_table`` maps an unordered site pair (stored as a sorted tuple) to the
    squared distance.  ``triangle`` is False for tables that are knowingly not
    metrics (the dummy-centre lift), which turns validation off.
    """

    kind: str = "euclidean"
    sq_table: Mapping = field(default_factory=dict, compare=False)
    triangle: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MetricError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def explicit(cls, distances: Mapping[tuple[Hashable, Hashable], object], triangle: bool = True) -> "Metric":
        """Build an explicit metric from a map ``(site_a, site_b) -> distance``.

        Distances may be rationals or exact square roots of rationals.  Both
        orientations of a pair may be given; they must agree.
        """
        table: dict = {}
        for (a, b), d in distances.items():
            d = _as_exact(d)
            if d < 0:
                raise MetricError(f"negative distance between {a} and {b}")
            sq = exact_square(d)
            key = _pair(a, b)
            if key in table and table[key] != sq:
                raise MetricError(f"asymmetric entries for {a}, {b}")
            table[key] = sq
        return cls("explicit", table, triangle)

    @classmethod
    def from_squares(cls, sq_table: Mapping, triangle: bool = True) -> "Metric":
        return cls("explicit", {_pair(a, b): Fraction(v) for (a, b), v in sq_table.items()}, triangle)

    def matrix(self) -> dict:
        """Explicit distances as exact values keyed by sorted site pairs."""
        return {k: sqrt_rational(v) for k, v in self.sq_table.items()}


EUCLIDEAN = Metric("euclidean")
CYLINDER_MAX = Metric("cylinder_max")


def _as_exact(d) -> Exact:
    if isinstance(d, str):
        return parse_exact(d)
    if isinstance(d, RadicalSum):
        return d
    return to_fraction(d)


def _pair(a, b):
    return (a, b) if a <= b else (b, a)


def _lift_sq_diff(u: Fraction, v: Fraction) -> Fraction:
    # (sqrt(u) - sqrt(v))^2 with both roots nonnegative
    if u == 0 or v == 0:
        return u + v
    if u == v:
        return Fraction(0)
    prod = u * v
    num = _is_square(prod.numerator)
    den = _is_square(prod.denominator)
    if num is None or den is None:
        raise MetricError("lifted coordinates with independent radicals have no exact squared distance")
    return u + v - 2 * Fraction(num, den)


def squared_distance(m: Metric, a: Point, b: Point) -> Fraction:
    """Exact squared distance between two points."""
    if m.kind == "explicit":
        if a.site == b.site:
            return Fraction(0)
        try:
            return m.sq_table[_pair(a.site, b.site)]
        except KeyError:
            raise MetricError(f"no explicit distance between {a.site} and {b.site}") from None
    if len(a.coords) != len(b.coords) or len(a.lift_sq) != len(b.lift_sq):
        raise MetricError(f"dimension mismatch between {a.site} ({a.dimension}) and {b.site} ({b.dimension})")
    if m.kind == "cylinder_max":
        if a.dimension != 3 or a.lift_sq:
            raise MetricError("cylinder_max is defined on rational points of R^3")
        planar = (a.coords[0] - b.coords[0]) ** 2 + (a.coords[1] - b.coords[1]) ** 2
        return max(planar, (a.coords[2] - b.coords[2]) ** 2)
    total = sum(((x - y) ** 2 for x, y in zip(a.coords, b.coords)), Fraction(0))
    for u, v in zip(a.lift_sq, b.lift_sq):
        total += _lift_sq_diff(u, v)
    return total


def exact_distance(m: Metric, a: Point, b: Point) -> Exact:
    """Distance as an exact rational or exact square root of a rational."""
    return sqrt_rational(squared_distance(m, a, b))


def distance(m: Metric, a: Point, b: Point):
    """Distance; a Fraction when exact, otherwise a float.

    Use :func:`exact_distance` when an irrational result must stay exact.
    """
    d = exact_distance(m, a, b)
    return d if isinstance(d, Fraction) else float(d)


@dataclass(frozen=True)
class Violation:
    kind: str  # "identity" | "symmetry" | "negative" | "triangle"
    sites: tuple
    detail: str = ""


def validate_metric(m: Metric, points: Sequence[Point], check_triangle: bool | None = None,
                    raw_entries: Mapping | None = None) -> list[Violation]:
    """List every violated metric axiom over ``points``.

    Triangle inequalities are enumerated over all ordered triples for explicit
    and cylinder_max metrics.  For more than 200 points this is skipped unless
    ``check_triangle`` is set.  ``raw_entries`` lets callers validate a distance
    map before it is folded into a symmetric table.
    """
    out: list[Violation] = []
    if raw_entries is not None:
        for (a, b), d in raw_entries.items():
            d = _as_exact(d)
            if d < 0:
                out.append(Violation("negative", (a, b), f"distance {d}"))
            if a == b and d != 0:
                out.append(Violation("identity", (a, b), f"self distance {d}"))
            rev = raw_entries.get((b, a))
            if rev is not None and _as_exact(rev) != d:
                out.append(Violation("symmetry", (a, b), f"{d} != {rev}"))
    if not m.triangle:
        return out
    if check_triangle is None:
        check_triangle = m.kind != "euclidean" and len(points) <= 200
    if not check_triangle:
        return out
    n = len(points)
    dist = {}
    for i in range(n):
        for j in range(n):
            dist[i, j] = exact_distance(m, points[i], points[j])
    for i, j, l in itertools.product(range(n), repeat=3):
        if len({i, j, l}) < 3:
            continue
        if dist[i, l] > dist[i, j] + dist[j, l]:
            out.append(Violation(
                "triangle", (points[i].site, points[j].site, points[l].site),
                f"{dist[i, l]} > {dist[i, j]} + {dist[j, l]}",
            ))
    return out


def uncovered_points(m: Metric, centre: Point, r, candidate_centres: Sequence[Point],
                     sample: Iterable[Point]) -> list[Point]:
    """Sample points inside ``B(centre, r)`` not within ``r/2`` of any candidate."""
    r = to_fraction(r)
    r2, half2 = r * r, r * r / 4
    out = []
    for p in sample:
        if squared_distance(m, p, centre) > r2:
            continue
        if not any(squared_distance(m, p, c) <= half2 for c in candidate_centres):
            out.append(p)
    return out


def doubling_ball_cover_check(m: Metric, centre: Point, r, candidate_centres: Sequence[Point],
                              sample: Iterable[Point]) -> bool:
    """Empirical witness that ``candidate_centres`` cover the ball at radius ``r/2``.

    Only the sample points are tested, so True is evidence rather than proof.
    """
    return not uncovered_points(m, centre, r, candidate_centres, sample)
