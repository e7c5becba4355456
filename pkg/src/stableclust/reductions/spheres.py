"""Spheres touching the moment curve ``t -> (t, t^2, ..., t^d)``.

A fit is described by its centre ``c`` and squared radius; the polynomial
``f(t) = |curve(t) - c|^2 - r^2`` is positive exactly where the curve lies
outside the sphere.  Closed forms are provided for the two constructions
used by the reductions and are cross-checked against a direct exact solve of
the defining linear system.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ..errors import InstanceError
from ..exact import to_fraction
from ..metric import Point

__all__ = [
    "SphereFit",
    "ClearanceReport",
    "moment_point",
    "closed_form_3d",
    "closed_form_4d",
    "solve_sphere",
    "fit_sphere_3d",
    "fit_sphere_4d",
    "curve_gap",
    "curve_gap_derivative",
    "residuals",
    "quarter_gaps",
    "clearance_grid",
    "sphere_curve_clearance",
]


def moment_point(t, dim: int) -> tuple:
    t = to_fraction(t)
    return tuple(t ** (e + 1) for e in range(dim))


@dataclass(frozen=True)
class SphereFit:
    """A sphere through ``through`` parameters and tangent at ``tangent`` parameters."""

    dim: int
    t_values: tuple
    centre: tuple
    radius_sq: Fraction
    tangent: tuple = ()
    through: tuple = ()
    through_point: tuple | None = None


def curve_gap(fit: SphereFit, t) -> Fraction:
    """``|curve(t) - centre|^2 - r^2``: zero on the sphere, positive outside."""
    p = moment_point(t, fit.dim)
    return sum(((x - c) ** 2 for x, c in zip(p, fit.centre)), Fraction(0)) - fit.radius_sq


def curve_gap_derivative(fit: SphereFit, t) -> Fraction:
    t = to_fraction(t)
    total = Fraction(0)
    for e, c in enumerate(fit.centre):
        total += 2 * (t ** (e + 1) - c) * (e + 1) * t ** e
    return total


def closed_form_3d(i, j) -> tuple:
    i, j = to_fraction(i), to_fraction(j)
    a = i * j * (i + j) * (3 * i ** 2 + 3 * i * j + 3 * j ** 2 + 1)
    b = -(3 * i ** 4 + 12 * i ** 3 * j + 15 * i ** 2 * j ** 2 + i ** 2 + 12 * i * j ** 3 + 4 * i * j
          + 3 * j ** 4 + j ** 2 - 1) / 2
    c = (i + j) * (2 * i ** 2 + i * j + 2 * j ** 2 + 1)
    return (a, b, c)


def closed_form_4d(i, j) -> tuple:
    """Centre of the 3-sphere through (1,1,1,1) tangent to the curve at ``i`` and ``j``."""
    I, J = to_fraction(i), to_fraction(j)
    a = -I * J * (I + J) * (2 * I**3 * J + 4 * I**3 + I**2 * J**2 + 6 * I**2 * J + 3 * I**2 + 2 * I * J**3
                            + 6 * I * J**2 + 5 * I * J + 4 * I + 4 * J**3 + 3 * J**2 + 4 * J + 2)
    b = (8 * I**5 * J + 4 * I**5 + 17 * I**4 * J**2 + 22 * I**4 * J + 3 * I**4 + 20 * I**3 * J**3
         + 34 * I**3 * J**2 + 20 * I**3 * J + 4 * I**3 + 17 * I**2 * J**4 + 34 * I**2 * J**3 + 29 * I**2 * J**2
         + 20 * I**2 * J + 2 * I**2 + 8 * I * J**5 + 22 * I * J**4 + 20 * I * J**3 + 20 * I * J**2 + 8 * I * J
         + 4 * J**5 + 3 * J**4 + 4 * J**3 + 2 * J**2 + 1) / 2
    c = -(I + J) * (2 * I**4 + 6 * I**3 * J + 4 * I**3 + 5 * I**2 * J**2 + 6 * I**2 * J + 4 * I**2
                    + 6 * I * J**3 + 6 * I * J**2 + 7 * I * J + 4 * I + 2 * J**4 + 4 * J**3 + 4 * J**2 + 4 * J + 2)
    d = (5 * I**4 + 8 * I**3 * J + 4 * I**3 + 9 * I**2 * J**2 + 6 * I**2 * J + 6 * I**2 + 8 * I * J**3
         + 6 * I * J**2 + 8 * I * J + 4 * I + 5 * J**4 + 4 * J**3 + 6 * J**2 + 4 * J + 3) / 2
    return (a, b, c, d)


def _solve_linear(rows: list, rhs: list) -> list:
    n = len(rows)
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise InstanceError("sphere conditions are degenerate")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def solve_sphere(dim: int, tangent: Sequence, through_points: Sequence[Sequence]) -> tuple:
    """Exact centre from tangency parameters and points the sphere passes through.

    The sphere passes through ``curve(t)`` for every tangency parameter and
    through every point in ``through_points``; this gives ``dim`` linear
    equations when ``len(tangent) * 2 + len(through_points) == dim + 1``.
    """
    on = [moment_point(t, dim) for t in tangent] + [tuple(map(to_fraction, p)) for p in through_points]
    rows, rhs = [], []
    base = on[0]
    for p in on[1:]:
        rows.append([2 * (x - y) for x, y in zip(p, base)])
        rhs.append(sum(x * x for x in p) - sum(y * y for y in base))
    for t in map(to_fraction, tangent):
        rows.append([(e + 1) * t ** e for e in range(dim)])
        rhs.append(sum((e + 1) * t ** (2 * e + 1) for e in range(dim)))
    if len(rows) != dim:
        raise InstanceError(f"{len(rows)} conditions for a sphere in dimension {dim}")
    return tuple(_solve_linear(rows, rhs))


def _radius_sq(centre, point) -> Fraction:
    return sum(((x - c) ** 2 for x, c in zip(point, centre)), Fraction(0))


def fit_sphere_3d(t1, t2) -> SphereFit:
    """The 2-sphere tangent to the cubic moment curve at ``t1`` and ``t2``."""
    t1, t2 = to_fraction(t1), to_fraction(t2)
    if not 0 < t1 < t2:
        raise InstanceError("fit_sphere_3d needs 0 < t1 < t2")
    centre = closed_form_3d(t1, t2)
    return SphereFit(3, (t1, t2), centre, _radius_sq(centre, moment_point(t1, 3)), (t1, t2))


def fit_sphere_4d(t0, t1, t2, through_point: Point | Sequence | None = None) -> SphereFit:
    """The 3-sphere through ``through_point`` tangent to the quartic curve at ``t1`` and ``t2``.

    ``through_point`` defaults to ``curve(t0)``.  For ``(1, 1, 1, 1)`` the
    closed form is used; other points go through the exact linear solve.
    """
    t0, t1, t2 = to_fraction(t0), to_fraction(t1), to_fraction(t2)
    if not 0 < t0 < t1 < t2:
        raise InstanceError("fit_sphere_4d needs 0 < t0 < t1 < t2")
    if through_point is None:
        z = moment_point(t0, 4)
    else:
        z = tuple(map(to_fraction, through_point.coords if isinstance(through_point, Point) else through_point))
        if len(z) != 4:
            raise InstanceError("through_point must lie in R^4")
    if z == (1, 1, 1, 1):
        centre = closed_form_4d(t1, t2)
    else:
        centre = solve_sphere(4, (t1, t2), [z])
    through = (t0,) if z == moment_point(t0, 4) else ()
    return SphereFit(4, (t0, t1, t2), centre, _radius_sq(centre, moment_point(t1, 4)), (t1, t2), through, z)


def residuals(fit: SphereFit) -> list:
    """Residuals of the defining system; all exactly zero for a valid fit.

    3D: ``f(t1), f(t2), f'(t1), f'(t2)``.  4D: additionally ``|z - c|^2 - r^2``
    for the through point.
    """
    out = [curve_gap(fit, t) for t in fit.tangent]
    out += [curve_gap_derivative(fit, t) for t in fit.tangent]
    if fit.through_point is not None:
        out.append(_radius_sq(fit.centre, fit.through_point) - fit.radius_sq)
    return out


def quarter_gaps(fit: SphereFit, params: Iterable) -> dict:
    """``f(t)`` at each non-contact parameter, to compare against 1/4."""
    contact = set(fit.tangent) | set(fit.through)
    return {to_fraction(t): curve_gap(fit, t) for t in params if to_fraction(t) not in contact}


@dataclass(frozen=True)
class ClearanceReport:
    checked: int
    failures: tuple  # parameters with f(t) <= 0
    min_gap: Fraction | None

    @property
    def ok(self) -> bool:
        return not self.failures


def clearance_grid(fit: SphereFit, n: int | None = None, step: Fraction = Fraction(1, 16), tail: int = 10) -> list:
    """Parameters at ``step`` spacing over the ranges claimed to lie outside the sphere.

    3D: ``(0, t1) U (t1, t2) U (t2, t2 + tail)``.  4D:
    ``(t0, t1) U (t1, t2) U (t2, t2 + tail)``.  Half-integers up to ``n + 1``
    are added when ``n`` is given.  Contact parameters are excluded.
    """
    step = to_fraction(step)
    if fit.dim == 3:
        lo = Fraction(0)
    else:
        lo = fit.t_values[0]
    hi = fit.tangent[-1] + tail
    contact = set(fit.tangent) | set(fit.through) | {fit.t_values[0]} if fit.dim == 4 else set(fit.tangent)
    pts = set()
    t = lo + step
    while t < hi:
        pts.add(t)
        t += step
    if n is not None:
        h = Fraction(1, 2)
        while h <= n + 1:
            if lo < h < hi:
                pts.add(h)
            h += Fraction(1, 2)
    return sorted(pts - contact)


def sphere_curve_clearance(fit: SphereFit, t_grid: Iterable) -> ClearanceReport:
    """Check that the curve is strictly outside the sphere at every grid parameter."""
    contact = set(fit.tangent) | set(fit.through)
    grid = [to_fraction(t) for t in t_grid]
    bad = [t for t in grid if t in contact]
    if bad:
        raise InstanceError(f"grid contains contact parameters {bad}")
    gaps = [(t, curve_gap(fit, t)) for t in grid]
    failures = tuple(t for t, g in gaps if g <= 0)
    return ClearanceReport(len(gaps), failures, min((g for _, g in gaps), default=None))
