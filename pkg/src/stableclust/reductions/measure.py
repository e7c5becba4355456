"""Lattice sums over a disc compared with their continuous counterparts.

With lattice spacing ``eps`` and a disc ``D_r`` around ``a``, the number of
lattice points in the disc and the sum of their distances to ``a`` are
sandwiched by areas of slightly smaller and larger discs:

    pi (r - eps)^2 / eps^2  <=  #(D_r)  <=  pi (r + eps)^2 / eps^2
    sum_{x in D_r} |x - a|  <=  ((2/3) pi (r + eps)^3 + eps pi (r + eps)^2) / eps^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..exact import to_fraction
from ..metric import Point

__all__ = ["MeasureReport", "lattice_disc", "measure_approx_check"]

TOL = 1e-9


@dataclass(frozen=True)
class MeasureReport:
    r: Fraction
    eps: Fraction
    count: int
    count_lower: float
    count_upper: float
    distance_sum: float
    distance_upper: float

    @property
    def count_ok(self) -> bool:
        return self.count_lower - TOL <= self.count <= self.count_upper + TOL

    @property
    def distance_ok(self) -> bool:
        return self.distance_sum <= self.distance_upper + TOL

    @property
    def ok(self) -> bool:
        return self.count_ok and self.distance_ok


def lattice_disc(a: Point, r, eps) -> list:
    """Squared distances to ``a`` of the eps-lattice points within distance r."""
    r, eps = to_fraction(r), to_fraction(eps)
    ax, ay = a.coords[:2]
    r2 = r * r
    out = []
    for m in range(math.floor((ax - r) / eps), math.ceil((ax + r) / eps) + 1):
        dx2 = (m * eps - ax) ** 2
        if dx2 > r2:
            continue
        for n in range(math.floor((ay - r) / eps), math.ceil((ay + r) / eps) + 1):
            d2 = dx2 + (n * eps - ay) ** 2
            if d2 <= r2:
                out.append(d2)
    return out


def measure_approx_check(a: Point, r, eps) -> MeasureReport:
    r, eps = to_fraction(r), to_fraction(eps)
    if r <= 0 or eps <= 0:
        raise ValueError("r and eps must be positive")
    sq = lattice_disc(a, r, eps)
    fr, fe = float(r), float(eps)
    inner = max(fr - fe, 0.0)
    outer = fr + fe
    dsum = math.fsum(math.sqrt(q.numerator / q.denominator) for q in sq)
    return MeasureReport(
        r,
        eps,
        len(sq),
        math.pi * inner ** 2 / fe ** 2,
        math.pi * outer ** 2 / fe ** 2,
        dsum,
        (2 / 3 * math.pi * outer ** 3 + fe * math.pi * outer ** 2) / fe ** 2,
    )
