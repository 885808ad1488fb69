"""Closed-form dynamics of the affine saddle field on R^2 x R/Z.

The field is (log(lam) x, -log(lam) y, 1/(n p)); its flow contracts x, expands
y and turns the circle coordinate at constant speed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import NeverExitsError, ParameterDomainError
from .geometry import (
    DEFAULT_TOLERANCE,
    QUADRANT_SIGNS,
    CrossRegion,
    ModelParams,
    Point3,
)

STABLE_WALL_FLOOR = 1e-300


def vector_field(params: ModelParams, x: float, y: float) -> tuple[float, float, float]:
    a = params.log_lam
    return (a * x, -a * y, 1.0 / (params.n * params.p))


def flow(params: ModelParams, pt: Point3, t: float) -> Point3:
    lam_t = params.lam**t
    return Point3(pt.x * lam_t, pt.y / lam_t, pt.z + t / (params.n * params.p))


@dataclass(frozen=True)
class TransitResult:
    exit_point: Point3
    transit_time: float
    quadrant: int


def transit_time(params: ModelParams, r: float) -> float:
    """Time for the orbit entering at distance r from the stable wall to exit."""
    return math.log(r / params.r1) / params.log_lam


def transit_map(params: ModelParams, entry: Point3, tolerance: float = 1e-12) -> TransitResult:
    """Follow an entrance point through the cross region to its exit.

    Quadrant-1 entries (r1, r, z) leave at (r, r1, z + tau/(n p)).  The other
    quadrants are handled by the reflections (x, y) -> (+-x, +-y), which
    commute with the flow.
    """
    r1, r2 = params.r1, params.r2
    if abs(abs(entry.x) - r1) > tolerance:
        raise ParameterDomainError(f"entry x={entry.x} is not on an entrance wall |x| = {r1}")
    r = abs(entry.y)
    if r > r2 + tolerance:
        raise ParameterDomainError(f"entry |y|={r} exceeds r2={r2}")
    if r < STABLE_WALL_FLOOR:
        raise NeverExitsError("entry lies on the stable wall; the orbit never exits")
    sx = 1.0 if entry.x > 0 else -1.0
    sy = 1.0 if entry.y > 0 else -1.0
    quadrant = next(q for q, s in QUADRANT_SIGNS.items() if s == (sx, sy))
    tau = transit_time(params, r)
    exit_pt = Point3(sx * r, sy * r1, entry.z + tau / (params.n * params.p))
    return TransitResult(exit_pt, tau, quadrant)


def first_return_to_base(params: ModelParams, x: float, y: float) -> tuple[tuple[float, float], float]:
    """First return to the plane z = 0, which is a linear hyperbolic map."""
    period = params.n * params.p
    scale = params.lam**period
    return (x * scale, y / scale), float(period)


def reentry_time_lower_bound(r1_shrunk: float, r1: float, lam: float) -> float:
    """Lower bound on the return time to the shrunk region V(r1', r2').

    An orbit leaving the shrunk region has to cross the collar between the two
    regions once on the way out and once on the way back in.
    """
    if not (0.0 < lam < 1.0):
        raise ParameterDomainError(f"lambda={lam} must lie in (0, 1)")
    if not (0.0 < r1_shrunk <= r1):
        raise ParameterDomainError(f"need 0 < r1_shrunk <= r1, got {r1_shrunk} and {r1}")
    if r1_shrunk == r1:
        return 0.0
    return 2.0 * math.log(r1_shrunk / r1) / math.log(lam)


def region_tag(params: ModelParams, x: float, y: float, tolerance: float = DEFAULT_TOLERANCE) -> str:
    region = CrossRegion(params, tolerance)
    if not region.contains(x, y):
        return "outside"
    return "Q" + str(region.quadrants_of(x, y)[0])


def trace_orbit(params: ModelParams, pt: Point3, t_max: float, dt: float) -> list[tuple]:
    """Sample the orbit of ``pt`` at spacing dt on [0, t_max]."""
    if dt <= 0 or t_max < 0:
        raise ParameterDomainError("trace needs dt > 0 and t_max >= 0")
    steps = int(math.floor(t_max / dt + 1e-9))
    rows = []
    for k in range(steps + 1):
        t = k * dt
        q = flow(params, pt, t)
        rows.append((t, q.x, q.y, q.z, region_tag(params, q.x, q.y)))
    return rows


def orbit_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "x", "y", "z", "region"])
    for t, x, y, z, tag in rows:
        writer.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z)), tag])
    return buf.getvalue()
