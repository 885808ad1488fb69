"""Cross-shaped neighbourhood of the saddle orbit and its boundary strata.

The planar region Q(r1, r2) is the union of four quadrant pieces.  The first
one is bounded by the two half-axes, the entrance segment {r1} x [0, r2], the
exit segment [0, r2] x {r1} and the hyperbola arc x*y = r1*r2 joining
(r1, r2) to (r2, r1).  The remaining pieces are its images under the rotation
(x, y) -> (-y, x); quadrants are numbered counterclockwise starting from
{x >= 0, y >= 0}.

The rotation is a symmetry of the region but reverses the model vector field,
so walls are labelled dynamically: vertical walls |x| = r1 are entrances,
horizontal walls |y| = r1 are exits, the x-axis is the stable wall and the
y-axis the unstable wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ClassificationError, ParameterDomainError

DEFAULT_TOLERANCE = 1e-12

# Quadrant sign patterns, counterclockwise from the first quadrant.
QUADRANT_SIGNS = {1: (1, 1), 2: (-1, 1), 3: (-1, -1), 4: (1, -1)}


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the local model and of the surgery.

    ``lam`` is the contraction factor, ``n`` the linking number, ``m`` the
    signed multiplicity, ``p`` the number of boundary components and
    ``r1 > r2`` the two radii of the cross-shaped region.  ``profile`` names
    the bump function used by the gluing map.
    """

    lam: float
    n: int
    m: int
    p: int
    r1: float
    r2: float
    profile: str = "quintic"

    def __post_init__(self) -> None:
        problems = []
        if not (0.0 < self.lam < 1.0):
            problems.append(f"lambda={self.lam} must lie in (0, 1)")
        if int(self.n) != self.n or self.n < 1:
            problems.append(f"n={self.n} must be a positive integer")
        if int(self.m) != self.m or self.m == 0:
            problems.append(f"m={self.m} must be a nonzero integer")
        if int(self.p) != self.p or self.p < 1:
            problems.append(f"p={self.p} must be a positive integer")
        if not (0.0 < self.r2 < self.r1 < 1.0):
            problems.append(f"radii must satisfy 0 < r2 < r1 < 1 (got r1={self.r1}, r2={self.r2})")
        if not problems and math.gcd(int(self.n), abs(int(self.m))) != 1:
            problems.append(f"gcd(n, |m|) = gcd({self.n}, {abs(self.m)}) must be 1")
        if problems:
            raise ParameterDomainError("; ".join(problems))

    @property
    def log_lam(self) -> float:
        return math.log(self.lam)

    @property
    def ratio(self) -> float:
        return self.r2 / self.r1

    @property
    def seam_shift(self) -> float:
        return self.m / self.n

    @property
    def twisted_quadrant(self) -> int:
        """Quadrant whose entrance annulus carries the gluing twist."""
        return 1 if self.m < 0 else 4

    def with_radii(self, r1: float, r2: float) -> "ModelParams":
        return ModelParams(self.lam, self.n, self.m, self.p, r1, r2, self.profile)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "r1": self.r1,
            "r2": self.r2,
            "profile": self.profile,
        }


@dataclass(frozen=True)
class Point3:
    """A point of R^2 x R/Z; the circle coordinate is stored reduced mod 1."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", reduce_mod1(self.z))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def reduce_mod1(z: float) -> float:
    r = math.fmod(z, 1.0)
    if r < 0.0:
        r += 1.0
    # fmod of a tiny negative number can round up to exactly 1.0
    return 0.0 if r >= 1.0 else r


def circle_distance(z1: float, z2: float) -> float:
    d = abs(reduce_mod1(z1) - reduce_mod1(z2))
    return min(d, 1.0 - d)


class BoundaryKind(Enum):
    STABLE_WALL = "stable_wall"
    UNSTABLE_WALL = "unstable_wall"
    HYPERBOLA_WALL = "hyperbola_wall"
    ENTRANCE = "entrance_annulus"
    EXIT = "exit_annulus"


@dataclass(frozen=True)
class BoundaryClass:
    kind: BoundaryKind
    quadrant: int

    def __post_init__(self) -> None:
        if self.quadrant not in QUADRANT_SIGNS:
            raise ParameterDomainError(f"quadrant must be 1..4, got {self.quadrant}")

    def label(self) -> str:
        return f"{self.kind.value}:{self.quadrant}"


def rotate_quarter(x: float, y: float, k: int = 1) -> tuple[float, float]:
    """Apply the quadrant symmetry (x, y) -> (-y, x) k times."""
    for _ in range(k % 4):
        x, y = -y, x
    return x, y


def quadrant_walls(params: ModelParams, quadrant: int) -> dict:
    """Endpoints of the five boundary pieces of one quadrant."""
    r1, r2 = params.r1, params.r2
    sx, sy = QUADRANT_SIGNS[quadrant]
    return {
        "stable_wall": [[0.0, 0.0], [sx * r1, 0.0]],
        "unstable_wall": [[0.0, 0.0], [0.0, sy * r1]],
        "entrance": [[sx * r1, 0.0], [sx * r1, sy * r2]],
        "exit": [[0.0, sy * r1], [sx * r2, sy * r1]],
        "hyperbola": {
            "equation": "|x*y| = r1*r2",
            "product": r1 * r2,
            "from": [sx * r1, sy * r2],
            "to": [sx * r2, sy * r1],
            "parameterization": "x = sx*s, y = sy*r1*r2/s for s from r1 down to r2",
        },
    }


@dataclass(frozen=True)
class CrossRegion:
    params: ModelParams
    tolerance: float = DEFAULT_TOLERANCE

    def contains(self, x: float, y: float) -> bool:
        r1, r2, tol = self.params.r1, self.params.r2, self.tolerance
        return abs(x) <= r1 + tol and abs(y) <= r1 + tol and abs(x * y) <= r1 * r2 + tol

    def quadrants_of(self, x: float, y: float) -> list[int]:
        tol = self.tolerance
        out = []
        for q, (sx, sy) in QUADRANT_SIGNS.items():
            if sx * x >= -tol and sy * y >= -tol:
                out.append(q)
        return out

    def hyperbola_point(self, quadrant: int, s: float) -> tuple[float, float]:
        sx, sy = QUADRANT_SIGNS[quadrant]
        return sx * s, sy * self.params.r1 * self.params.r2 / s

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "tolerance": self.tolerance,
            "quadrants": {str(q): quadrant_walls(self.params, q) for q in QUADRANT_SIGNS},
        }


def build_cross_region(params: ModelParams, tolerance: float = DEFAULT_TOLERANCE) -> CrossRegion:
    if not isinstance(params, ModelParams):
        raise ParameterDomainError("build_cross_region expects ModelParams")
    return CrossRegion(params, tolerance)


def classify_boundary_point(
    pt: Point3, params: ModelParams, tolerance: float = DEFAULT_TOLERANCE
) -> set[BoundaryClass]:
    """Return every boundary stratum incident to ``pt``.

    Points on the internal axis walls are included because the quadrant
    pieces meet there; corner points receive all incident classes.
    """
    region = CrossRegion(params, tolerance)
    x, y, tol = pt.x, pt.y, tolerance
    r1, r2 = params.r1, params.r2
    if not region.contains(x, y):
        raise ClassificationError(f"point ({x}, {y}) lies outside Q(r1={r1}, r2={r2})")

    classes: set[BoundaryClass] = set()
    incident = region.quadrants_of(x, y)

    def add(kind: BoundaryKind) -> None:
        for q in incident:
            sx, sy = QUADRANT_SIGNS[q]
            if kind in (BoundaryKind.ENTRANCE, BoundaryKind.STABLE_WALL) and sx * x < -tol:
                continue
            if kind in (BoundaryKind.EXIT, BoundaryKind.UNSTABLE_WALL) and sy * y < -tol:
                continue
            classes.add(BoundaryClass(kind, q))

    if abs(abs(x) - r1) <= tol and abs(y) <= r2 + tol:
        add(BoundaryKind.ENTRANCE)
    if abs(abs(y) - r1) <= tol and abs(x) <= r2 + tol:
        add(BoundaryKind.EXIT)
    if (
        abs(abs(x * y) - r1 * r2) <= tol
        and min(abs(x), abs(y)) >= r2 - tol
        and max(abs(x), abs(y)) <= r1 + tol
    ):
        add(BoundaryKind.HYPERBOLA_WALL)
    if abs(y) <= tol:
        add(BoundaryKind.STABLE_WALL)
    if abs(x) <= tol:
        add(BoundaryKind.UNSTABLE_WALL)

    if not classes:
        raise ClassificationError(f"point ({x}, {y}) is interior to Q, not on a wall")
    return classes


# Walls shared by consecutive quadrants: (from, to) -> predicate on (x, y).
_SEAM_WALLS = {
    frozenset({1, 2}): lambda x, y, tol: abs(x) <= tol and y >= -tol,
    frozenset({2, 3}): lambda x, y, tol: abs(y) <= tol and x <= tol,
    frozenset({3, 4}): lambda x, y, tol: abs(x) <= tol and y <= tol,
    frozenset({4, 1}): lambda x, y, tol: abs(y) <= tol and x >= -tol,
}


def chart_seam(
    pt: Point3,
    from_quadrant: int,
    to_quadrant: int,
    params: ModelParams,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Point3:
    """Change of normal coordinates across the wall shared by two quadrants.

    Crossing from quadrant 4 to quadrant 1 shifts the circle coordinate by
    m/n; the reverse crossing undoes it and every other seam is the identity.
    """
    key = frozenset({from_quadrant, to_quadrant})
    if key not in _SEAM_WALLS or from_quadrant == to_quadrant:
        raise ParameterDomainError(f"quadrants {from_quadrant} and {to_quadrant} do not share a wall")
    if not _SEAM_WALLS[key](pt.x, pt.y, tolerance):
        raise ParameterDomainError(
            f"point ({pt.x}, {pt.y}) is not on the wall between quadrants {from_quadrant} and {to_quadrant}"
        )
    if (from_quadrant, to_quadrant) == (4, 1):
        return Point3(pt.x, pt.y, pt.z + params.seam_shift)
    if (from_quadrant, to_quadrant) == (1, 4):
        return Point3(pt.x, pt.y, pt.z - params.seam_shift)
    return pt
