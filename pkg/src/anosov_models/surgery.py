"""Bump profiles, the boundary gluing map and its tangent transfer matrices.

The gluing map twists the circle coordinate along one entrance annulus by
(|m|/n) * rho(|y|/r2).  Its derivative is the identity plus a rank-one term
along d/dz, so every transfer matrix below is unipotent.

Bases used for the matrices:

* full: {X, e_s, e_u} with e_s = d/dx and e_u = d/dy at the entry point;
* frame C: {X, d/dy, d/dz} adapted to the annulus x = r1;
* su: the quotient by the flow direction, coordinates (b, c) on (e_s, e_u);
* cu: the invariant centre-unstable plane in the frame {X, alpha e_s + e_u}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicHermiteSpline

from .errors import ParameterDomainError
from .geometry import DEFAULT_TOLERANCE, BoundaryKind, ModelParams, Point3, classify_boundary_point

LEFT_EDGE = 1.0 / 3.0
RIGHT_EDGE = 2.0 / 3.0


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_prime(u):
    u = np.clip(u, 0.0, 1.0)
    return 30.0 * u * u * (1.0 - u) ** 2


class BumpProfile:
    """A decreasing profile equal to 1 on [0, 1/3] and 0 on [2/3, 1].

    Subclasses describe the descent through the density of -d rho/dv on the
    rescaled variable v = 3t - 1 in [0, 1].
    """

    name = "abstract"

    def _check(self, t: float) -> float:
        if not (0.0 <= t <= 1.0) or math.isnan(t):
            raise ParameterDomainError(f"profile argument {t} outside [0, 1]")
        return float(t)

    def rho(self, t: float) -> float:
        t = self._check(t)
        if t <= LEFT_EDGE:
            return 1.0
        if t >= RIGHT_EDGE:
            return 0.0
        return 1.0 - float(self._mass(3.0 * t - 1.0))

    def rho_prime(self, t: float) -> float:
        t = self._check(t)
        if t <= LEFT_EDGE or t >= RIGHT_EDGE:
            return 0.0
        return -3.0 * float(self._density(3.0 * t - 1.0))

    def _density(self, v):
        raise NotImplementedError

    def _mass(self, v):
        raise NotImplementedError


class QuinticProfile(BumpProfile):
    """rho(t) = 1 - s(3t - 1) with the quintic smoothstep s; max |rho'| = 45/8."""

    name = "quintic"

    def _density(self, v):
        return _smoothstep_prime(v)

    def _mass(self, v):
        return _smoothstep(v)


class BalancedProfile(BumpProfile):
    """Profile whose descent keeps the gluing shear weak near both plateaus.

    The density is proportional to a smooth minimum of 1/(v(1+v)) and 1/(1-v),
    tapered to zero at both ends by the quintic smoothstep.  These two weights
    are exactly the quantities that push the poles of the gluing slope maps
    towards the edges of the centre-unstable and centre-stable cones, so this
    shape maximises the admissible shear strength for both at once.  The
    cumulative mass is tabulated by Gauss-Legendre quadrature and interpolated
    with a Hermite spline that reuses the exact density as derivative data.
    """

    name = "balanced"

    def __init__(self, sharpness: float = 8.0, taper: float = 0.02, cells: int = 16384):
        self.sharpness = sharpness
        self.taper = taper
        nodes, weights = leggauss(8)
        edges = np.linspace(0.0, 1.0, cells + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        cell_mass = (self._raw_density(pts) * weights[None, :]).sum(axis=1) * half
        cumulative = np.concatenate([[0.0], np.cumsum(cell_mass)])
        self.normaliser = float(cumulative[-1])
        self._spline = CubicHermiteSpline(
            edges, cumulative / self.normaliser, self._raw_density(edges) / self.normaliser
        )

    def _raw_density(self, v):
        v = np.asarray(v, dtype=float)
        q = self.sharpness
        inner = np.clip(v * (1.0 + v), 1e-300, None)
        outer = np.clip(1.0 - v, 1e-300, None)
        smooth_min = (inner**q + outer**q) ** (-1.0 / q)
        return smooth_min * _smoothstep(v / self.taper) * _smoothstep((1.0 - v) / self.taper)

    def _density(self, v):
        return self._raw_density(v) / self.normaliser

    def _mass(self, v):
        return self._spline(v)


@lru_cache(maxsize=None)
def bump_profile(name: str = "quintic") -> BumpProfile:
    if name == "quintic":
        return QuinticProfile()
    if name == "balanced":
        return BalancedProfile()
    raise ParameterDomainError(f"unknown bump profile {name!r}; choose 'quintic' or 'balanced'")


def rho(t: float, profile: str = "quintic") -> float:
    return bump_profile(profile).rho(t)


def rho_prime(t: float, profile: str = "quintic") -> float:
    return bump_profile(profile).rho_prime(t)


def _check_r(params: ModelParams, r: float) -> float:
    if not (0.0 <= r <= params.r2 * (1.0 + 1e-12)):
        raise ParameterDomainError(f"r={r} outside [0, r2={params.r2}]")
    return min(float(r), params.r2)


def kappa(params: ModelParams, r: float) -> float:
    """Twist strength (|m|/n) |rho'(r/r2)|; zero off [r2/3, 2 r2/3]."""
    r = _check_r(params, r)
    return abs(params.m) / params.n * abs(rho_prime(r / params.r2, params.profile))


def shear(params: ModelParams, r: float) -> float:
    """The su shear coefficient K(r) = -p |m| |log lam| |rho'(r/r2)| r/r2 (never positive)."""
    r = _check_r(params, r)
    u = r / params.r2
    return -params.p * abs(params.m) * abs(params.log_lam) * abs(rho_prime(u, params.profile)) * u


def _orientation(params: ModelParams) -> int:
    # +1 when the twist sits on the upper entrance (m < 0), -1 on the lower one
    return 1 if params.m < 0 else -1


def phi_matrix_frame_c(params: ModelParams, r: float) -> np.ndarray:
    """Transfer matrix in the frame {X, d/dy, d/dz} of the twisted annulus."""
    k = kappa(params, r)
    sign = -_orientation(params)
    out = np.eye(3)
    out[2, 1] = sign * k / params.r2
    return out


def phi_matrix_full(params: ModelParams, r: float) -> np.ndarray:
    """Transfer matrix in the frame {X, e_s, e_u} at the entry point (r1, +-r, z)."""
    k = kappa(params, r)
    sigma = _orientation(params)
    a = params.log_lam
    r1, r2 = params.r1, params.r2
    npp = params.n * params.p
    y = sigma * r
    # d/dz expressed in {X, e_s, e_u}, and the twist functional on that frame
    dz = npp * np.array([1.0, -a * r1, a * y])
    twist = -sigma * k * np.array([0.0, y / (r1 * r2), 1.0 / r2])
    return np.eye(3) + np.outer(dz, twist)


def phi_matrix_su(params: ModelParams, r: float) -> np.ndarray:
    """Action on the su quotient: [[1+K, s K r1/r], [-s K r/r1, 1-K]]."""
    big_k = shear(params, r)
    if big_k == 0.0:
        return np.eye(2)
    sigma = _orientation(params)
    w = r / params.r1
    return np.array([[1.0 + big_k, sigma * big_k / w], [-sigma * big_k * w, 1.0 - big_k]])


def cu_coefficients(params: ModelParams, r: float, alpha: float) -> tuple[float, float]:
    """The pair (A, B) of the cu transfer matrix [[1, A], [0, B]].

    ``alpha`` is the inclination of the centre-unstable plane at the entry
    point, i.e. the plane is spanned by X and alpha e_s + e_u.
    """
    k = kappa(params, r)
    if k == 0.0:
        return 0.0, 1.0
    sigma = _orientation(params)
    w = r / params.r1
    factor = 1.0 + sigma * alpha * w
    big_a = -sigma * k * params.n * params.p / params.r2 * factor
    big_b = 1.0 - shear(params, r) * factor
    return big_a, big_b


def phi_matrix_cu(params: ModelParams, r: float, alpha: float) -> np.ndarray:
    big_a, big_b = cu_coefficients(params, r, alpha)
    return np.array([[1.0, big_a], [0.0, big_b]])


def su_slope_image(params: ModelParams, r: float, slope: float) -> float:
    """Image of the unstable slope b/c under the su transfer matrix."""
    mat = phi_matrix_su(params, r)
    return (mat[0, 0] * slope + mat[0, 1]) / (mat[1, 0] * slope + mat[1, 1])


def jordan_offdiagonal(params: ModelParams, r: float) -> float:
    """Off-diagonal profile eta(r) of the su matrix in its eigenbasis.

    In the basis {(-s, r/r1), (r/r1, s)} the su matrix becomes
    [[1, eta r1/r2], [0, 1]]; eta is read off that change of basis.
    """
    if shear(params, r) == 0.0:
        return 0.0
    sigma = _orientation(params)
    w = r / params.r1
    basis = np.array([[-sigma, w], [w, sigma]])
    jordan = np.linalg.solve(basis, phi_matrix_su(params, r) @ basis)
    return float(jordan[0, 1] * params.r2 / params.r1)


def glue(
    params: ModelParams,
    pt: Point3,
    chart: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Point3:
    """Boundary gluing map from the outer piece to the cross region.

    ``chart`` names the quadrant chart in which ``pt`` is written; it only
    matters on the wall y = 0 where quadrants 1 and 4 overlap, and defaults
    to quadrant 1 there.  Only the twisted entrance annulus moves.
    """
    classes = classify_boundary_point(pt, params, tolerance)
    outer = {BoundaryKind.ENTRANCE, BoundaryKind.EXIT, BoundaryKind.HYPERBOLA_WALL}
    if not any(c.kind in outer for c in classes):
        raise ParameterDomainError(f"point ({pt.x}, {pt.y}) is on an internal wall, not on the boundary")
    entrance_quadrants = {c.quadrant for c in classes if c.kind is BoundaryKind.ENTRANCE}
    if chart is None:
        chart = 1 if 1 in entrance_quadrants else (min(entrance_quadrants) if entrance_quadrants else 0)
    twisted = params.twisted_quadrant
    if chart != twisted or twisted not in entrance_quadrants:
        return pt
    u = abs(pt.y) / params.r2
    return Point3(pt.x, pt.y, pt.z + abs(params.m) / params.n * rho(min(u, 1.0), params.profile))


@dataclass(frozen=True)
class GlueFactor:
    """Gluing data at one entry point, with the transfer matrices on demand."""

    params: ModelParams
    r: float
    z: float = 0.0

    @property
    def base_point(self) -> Point3:
        sign = 1.0 if self.params.m < 0 else -1.0
        return Point3(self.params.r1, sign * self.r, self.z)

    @cached_property
    def kappa(self) -> float:
        return kappa(self.params, self.r)

    @cached_property
    def full(self) -> np.ndarray:
        return phi_matrix_full(self.params, self.r)

    @cached_property
    def frame_c(self) -> np.ndarray:
        return phi_matrix_frame_c(self.params, self.r)

    @cached_property
    def su(self) -> np.ndarray:
        return phi_matrix_su(self.params, self.r)

    def cu(self, alpha: float) -> np.ndarray:
        return phi_matrix_cu(self.params, self.r, alpha)


def volume_check(params: ModelParams, word) -> float:
    """Return |det - 1| for the full derivative cocycle along ``word``.

    The determinant is accumulated factor by factor.  The product matrix
    itself has condition number of order lam^(-2t), so its LU determinant
    loses all accuracy on long words even though each factor is exact.
    """
    from .cocycle import FlowSeg

    det = 1.0
    for f in word.factors:
        if isinstance(f, FlowSeg):
            lt = params.lam**f.duration
            det *= lt * (1.0 / lt)
        else:
            det *= float(np.linalg.det(phi_matrix_full(params, f.r)))
    return abs(det - 1.0)


def matrix_table(params: ModelParams, samples: int = 11) -> list[dict]:
    """Per-r dump of the su matrix with its determinant and trace."""
    rows = []
    for r in np.linspace(0.0, params.r2, samples):
        su = phi_matrix_su(params, float(r))
        rows.append(
            {
                "r": float(r),
                "kappa": kappa(params, float(r)),
                "su": su.tolist(),
                "det": float(np.linalg.det(su)),
                "trace": float(np.trace(su)),
            }
        )
    return rows
