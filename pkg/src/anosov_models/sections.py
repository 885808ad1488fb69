"""Helicoidal local section inside the cross region, and the cat-map fixture.

The boundary curve runs counterclockwise around the core orbit through the
entrance, hyperbola and exit walls of every quadrant.  Its height is constant
except on the twisted entrance annulus, where it follows the gluing profile,
so that after n turns it has moved by m along the circle.  The section is the
cone over this curve towards the core orbit: (theta x, theta y, z).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .affine_flow import first_return_to_base
from .birkhoff import BirkhoffBoundaryData, blowdown_bookkeeping, validate
from .errors import ParameterDomainError, ResolutionError
from .geometry import QUADRANT_SIGNS, ModelParams
from .surgery import rho, rho_prime

CAT_MAP = ((2, 1), (1, 1))


@dataclass(frozen=True)
class Arc:
    """One smooth piece of the boundary curve.

    ``kind`` is "in", "hyperbola" or "out"; the piece is parameterised by
    s in [0, 1] in the direction of travel.  ``base`` is the height of the
    flat arcs of its loop, reached by the twisted band where rho vanishes.
    """

    params: ModelParams
    kind: str
    quadrant: int
    loop: int
    component: int
    base: float
    twisted: bool
    wrong_signature: bool = False

    def _xy(self, s: float) -> tuple[float, float, float, float]:
        """Position and velocity of the planar projection."""
        r1, r2 = self.params.r1, self.params.r2
        sx, sy = QUADRANT_SIGNS[self.quadrant]
        # quadrants 1 and 3 are entered through the entrance wall, 2 and 4 through the exit
        forward = self.quadrant in (1, 3)
        if self.kind == "in":
            t = s if forward else 1.0 - s
            ds = 1.0 if forward else -1.0
            return sx * r1, sy * r2 * t, 0.0, sy * r2 * ds
        if self.kind == "out":
            t = 1.0 - s if forward else s
            ds = -1.0 if forward else 1.0
            return sx * r2 * t, sy * r1, sx * r2 * ds, 0.0
        # hyperbola from (r1, r2) to (r2, r1) in absolute values, or backwards
        a = r1 + (r2 - r1) * s if forward else r2 + (r1 - r2) * s
        da = (r2 - r1) if forward else (r1 - r2)
        prod = r1 * r2
        return sx * a, sy * prod / a, sx * da, -sy * prod / (a * a) * da

    def _height(self, y: float, dy: float) -> tuple[float, float]:
        if not self.twisted:
            return self.base, 0.0
        params = self.params
        u = min(abs(y) / params.r2, 1.0)
        du = math.copysign(1.0, y) * dy / params.r2 if y != 0.0 else abs(dy) / params.r2
        amp = abs(params.m) / params.n
        if self.wrong_signature:
            # the mirrored formula applied on the wrong annulus
            return self.base + amp * (1.0 - rho(u, params.profile)), -amp * rho_prime(u, params.profile) * du
        return self.base + amp * rho(u, params.profile), amp * rho_prime(u, params.profile) * du

    def point(self, s: float) -> np.ndarray:
        x, y, dx, dy = self._xy(s)
        z, _ = self._height(y, dy)
        return np.array([x, y, z])

    def tangent(self, s: float) -> np.ndarray:
        x, y, dx, dy = self._xy(s)
        _, dz = self._height(y, dy)
        return np.array([dx, dy, dz])


@dataclass(frozen=True)
class HelicoidSection:
    params: ModelParams
    arcs: tuple[Arc, ...]
    density: int = 64
    wrong_signature: bool = False

    @property
    def quadrant_arc_count(self) -> int:
        """Quadrant pieces of one boundary component (three arcs each)."""
        return len({(a.loop, a.quadrant) for a in self.arcs if a.component == 0})

    @property
    def twisted_band_count(self) -> int:
        return sum(1 for a in self.arcs if a.twisted and a.component == 0)

    def component_arcs(self, component: int = 0) -> list[Arc]:
        return [a for a in self.arcs if a.component == component]

    def boundary_points(self, component: int = 0, density: int | None = None) -> np.ndarray:
        """Discretised boundary curve with the circle coordinate lifted to R."""
        density = density or self.density
        pts = []
        for arc in self.component_arcs(component):
            for s in np.linspace(0.0, 1.0, density, endpoint=False):
                pts.append(arc.point(float(s)))
        pts.append(self.component_arcs(component)[0].point(0.0) + np.array([0.0, 0.0, self.accumulated_shift()]))
        return np.array(pts)

    def accumulated_shift(self) -> float:
        """Total change of the lifted height over one traversal; equals m."""
        total = 0.0
        for arc in self.component_arcs(0):
            total += arc.point(1.0)[2] - arc.point(0.0)[2]
        return total

    def homology_class(self, component: int = 0) -> tuple[int, int]:
        """(meridian turns, longitude turns) of one boundary component."""
        pts = self.boundary_points(component)
        angles = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
        turns = (angles[-1] - angles[0]) / (2.0 * math.pi)
        return int(round(turns)), int(round(pts[-1, 2] - pts[0, 2]))

    def torus_curve(self, component: int = 0) -> np.ndarray:
        """The boundary curve on the torus as (angle / 2 pi, lifted height)."""
        pts = self.boundary_points(component)
        angles = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0])) / (2.0 * math.pi)
        return np.column_stack([angles - angles[0], pts[:, 2]])

    def point(self, arc: Arc, s: float, theta: float) -> np.ndarray:
        x, y, z = arc.point(s)
        return np.array([theta * x, theta * y, z])


def build_helicoid(params: ModelParams, density: int = 64, wrong_signature: bool = False) -> HelicoidSection:
    """Boundary curve of class (n, m) on each of the p components.

    Component k sits k/(n p) higher than component 0, so the p curves are
    disjoint copies of each other.
    """
    if density < 2:
        raise ResolutionError(f"density={density} must be at least 2")
    twisted_q = params.twisted_quadrant
    step = params.m / params.n
    order = {1: ("in", "hyperbola", "out"), 2: ("out", "hyperbola", "in"),
             3: ("in", "hyperbola", "out"), 4: ("out", "hyperbola", "in")}
    arcs = []
    for comp in range(params.p):
        offset = comp / (params.n * params.p)
        for loop in range(params.n):
            start = offset + loop * step
            # the twisted band opens the loop for m < 0 and closes it for m > 0;
            # every flat arc sits at the height the band reaches where rho = 0
            base = start + step if params.m < 0 else start
            for q in (1, 2, 3, 4):
                for kind in order[q]:
                    twisted = kind == "in" and q == twisted_q
                    arcs.append(Arc(params, kind, q, loop, comp, base, twisted, wrong_signature))
    return HelicoidSection(params, tuple(arcs), density, wrong_signature)


def _field(params: ModelParams, pt: np.ndarray) -> np.ndarray:
    a = params.log_lam
    return np.array([a * pt[0], -a * pt[1], 1.0 / (params.n * params.p)])


def section_determinant(section: HelicoidSection, arc: Arc, s: float, theta: float) -> float:
    """X ^ d/ds ^ d/dtheta at the section point with boundary parameter s.

    The boundary parameter is rescaled to unit planar speed, so on the
    twisted band it is the radius |y| itself.  Every term carries one factor
    of theta, hence the value is theta times the value at theta = 1.
    """
    x, y, z = arc.point(s)
    dx, dy, dz = arc.tangent(s)
    speed = math.hypot(dx, dy)
    dx, dy, dz = dx / speed, dy / speed, dz / speed
    pt = np.array([theta * x, theta * y, z])
    d_s = np.array([theta * dx, theta * dy, dz])
    d_theta = np.array([x, y, 0.0])
    return float(np.linalg.det(np.array([_field(section.params, pt), d_s, d_theta])))


def band_determinant(params: ModelParams, r: float, theta: float) -> float:
    """Closed form of the determinant on the twisted band at |y| = r.

    Negative for either sign of m when the band is parameterised in the
    direction of travel.
    """
    from .surgery import kappa

    npp = params.n * params.p
    return theta * (-params.r1 / npp + 2.0 * params.log_lam * kappa(params, r) * params.r1 * r / params.r2)


@dataclass
class TransversalityReport:
    grid: int
    min_det: float
    max_det: float
    max_band_normalised: float
    threshold: float
    positive_points: int
    passed: bool
    worst: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def transversality_check(section: HelicoidSection, grid: int = 200) -> TransversalityReport:
    """Evaluate the determinant on a grid x grid (s, theta) mesh of every arc.

    theta runs over (0, 1] because the section degenerates onto the core orbit
    at theta = 0.  Passes iff the determinant is negative everywhere; on the
    twisted bands the value divided by theta is also reported against
    -r1/(2 n p).
    """
    if grid < 2:
        raise ResolutionError(f"grid={grid} cannot resolve the section; use at least 2")
    params = section.params
    thetas = np.linspace(1.0 / grid, 1.0, grid)
    ss = np.linspace(0.0, 1.0, grid)
    lo, hi, band_hi = math.inf, -math.inf, -math.inf
    positive = 0
    worst: dict = {}
    for idx, arc in enumerate(section.component_arcs(0)):
        unit = np.array([section_determinant(section, arc, float(s), 1.0) for s in ss])
        dets = np.outer(unit, thetas)
        positive += int((dets >= 0.0).sum())
        lo = min(lo, float(dets.min()))
        if float(dets.max()) > hi:
            hi = float(dets.max())
            i, j = np.unravel_index(int(dets.argmax()), dets.shape)
            worst = {"arc": idx, "kind": arc.kind, "quadrant": arc.quadrant, "s": float(ss[i]), "theta": float(thetas[j])}
        if arc.twisted:
            band_hi = max(band_hi, float(unit.max()))
    threshold = -params.r1 / (2.0 * params.n * params.p)
    return TransversalityReport(grid, lo, hi, band_hi, threshold, positive, positive == 0, worst)


def slice_count(section: HelicoidSection, height: float, samples: int = 4096) -> int:
    """Number of radial arcs in the intersection of the section with {z = height}.

    Only twisted bands move in height, so for a generic height the count is
    the number of times the lifted boundary curves pass through it mod 1.
    """
    count = 0
    for comp in range(section.params.p):
        for arc in section.component_arcs(comp):
            if not arc.twisted:
                continue
            zs = np.array([arc.point(float(s))[2] for s in np.linspace(0.0, 1.0, samples)])
            lo, hi = zs.min(), zs.max()
            k_lo, k_hi = math.ceil(lo - height), math.floor(hi - height)
            for k in range(k_lo, k_hi + 1):
                level = height + k
                if lo < level < hi:
                    count += 1
    return count


def mesh_rows(section: HelicoidSection, density: int = 16) -> list[tuple]:
    rows = []
    for arc in section.arcs:
        for s in np.linspace(0.0, 1.0, density):
            for theta in np.linspace(0.0, 1.0, density):
                x, y, z = section.point(arc, float(s), float(theta))
                det = section_determinant(section, arc, float(s), float(theta))
                rows.append((float(s), float(theta), x, y, z % 1.0, det))
    return rows


def mesh_csv(section: HelicoidSection, density: int = 16) -> str:
    """Mesh of the section as CSV; r is the boundary parameter of each arc."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "theta", "x", "y", "z", "det"])
    for row in mesh_rows(section, density):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# ------------------------------------------------------------------- fixture


def cat_map_spectrum() -> tuple[float, float]:
    """(spectral radius, its inverse) of the cat map from x^2 - 3x + 1."""
    (a, b), (c, d) = CAT_MAP
    tr, det = a + d, a * d - b * c
    radius = (tr + math.sqrt(tr * tr - 4 * det)) / 2.0
    return radius, 1.0 / radius


def first_return_agreement(params: ModelParams, samples: int = 32, seed: int = 0) -> dict:
    """Compare the cat map near its fixed point with the model return map.

    In the eigenbasis of the cat map (contracting direction first) the map is
    diag(lam, 1/lam), which is the model return map to z = 0 when n p = 1.
    """
    if params.n * params.p != 1:
        raise ParameterDomainError("the cat-map comparison needs n p = 1")
    mat = np.array(CAT_MAP, dtype=float)
    vals, vecs = np.linalg.eig(mat)
    order = np.argsort(np.abs(vals))
    basis = vecs[:, order]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x, y = rng.uniform(-params.r2, params.r2, size=2)
        ambient = np.linalg.solve(basis, mat @ (basis @ np.array([x, y])))
        (mx, my), _ = first_return_to_base(params, float(x), float(y))
        worst = max(worst, abs(ambient[0] - mx), abs(ambient[1] - my))
    return {"samples": samples, "max_error": worst, "passed": worst <= 1e-12}


def catmap_params(r1: float = 0.5, ratio: float = 0.25, m: int = -1, profile: str = "balanced") -> ModelParams:
    _, lam = cat_map_spectrum()
    return ModelParams(lam, 1, m, 1, r1, ratio * r1, profile)


def catmap_fixture(
    samples: int = 10_000,
    seed: int = 0,
    budget: int = 12,
    ratio: float = 0.25,
    grid: int = 200,
    m: int = -1,
) -> dict:
    """End-to-end scenario on the suspension of the cat map."""
    from .hyperbolicity import parameter_search

    radius, lam = cat_map_spectrum()
    data = BirkhoffBoundaryData(1, 1, m)
    valid = validate(data)
    search = parameter_search(lam, 1, m, 1, ratio, budget, profile="balanced", samples=samples, seed=seed)
    record = {
        "spectral_radius": radius,
        "lambda": lam,
        "boundary_data": data.to_dict(),
        "validation": {"ok": valid.ok, "violations": list(valid.violations), "embedded": valid.embedded},
        "blowdown": blowdown_bookkeeping([data]),
        "search": search.to_dict(),
    }
    if search.feasible:
        params = search.params
        section = build_helicoid(params)
        record["section"] = {
            "homology_class": list(section.homology_class()),
            "accumulated_shift": section.accumulated_shift(),
            "transversality": transversality_check(section, grid).to_dict(),
            "wrong_signature": transversality_check(build_helicoid(params, wrong_signature=True), grid).to_dict(),
        }
        record["first_return"] = first_return_agreement(params, seed=seed)
    return record
