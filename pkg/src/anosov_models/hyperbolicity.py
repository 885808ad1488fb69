"""Cone-field criterion for the glued flow, checked numerically.

Everything below runs on the su quotient (vector b e_s + c e_u) and on the
centre-unstable plane spanned by X and alpha e_s + e_u.  Slopes are pushed
through a word one factor at a time; the gluing factors act by Moebius maps
with determinant one and the flow factors by exact rescalings, so slope
differences are tracked in log form and never cancel or underflow.

Sign conventions are written for m < 0.  For m > 0 the gluing matrices are
conjugate by (b, c) -> (b, -c), so every cone is the negated interval.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .affine_flow import reentry_time_lower_bound
from .cocycle import CocycleWord, FlowSeg, TangentVector, sample_itineraries
from .errors import ParameterDomainError, ResolutionError
from .geometry import ModelParams
from .surgery import LEFT_EDGE, RIGHT_EDGE, bump_profile, kappa, phi_matrix_su, shear

SAFETY = 1.05
FLAVORS = ("cu", "cs", "strong_u", "strong_s")
CS_VARIANTS = ("mirrored", "verbatim")
MIN_GRID = 64


# --------------------------------------------------------------------- slopes


def slope_u(v: TangentVector) -> float:
    """b / c; infinite when the vector has no unstable component."""
    return math.inf if v.c == 0.0 else v.b / v.c


def slope_s(v: TangentVector) -> float:
    """c / b; infinite when the vector has no stable component."""
    return math.inf if v.b == 0.0 else v.c / v.b


def slope_tilde_u(v: TangentVector) -> float:
    """a / c for a vector a X + c (alpha e_s + e_u) of the centre-unstable plane."""
    return math.inf if v.c == 0.0 else v.a / v.c


def q_factor(delta: float) -> float:
    return 1.0 / (delta * delta + 1.0)


def solve_t0(slope_bound: float, epsilon: float, lam: float) -> float:
    """Smallest T with lam^(2T) * slope_bound <= epsilon (zero if already true)."""
    if slope_bound <= 0 or epsilon <= 0:
        raise ParameterDomainError("slope_bound and epsilon must be positive")
    if not (0.0 < lam < 1.0):
        raise ParameterDomainError(f"lambda={lam} must lie in (0, 1)")
    return max(0.0, math.log(epsilon / slope_bound) / (2.0 * math.log(lam)))


# ---------------------------------------------------------------------- cones


@dataclass(frozen=True)
class Cone:
    """Slope interval [delta_lo, delta_hi] for one cone family.

    The slope used is b/c for cu, c/b for cs, a/c inside the centre-unstable
    plane for strong_u and a/b inside the centre-stable plane for strong_s.
    """

    delta_lo: float
    delta_hi: float
    flavor: str

    def __post_init__(self) -> None:
        if self.flavor not in FLAVORS:
            raise ParameterDomainError(f"unknown cone flavor {self.flavor!r}")
        if not self.delta_lo < self.delta_hi:
            raise ParameterDomainError(f"empty cone [{self.delta_lo}, {self.delta_hi}]")

    @property
    def width(self) -> float:
        return self.delta_hi - self.delta_lo

    def slope_of(self, v: TangentVector) -> float:
        if self.flavor == "cu":
            return slope_u(v)
        if self.flavor == "cs":
            return slope_s(v)
        if self.flavor == "strong_u":
            return slope_tilde_u(v)
        return math.inf if v.b == 0.0 else v.a / v.b

    def contains_slope(self, slope: float, tolerance: float = 0.0) -> bool:
        return self.delta_lo - tolerance <= slope <= self.delta_hi + tolerance

    def contains(self, v: TangentVector) -> bool:
        return self.contains_slope(self.slope_of(v))

    def sample_slopes(self, count: int) -> list[float]:
        return [float(s) for s in np.linspace(self.delta_lo, self.delta_hi, max(count, 2))]


def orientation(params: ModelParams) -> int:
    return 1 if params.m < 0 else -1


def _oriented(params: ModelParams, lo: float, hi: float, flavor: str) -> Cone:
    if orientation(params) == 1:
        return Cone(lo, hi, flavor)
    return Cone(-hi, -lo, flavor)


def weak_cone(params: ModelParams, flavor: str = "cu", cs_variant: str = "mirrored") -> Cone:
    """Default weak cones.

    The centre-unstable cone is [-3 r1/r2, r2/(3 r1)].  The centre-stable cone
    is [-2 r2/(3 r1), 3 r1/(2 r2)] by default; ``cs_variant="verbatim"`` gives
    the sign-swapped interval [-3 r1/(2 r2), 2 r2/(3 r1)], which is kept for
    comparison because the inverse gluing map has a pole inside it.
    """
    beta = params.ratio
    if flavor == "cu":
        return _oriented(params, -3.0 / beta, beta / 3.0, "cu")
    if flavor == "cs":
        if cs_variant == "mirrored":
            return _oriented(params, -2.0 * beta / 3.0, 1.5 / beta, "cs")
        if cs_variant == "verbatim":
            return _oriented(params, -1.5 / beta, 2.0 * beta / 3.0, "cs")
        raise ParameterDomainError(f"unknown cs variant {cs_variant!r}; choose from {CS_VARIANTS}")
    raise ParameterDomainError(f"weak cones are 'cu' or 'cs', not {flavor!r}")


# ------------------------------------------------------------ factor threading


@dataclass(frozen=True)
class _Glue:
    big_k: float
    w: float
    kappa: float

    @property
    def active(self) -> bool:
        return self.big_k != 0.0


def _glue(params: ModelParams, r: float) -> _Glue:
    return _Glue(shear(params, r), r / params.r1, kappa(params, r))


@lru_cache(maxsize=1 << 16)
def _compile(params: ModelParams, word: CocycleWord) -> tuple:
    """Factors in time order: floats are flow durations, _Glue records the rest."""
    return tuple(float(f.duration) if isinstance(f, FlowSeg) else _glue(params, f.r) for f in word.factors)


def _den_u(g: _Glue, sigma: int, delta: float) -> float:
    # denominator of the forward slope map; equals B of the cu matrix at alpha = delta
    return 1.0 - g.big_k - sigma * g.big_k * g.w * delta


def _map_u(g: _Glue, sigma: int, delta: float) -> float:
    return ((1.0 + g.big_k) * delta + sigma * g.big_k / g.w) / _den_u(g, sigma, delta)


def _den_s(g: _Glue, sigma: int, s: float) -> float:
    # denominator of the inverse slope map on c / b
    return 1.0 - g.big_k - sigma * g.big_k * s / g.w


def _map_s(g: _Glue, sigma: int, s: float) -> float:
    return (sigma * g.big_k * g.w + (1.0 + g.big_k) * s) / _den_s(g, sigma, s)


@dataclass
class _Thread:
    """Two slopes pushed through a word, with the log of their separation."""

    lo: float
    hi: float
    log_gap: float
    pole: bool = False

    @classmethod
    def start(cls, lo: float, hi: float, log_gap: float | None = None) -> "_Thread":
        if log_gap is None:
            gap = hi - lo
            log_gap = math.log(gap) if gap > 0 else -math.inf
        return cls(lo, hi, log_gap)


def _thread_u(
    params: ModelParams, factors: list, lo: float, hi: float, log_gap: float | None = None
) -> _Thread:
    sigma = orientation(params)
    two_log_lam = 2.0 * params.log_lam
    th = _Thread.start(lo, hi, log_gap)
    for f in factors:
        if isinstance(f, float):
            scale = params.lam ** (2.0 * f)
            th.lo, th.hi = th.lo * scale, th.hi * scale
            th.log_gap += two_log_lam * f
        elif f.active:
            d_lo, d_hi = _den_u(f, sigma, th.lo), _den_u(f, sigma, th.hi)
            if d_lo <= 0.0 or d_hi <= 0.0:
                th.pole = True
                return th
            th.lo, th.hi = _map_u(f, sigma, th.lo), _map_u(f, sigma, th.hi)
            th.log_gap -= math.log(d_lo) + math.log(d_hi)
    return th


def _thread_s_backward(
    params: ModelParams, factors: list, lo: float, hi: float, log_gap: float | None = None
) -> _Thread:
    """Push a c/b interval backwards through a word (last factor first)."""
    sigma = orientation(params)
    two_log_lam = 2.0 * params.log_lam
    th = _Thread.start(lo, hi, log_gap)
    for f in reversed(factors):
        if isinstance(f, float):
            scale = params.lam ** (2.0 * f)
            th.lo, th.hi = th.lo * scale, th.hi * scale
            th.log_gap += two_log_lam * f
        elif f.active:
            d_lo, d_hi = _den_s(f, sigma, th.lo), _den_s(f, sigma, th.hi)
            if d_lo <= 0.0 or d_hi <= 0.0:
                th.pole = True
                return th
            th.lo, th.hi = _map_s(f, sigma, th.lo), _map_s(f, sigma, th.hi)
            th.log_gap -= math.log(d_lo) + math.log(d_hi)
    return th


def _thread_strong_u(
    params: ModelParams, factors: list, alpha: float, lo: float, hi: float, log_gap: float | None = None
) -> tuple[_Thread, float, float, bool]:
    """Push an a/c interval of the centre-unstable plane through a word.

    Returns the thread, the final inclination, the log growth of the e_u
    coefficient c and whether the inclination hit a pole.
    """
    sigma = orientation(params)
    npp = params.n * params.p
    th = _Thread.start(lo, hi, log_gap)
    log_c = 0.0
    for f in factors:
        if isinstance(f, float):
            lt = params.lam**f
            th.lo, th.hi = th.lo * lt, th.hi * lt
            th.log_gap += params.log_lam * f
            alpha *= lt * lt
            log_c -= params.log_lam * f
        elif f.active:
            big_b = _den_u(f, sigma, alpha)
            if big_b <= 0.0:
                th.pole = True
                return th, alpha, log_c, True
            big_a = -sigma * f.kappa * npp / params.r2 * (1.0 + sigma * alpha * f.w)
            th.lo, th.hi = (th.lo + big_a) / big_b, (th.hi + big_a) / big_b
            th.log_gap -= math.log(big_b)
            log_c += math.log(big_b)
            alpha = _map_u(f, sigma, alpha)
    return th, alpha, log_c, False


def _thread_strong_s_backward(
    params: ModelParams, factors: list, s: float, lo: float, hi: float, log_gap: float | None = None
) -> tuple[_Thread, float]:
    """Push an a/b interval of the centre-stable plane backwards through a word."""
    sigma = orientation(params)
    npp = params.n * params.p
    th = _Thread.start(lo, hi, log_gap)
    for f in reversed(factors):
        if isinstance(f, float):
            lt = params.lam**f
            th.lo, th.hi = th.lo * lt, th.hi * lt
            th.log_gap += params.log_lam * f
            s *= lt * lt
        elif f.active:
            big_b = _den_s(f, sigma, s)
            if big_b <= 0.0:
                th.pole = True
                return th, s
            big_a = sigma * f.kappa * npp * (sigma * f.w + s) / params.r2
            th.lo, th.hi = (th.lo + big_a) / big_b, (th.hi + big_a) / big_b
            th.log_gap -= math.log(big_b)
            s = _map_s(f, sigma, s)
    return th, s


def _log_su_growth(params: ModelParams, factors: list, b: float, c: float) -> float:
    """log of |D psi v|_su / |v|_su, rescaling as it goes."""
    norm0 = math.hypot(b, c)
    b, c = b / norm0, c / norm0
    total = 0.0
    sigma = orientation(params)
    for f in factors:
        if isinstance(f, float):
            lt = params.lam**f
            b, c = b * lt, c / lt
        elif f.active:
            k, w = f.big_k, f.w
            b, c = (1.0 + k) * b + sigma * k / w * c, -sigma * k * w * b + (1.0 - k) * c
        n = math.hypot(b, c)
        total += math.log(n)
        b, c = b / n, c / n
    return total


# ------------------------------------------------------------------ constants


@dataclass(frozen=True)
class ConstantsReport:
    """Cone constants for one parameter set.

    Constants depending only on r2/r1 come from extremising the exact slope
    maps over a grid of the gluing support, inflated by the safety factor.
    """

    epsilon: float
    C: float
    D: float
    K0: float
    Q0: float
    T0: float
    T1_bound: float
    mu: float
    delta_u_strong: float
    D0: float
    D1: float
    K0_slope: float
    L0: float
    T: float
    T0_cone: float
    T1_required: float
    pole_margin_cu: float
    pole_margin_cs: float
    B_floor: float
    R0: float
    D0_weak: float
    D1_weak: float
    epsilon_strong: float
    kappa_strong: float
    lam_strong: float
    D0_s: float
    D1_s: float
    delta_s_strong: float
    grid_size: int
    cs_variant: str
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


PROVENANCE = {
    "epsilon": "grid estimate (bisection on the exact slope map)",
    "C": "grid estimate",
    "D": "grid estimate",
    "K0": "grid estimate",
    "Q0": "closed form from C and D",
    "T0": "closed form from C, D, epsilon and Q0",
    "T1_bound": "re-entry time of the shrunk region",
    "mu": "closed form Q0^(1/T0) / lambda",
    "delta_u_strong": "closed form D0/r2 + 1",
    "D0": "grid estimate",
    "D1": "grid estimate",
    "K0_slope": "grid estimate",
    "L0": "closed form K0_slope * cone width",
    "R0": "grid estimate",
}


def _support_grid(grid_size: int) -> np.ndarray:
    # interior points of the support plus its closed ends
    return np.linspace(LEFT_EDGE, RIGHT_EDGE, grid_size)


def _shear_on_grid(params: ModelParams, us: np.ndarray) -> np.ndarray:
    prof = bump_profile(params.profile)
    c = params.p * abs(params.m) * abs(params.log_lam)
    return np.array([-c * abs(prof.rho_prime(float(u))) * float(u) for u in us])


def _reference(params: ModelParams) -> ModelParams:
    """The m < 0 mirror of ``params``; every cone constant is mirror invariant."""
    if params.m < 0:
        return params
    return ModelParams(params.lam, params.n, -params.m, params.p, params.r1, params.r2, params.profile)


def estimate_constants(
    params: ModelParams,
    grid_size: int = 2001,
    t1: float | None = None,
    cs_variant: str = "mirrored",
) -> ConstantsReport:
    """Estimate every cone constant for ``params``.

    ``t1`` is the minimum time between two visits of the gluing annulus; when
    omitted, the smallest value meeting the analytic conditions is used.
    """
    if grid_size < MIN_GRID:
        raise ResolutionError(f"grid_size={grid_size} is too coarse; use at least {MIN_GRID} (suggested 2001)")
    ref = _reference(params)
    beta = ref.ratio
    lam = ref.lam
    us = _support_grid(grid_size)
    ks = _shear_on_grid(ref, us)
    abs_k = np.abs(ks)
    ws = us * beta
    kappas = abs_k / (ref.n * ref.p * abs(ref.log_lam) * us)

    cu = weak_cone(ref, "cu")
    d0, d1 = cu.delta_lo, cu.delta_hi
    cs = weak_cone(ref, "cs", cs_variant)

    den_lo = 1.0 - ks - ks * ws * d0
    den_hi = 1.0 - ks - ks * ws * d1
    pole_margin_cu = float(min(den_lo.min(), den_hi.min(), 1.0))
    den_s_lo = 1.0 - ks - ks * cs.delta_lo / ws
    den_s_hi = 1.0 - ks - ks * cs.delta_hi / ws
    pole_margin_cs = float(min(den_s_lo.min(), den_s_hi.min(), 1.0))

    nan = math.nan
    if pole_margin_cu <= 0.0:
        # the weak cone is not mapped to an interval: no constant below makes sense
        return ConstantsReport(
            nan, nan, nan, nan, nan, math.inf, nan if t1 is None else t1, nan, nan, nan, nan,
            nan, nan, math.inf, math.inf, math.inf, pole_margin_cu, pole_margin_cs, nan, nan,
            nan, nan, nan, nan, nan, nan, nan, nan, grid_size, cs_variant, dict(PROVENANCE),
        )

    img_lo = ((1.0 + ks) * d0 + ks / ws) / den_lo
    img_hi = ((1.0 + ks) * d1 + ks / ws) / den_hi
    big_c = SAFETY * max(-beta * float(img_lo.min()), 3.0 / beta)
    big_d = SAFETY * max(float(img_hi.max()) / beta, beta / 3.0)

    k0_raw = float((abs_k / (1.0 + abs_k)).max())
    k0 = min(SAFETY * k0_raw, 0.5 * (1.0 + k0_raw))

    # largest epsilon whose image under every gluing factor stays inside the weak cone
    def eps_ok(eps: float) -> bool:
        lo_den = 1.0 - ks + ks * ws * eps
        hi_den = 1.0 - ks - ks * ws * eps
        if lo_den.min() <= 0 or hi_den.min() <= 0:
            return False
        lo_img = ((1.0 + ks) * -eps + ks / ws) / lo_den
        hi_img = ((1.0 + ks) * eps + ks / ws) / hi_den
        return bool(lo_img.min() > d0 and hi_img.max() < d1)

    eps_hi = min(1.5 / beta, beta / 3.0, (3.0 / beta) * (1.0 - k0)) / SAFETY
    eps = eps_hi
    if not eps_ok(eps):
        lo_e, hi_e = 0.0, eps_hi
        for _ in range(80):
            mid = 0.5 * (lo_e + hi_e)
            lo_e, hi_e = (mid, hi_e) if eps_ok(mid) else (lo_e, mid)
        eps = lo_e / SAFETY

    gprime_max = float((1.0 / den_lo**2).max())
    k0_slope = max(1.0, SAFETY * gprime_max)
    l0 = k0_slope * cu.width

    q0 = min(q_factor(big_c / beta), q_factor(big_d * beta))
    if eps > 0:
        t0_cone = max(solve_t0(big_c / beta, eps, lam), solve_t0(big_d * beta, eps, lam))
    else:
        t0_cone = math.inf
    # the su norm must grow across the big cone after T0, i.e. Q0 lam^(-T0) > 1
    t0_expand = max(
        solve_t0(big_c / beta, beta / big_c, lam),
        solve_t0(big_d * beta, 1.0 / (big_d * beta), lam),
        SAFETY * math.log(q0) / math.log(lam),
    )
    t0 = max(t0_cone, t0_expand)
    mu = q0 ** (1.0 / t0) / lam if t0 > 0 else 1.0 / lam

    npp = ref.n * ref.p

    def strong_bounds(alpha_lo: float, alpha_hi: float) -> tuple[float, float, float]:
        x_lo = 1.0 + alpha_lo * ws
        x_hi = 1.0 + alpha_hi * ws
        b_lo = 1.0 - ks * x_lo
        b_hi = 1.0 - ks * x_hi
        a_over = np.maximum(kappas * npp * np.abs(x_lo) / b_lo, kappas * npp * np.abs(x_hi) / b_hi)
        d0_ = SAFETY * float(a_over.max())
        d1_ = SAFETY * max(1.0, float((1.0 / b_lo).max()), float((1.0 / b_hi).max()))
        return d0_, d1_, float(min(b_lo.min(), b_hi.min(), 1.0))

    # at an entry point the last gluing lies at least T1 >= T0 in the past, so
    # the centre-unstable inclination has already been pushed into the epsilon cone
    big_d0, big_d1, _ = strong_bounds(-eps, eps)
    d0_weak, d1_weak, b_floor = strong_bounds(d0, d1)
    delta_u = big_d0 / ref.r2 + 1.0
    eps_s = 1.0 / big_d1
    kappa_s = big_d0 / ref.r2 + big_d1 * delta_u + 1.0

    # mirror quantities on the centre-stable plane (diagnostic)
    if pole_margin_cs > 0:
        xs_lo = ws - eps
        xs_hi = ws + eps
        bs_lo = 1.0 - ks * xs_lo / ws
        bs_hi = 1.0 - ks * xs_hi / ws
        d0_s = SAFETY * float(
            np.maximum(kappas * npp * np.abs(xs_lo) / bs_lo, kappas * npp * np.abs(xs_hi) / bs_hi).max()
        )
        d1_s = SAFETY * max(1.0, float((1.0 / bs_lo).max()), float((1.0 / bs_hi).max()))
        delta_s = d0_s / ref.r2 + 1.0
    else:
        d0_s = d1_s = delta_s = nan

    r0 = min(
        float(np.linalg.svd(phi_matrix_su(ref, float(u) * ref.r2), compute_uv=False)[-1]) for u in us
    )

    t1_required = max(
        t0,
        math.log(eps_s / kappa_s) / math.log(lam),
        0.0,
    )
    t1_bound = t1_required if t1 is None else float(t1)
    lam_strong = lam * big_d1 ** (1.0 / t1_bound) if t1_bound > 0 else math.inf

    return ConstantsReport(
        epsilon=eps,
        C=big_c,
        D=big_d,
        K0=k0,
        Q0=q0,
        T0=t0,
        T1_bound=t1_bound,
        mu=mu,
        delta_u_strong=delta_u,
        D0=big_d0,
        D1=big_d1,
        K0_slope=k0_slope,
        L0=l0,
        T=2.0 * t0,
        T0_cone=t0_cone,
        T1_required=t1_required,
        pole_margin_cu=pole_margin_cu,
        pole_margin_cs=pole_margin_cs,
        B_floor=b_floor,
        R0=r0,
        D0_weak=d0_weak,
        D1_weak=d1_weak,
        epsilon_strong=eps_s,
        kappa_strong=kappa_s,
        lam_strong=lam_strong,
        D0_s=d0_s,
        D1_s=d1_s,
        delta_s_strong=delta_s,
        grid_size=grid_size,
        cs_variant=cs_variant,
        provenance=dict(PROVENANCE),
    )


@dataclass(frozen=True)
class AnalyticCheck:
    name: str
    passed: bool
    margin: float


def analytic_conditions(consts: ConstantsReport, lam: float) -> list[AnalyticCheck]:
    """The inequalities the sampled suites rely on, in the order they are needed."""
    checks = [AnalyticCheck("shear pole outside weak cone", consts.pole_margin_cu > 0, consts.pole_margin_cu)]
    if not checks[0].passed:
        return checks
    t1 = consts.T1_bound
    checks.append(AnalyticCheck("epsilon positive", consts.epsilon > 0, consts.epsilon))
    checks.append(AnalyticCheck("T1 >= T0", t1 >= consts.T0, t1 - consts.T0))
    strong = lam**t1 * consts.kappa_strong
    checks.append(AnalyticCheck("strong cone absorbed", strong < consts.epsilon_strong, consts.epsilon_strong - strong))
    checks.append(AnalyticCheck("strong contraction rate", consts.lam_strong < 1.0, 1.0 - consts.lam_strong))
    return checks


# ------------------------------------------------------------------- reports


@dataclass
class CheckReport:
    check: str
    samples: int
    violations: list = field(default_factory=list)
    worst_margin: float = math.inf
    skipped: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations and self.samples > 0

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "samples": self.samples,
            "skipped": self.skipped,
            "violations": sorted(self.violations, key=lambda v: v["word_index"]),
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "details": self.details,
        }


def _violation(index: int, word: CocycleWord, **info) -> dict:
    return {"word_index": index, "word": word.to_json(), **info}


def check_cone_invariance(
    params: ModelParams,
    family: str,
    words: Sequence[CocycleWord],
    T: float,
    consts: ConstantsReport | None = None,
    samples: int = 5,
    cs_variant: str = "mirrored",
) -> CheckReport:
    """Map the cone through every word of total time at least T.

    cu and strong_u cones are pushed forward, cs cones backward.  The margin
    is the smallest distance from the image to the cone edge, relative to the
    cone width; negative margins are violations.
    """
    if family in ("cu", "cs"):
        cone = weak_cone(params, family, cs_variant)
    elif family == "strong_u":
        if consts is None:
            raise ParameterDomainError("strong cone checks need a ConstantsReport")
        cone = strong_cone(params, consts)
    else:
        raise ParameterDomainError(f"no invariance check for {family!r}")
    report = CheckReport(f"{family}_invariance", 0)
    alphas = []
    if family == "strong_u":
        eps_cone = epsilon_cone(params, consts)
        alphas = eps_cone.sample_slopes(samples)
    for idx, word in enumerate(words):
        if word.total_time < T:
            report.skipped += 1
            continue
        factors = _compile(params, word)
        if family == "cu":
            images = [_thread_u(params, factors, cone.delta_lo, cone.delta_hi)]
        elif family == "cs":
            images = [_thread_s_backward(params, factors, cone.delta_lo, cone.delta_hi)]
        else:
            images = []
            for alpha in alphas:
                th, _, _, pole = _thread_strong_u(params, factors, alpha, cone.delta_lo, cone.delta_hi)
                images.append(th)
        report.samples += 1
        for th in images:
            if th.pole:
                report.violations.append(_violation(idx, word, reason="pole inside cone"))
                report.worst_margin = -math.inf
                break
            margin = min(th.lo - cone.delta_lo, cone.delta_hi - th.hi) / cone.width
            report.worst_margin = min(report.worst_margin, margin)
            if margin < 0:
                report.violations.append(_violation(idx, word, image=[th.lo, th.hi], margin=margin))
                break
    report.details = {"cone": [cone.delta_lo, cone.delta_hi], "T": T}
    return report


def strong_cone(params: ModelParams, consts: ConstantsReport) -> Cone:
    d = consts.delta_u_strong
    return Cone(-d, d, "strong_u")


def strong_stable_cone(params: ModelParams, consts: ConstantsReport) -> Cone:
    d = consts.delta_s_strong
    return Cone(-d, d, "strong_s")


def epsilon_cone(params: ModelParams, consts: ConstantsReport) -> Cone:
    return Cone(-consts.epsilon, consts.epsilon, "cu")


def check_slope_contraction(
    params: ModelParams,
    words: Sequence[CocycleWord],
    consts: ConstantsReport,
    samples: int = 4,
) -> CheckReport:
    """Slope differences of cu-cone vectors shrink at least like lam^(2t) L0.

    Pairs are consecutive slopes of an even grid of the weak cone including
    its edges, so the whole cone width is covered.
    """
    cone = weak_cone(params, "cu")
    slopes = cone.sample_slopes(samples + 1)
    report = CheckReport("weak_slope_contraction", 0)
    log_l0 = math.log(consts.L0)
    measured = 0.0
    table = []
    for idx, word in enumerate(words):
        factors = _compile(params, word)
        t = word.total_time
        report.samples += 1
        worst = -math.inf
        for lo, hi in zip(slopes[:-1], slopes[1:]):
            th = _thread_u(params, factors, lo, hi)
            if th.pole:
                report.violations.append(_violation(idx, word, reason="pole inside cone"))
                worst = math.inf
                break
            # log of (image gap) / lam^(2t)
            worst = max(worst, th.log_gap - 2.0 * params.log_lam * t)
        if worst == math.inf:
            continue
        measured = max(measured, math.exp(worst))
        report.worst_margin = min(report.worst_margin, log_l0 - worst)
        if len(table) < 50:
            table.append({"word_index": idx, "t": t, "ratio": math.exp(worst) / consts.L0})
        if worst > log_l0 + 1e-12:
            report.violations.append(_violation(idx, word, measured=math.exp(worst), bound=consts.L0))
    report.details = {"L0": consts.L0, "measured_L0": measured, "table": table}
    return report


def check_expansion(
    params: ModelParams,
    words: Sequence[CocycleWord],
    consts: ConstantsReport,
    samples: int = 3,
    min_time: float = 0.0,
) -> CheckReport:
    """Fit log |D psi v|_su = log L + t log mu over cu-cone vectors.

    Passes when the fitted mu exceeds one and is at least 0.9 of the
    theoretical rate.  Single gluing factors are also checked against the
    smallest singular value R0.
    """
    cone = weak_cone(params, "cu")
    report = CheckReport("weak_expansion", 0)
    ts, logs = [], []
    rows = []
    for word in words:
        if word.total_time < min_time:
            report.skipped += 1
            continue
        factors = _compile(params, word)
        report.samples += 1
        for delta in cone.sample_slopes(samples):
            g = _log_su_growth(params, factors, delta, 1.0)
            ts.append(word.total_time)
            logs.append(g)
        rows.append((word.total_time, logs[-1]))
    single = []
    for r in np.linspace(0.0, params.r2, 41):
        for delta in cone.sample_slopes(samples):
            g = _log_su_growth(params, [_glue(params, float(r))], delta, 1.0)
            single.append(g - math.log(consts.R0))
    single_margin = min(single)
    if single_margin < -1e-12:
        report.violations.append({"word_index": -1, "word": [], "reason": "single gluing factor below R0"})
    fit = fit_growth(ts, logs)
    mu_measured = fit["mu"]
    target = max(1.0, 0.9 * consts.mu)
    report.worst_margin = mu_measured - target
    if not mu_measured > target and not (mu_measured > 1.0 and mu_measured >= 0.9 * consts.mu):
        report.violations.append(
            {"word_index": -1, "word": [], "reason": "fitted rate too small", "mu_measured": mu_measured}
        )
    report.details = {
        "L": fit["L"],
        "mu_measured": mu_measured,
        "mu_theory": consts.mu,
        "R0": consts.R0,
        "single_factor_margin": single_margin,
        "growth": rows[:200],
    }
    return report


def fit_growth(ts: Sequence[float], logs: Sequence[float]) -> dict:
    """Least-squares line through (t, log growth) pairs."""
    t = np.asarray(ts, dtype=float)
    g = np.asarray(logs, dtype=float)
    if t.size < 2 or np.ptp(t) == 0.0:
        return {"L": math.nan, "mu": math.nan}
    slope, intercept = np.polyfit(t, g, 1)
    return {"L": float(math.exp(intercept)), "mu": float(math.exp(slope))}


def check_strong_contraction(
    params: ModelParams,
    words: Sequence[CocycleWord],
    consts: ConstantsReport,
    samples: int = 3,
) -> CheckReport:
    """Gaps between strong-cone slopes in the cu plane shrink like lam_strong^t."""
    cone = strong_cone(params, consts)
    alphas = epsilon_cone(params, consts).sample_slopes(samples)
    report = CheckReport("strong_slope_contraction", 0)
    log_bound0 = math.log(2.0 * consts.delta_u_strong * consts.D1)
    log_rate = math.log(consts.lam_strong)
    for idx, word in enumerate(words):
        factors = _compile(params, word)
        report.samples += 1
        for alpha in alphas:
            th, _, _, pole = _thread_strong_u(params, factors, alpha, cone.delta_lo, cone.delta_hi)
            if pole:
                report.violations.append(_violation(idx, word, reason="inclination pole"))
                break
            margin = log_bound0 + log_rate * word.total_time - th.log_gap
            report.worst_margin = min(report.worst_margin, margin)
            if margin < -1e-12:
                report.violations.append(_violation(idx, word, log_gap=th.log_gap))
                break
    report.details = {"lam_strong": consts.lam_strong, "delta_u": consts.delta_u_strong}
    return report


def check_strong_expansion(
    params: ModelParams,
    words: Sequence[CocycleWord],
    consts: ConstantsReport,
    samples: int = 3,
) -> CheckReport:
    """Vectors of the strong unstable cone grow exponentially."""
    cone = strong_cone(params, consts)
    alphas = epsilon_cone(params, consts).sample_slopes(samples)
    report = CheckReport("strong_expansion", 0)
    ts, logs = [], []
    for idx, word in enumerate(words):
        factors = _compile(params, word)
        report.samples += 1
        for alpha in alphas:
            for delta in (cone.delta_lo, 0.0, cone.delta_hi):
                th, alpha_end, log_c, pole = _thread_strong_u(params, factors, alpha, delta, delta + 1.0)
                if pole:
                    report.violations.append(_violation(idx, word, reason="inclination pole"))
                    break
                start = math.sqrt(delta * delta + alpha * alpha + 1.0)
                end = math.sqrt(th.lo * th.lo + alpha_end * alpha_end + 1.0)
                ts.append(word.total_time)
                logs.append(log_c + math.log(end / start))
    fit = fit_growth(ts, logs)
    report.worst_margin = fit["mu"] - 1.0
    if not fit["mu"] > 1.0:
        report.violations.append({"word_index": -1, "word": [], "reason": "no exponential growth", **fit})
    report.details = {"L": fit["L"], "mu_measured": fit["mu"]}
    return report


# ------------------------------------------------------------------ splitting


@dataclass
class SplittingReport:
    cu_slope: float
    cs_slope: float
    u_line: float
    s_line: float
    cu_history: list
    cs_history: list
    u_history: list
    s_history: list
    contraction: list
    max_contraction: float
    bound: float
    axis_gap: float
    converged: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def extract_splitting(
    params: ModelParams,
    past: Sequence[CocycleWord],
    future: Sequence[CocycleWord],
    iterations: int,
    consts: ConstantsReport,
    cs_variant: str = "mirrored",
    T: float | None = None,
) -> SplittingReport:
    """Locate the invariant planes and lines at a base point by nested cones.

    ``past`` lists the words leading into the base point, most recent first;
    ``future`` lists the words leaving it, earliest first.  Both need at least
    ``iterations`` entries of total time T or more.
    """
    T = consts.T if T is None else T
    past = [w for w in past if w.total_time >= T][:iterations]
    future = [w for w in future if w.total_time >= T][:iterations]
    if len(past) < iterations or len(future) < iterations:
        raise ParameterDomainError(f"need {iterations} words of total time >= {T} in each stream")
    cu = weak_cone(params, "cu")
    cs = weak_cone(params, "cs", cs_variant)
    su_cone = strong_cone(params, consts)
    ss_cone = strong_stable_cone(params, consts)
    past_f = [_compile(params, w) for w in past]
    future_f = [_compile(params, w) for w in future]

    def through_past(kind: str, k: int) -> _Thread:
        if kind == "cu":
            th = _Thread.start(cu.delta_lo, cu.delta_hi)
            for fs in reversed(past_f[:k]):
                th = _thread_u(params, fs, th.lo, th.hi, th.log_gap)
                if th.pole:
                    break
            return th
        th = _Thread.start(su_cone.delta_lo, su_cone.delta_hi)
        alpha = 0.0
        for fs in reversed(past_f[:k]):
            th, alpha, _, pole = _thread_strong_u(params, fs, alpha, th.lo, th.hi, th.log_gap)
            if pole:
                break
        return th

    def through_future(kind: str, k: int) -> _Thread:
        if kind == "cs":
            th = _Thread.start(cs.delta_lo, cs.delta_hi)
            for fs in reversed(future_f[:k]):
                th = _thread_s_backward(params, fs, th.lo, th.hi, th.log_gap)
                if th.pole:
                    break
            return th
        th = _Thread.start(ss_cone.delta_lo, ss_cone.delta_hi)
        s = 0.0
        for fs in reversed(future_f[:k]):
            th, s = _thread_strong_s_backward(params, fs, s, th.lo, th.hi, th.log_gap)
            if th.pole:
                break
        return th

    histories = {}
    for kind, fn in (("cu", through_past), ("u", through_past), ("cs", through_future), ("s", through_future)):
        rows = []
        for k in range(1, iterations + 1):
            th = fn(kind, k)
            rows.append({"lo": th.lo, "hi": th.hi, "log_diameter": th.log_gap, "pole": th.pole})
        histories[kind] = rows

    cu_rows = histories["cu"]
    contraction = []
    prev = math.log(cu.width)
    for row in cu_rows:
        contraction.append(math.exp(row["log_diameter"] - prev) if not row["pole"] else math.inf)
        prev = row["log_diameter"]
    bound = params.lam ** (2.0 * T) + 0.05
    max_c = max(contraction)
    cu_slope = 0.5 * (cu_rows[-1]["lo"] + cu_rows[-1]["hi"])
    cs_rows = histories["cs"]
    cs_slope = 0.5 * (cs_rows[-1]["lo"] + cs_rows[-1]["hi"])
    u_line = 0.5 * (histories["u"][-1]["lo"] + histories["u"][-1]["hi"])
    s_line = 0.5 * (histories["s"][-1]["lo"] + histories["s"][-1]["hi"])
    # the su lines b/c = cu_slope and c/b = cs_slope coincide iff cu_slope * cs_slope = 1
    axis_gap = abs(cu_slope * cs_slope - 1.0)
    any_pole = any(r["pole"] for rows in histories.values() for r in rows)
    reason = ""
    if any_pole:
        reason = "cone image hit a pole"
    elif max_c > bound:
        reason = f"per-step contraction {max_c:.3g} exceeds {bound:.3g}"
    elif axis_gap < 1e-9:
        reason = "cu and cs planes share an su direction"
    return SplittingReport(
        cu_slope=cu_slope,
        cs_slope=cs_slope,
        u_line=u_line,
        s_line=s_line,
        cu_history=cu_rows,
        cs_history=cs_rows,
        u_history=histories["u"],
        s_history=histories["s"],
        contraction=contraction,
        max_contraction=max_c,
        bound=bound,
        axis_gap=axis_gap,
        converged=not reason,
        reason=reason,
    )


# --------------------------------------------------------------------- suites


def weak_suite(
    params: ModelParams, consts: ConstantsReport, words: Sequence[CocycleWord], samples: int = 4
) -> list[CheckReport]:
    return [
        check_cone_invariance(params, "cu", words, consts.T, consts, samples),
        check_slope_contraction(params, words, consts, samples),
        check_expansion(params, words, consts, samples),
    ]


def strong_suite(
    params: ModelParams, consts: ConstantsReport, words: Sequence[CocycleWord], samples: int = 3
) -> list[CheckReport]:
    return [
        check_cone_invariance(params, "strong_u", words, 2.0 * consts.T1_bound, consts, samples),
        check_strong_contraction(params, words, consts, samples),
        check_strong_expansion(params, words, consts, samples),
    ]


def suite_words(
    params: ModelParams, t1: float, count: int, max_factors: int, seed: int
) -> list[CocycleWord]:
    return sample_itineraries(params, count, max_factors, t1, seed, reentry_bound=t1)


@dataclass
class SearchResult:
    feasible: bool
    params: ModelParams | None
    halvings: int | None
    weak_params: ModelParams | None
    weak_halvings: int | None
    constants: ConstantsReport | None
    weak_checks: list
    strong_checks: list
    attempts: list
    reason: str
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "params": self.params.to_dict() if self.params else None,
            "halvings": self.halvings,
            "weak_params": self.weak_params.to_dict() if self.weak_params else None,
            "weak_halvings": self.weak_halvings,
            "constants": self.constants.to_dict() if self.constants else None,
            "weak_checks": [c.to_dict() for c in self.weak_checks],
            "strong_checks": [c.to_dict() for c in self.strong_checks],
            "attempts": self.attempts,
            "reason": self.reason,
            "samples": self.samples,
            "seed": self.seed,
            "guarantee": "sampled: no violation found over the listed samples",
        }


def _first_failure(checks: Sequence[AnalyticCheck]) -> AnalyticCheck | None:
    return next((c for c in checks if not c.passed), None)


def parameter_search(
    lam: float,
    n: int,
    m: int,
    p: int,
    ratio: float,
    budget: int = 12,
    *,
    profile: str = "quintic",
    r1_start: float = 0.5,
    samples: int = 10_000,
    max_factors: int = 9,
    seed: int = 0,
    grid_size: int = 2001,
    strong_budget: int = 12,
    cs_variant: str = "mirrored",
) -> SearchResult:
    """Shrink r1 (keeping r2/r1 fixed) until the cone suites pass.

    Halving k uses r1 = r1_start / 2^k, whose re-entry time bound is the
    minimum interior flow time of the sampled words.  The weak suite must pass
    within ``budget`` halvings; the strong suite starts from there and may
    shrink up to ``strong_budget`` more times.
    """
    if not (0.0 < ratio < 1.0):
        raise ParameterDomainError(f"ratio={ratio} must lie in (0, 1)")
    if budget < 0 or strong_budget < 0:
        raise ParameterDomainError("budgets must be >= 0")
    attempts: list[dict] = []
    base = ModelParams(lam, n, m, p, r1_start, ratio * r1_start, profile)

    def result(feasible, params_, k, wp, wk, consts, weak, strong, reason) -> SearchResult:
        return SearchResult(feasible, params_, k, wp, wk, consts, weak, strong, attempts, reason, samples, seed)

    if budget == 0:
        return result(False, None, None, None, None, None, [], [], "budget exhausted before the first halving")

    def at(k: int) -> tuple[ModelParams, ConstantsReport]:
        r1 = r1_start / 2.0**k
        prm = base.with_radii(r1, ratio * r1)
        t1 = reentry_time_lower_bound(r1, r1_start, lam)
        return prm, estimate_constants(prm, grid_size, t1, cs_variant)

    weak_k = weak_params = None
    weak_checks: list[CheckReport] = []
    last_reason = ""
    for k in range(1, budget + 1):
        prm, consts = at(k)
        analytic = analytic_conditions(consts, lam)[:3]
        failure = _first_failure(analytic)
        if failure is not None:
            attempts.append({"halvings": k, "r1": prm.r1, "phase": "weak", "failed": failure.name, "margin": failure.margin})
            last_reason = failure.name
            if failure.name == "shear pole outside weak cone":
                return result(False, None, None, None, None, consts, [], [], failure.name)
            continue
        words = suite_words(prm, consts.T1_bound, samples, max_factors, seed)
        weak_checks = weak_suite(prm, consts, words)
        bad = [c for c in weak_checks if not c.passed]
        attempts.append(
            {
                "halvings": k,
                "r1": prm.r1,
                "phase": "weak",
                "failed": bad[0].check if bad else None,
                "margin": min(c.worst_margin for c in weak_checks),
            }
        )
        if not bad:
            weak_k, weak_params = k, prm
            break
        last_reason = bad[0].check
    if weak_k is None:
        return result(False, None, None, None, None, None, weak_checks, [], f"budget exhausted: {last_reason}")

    for k in range(weak_k, weak_k + strong_budget + 1):
        prm, consts = at(k)
        failure = _first_failure(analytic_conditions(consts, lam))
        if failure is not None:
            attempts.append({"halvings": k, "r1": prm.r1, "phase": "strong", "failed": failure.name, "margin": failure.margin})
            last_reason = failure.name
            continue
        words = suite_words(prm, consts.T1_bound, samples, max_factors, seed)
        strong_checks = strong_suite(prm, consts, words)
        final_weak = weak_checks if k == weak_k else weak_suite(prm, consts, words)
        bad = [c for c in strong_checks + final_weak if not c.passed]
        attempts.append(
            {
                "halvings": k,
                "r1": prm.r1,
                "phase": "strong",
                "failed": bad[0].check if bad else None,
                "margin": min(c.worst_margin for c in strong_checks),
            }
        )
        if not bad:
            return result(True, prm, k, weak_params, weak_k, consts, final_weak, strong_checks, "")
        last_reason = bad[0].check
    return result(False, None, None, weak_params, weak_k, None, weak_checks, [], f"strong budget exhausted: {last_reason}")
