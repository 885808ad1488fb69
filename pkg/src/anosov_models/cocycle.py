"""Derivative cocycle of the glued flow as words of flow and gluing factors.

A word lists its factors in time order: FlowSeg(t1), GlueAt(r1), FlowSeg(t2),
... so the derivative is the reversed product Psi_{t_{l+1}} Phi_l ... Psi_{t_1}.
Outside the cross region the dynamics only enters through the flow durations,
which is why words are sampled rather than traced through a global manifold.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .affine_flow import transit_map
from .errors import ConfigError, ParameterDomainError
from .geometry import ModelParams, Point3
from .surgery import phi_matrix_full, phi_matrix_su, shear, su_slope_image, cu_coefficients


@dataclass(frozen=True)
class FlowSeg:
    duration: float

    def __post_init__(self) -> None:
        if not (self.duration >= 0.0) or math.isinf(self.duration):
            raise ParameterDomainError(f"flow duration {self.duration} must be finite and >= 0")


@dataclass(frozen=True)
class GlueAt:
    r: float


Factor = Union[FlowSeg, GlueAt]


@dataclass(frozen=True)
class CocycleWord:
    """Alternating factors that start and end with a flow segment."""

    factors: tuple[Factor, ...] = ()
    provenance: str = field(default="synthetic", compare=False)

    def __post_init__(self) -> None:
        fs = self.factors
        if not fs:
            return
        if len(fs) % 2 == 0:
            raise ParameterDomainError("a non-empty word has an odd number of factors")
        for i, f in enumerate(fs):
            expected = FlowSeg if i % 2 == 0 else GlueAt
            if not isinstance(f, expected):
                raise ParameterDomainError(f"factor {i} should be {expected.__name__}, got {f!r}")
            if isinstance(f, FlowSeg) and 0 < i < len(fs) - 1 and f.duration <= 0.0:
                raise ParameterDomainError(f"interior flow segment {i} has zero duration")

    @classmethod
    def from_factors(cls, factors: Iterable[Factor], provenance: str = "synthetic") -> "CocycleWord":
        """Build a word, padding missing end segments with FlowSeg(0)
        and merging consecutive flow segments."""
        merged: list[Factor] = []
        for f in factors:
            if isinstance(f, FlowSeg):
                if merged and isinstance(merged[-1], FlowSeg):
                    merged[-1] = FlowSeg(merged[-1].duration + f.duration)
                else:
                    merged.append(f)
            else:
                if not merged or isinstance(merged[-1], GlueAt):
                    merged.append(FlowSeg(0.0))
                merged.append(f)
        if merged and isinstance(merged[-1], GlueAt):
            merged.append(FlowSeg(0.0))
        return cls(tuple(merged), provenance)

    @property
    def total_time(self) -> float:
        return sum(f.duration for f in self.factors if isinstance(f, FlowSeg))

    @property
    def glue_radii(self) -> list[float]:
        return [f.r for f in self.factors if isinstance(f, GlueAt)]

    @property
    def durations(self) -> list[float]:
        return [f.duration for f in self.factors if isinstance(f, FlowSeg)]

    def to_json(self) -> list[dict]:
        return [{"flow": f.duration} if isinstance(f, FlowSeg) else {"glue_r": f.r} for f in self.factors]

    @classmethod
    def from_json(cls, items: Sequence[dict], provenance: str = "synthetic") -> "CocycleWord":
        factors: list[Factor] = []
        for item in items:
            if "flow" in item:
                factors.append(FlowSeg(float(item["flow"])))
            elif "glue_r" in item:
                factors.append(GlueAt(float(item["glue_r"])))
            else:
                raise ParameterDomainError(f"unrecognised word item {item!r}")
        return cls.from_factors(factors, provenance)


def compose(later: CocycleWord, earlier: CocycleWord) -> CocycleWord:
    """The word for 'earlier, then later'; its derivative is D(later) D(earlier)."""
    return CocycleWord.from_factors(earlier.factors + later.factors, later.provenance)


@dataclass(frozen=True)
class TangentVector:
    """Coefficients of a X + b e_s + c e_u."""

    a: float
    b: float
    c: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.a * self.a + self.b * self.b + self.c * self.c)

    @property
    def su(self) -> tuple[float, float]:
        return (self.b, self.c)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


def _flow_full(params: ModelParams, t: float) -> np.ndarray:
    lt = params.lam**t
    return np.diag([1.0, lt, 1.0 / lt])


def dpsi_full(params: ModelParams, word: CocycleWord) -> np.ndarray:
    out = np.eye(3)
    for f in word.factors:
        step = _flow_full(params, f.duration) if isinstance(f, FlowSeg) else phi_matrix_full(params, f.r)
        out = step @ out
    return out


def su_factors(params: ModelParams, word: CocycleWord) -> list[tuple[float, float, float, float]]:
    """The su factor matrices of a word, in time order, as flat 2x2 tuples."""
    out = []
    for f in word.factors:
        if isinstance(f, FlowSeg):
            lt = params.lam**f.duration
            out.append((lt, 0.0, 0.0, 1.0 / lt))
        else:
            m = phi_matrix_su(params, f.r)
            out.append((m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    return out


def dpsi_su(params: ModelParams, word: CocycleWord) -> np.ndarray:
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for p, q, r, s in su_factors(params, word):
        a, b, c, d = p * a + q * c, p * b + q * d, r * a + s * c, r * b + s * d
    return np.array([[a, b], [c, d]])


@dataclass(frozen=True)
class CuResult:
    matrix: np.ndarray
    alpha: float
    escaped: bool
    alphas: tuple[float, ...]


def dpsi_cu(
    params: ModelParams,
    word: CocycleWord,
    alpha0: float,
    admissible: tuple[float, float] | None = None,
) -> CuResult:
    """Action on the centre-unstable plane with its inclination threaded through.

    ``admissible`` is the slope interval the inclination must stay in; by
    default the weak centre-unstable cone.  Leaving it is reported through
    ``escaped`` rather than raised.
    """
    if admissible is None:
        from .hyperbolicity import weak_cone

        cone = weak_cone(params, "cu")
        admissible = (cone.delta_lo, cone.delta_hi)
    lo, hi = admissible
    alpha = float(alpha0)
    escaped = not (lo <= alpha <= hi)
    alphas = [alpha]
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    for f in word.factors:
        if isinstance(f, FlowSeg):
            p, q, r, s = 1.0, 0.0, 0.0, params.lam ** (-f.duration)
            alpha = params.lam ** (2.0 * f.duration) * alpha
        else:
            big_a, big_b = cu_coefficients(params, f.r, alpha)
            p, q, r, s = 1.0, big_a, 0.0, big_b
            if shear(params, f.r) != 0.0:
                alpha = su_slope_image(params, f.r, alpha)
        m00, m01, m10, m11 = p * m00 + q * m10, p * m01 + q * m11, r * m00 + s * m10, r * m01 + s * m11
        alphas.append(alpha)
        if not (lo <= alpha <= hi) or not math.isfinite(alpha):
            escaped = True
    return CuResult(np.array([[m00, m01], [m10, m11]]), alpha, escaped, tuple(alphas))


def _word_rng(seed: int, index: int) -> np.random.Generator:
    # one stream per word keeps samples identical however a sweep is partitioned
    return np.random.default_rng([int(seed), int(index)])


def sample_itineraries(
    params: ModelParams,
    count: int,
    max_factors: int,
    min_interior_time: float,
    seed: int,
    *,
    end_time_max: float | None = None,
    interior_spread: float | None = None,
    reentry_bound: float | None = None,
    start: int = 0,
) -> list[CocycleWord]:
    """Draw constraint-respecting words.

    The number of gluing factors is uniform in [0, (max_factors - 1) // 2],
    end segments are uniform on [0, end_time_max], interior segments are
    min_interior_time plus a uniform [0, interior_spread] excess and gluing
    radii are uniform on [0, r2].  Word ``start + k`` only depends on
    (seed, start + k).
    """
    if count < 0:
        raise ConfigError(f"count={count} must be >= 0")
    if max_factors < 1:
        raise ConfigError(f"max_factors={max_factors} must be >= 1")
    if not (min_interior_time > 0.0) or not math.isfinite(min_interior_time):
        raise ConfigError(f"min_interior_time={min_interior_time} must be positive")
    if reentry_bound is not None and min_interior_time < reentry_bound:
        raise ConfigError(
            f"min_interior_time={min_interior_time} is below the re-entry bound {reentry_bound}"
        )
    end_max = 2.0 * min_interior_time if end_time_max is None else end_time_max
    spread = min_interior_time if interior_spread is None else interior_spread
    if end_max < 0 or spread < 0:
        raise ConfigError("end_time_max and interior_spread must be >= 0")
    max_glues = (max_factors - 1) // 2
    words = []
    for k in range(start, start + count):
        rng = _word_rng(seed, k)
        glues = int(rng.integers(0, max_glues + 1))
        factors: list[Factor] = [FlowSeg(float(rng.uniform(0.0, end_max)))]
        for j in range(glues):
            factors.append(GlueAt(float(rng.uniform(0.0, params.r2))))
            if j < glues - 1:
                factors.append(FlowSeg(min_interior_time + float(rng.uniform(0.0, spread))))
        if glues:
            factors.append(FlowSeg(float(rng.uniform(0.0, end_max))))
        words.append(CocycleWord(tuple(factors)))
    return words


def geometric_itineraries(
    params: ModelParams,
    count: int,
    visits: int,
    outside_time: float,
    seed: int,
    outside_spread: float = 1.0,
) -> list[CocycleWord]:
    """Words obtained by tracing orbits through the cross region.

    Each visit enters through a random entrance annulus, crosses the region
    with the closed-form transit map and spends a synthetic time of at least
    ``outside_time`` outside before the next entry.  Only entries through the
    twisted annulus contribute a gluing factor.
    """
    if count < 0 or visits < 0 or outside_time <= 0:
        raise ConfigError("need count >= 0, visits >= 0 and outside_time > 0")
    twisted = params.twisted_quadrant
    signs = {1: (1.0, 1.0), 2: (-1.0, 1.0), 3: (-1.0, -1.0), 4: (1.0, -1.0)}
    words = []
    for k in range(count):
        rng = _word_rng(seed, k)
        factors: list[Factor] = [FlowSeg(float(rng.uniform(0.0, outside_time)))]
        for _ in range(visits):
            quadrant = int(rng.integers(1, 5))
            r = float(rng.uniform(0.0, params.r2))
            if r == 0.0:
                continue
            sx, sy = signs[quadrant]
            result = transit_map(params, Point3(sx * params.r1, sy * r, float(rng.uniform())))
            if quadrant == twisted:
                factors.append(GlueAt(r))
            factors.append(FlowSeg(result.transit_time))
            factors.append(FlowSeg(outside_time + float(rng.uniform(0.0, outside_spread))))
        words.append(CocycleWord.from_factors(factors, provenance="geometric"))
    return words


def growth_csv(rows: Iterable[tuple[float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "log_growth"])
    for t, g in rows:
        writer.writerow([repr(float(t)), repr(float(g))])
    return buf.getvalue()
