"""Run configuration: a flat ``key = value`` file validated before any work.

The file has no section headers; blank lines and ``#`` comments are allowed.
Unknown keys are rejected so that a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError
from .geometry import ModelParams
from .hyperbolicity import CS_VARIANTS, MIN_GRID
from .sections import cat_map_spectrum
from .surgery import bump_profile

CAT_MAP_LAMBDA = cat_map_spectrum()[1]


@dataclass(frozen=True)
class RunConfig:
    # model
    lam: float = CAT_MAP_LAMBDA
    n: int = 1
    m: int = -1
    p: int = 1
    profile: str = "balanced"
    ratio: float = 0.25
    r1: float | None = None
    r2: float | None = None
    r1_start: float = 0.5
    # search and sampling
    budget: int = 12
    strong_budget: int = 12
    samples: int = 10_000
    max_factors: int = 9
    seed: int = 0
    grid_size: int = 2001
    cs_variant: str = "mirrored"
    splitting_iterations: int = 6
    # volume and transversality
    volume_samples: int = 10_000
    volume_word_length: int = 40
    volume_tolerance: float = 1e-9
    glue_tolerance: float = 1e-12
    transversality_grid: int = 200
    # trace
    x: float = 0.2
    y: float = 0.001
    z: float = 0.0
    t_max: float = 10.0
    dt: float = 0.1
    # combinatorics
    n_max: int = 4
    m_max: int = 1
    # output
    out: str | None = None
    format: str = "json"

    def __post_init__(self) -> None:
        problems = validate_config(self)
        if problems:
            raise ConfigError("; ".join(problems))

    def model_params(self) -> ModelParams | None:
        """Parameters at explicit radii, or None when the search has to pick them."""
        if self.r1 is None:
            return None
        r2 = self.r2 if self.r2 is not None else self.ratio * self.r1
        return ModelParams(self.lam, self.n, self.m, self.p, self.r1, r2, self.profile)

    def to_dict(self) -> dict:
        return asdict(self)


FIELD_TYPES = {
    "lam": float, "n": int, "m": int, "p": int, "profile": str, "ratio": float,
    "r1": float, "r2": float, "r1_start": float, "budget": int, "strong_budget": int,
    "samples": int, "max_factors": int, "seed": int, "grid_size": int, "cs_variant": str,
    "splitting_iterations": int, "volume_samples": int, "volume_word_length": int,
    "volume_tolerance": float, "glue_tolerance": float, "transversality_grid": int,
    "x": float, "y": float, "z": float, "t_max": float, "dt": float,
    "n_max": int, "m_max": int, "out": str, "format": str,
}


def validate_config(cfg: RunConfig) -> list[str]:
    problems = []

    def need(cond: bool, msg: str) -> None:
        if not cond:
            problems.append(msg)

    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, float) and not math.isfinite(value):
            problems.append(f"{f.name}={value} must be finite")
    if problems:
        return problems
    need(0.0 < cfg.lam < 1.0, f"lam={cfg.lam} must lie in (0, 1)")
    need(cfg.n >= 1, f"n={cfg.n} must be >= 1")
    need(cfg.m != 0, "m must be nonzero")
    need(cfg.p >= 1, f"p={cfg.p} must be >= 1")
    need(cfg.n < 1 or cfg.m == 0 or math.gcd(cfg.n, abs(cfg.m)) == 1, f"gcd(n, |m|) must be 1 (n={cfg.n}, m={cfg.m})")
    try:
        bump_profile(cfg.profile)
    except ValueError as exc:
        problems.append(str(exc))
    need(0.0 < cfg.ratio < 1.0, f"ratio={cfg.ratio} must lie in (0, 1)")
    need(0.0 < cfg.r1_start < 1.0, f"r1_start={cfg.r1_start} must lie in (0, 1)")
    if cfg.r2 is not None:
        need(cfg.r1 is not None, "r2 needs r1")
    if cfg.r1 is not None:
        r2 = cfg.r2 if cfg.r2 is not None else cfg.ratio * cfg.r1
        need(0.0 < r2 < cfg.r1 < cfg.r1_start, f"need 0 < r2 < r1 < r1_start (got r1={cfg.r1}, r2={r2}, r1_start={cfg.r1_start})")
    need(cfg.budget >= 0 and cfg.strong_budget >= 0, "budgets must be >= 0")
    need(cfg.samples >= 1, f"samples={cfg.samples} must be >= 1")
    need(cfg.max_factors >= 1, f"max_factors={cfg.max_factors} must be >= 1")
    need(cfg.seed >= 0, f"seed={cfg.seed} must be >= 0")
    need(cfg.grid_size >= MIN_GRID, f"grid_size={cfg.grid_size} must be >= {MIN_GRID}")
    need(cfg.cs_variant in CS_VARIANTS, f"cs_variant={cfg.cs_variant!r} must be one of {CS_VARIANTS}")
    need(cfg.splitting_iterations >= 1, "splitting_iterations must be >= 1")
    need(cfg.volume_samples >= 1, "volume_samples must be >= 1")
    need(cfg.volume_word_length >= 1, "volume_word_length must be >= 1")
    need(cfg.volume_tolerance > 0 and cfg.glue_tolerance > 0, "tolerances must be positive")
    need(cfg.transversality_grid >= 2, "transversality_grid must be >= 2")
    need(cfg.dt > 0 and cfg.t_max >= 0, "trace needs dt > 0 and t_max >= 0")
    need(cfg.n_max >= 1 and cfg.m_max >= 1, "n_max and m_max must be >= 1")
    need(cfg.format in ("json", "csv"), f"format={cfg.format!r} must be json or csv")
    return problems


def _convert(key: str, raw: str):
    kind = FIELD_TYPES[key]
    text = raw.strip()
    if key in ("r1", "r2", "out") and text.lower() in ("", "none"):
        return None
    try:
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}={raw!r} is not a valid {kind.__name__}") from None
    return text


def parse_config(text: str) -> dict:
    """Parse the key-value text into a dict of typed overrides."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for key, raw in parser["run"].items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return values


def load_config(path: str | None = None, **overrides) -> RunConfig:
    values: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values = parse_config(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def defaults_help() -> str:
    return ", ".join(f"{f.name}={f.default}" for f in fields(RunConfig))
