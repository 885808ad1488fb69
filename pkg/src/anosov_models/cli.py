"""Command-line front end.

Each subcommand has a pure ``run_*`` function returning (exit status, report)
so the orchestration is testable without a process boundary.  Exit codes:
0 pass, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import csv
import io
import math
import sys

import click
import numpy as np

from .affine_flow import orbit_csv, reentry_time_lower_bound, trace_orbit
from .birkhoff import coprime_pairs, combinatorics_row
from .cocycle import sample_itineraries
from .config import RunConfig, defaults_help, load_config
from .errors import ConfigError, ModelError, ParameterDomainError
from .geometry import ModelParams, Point3
from .hyperbolicity import (
    CheckReport,
    analytic_conditions,
    check_cone_invariance,
    estimate_constants,
    extract_splitting,
    parameter_search,
    strong_suite,
    suite_words,
    weak_suite,
)
from .reports import dumps, write_atomic
from .sections import build_helicoid, catmap_fixture, transversality_check
from .surgery import phi_matrix_full, volume_check

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SAMPLED_GUARANTEE = "sampled: no violation found over the listed samples, not a proof"


# ------------------------------------------------------------------ verify


def volume_report(params: ModelParams, cfg: RunConfig, t1: float) -> dict:
    rng = np.random.default_rng([cfg.seed, 1])
    radii = rng.uniform(0.0, params.r2, cfg.volume_samples)
    glue_err = max(abs(float(np.linalg.det(phi_matrix_full(params, float(r)))) - 1.0) for r in radii)
    words = sample_itineraries(params, cfg.volume_samples, cfg.volume_word_length, t1, cfg.seed + 1)
    word_err = max((volume_check(params, word) for word in words), default=0.0)
    return {
        "glue_samples": cfg.volume_samples,
        "glue_max_error": glue_err,
        "glue_tolerance": cfg.glue_tolerance,
        "word_samples": len(words),
        "word_max_length": cfg.volume_word_length,
        "word_max_error": word_err,
        "word_tolerance": cfg.volume_tolerance,
        "passed": glue_err <= cfg.glue_tolerance and word_err <= cfg.volume_tolerance,
    }


def _unavailable(name: str, reason: str) -> CheckReport:
    return CheckReport(name, 0, details={"reason": reason})


def _splitting(params: ModelParams, cfg: RunConfig, consts, t1: float) -> dict:
    count = max(50, 20 * cfg.splitting_iterations)
    past = sample_itineraries(params, count, cfg.max_factors, t1, cfg.seed + 2, end_time_max=consts.T)
    future = sample_itineraries(params, count, cfg.max_factors, t1, cfg.seed + 3, end_time_max=consts.T)
    try:
        report = extract_splitting(params, past, future, cfg.splitting_iterations, consts, cfg.cs_variant)
    except ModelError as exc:
        return {"converged": False, "reason": str(exc)}
    return report.to_dict()


def run_verify(cfg: RunConfig) -> tuple[int, dict]:
    """Run the six cone checks, volume preservation and section transversality."""
    report: dict = {"command": "verify", "config": cfg.to_dict(), "guarantee": SAMPLED_GUARANTEE}
    params = cfg.model_params()
    if params is None:
        search = parameter_search(
            cfg.lam, cfg.n, cfg.m, cfg.p, cfg.ratio, cfg.budget,
            profile=cfg.profile, r1_start=cfg.r1_start, samples=cfg.samples,
            max_factors=cfg.max_factors, seed=cfg.seed, grid_size=cfg.grid_size,
            strong_budget=cfg.strong_budget, cs_variant=cfg.cs_variant,
        )
        report["search"] = {"feasible": search.feasible, "halvings": search.halvings, "reason": search.reason}
        if not search.feasible:
            report["feasible"] = False
            return EXIT_FAIL, report
        params = search.params
    t1 = reentry_time_lower_bound(params.r1, cfg.r1_start, params.lam)
    consts = estimate_constants(params, cfg.grid_size, t1, cfg.cs_variant)
    analytic = analytic_conditions(consts, params.lam)
    words = suite_words(params, t1, cfg.samples, cfg.max_factors, cfg.seed)
    if math.isfinite(consts.T):
        checks = weak_suite(params, consts, words) + strong_suite(params, consts, words)
    else:
        # without constants only the plain cone image can be tested
        reason = "constants unavailable: " + next(c.name for c in analytic if not c.passed)
        checks = [
            check_cone_invariance(params, "cu", words, t1, consts),
            _unavailable("weak_slope_contraction", reason),
            _unavailable("weak_expansion", reason),
            _unavailable("strong_u_invariance", reason),
            _unavailable("strong_slope_contraction", reason),
            _unavailable("strong_expansion", reason),
        ]
    for check in checks:
        if check.samples == 0 and "reason" not in check.details:
            check.details["reason"] = "no sampled word reached the time threshold"
    volume = volume_report(params, cfg, t1)
    section = transversality_check(build_helicoid(params), cfg.transversality_grid)
    splitting = _splitting(params, cfg, consts, t1) if math.isfinite(consts.T) else {
        "converged": False,
        "reason": "constants unavailable",
    }
    feasible = (
        all(c.passed for c in analytic)
        and all(c.passed for c in checks)
        and volume["passed"]
        and section.passed
        and splitting["converged"]
    )
    report.update(
        {
            "params": params.to_dict(),
            "T1": t1,
            "constants": consts.to_dict(),
            "analytic": [{"name": c.name, "passed": c.passed, "margin": c.margin} for c in analytic],
            "suite": [c.to_dict() for c in checks],
            "volume": volume,
            "transversality": section.to_dict(),
            "splitting": splitting,
            "feasible": feasible,
        }
    )
    return (EXIT_PASS if feasible else EXIT_FAIL), report


# ------------------------------------------------------- other subcommands


def run_search(cfg: RunConfig) -> tuple[int, dict]:
    result = parameter_search(
        cfg.lam, cfg.n, cfg.m, cfg.p, cfg.ratio, cfg.budget,
        profile=cfg.profile, r1_start=cfg.r1_start, samples=cfg.samples,
        max_factors=cfg.max_factors, seed=cfg.seed, grid_size=cfg.grid_size,
        strong_budget=cfg.strong_budget, cs_variant=cfg.cs_variant,
    )
    report = {"command": "search", "config": cfg.to_dict(), **result.to_dict()}
    return (EXIT_PASS if result.feasible else EXIT_FAIL), report


def run_combinatorics(cfg: RunConfig) -> tuple[int, dict]:
    rows = [combinatorics_row(n, m, cfg.p) for n, m in coprime_pairs(cfg.n_max, cfg.m_max)]
    ok = all(r["order"] == r["n"] for r in rows)
    return (EXIT_PASS if ok else EXIT_FAIL), {"command": "combinatorics", "config": cfg.to_dict(), "rows": rows}


def run_trace(cfg: RunConfig) -> tuple[int, dict]:
    params = cfg.model_params() or ModelParams(
        cfg.lam, cfg.n, cfg.m, cfg.p, cfg.r1_start, cfg.ratio * cfg.r1_start, cfg.profile
    )
    rows = trace_orbit(params, Point3(cfg.x, cfg.y, cfg.z), cfg.t_max, cfg.dt)
    return EXIT_PASS, {"command": "trace", "config": cfg.to_dict(), "params": params.to_dict(), "rows": rows}


def run_fixture(cfg: RunConfig) -> tuple[int, dict]:
    record = catmap_fixture(cfg.samples, cfg.seed, cfg.budget, cfg.ratio, cfg.transversality_grid, cfg.m)
    section = record.get("section")
    ok = (
        record["search"]["feasible"]
        and section is not None
        and section["transversality"]["passed"]
        and not section["wrong_signature"]["passed"]
        and record["first_return"]["passed"]
    )
    return (EXIT_PASS if ok else EXIT_FAIL), {"command": "fixture", "config": cfg.to_dict(), **record}


def rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    command = report["command"]
    if command == "trace":
        return orbit_csv(report["rows"])
    if command == "combinatorics":
        return rows_csv(report["rows"])
    if command in ("verify", "search", "fixture"):
        checks = report.get("suite") or report.get("weak_checks", []) + report.get("strong_checks", [])
        if command == "fixture":
            checks = report["search"]["weak_checks"] + report["search"]["strong_checks"]
        return rows_csv(
            [
                {"check": c["check"], "samples": c["samples"], "violations": len(c["violations"]),
                 "worst_margin": c["worst_margin"], "passed": c["passed"]}
                for c in checks
            ]
        )
    raise ConfigError(f"no CSV rendering for {command}")


# ---------------------------------------------------------------------- click


def _emit(status: int, report: dict, cfg: RunConfig) -> None:
    text = render(report, cfg.format)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        click.echo(text, nl=False)
    sys.exit(status)


def _common(fn):
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
                      help="Report format (default json).")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Write the report here atomically instead of stdout.")(fn)
    fn = click.option("--samples", type=int, default=None, help="Number of sampled words.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Base seed for every sampler.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                      help="key = value run configuration file.")(fn)
    return fn


def _run(runner, config_path, seed, samples, out, fmt) -> None:
    try:
        cfg = load_config(config_path, seed=seed, samples=samples, out=out, format=fmt)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        status, report = runner(cfg)
    except (ConfigError, ParameterDomainError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    _emit(status, report, cfg)


@click.group(help="Local models, gluing and cone checks for glued Anosov flows.\n\nConfig defaults: " + defaults_help())
def main() -> None:
    pass


@main.command(help="Run the cone checks, volume and transversality; exit 1 on any violation.")
@_common
def verify(config_path, seed, samples, out, fmt):
    _run(run_verify, config_path, seed, samples, out, fmt)


@main.command(help="Shrink r1 at fixed r2/r1 until the cone suites pass.")
@_common
def search(config_path, seed, samples, out, fmt):
    _run(run_search, config_path, seed, samples, out, fmt)


@main.command(help="Permutation, defect and intersection table over coprime (n, m).")
@_common
def combinatorics(config_path, seed, samples, out, fmt):
    _run(run_combinatorics, config_path, seed, samples, out, fmt)


@main.command(help="Sample one orbit of the local model (CSV with --format csv).")
@_common
def trace(config_path, seed, samples, out, fmt):
    _run(run_trace, config_path, seed, samples, out, fmt)


@main.command(help="End-to-end run on the suspension of the cat map.")
@_common
def fixture(config_path, seed, samples, out, fmt):
    _run(run_fixture, config_path, seed, samples, out, fmt)


if __name__ == "__main__":
    main()
