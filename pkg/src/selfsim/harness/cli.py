"""Command line interface.

Exit codes: 0 all checks passed, 1 some check failed, 2 usage or
configuration error, 3 numerical failure.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from ..errors import ConfigError, DomainError, HypothesisError, NumericalError, RegimeError, ResolutionError
from ..simulate import sample_path
from .config import ExperimentKind, build_config, parse_overrides, parse_text
from .experiments import ReplicaFailure, run_experiment
from .outputs import emit_outputs, summary_text

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
_USAGE_ERRORS = (ConfigError, DomainError, HypothesisError, RegimeError, ResolutionError)


def _raw(ctx: click.Context) -> dict:
    obj = ctx.obj
    raw = {}
    if obj["config"] is not None:
        try:
            text = Path(obj["config"]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {obj['config']}: {exc.strerror}") from None
        raw.update(parse_text(text))
    raw.update(parse_overrides(obj["set"]))
    for key in ("seed", "out", "threads"):
        if obj[key] is not None:
            raw[key] = (str(obj[key]), None)
    return raw


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(ctx: click.Context, kind: ExperimentKind, plots: bool = True):
    try:
        cfg = build_config(_raw(ctx), kind)
        report = run_experiment(cfg)
    except _USAGE_ERRORS as exc:
        _fail(EXIT_USAGE, str(exc))
    except ReplicaFailure as exc:
        _fail(EXIT_NUMERIC if exc.numerical else EXIT_USAGE, str(exc))
    except NumericalError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    try:
        emit_outputs(report, cfg.out, plots=plots)
    except OSError as exc:
        _fail(EXIT_USAGE, str(exc))
    click.echo(summary_text(report), nl=False)
    click.echo(f"outputs written to {cfg.out}")
    sys.exit(EXIT_OK if report.passed else EXIT_FAIL)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config", type=click.Path(dir_okay=False), default=None, help="key = value config file.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Master seed (overrides the config).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads for replications.")
@click.option("--set", "-s", "set_", multiple=True, metavar="KEY=VALUE", help="Override one config key.")
@click.pass_context
def main(ctx, config, seed, out, threads, set_):
    """Simulation and verification tools for self-similar Gaussian processes."""
    ctx.ensure_object(dict)
    ctx.obj.update(config=config, seed=seed, out=out, threads=threads, set=set_)


@main.command()
@click.pass_context
def simulate(ctx):
    """Sample one path (process.*, grid.*) and write path.csv."""
    try:
        raw = _raw(ctx)
        raw.setdefault("kind", ("constants", None))
        cfg = build_config(raw, None, check_hypotheses=False)
    except _USAGE_ERRORS as exc:
        _fail(EXIT_USAGE, str(exc))
    try:
        path = sample_path(cfg.spec, cfg.t_max, cfg.N, cfg.seed)
    except NumericalError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    cfg.out.mkdir(parents=True, exist_ok=True)
    target = path.to_csv(cfg.out / "path.csv")
    v = path.values[:, -1]
    click.echo(f"{cfg.spec.label()} N={cfg.N} t_max={cfg.t_max:g}: X(t_max) = {np.array2string(v, precision=6)}")
    click.echo(f"wrote {target}")


@main.command("slnd-check")
@click.pass_context
def slnd_check(ctx):
    """Strong local nondeterminism and Assumptions (A)/(B) audit."""
    _run(ctx, ExperimentKind.SLND_AUDIT)


@main.command()
@click.pass_context
def constants(ctx):
    """Limiting constants C or D with their cross-checks."""
    _run(ctx, ExperimentKind.CONSTANTS)


@main.command()
@click.pass_context
def moments(ctx):
    """Moments of the limit mixture: formula, bound, simulation, determinacy."""
    _run(ctx, ExperimentKind.MOMENTS)


@main.command("verify-clt")
@click.pass_context
def verify_clt(ctx):
    """Monte Carlo check of the fluctuation limit above the critical H."""
    _run(ctx, ExperimentKind.VERIFY_CLT)


@main.command("verify-critical")
@click.pass_context
def verify_critical(ctx):
    """Monte Carlo check of the logarithmic regime at the critical H."""
    _run(ctx, ExperimentKind.VERIFY_CRITICAL)


@main.command("verify-thm3")
@click.pass_context
def verify_thm3(ctx):
    """Monte Carlo check of the local-time derivative limit below the critical H."""
    _run(ctx, ExperimentKind.VERIFY_DEGENERATE)


if __name__ == "__main__":  # pragma: no cover
    main()
