"""Command line entry point: ``chronon <experiment> --config <file.json> [--out DIR] [--threads N]``.

Exit codes: 0 when every check passes, 1 when a domination or property check
fails, 2 for configuration errors.
"""

from __future__ import annotations

import datetime as _dt
import sys
from pathlib import Path

import click

from .config import ConfigError, Experiment, load_config
from .experiments import execute, write_report

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("experiment", type=click.Choice([e.value for e in Experiment]))
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False), help="JSON run configuration.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker threads for grid points.")
def main(experiment: str, config_path: str, out_dir: str | None, threads: int) -> None:
    """Run EXPERIMENT and write CSV, JSON and SVG artifacts."""
    try:
        cfg = load_config(config_path, experiment)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if out_dir is not None:
        target = Path(out_dir)
    elif cfg.output_dir is not None:
        target = cfg.output_dir
    else:
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
        target = Path("out") / f"{experiment}-{stamp}"
    try:
        report = execute(cfg, threads=threads)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    write_report(report, target, cfg)
    for name, ok in report.checks.items():
        click.echo(f"{'PASS' if ok else 'FAIL'}  {name}")
    click.echo(f"artifacts: {target}")
    sys.exit(EXIT_PASS if report.passed else EXIT_FAIL)


if __name__ == "__main__":  # pragma: no cover
    main()
