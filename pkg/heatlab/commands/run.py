from pathlib import Path

import click

from ..services.campaign import run_campaign
from ..services.config_loader import load_campaign
from ._options import config_argument, overrides_option


@click.command("run")
@config_argument
@overrides_option
@click.option("--output-dir", "-o", type=click.Path(file_okay=False, path_type=Path), default=None)
def run(config: str, overrides: tuple[str, ...], output_dir: Path | None):
    """Run the checks of a campaign file; exit status 1 if any check fails."""
    loaded = load_campaign(config, overrides)
    report = run_campaign(loaded, output_dir)
    for row in report.rows:
        click.echo(f"{row.status:<7} {row.check:<24} [{row.min_ratio:.4g}, {row.max_ratio:.4g}]  {row.note}".rstrip())
    click.echo("PASS" if report.passed else "FAIL")
    if not report.passed:
        click.get_current_context().exit(1)
