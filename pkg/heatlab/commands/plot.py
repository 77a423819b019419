from pathlib import Path

import click

from ..services.plotdata import emit_plotdata, load_report


@click.command("plot")
@click.argument("report", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("check")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
def plot(report: Path, check: str, output: Path | None):
    """Print (or write) the plot-data columns of one check of a report."""
    text = emit_plotdata(load_report(report), check, output)
    if output is None:
        click.echo(text, nl=False)
