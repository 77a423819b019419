from pathlib import Path

import click

from ..config import settings
from ..processors.renewal import build_renewal_table, normalization_for
from ..services.config_loader import load_campaign
from ..services.tables_io import write_renewal_table
from ._options import config_argument, overrides_option


@click.command("vtable")
@config_argument
@overrides_option
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
def vtable(config: str, overrides: tuple[str, ...], output: Path | None):
    """Export the renewal table r, V, V' of the configured model as CSV."""
    loaded = load_campaign(config, overrides)
    section = loaded.config.renewal
    m = loaded.config.model.build()
    normalization = normalization_for(m, power=True) if section.normalization == "power" else section.normalization
    table = build_renewal_table(m, section.backend, section.grid, normalization=normalization)
    output = output or Path(loaded.config.output_dir or settings.OUTPUT_DIR) / "renewal.csv"
    click.echo(str(write_renewal_table(table, output, loaded.echo)))
