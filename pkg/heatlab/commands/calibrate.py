from pathlib import Path

import click

from ..services.campaign import build_context
from ..services.config_loader import load_campaign
from ..services.profiles import calibrate_profile, save_profile
from ._options import config_argument, overrides_option


@click.command("calibrate")
@config_argument
@overrides_option
@click.option("--name", required=True, help="Name of the profile to write.")
@click.option("--profiles", type=click.Path(dir_okay=False, path_type=Path), default=None)
def calibrate(config: str, overrides: tuple[str, ...], name: str, profiles: Path | None):
    """Measure kernel constants for the configured model and store them as a profile."""
    ctx = build_context(load_campaign(config, overrides))
    profile = calibrate_profile(
        ctx.model, ctx.table, ctx.grids.times, ctx.grids.radii, name=name, base=ctx.profile
    )
    path = save_profile(profile, profiles)
    click.echo(f"{profile.name}: kernel [{profile.kernel_low:.4g}, {profile.kernel_up:.4g}] -> {path}")
