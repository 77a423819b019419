import click

config_argument = click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=str))

overrides_option = click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="KEY=VALUE",
    help="Override a config value by dotted key, e.g. --set model.alpha=1.5",
)
