import logging

import click

from .commands import calibrate, model, plot, run, vtable
from .config import settings
from .errors import HeatlabError

EXIT_ERROR = 2


class HeatlabGroup(click.Group):
    """Maps HeatlabError to its code and message on stderr with exit status 2."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except HeatlabError as exc:
            detail = exc.detail
            where = "".join(f" {key}={detail[key]}" for key in ("field", "line") if key in detail)
            click.echo(f"error [{exc.code}]{where}: {exc.message}", err=True)
            ctx.exit(EXIT_ERROR)


@click.group(cls=HeatlabGroup)
@click.option("--log-level", default=None, help="Overrides HEATLAB_LOG_LEVEL.")
def cli(log_level: str | None):
    """Dirichlet heat kernel bounds for isotropic unimodal Levy processes."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


cli.add_command(run.run)
cli.add_command(plot.plot)
cli.add_command(model.model)
cli.add_command(vtable.vtable)
cli.add_command(calibrate.calibrate)


def main():
    cli()


if __name__ == "__main__":
    main()
