import logging
import sys

import click

from rssloc.commands.build_db import build_db
from rssloc.commands.evaluate import evaluate
from rssloc.commands.replay import replay
from rssloc.commands.select import select
from rssloc.commands.synth import synth
from rssloc.commands.validate_s import validate_s
from rssloc.config import Settings, load_config_file
from rssloc.errors import RsslocError

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def create_cli():
    settings = Settings.from_env()

    @click.group(context_settings={"help_option_names": ["-h", "--help"]})
    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON file of per-command flag defaults.")
    @click.option("--log-level", default=settings.log_level, show_default=True,
                  type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
    @click.pass_context
    def cli(ctx, config_path, log_level):
        """RSS fingerprint localization with per-grid-point beacon selection."""
        logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)
        ctx.obj = settings
        if config_path:
            try:
                ctx.default_map = load_config_file(config_path)
            except RsslocError as exc:
                click.echo(f"error: {exc}", err=True)
                ctx.exit(exc.exit_code)

    # Register commands
    cli.add_command(build_db, name="build-db")
    cli.add_command(select, name="select")
    cli.add_command(evaluate, name="evaluate")
    cli.add_command(synth, name="synth")
    cli.add_command(validate_s, name="validate-s")
    cli.add_command(replay, name="replay")

    return cli
