"""adwb: anomaly-detection workbench command line"""

import logging
from pathlib import Path
from typing import Optional

import typer

from .commands import features, prep, protocol, report, score, train
from .commands.common import CliState
from .core.config import get_settings
from .core.logging import setup_logging

logger = logging.getLogger(__name__)

cli = typer.Typer(
    name="adwb",
    help="Unsupervised anomaly detection with leakage-safe risk estimation",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


@cli.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", help="JSON run config"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Root seed"),
    jobs: Optional[int] = typer.Option(None, "--jobs", min=1, help="Worker threads"),
    force: bool = typer.Option(False, "--force", help="Overwrite existing outputs"),
    log_level: Optional[str] = typer.Option(None, "--log-level"),
) -> None:
    """Global options shared by every subcommand"""
    setup_logging(get_settings(), level=log_level)
    ctx.obj = CliState(config_path=config, seed=seed, jobs=jobs, force=force)
    logger.debug("Invoked %s", ctx.invoked_subcommand)


# Register subcommands
for module in (prep, features, train, score, protocol, report):
    cli.command(name=module.NAME)(module.command)
    logger.debug("Registered command: %s", module.NAME)


if __name__ == "__main__":
    cli()
