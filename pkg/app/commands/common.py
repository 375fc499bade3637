"""State and error handling shared by every subcommand"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Sequence

import typer
from pydantic import ValidationError

from app.core.config import RunConfig, config_hash, load_run_config
from app.helpers.errors import EXIT_VALIDATION, WorkbenchError
from app.helpers.storage import write_experiment_record

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """Global flags, parsed once by the top-level callback"""

    config_path: Optional[Path] = None
    seed: Optional[int] = None
    jobs: Optional[int] = None
    force: bool = False


def state_of(ctx: typer.Context) -> CliState:
    state = ctx.obj
    if not isinstance(state, CliState):
        state = CliState()
        ctx.obj = state
    return state


def effective_config(
    ctx: typer.Context, overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """defaults < --config file < command flags < global --seed/--jobs"""
    state = state_of(ctx)
    merged: Dict[str, Any] = dict(overrides or {})
    merged["seed"] = state.seed
    merged["jobs"] = state.jobs
    cfg = load_run_config(state.config_path, merged)
    logger.debug("Effective config hash %s", config_hash(cfg))
    return cfg


@contextmanager
def command_errors(command: str) -> Iterator[None]:
    """Turn workbench and validation errors into the stable exit codes"""
    try:
        yield
    except WorkbenchError as e:
        logger.error(
            "%s failed: %s", command, e.message, extra={"exit_code": e.exit_code}
        )
        raise typer.Exit(code=e.exit_code) from e
    except ValidationError as e:
        logger.error("%s failed: %s", command, e)
        raise typer.Exit(code=EXIT_VALIDATION) from e


def record_outputs(
    artifact: Path,
    command: str,
    cfg: RunConfig,
    inputs: Sequence[Path],
    outputs: Sequence[Path],
) -> Path:
    """Sidecar with config hash, input hash and output paths"""
    return write_experiment_record(
        artifact,
        command,
        cfg.model_dump(mode="json"),
        config_hash(cfg),
        inputs,
        outputs,
    )
