"""Configuration management using Pydantic settings"""

import hashlib
import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.helpers.errors import ConfigError
from app.helpers.schemas import (
    DiscriminatorConfig,
    ExtractorConfig,
    FlowConfig,
    ProtocolConfig,
    SynthGlobalConfig,
    SynthLocalConfig,
    TrainConfig,
)


class Settings(BaseSettings):
    """Process-wide settings read from the environment or a .env file"""

    app_name: str = "anomaly-workbench"

    # Defaults for every command unless a config file or flag overrides them
    seed: int = Field(default=0, ge=0, alias="ADW_SEED")
    jobs: int = Field(default=1, ge=1, alias="ADW_JOBS")

    # Logging Configuration
    log_level: str = Field(default="INFO", alias="ADW_LOG_LEVEL")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        alias="ADW_LOG_FORMAT",
    )
    log_file: Optional[str] = Field(default=None, alias="ADW_LOG_FILE")
    log_rotation: str = Field(default="1 day", alias="ADW_LOG_ROTATION")
    log_retention: str = Field(default="7 days", alias="ADW_LOG_RETENTION")

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
        populate_by_name=True,
    )


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


class RunConfig(BaseModel):
    """Effective configuration of one command invocation.

    Unknown keys are rejected so that a typo in a config file never silently
    falls back to a default.
    """

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0)
    jobs: int = Field(default=1, ge=1)
    extractor: ExtractorConfig = Field(default_factory=ExtractorConfig)
    flow: FlowConfig = Field(default_factory=FlowConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    discriminator: DiscriminatorConfig = Field(default_factory=DiscriminatorConfig)
    synth_local: SynthLocalConfig = Field(default_factory=SynthLocalConfig)
    synth_global: SynthGlobalConfig = Field(default_factory=SynthGlobalConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(
    config_path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
    settings: Optional[Settings] = None,
) -> RunConfig:
    """Build the effective config: defaults < config file < flags

    Args:
        config_path: Optional JSON file with any subset of RunConfig keys
        overrides: Flag values, nested like the file (None values are ignored)
        settings: Environment settings providing seed/jobs defaults

    Raises:
        ConfigError: If the file is unreadable or contains unknown/invalid keys
    """
    settings = settings or get_settings()
    data: Dict[str, Any] = {"seed": settings.seed, "jobs": settings.jobs}

    if config_path is not None:
        try:
            file_data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {config_path}: {e}") from e
        if not isinstance(file_data, dict):
            raise ConfigError(f"Config file {config_path} must hold a JSON object")
        data = _merge(data, file_data)

    if overrides:
        data = _merge(data, _drop_none(overrides))

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def _drop_none(data: Dict[str, Any]) -> Dict[str, Any]:
    cleaned: Dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            nested = _drop_none(value)
            if nested:
                cleaned[key] = nested
        elif value is not None:
            cleaned[key] = value
    return cleaned


def canonical_json(cfg: BaseModel) -> str:
    """Sorted-key JSON of a model; the input of config_hash"""
    return json.dumps(
        cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    )


def config_hash(cfg: BaseModel) -> str:
    """SHA-256 of the canonical JSON form of a configuration"""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()
