"""Run metadata, config-file merging and the registry wrapper every subcommand goes through."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Callable, Optional

from pydantic import BaseModel, Field

from app.core.config import parse_config, settings
from app.core.errors import AsrError, ConfigError
from app.db.registry import RunRegistry

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"
CONFIG_SECTIONS = ("model", "train", "synth")


class RunConfig(BaseModel):
    """Everything needed to re-execute a run; persisted as run.json before any work."""

    command: str
    seed: int = Field(..., ge=0)
    out_dir: str
    paths: dict[str, Any] = Field(default_factory=dict, description="Input paths (a string or a list of strings)")
    options: dict[str, Any] = Field(default_factory=dict)
    model: dict[str, Any] = Field(default_factory=dict, description="ModelConfig overrides")
    train: dict[str, Any] = Field(default_factory=dict, description="TrainConfig overrides")
    synth: dict[str, Any] = Field(default_factory=dict, description="SynthConfig overrides")
    artifact_version: str = settings.APP_VERSION
    argv: list[str] = Field(default_factory=list)

    def path(self, key: str) -> Optional[Path]:
        value = self.paths.get(key)
        return None if value is None else Path(value)

    def path_list(self, key: str) -> list[Path]:
        value = self.paths.get(key) or []
        return [Path(v) for v in ([value] if isinstance(value, str) else value)]


def read_config_file(path: Optional[Path]) -> dict[str, dict[str, Any]]:
    """JSON document with optional ``model``, ``train`` and ``synth`` sections."""
    if path is None:
        return {}
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")
    if not isinstance(payload, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    unknown = sorted(set(payload) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"{path}: unknown sections {unknown}; expected any of {list(CONFIG_SECTIONS)}")
    for section, values in payload.items():
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: section {section!r} must be an object")
    return payload


def merge_overrides(file_values: dict[str, Any], flag_values: dict[str, Any]) -> dict[str, Any]:
    """defaults < file < flags; flags left at None do not override."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged


def write_run_file(run: RunConfig, out_dir: Path) -> Path:
    path = out_dir / RUN_FILE
    path.write_text(run.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_run_file(path: Path) -> RunConfig:
    path = path / RUN_FILE if path.is_dir() else path
    if not path.is_file():
        raise ConfigError(f"run metadata not found: {path}")
    try:
        return parse_config(RunConfig, json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")


def prepare_out_dir(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {out}: {e.strerror}")
    return out


def execute(run: RunConfig, handler: Callable[[RunConfig, Path], None]) -> int:
    """Persist run.json, register the run, call ``handler`` and record how it ended."""
    out_dir = prepare_out_dir(Path(run.out_dir))
    config_json = run.model_dump_json()
    try:
        write_run_file(run, out_dir)
    except OSError as e:
        raise ConfigError(f"cannot write to output directory {out_dir}: {e.strerror}")
    registry = RunRegistry(out_dir)
    run_id = registry.start(run.command, run.seed, out_dir, config_json, run.artifact_version)
    try:
        handler(run, out_dir)
    except AsrError as e:
        registry.finish(run_id, e.exit_code, e.detail)
        raise
    except Exception as e:
        registry.finish(run_id, 1, f"{type(e).__name__}: {e}")
        raise
    registry.finish(run_id, 0)
    logger.info(f"{run.command} run {run_id} completed; artifacts in {out_dir}")
    return 0
