import json
import os
from dataclasses import dataclass
from pathlib import Path

from rssloc.errors import SchemaError

COMMANDS = ("build-db", "select", "evaluate", "synth", "validate-s", "replay")


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    workers: int = 1
    dataset_dir: str = ""

    @classmethod
    def from_env(cls):
        return cls(
            log_level=os.environ.get("RSSLOC_LOG_LEVEL", "INFO").upper(),
            workers=int(os.environ.get("RSSLOC_WORKERS", "1")),
            dataset_dir=os.environ.get("RSSLOC_DATASET_DIR", ""),
        )


def load_config_file(path):
    """Read a JSON config file into a click ``default_map``.

    Top-level keys are command names; values map flag names (dashes or
    underscores) to defaults for that command.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"config file {path} must hold a JSON object")

    default_map = {}
    for command, flags in data.items():
        if command not in COMMANDS:
            raise SchemaError(f"config file {path}: unknown command {command!r}")
        if not isinstance(flags, dict):
            raise SchemaError(f"config file {path}: {command!r} must map flags to values")
        default_map[command] = {name.lstrip("-").replace("-", "_"): value for name, value in flags.items()}
    return default_map
