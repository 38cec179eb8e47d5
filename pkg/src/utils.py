import json
import logging
import os
from pathlib import Path
from typing import Any, Optional

import yaml

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "config.yaml"


def setup_logger(name: str) -> logging.Logger:
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=logging.INFO,
    )
    return logging.getLogger(name)


def load_config(config_path: Optional[str] = None) -> dict:
    """
    Loads the YAML configuration.
    Resolution order: explicit path, GCINT_CONFIG, then the repository default.
    """
    path = config_path or os.environ.get("GCINT_CONFIG") or DEFAULT_CONFIG_PATH
    with open(path, "r") as f:
        return yaml.safe_load(f)


def config_section(config: Optional[dict], name: str) -> dict:
    """Returns a config section, or an empty dict when config or section is missing."""
    if not config:
        return {}
    return config.get(name) or {}


def ensure_directory(path: Path):
    """Ensure the parent directory exists and creates it if not."""
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)


def worker_count(configured: int = 1) -> int:
    """
    Worker count for the parallel quadrature reduction.
    GCINT_THREADS caps the configured count; invalid values are ignored.
    """
    configured = max(1, configured)
    raw = os.environ.get("GCINT_THREADS")
    if not raw:
        return configured
    try:
        cap = int(raw)
    except ValueError:
        logging.getLogger(__name__).warning(f"Ignoring invalid GCINT_THREADS={raw!r}")
        return configured
    return max(1, min(configured, cap))


def write_json(payload: Any, output_path: Path) -> Path:
    """
    Writes a JSON document deterministically (sorted keys, fixed indent, trailing newline).
    Floats use Python's shortest round-trip repr, so 64-bit values survive a reload.
    """
    ensure_directory(output_path)
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    output_path.write_text(text, encoding="utf-8")
    return output_path
