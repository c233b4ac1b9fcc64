"""
Utility functions: environment settings, logging setup, output directories.
"""

import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional

from dotenv import load_dotenv

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvSettings:
    """Defaults read from the environment (and a .env file, if present)."""

    log_level: str = "WARNING"
    log_file: Optional[str] = "simultaneity.log"
    workers: int = 1
    tolerance_k: float = 4.0


def _env_number(name: str, default, cast):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not a valid {cast.__name__}")
        return default


def load_env_settings(dotenv_path: Optional[Path] = None) -> EnvSettings:
    """
    Read SIMULTANEITY_* variables, loading .env first.

    Args:
        dotenv_path: Explicit .env file; the default search applies when None

    Returns:
        EnvSettings with defaults for unset variables
    """
    load_dotenv(dotenv_path=dotenv_path)
    log_file = os.environ.get("SIMULTANEITY_LOG_FILE", EnvSettings.log_file)
    return EnvSettings(
        log_level=os.environ.get("SIMULTANEITY_LOG_LEVEL", EnvSettings.log_level).upper(),
        log_file=log_file or None,
        workers=max(1, _env_number("SIMULTANEITY_WORKERS", EnvSettings.workers, int)),
        tolerance_k=_env_number("SIMULTANEITY_TOLERANCE_K", EnvSettings.tolerance_k, float),
    )


def setup_logging(level: str = "WARNING", log_file: Optional[str] = None) -> None:
    """
    Configure root logging once for the command-line front end.

    Messages go to stderr so stdout stays free for JSON output.
    """
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def ensure_directories(base_path: Path, subdirs: Iterable[str] = ()) -> Dict[str, Path]:
    """
    Create an output directory and named subdirectories.

    Args:
        base_path: Output directory
        subdirs: Names of subdirectories to create inside it

    Returns:
        Dictionary with directory paths, keyed 'base' and by subdir name
    """
    directories = {'base': base_path}
    directories.update({name: base_path / name for name in subdirs})

    for dir_path in directories.values():
        dir_path.mkdir(parents=True, exist_ok=True)

    return directories
