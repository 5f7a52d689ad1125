import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent
load_dotenv(BASE_DIR / ".env")

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 12
DEFAULT_SEED = 42
DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_FLOAT_TOL = 1e-9


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not an integer); using %d.", name, raw, default)
        return default


def _float_from_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not a number); using %g.", name, raw, default)
        return default


def default_order() -> int:
    """Truncation order J used when a command does not pass --order."""
    order = _int_from_env("IHARA_DEFAULT_ORDER", DEFAULT_ORDER)
    if order < 1:
        logger.warning("IHARA_DEFAULT_ORDER must be positive; using %d.", DEFAULT_ORDER)
        return DEFAULT_ORDER
    return order


def default_seed() -> int:
    return _int_from_env("IHARA_SEED", DEFAULT_SEED)


def float_tolerance() -> float:
    return _float_from_env("IHARA_FLOAT_TOL", DEFAULT_FLOAT_TOL)


def data_dir() -> Path:
    raw: Optional[str] = os.getenv("IHARA_DATA_DIR")
    if raw:
        return Path(raw)
    return BASE_DIR / "data"


def log_level() -> str:
    level = (os.getenv("IHARA_LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        return DEFAULT_LOG_LEVEL
    return level
