import json
import logging
from pathlib import Path
from typing import Any, Dict

BASE_DIR = Path(__file__).resolve().parent
PRESETS_PATH = BASE_DIR / "config" / "experiment_presets.json"
PRIVATE_PRESETS_PATH = BASE_DIR / "config" / "experiment_presets.private.json"

logger = logging.getLogger(__name__)

# Keys a converge preset may set; each maps to the argparse dest of the same name.
PRESET_FIELDS = ("family", "range", "dimension", "order", "limit", "provider", "radius", "eval", "out")


DEFAULT_PRESETS: Dict[str, Dict[str, Any]] = {
    "cycles_vs_line": {
        "family": "cycle",
        "range": "4..64",
        "order": 8,
        "limit": "line",
        "eval": ["0.5,0"],
        "out": "csv",
    },
    "torus2_vs_lattice": {
        "family": "torus",
        "dimension": 2,
        "range": "4..16",
        "order": 8,
        "limit": "zd:2",
        "eval": ["0.2,0", "0.1,0.1"],
        "out": "csv",
    },
    "sofic_quotient_lattice": {
        "family": "sofic",
        "dimension": 2,
        "range": "4..12",
        "order": 6,
        "limit": "zd:2",
        "provider": '{"provider": "quotient"}',
        "radius": 4,
        "eval": ["0.2,0"],
        "out": "csv",
    },
    "sofic_free_random": {
        "family": "sofic",
        "range": "200..800:200",
        "order": 6,
        "limit": "free:2",
        "provider": '{"provider": "random"}',
        "radius": 2,
        "eval": ["0.1,0"],
        "out": "csv",
    },
}


def _read(path: Path) -> Dict[str, Any]:
    if not path.exists():
        return {}
    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except Exception:
        logger.warning("Ignoring unreadable preset file %s", path)
        return {}
    presets = data.get("presets") if isinstance(data, dict) else None
    return presets if isinstance(presets, dict) else {}


def _merge(base: Dict[str, Dict[str, Any]], stored: Dict[str, Any]) -> None:
    for name, value in stored.items():
        if not isinstance(value, dict):
            continue
        merged = dict(base.get(name, {}))
        for key in PRESET_FIELDS:
            if key in value:
                merged[key] = value[key]
        base[name] = merged


def load_presets() -> Dict[str, Dict[str, Any]]:
    """Built-in presets, overridden field by field by the public and then the private file."""

    presets = {k: dict(v) for k, v in DEFAULT_PRESETS.items()}
    _merge(presets, _read(PRESETS_PATH))
    _merge(presets, _read(PRIVATE_PRESETS_PATH))
    return presets


def get_preset(name: str) -> Dict[str, Any]:
    preset = load_presets().get(name)
    if preset is None:
        raise KeyError(name)
    return dict(preset)
