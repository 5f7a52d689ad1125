import json
from pathlib import Path

import pytest

import presets
import settings


def test_shipped_presets_load() -> None:
    loaded = presets.load_presets()
    assert {"cycles_vs_line", "torus2_vs_lattice", "sofic_quotient_lattice", "sofic_free_random"} <= set(loaded)
    assert loaded["cycles_vs_line"]["limit"] == "line"


def test_files_override_field_by_field(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    public = tmp_path / "presets.json"
    private = tmp_path / "presets.private.json"
    public.write_text(
        json.dumps({"presets": {"cycles_vs_line": {"range": "4..8"}, "mine": {"family": "cycle", "colour": "red"}}}),
        encoding="utf-8",
    )
    private.write_text(json.dumps({"presets": {"cycles_vs_line": {"order": 4}}}), encoding="utf-8")
    monkeypatch.setattr(presets, "PRESETS_PATH", public)
    monkeypatch.setattr(presets, "PRIVATE_PRESETS_PATH", private)

    merged = presets.get_preset("cycles_vs_line")
    assert merged["range"] == "4..8"
    assert merged["order"] == 4
    assert merged["limit"] == "line"
    # unknown fields are dropped
    assert presets.get_preset("mine") == {"family": "cycle"}


def test_unreadable_file_is_ignored(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    broken = tmp_path / "presets.json"
    broken.write_text("{not json", encoding="utf-8")
    monkeypatch.setattr(presets, "PRESETS_PATH", broken)
    monkeypatch.setattr(presets, "PRIVATE_PRESETS_PATH", tmp_path / "missing.json")
    assert presets.get_preset("torus2_vs_lattice")["limit"] == "zd:2"


def test_unknown_preset() -> None:
    with pytest.raises(KeyError):
        presets.get_preset("no_such_preset")


def test_settings_from_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("IHARA_DEFAULT_ORDER", "7")
    monkeypatch.setenv("IHARA_SEED", "5")
    monkeypatch.setenv("IHARA_DATA_DIR", str(tmp_path))
    monkeypatch.setenv("IHARA_LOG_LEVEL", "debug")
    assert settings.default_order() == 7
    assert settings.default_seed() == 5
    assert settings.data_dir() == tmp_path
    assert settings.log_level() == "DEBUG"


def test_settings_fall_back_on_bad_values(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("IHARA_DEFAULT_ORDER", "0")
    monkeypatch.setenv("IHARA_SEED", "many")
    monkeypatch.setenv("IHARA_FLOAT_TOL", "tiny")
    monkeypatch.setenv("IHARA_LOG_LEVEL", "LOUD")
    assert settings.default_order() == settings.DEFAULT_ORDER
    assert settings.default_seed() == settings.DEFAULT_SEED
    assert settings.float_tolerance() == settings.DEFAULT_FLOAT_TOL
    assert settings.log_level() == settings.DEFAULT_LOG_LEVEL


def test_built_in_presets_match_the_shipped_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    shipped = json.loads(presets.PRESETS_PATH.read_text(encoding="utf-8"))["presets"]
    assert set(shipped) == set(presets.DEFAULT_PRESETS)
    for name, fields in shipped.items():
        assert presets.DEFAULT_PRESETS[name] == fields

    monkeypatch.setattr(presets, "PRESETS_PATH", tmp_path / "missing.json")
    monkeypatch.setattr(presets, "PRIVATE_PRESETS_PATH", tmp_path / "missing.private.json")
    assert presets.get_preset("sofic_free_random")["limit"] == "free:2"
