import json
from fractions import Fraction
from pathlib import Path

import pytest

import selftest
from cli import main, parse_range
from errors import GraphFormatError, IdentityFailure
from store import parse_csv


@pytest.fixture
def triangle_file(tmp_path: Path) -> Path:
    path = tmp_path / "triangle.txt"
    path.write_text("0 1\n1 2\n2 0\n", encoding="utf-8")
    return path


def _run_json(capsys: pytest.CaptureFixture, argv) -> dict:
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def test_zeta_euler_route(capsys: pytest.CaptureFixture, triangle_file: Path) -> None:
    data = _run_json(capsys, ["zeta", "--input", str(triangle_file), "--method", "euler", "--order", "7"])
    assert data["series"] == ["1/1", "0/1", "0/1", "2/1", "0/1", "0/1", "3/1", "0/1"]
    assert data["nbar"][2] == "6/1"
    assert data["euler_characteristic"] == "0/1"
    assert data["vertices"] == 3 and data["edges"] == 3


def test_zeta_verify_and_evaluate(capsys: pytest.CaptureFixture, triangle_file: Path) -> None:
    data = _run_json(
        capsys,
        ["zeta", "--input", str(triangle_file), "--method", "paths", "--order", "9", "--verify", "--eval", "0.2,0", "--quiet"],
    )
    assert data["verified"] is True
    assert data["pbar"][2] == "6/1"
    (evaluation,) = data["evaluations"]
    assert evaluation["z"][0] == pytest.approx((1 - 0.2 ** 3) ** -2, abs=1e-5)
    assert evaluation["tail_bound"] is not None


def test_zeta_spectral_evaluation(capsys: pytest.CaptureFixture, triangle_file: Path) -> None:
    data = _run_json(
        capsys,
        ["zeta", "--input", str(triangle_file), "--method", "spectral", "--measure", "normalized", "--eval", "0.3"],
    )
    assert data["measure"] == "normalized"
    assert data["nbar"][2] == "2/1"
    assert data["evaluations"][0]["z"][0] == pytest.approx((1 - 0.3 ** 3) ** (-2 / 3), rel=1e-9)


def test_zeta_csv(capsys: pytest.CaptureFixture, triangle_file: Path) -> None:
    assert main(["zeta", "--input", str(triangle_file), "--order", "3", "--out", "csv"]) == 0
    header, rows = parse_csv(capsys.readouterr().out)
    assert header == ["quantity", "index", "exact", "re", "im", "tail_bound"]
    assert ["nbar", 3, 6, "", "", ""] in rows


def test_zeta_exit_codes(capsys: pytest.CaptureFixture, triangle_file: Path, tmp_path: Path) -> None:
    assert main(["zeta", "--input", str(triangle_file), "--eval", "5,0"]) == 3
    assert "domain error" in capsys.readouterr().err
    assert main(["zeta", "--input", str(tmp_path / "missing.txt")]) == 2
    loop = tmp_path / "loop.txt"
    loop.write_text("0 0\n", encoding="utf-8")
    assert main(["zeta", "--input", str(loop)]) == 2
    assert main(["zeta", "--input", str(triangle_file), "--eval", "abc"]) == 2
    assert main(["zeta", "--input", str(triangle_file), "--order", "0"]) == 2
    assert main(["zeta"]) == 2


def test_verify_failure_exits_one(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture, triangle_file: Path) -> None:
    import cli

    def broken(g, J, mode):
        raise IdentityFailure("edge-route", "mismatch")

    monkeypatch.setattr(cli, "verify_agreement", broken)
    assert main(["zeta", "--input", str(triangle_file), "--verify"]) == 1
    assert "edge-route" in capsys.readouterr().err


def test_balls(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    path = tmp_path / "path.json"
    path.write_text(json.dumps({"vertices": 3, "edges": [[0, 1], [1, 2]]}), encoding="utf-8")
    data = _run_json(capsys, ["balls", "--input", str(path), "--radius", "1"])
    assert data["radius"] == 1
    assert sorted(c["frequency"] for c in data["classes"]) == ["1/3", "2/3"]


def test_periodic(capsys: pytest.CaptureFixture) -> None:
    data = _run_json(capsys, ["periodic", "--voltage", "zd:2", "--order", "4", "--eval", "0.1,0", "--radius", "1"])
    assert data["nbar"] == ["0/1", "0/1", "0/1", "8/1"]
    assert data["mass"] == "1/1"
    assert data["free"] is True
    assert data["distribution"]["radius"] == 1
    assert data["evaluations"][0]["tail_bound"] is not None


def test_periodic_outside_disc(capsys: pytest.CaptureFixture) -> None:
    assert main(["periodic", "--voltage", "zd:2", "--order", "4", "--eval", "0.4"]) == 3
    assert main(["periodic", "--voltage", "zd:x"]) == 2


def test_sofic_quotient(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    saved = tmp_path / "glued.json"
    data = _run_json(
        capsys,
        [
            "sofic",
            "--voltage",
            "zd:2",
            "--provider",
            '{"provider": "quotient", "n": 9}',
            "--radius",
            "2",
            "--save-graph",
            str(saved),
        ],
    )
    assert data["vertices"] == 81
    assert data["defect_iii"] == "1/1"
    assert data["good_index_fraction"] == "1/1"
    assert data["max_deviation"] == "0/1"
    assert data["holds"] is True and data["applicable"] is True
    assert json.loads(saved.read_text(encoding="utf-8"))["vertices"] == 81


def test_sofic_table_provider(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    table = tmp_path / "shifts.txt"
    lines = [f"{k}: " + " ".join(str((i + k) % 5) for i in range(5)) for k in range(-2, 3)]
    table.write_text("\n".join(lines) + "\n", encoding="utf-8")
    argv = ["sofic", "--voltage", "line", "--provider", '{"provider": "table"}', "--radius", "1", "--out", "csv"]
    assert main(argv + ["--table", str(table)]) == 0
    _, rows = parse_csv(capsys.readouterr().out)
    values = {row[0]: row[1] for row in rows}
    assert values["provenance"] == "user"
    assert values["vertices"] == 5
    assert values["holds"] == "true"
    assert main(argv) == 2


def test_converge_csv(capsys: pytest.CaptureFixture) -> None:
    argv = ["converge", "--family", "cycle", "--range", "8..10", "--limit", "line", "--order", "6", "--eval", "0.3", "--out", "csv"]
    assert main(argv) == 0
    header, rows = parse_csv(capsys.readouterr().out)
    assert header[-1] == "dev_z_1"
    assert [row[0] for row in rows] == [8, 9, 10]
    assert all(row[header.index("dev_nbar_6")] == 0 for row in rows)


def test_converge_needs_family(capsys: pytest.CaptureFixture) -> None:
    assert main(["converge", "--range", "8..10", "--limit", "line"]) == 2
    assert main(["converge", "--family", "sofic", "--range", "4..5", "--limit", "zd:2"]) == 2


def test_converge_sofic_family(capsys: pytest.CaptureFixture) -> None:
    argv = [
        "converge",
        "--family",
        "sofic",
        "--range",
        "8..9",
        "--limit",
        "zd:2",
        "--provider",
        '{"provider": "quotient"}',
        "--order",
        "6",
    ]
    data = _run_json(capsys, argv)
    assert [row["coefficient_deviation"] for row in data["rows"]] == [["0/1"] * 6] * 2


def test_converge_preset_with_overrides(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    out = tmp_path / "cycles.csv"
    assert main(["converge", "--preset", "cycles_vs_line", "--range", "8..9", "--order", "4", "--output", str(out)]) == 0
    header, rows = parse_csv(out.read_text(encoding="utf-8"))
    assert header.count("dev_z_1") == 1 and "dev_z_2" not in header
    assert len(rows) == 2


def test_converge_preset_writes_to_data_dir(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("IHARA_DATA_DIR", str(tmp_path))
    argv = ["converge", "--preset", "torus2_vs_lattice", "--range", "6..6", "--order", "4", "--eval", "0.1", "--quiet"]
    assert main(argv) == 0
    header, rows = parse_csv((tmp_path / "torus2_vs_lattice.csv").read_text(encoding="utf-8"))
    # --eval replaces the preset's two points
    assert "dev_z_2" not in header
    assert rows[0][0] == 6


def test_unknown_preset(capsys: pytest.CaptureFixture) -> None:
    assert main(["converge", "--preset", "nope"]) == 2
    assert "nope" in capsys.readouterr().err


def test_selftest_command(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
    monkeypatch.setattr(selftest, "suite", lambda seed: [("noop", lambda: None)])
    data = _run_json(capsys, ["selftest"])
    assert data["passed"] is True
    assert [c["name"] for c in data["checks"]] == ["noop"]


def test_selftest_names_first_failure(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
    import zeta

    original = zeta.proper_path_matrices

    def corrupted(g, J):
        mats = original(g, J)
        mats[3] = mats[3] + 1
        return mats

    small = selftest.random_suite(3, 3)
    monkeypatch.setattr(
        selftest,
        "suite",
        lambda seed: [
            ("determinant-formula", lambda: selftest.check_determinant_formula(small, 6)),
            ("bounds", lambda: selftest.check_bounds(small, 6)),
        ],
    )
    monkeypatch.setattr(zeta, "proper_path_matrices", corrupted)
    assert main(["selftest"]) == 1
    captured = capsys.readouterr()
    assert "selftest failed: determinant-formula" in captured.err
    assert json.loads(captured.out)["passed"] is False


def test_parse_range() -> None:
    assert list(parse_range("4..8:2")) == [4, 6, 8]
    assert list(parse_range("3..3")) == [3]
    for text in ("4-8", "8..4", "1..5:0", "a..b"):
        with pytest.raises(GraphFormatError):
            parse_range(text)


def test_sofic_claim_bound_violation_exits_one(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture) -> None:
    import cli

    monkeypatch.setattr(cli, "good_index_fraction", lambda vg, r, h, graph=None: Fraction(0))
    argv = ["sofic", "--voltage", "zd:2", "--provider", '{"provider": "quotient", "n": 9}', "--radius", "2"]
    assert main(argv) == 1
    assert "claim-bound" in capsys.readouterr().err


@pytest.mark.parametrize(
    "fields",
    [
        {"colors": [1, "x", 2]},
        {"colors": "red"},
        {"colors": [1, True, 2]},
        {"degree_bound": "three"},
        {"degree_bound": 2.5},
    ],
)
def test_malformed_graph_fields_exit_two(capsys: pytest.CaptureFixture, tmp_path: Path, fields: dict) -> None:
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"vertices": 3, "edges": [[0, 1], [1, 2], [2, 0]], **fields}), encoding="utf-8")
    assert main(["zeta", "--input", str(path)]) == 2
    assert main(["balls", "--input", str(path), "--radius", "1"]) == 2
    assert "Traceback" not in capsys.readouterr().err


def test_converge_files_family(capsys: pytest.CaptureFixture, tmp_path: Path) -> None:
    c8 = tmp_path / "c8.txt"
    c8.write_text("".join(f"{i} {(i + 1) % 8}\n" for i in range(8)), encoding="utf-8")
    c9 = tmp_path / "c9.json"
    c9.write_text(json.dumps({"vertices": 9, "edges": [[i, (i + 1) % 9] for i in range(9)]}), encoding="utf-8")
    argv = ["converge", "--family", "files", "--graphs", str(c8), str(c9), "--limit", "line", "--order", "6", "--eval", "0.3"]
    data = _run_json(capsys, argv)
    assert [row["n"] for row in data["rows"]] == [8, 9]
    assert [row["coefficient_deviation"] for row in data["rows"]] == [["0/1"] * 6] * 2

    cycles = _run_json(capsys, ["converge", "--family", "cycle", "--range", "8..9", "--limit", "line", "--order", "6", "--eval", "0.3"])
    assert [row["z"] for row in data["rows"]] == [row["z"] for row in cycles["rows"]]

    assert main(["converge", "--family", "files", "--limit", "line"]) == 2
    assert main(["converge", "--family", "files", "--graphs", str(tmp_path / "missing.txt"), "--limit", "line"]) == 2
