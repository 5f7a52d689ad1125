"""
File formats and report emission.

Rationals are written as "p/q" strings, complex numbers as [re, im] pairs.
"""

import csv
import io
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from errors import GraphFormatError
from graph_core import BallClassKey, ColoredGraph, Graph, RootedBall, build_graph, canonical_key, make_colored_graph
from limits import BallDistribution, ConvergenceReport
from periodic import GroupCarrier, VoltageGraph, build_voltage_graph, builtin_voltage_graph, group_from_dict
from series import TruncatedSeries, series_from_dict, series_to_dict
from sofic import AlmostHom, make_almost_hom

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ----- Scalars -----


def fraction_to_str(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise GraphFormatError(f"{text!r} is not a rational number.") from exc


def complex_to_pair(z: complex) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def parse_complex(text: str) -> complex:
    """'re,im' or a bare real number."""

    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise GraphFormatError(f"{text!r} is not a complex number of the form 're,im'.")


# ----- Graphs -----


def graph_from_dict(data: Dict[str, Any]) -> Tuple[Graph, Optional[ColoredGraph]]:
    try:
        n = int(data["vertices"])
        edges = [(int(u), int(v)) for u, v in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"Malformed graph JSON: {exc}") from exc
    bound = data.get("degree_bound")
    if bound is not None:
        bound = _int_field(bound, "degree_bound")
    g = build_graph(n, edges, degree_bound=bound)
    colors = data.get("colors")
    if colors is None:
        return g, None
    if not isinstance(colors, list):
        raise GraphFormatError(f"Field 'colors' must be a list, got {type(colors).__name__}.")
    if len(colors) != len(edges):
        raise GraphFormatError(f"{len(colors)} colors given for {len(edges)} edges.")
    mapping = {
        (min(u, v), max(u, v)): _int_field(c, f"colors[{i}]") for i, ((u, v), c) in enumerate(zip(edges, colors))
    }
    return g, make_colored_graph(g, mapping)


def _int_field(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise GraphFormatError(f"Field '{name}' must be an integer, got {value!r}.")
    try:
        return int(value)
    except ValueError as exc:
        raise GraphFormatError(f"Field '{name}' must be an integer, got {value!r}.") from exc


def graph_to_dict(g: Graph, colors: Optional[ColoredGraph] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {"vertices": g.vertex_count, "edges": [list(e) for e in g.edges]}
    if colors is not None:
        data["colors"] = [colors.color(u, v) for u, v in g.edges]
    return data


def parse_edge_list(text: str) -> Tuple[Graph, Optional[ColoredGraph]]:
    """One 'u v [c]' per line; '#' starts a comment. The vertex count is max id + 1."""

    edges: List[Tuple[int, int]] = []
    colors: List[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"Line {lineno}: expected 'u v [c]', got {raw!r}.")
        try:
            values = [int(p) for p in parts]
        except ValueError as exc:
            raise GraphFormatError(f"Line {lineno}: non-integer field in {raw!r}.") from exc
        edges.append((values[0], values[1]))
        if len(values) == 3:
            colors.append(values[2])
    if colors and len(colors) != len(edges):
        raise GraphFormatError("Either every edge line carries a color or none does.")
    if not edges:
        raise GraphFormatError("Edge list is empty.")
    n = max(max(u, v) for u, v in edges) + 1
    data: Dict[str, Any] = {"vertices": n, "edges": edges}
    if colors:
        data["colors"] = colors
    return graph_from_dict(data)


def _read_json(path: PathLike) -> Any:
    try:
        with Path(path).open("r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno}).") from exc


def load_graph(path: PathLike) -> Tuple[Graph, Optional[ColoredGraph]]:
    p = Path(path)
    if p.suffix.lower() == ".json":
        return graph_from_dict(_read_json(p))
    return parse_edge_list(p.read_text(encoding="utf-8"))


def save_graph(g: Graph, path: PathLike, colors: Optional[ColoredGraph] = None) -> None:
    write_json(graph_to_dict(g, colors), path)


# ----- Voltage graphs -----


def voltage_from_dict(data: Dict[str, Any]) -> VoltageGraph:
    try:
        group: GroupCarrier = group_from_dict(data["group"])
        m = int(data["vertices"])
        raw_edges = data["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"Malformed voltage graph JSON: {exc}") from exc
    edges = []
    for item in raw_edges:
        try:
            edges.append((int(item["from"]), int(item["to"]), group.parse(item["label"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"Malformed labeled edge {item!r}.") from exc
    return build_voltage_graph(group, m, edges, stabilizers=data.get("stabilizers"))


def voltage_to_dict(vg: VoltageGraph) -> Dict[str, Any]:
    # one dart per reversal pair
    kept = []
    seen = set()
    for f, g, label in vg.darts:
        if (g, f, label.inverse()) in seen:
            continue
        seen.add((f, g, label))
        kept.append({"from": f, "to": g, "label": vg.group.format(label)})
    return {
        "group": vg.group.to_dict(),
        "vertices": vg.vertex_count,
        "edges": kept,
        "stabilizers": list(vg.stabilizers),
    }


def load_voltage_graph(path: PathLike) -> VoltageGraph:
    return voltage_from_dict(_read_json(path))


def resolve_voltage_graph(source: str) -> VoltageGraph:
    """A voltage-graph JSON file, or a built-in name such as 'zd:2'."""

    if Path(source).is_file():
        return load_voltage_graph(source)
    return builtin_voltage_graph(source)


def resolve_limit(source: str) -> Union[VoltageGraph, BallDistribution]:
    """Voltage graph or ball distribution; distribution files carry a 'classes' list."""

    if not Path(source).is_file():
        return builtin_voltage_graph(source)
    data = _read_json(source)
    if isinstance(data, dict) and "classes" in data:
        return distribution_from_dict(data)
    if not isinstance(data, dict):
        raise GraphFormatError(f"{source}: expected a JSON object.")
    return voltage_from_dict(data)


# ----- Providers -----


def load_provider_spec(source: str) -> Dict[str, Any]:
    """A provider spec given inline as JSON or as a path to a JSON file."""

    text = source.strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"Invalid provider JSON: {exc.msg}.") from exc
    else:
        data = _read_json(text)
    if not isinstance(data, dict) or "provider" not in data:
        raise GraphFormatError("Provider spec must be an object with a 'provider' field.")
    return data


def parse_permutation_table(text: str, group: GroupCarrier) -> AlmostHom:
    """Lines 'element: i_0 i_1 ... i_{N-1}'; elements use the group's label syntax."""

    table: Dict[Any, np.ndarray] = {}
    degree: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        label, sep, images = line.partition(":")
        if not sep:
            raise GraphFormatError(f"Line {lineno}: expected 'element: images', got {raw!r}.")
        element = group.parse(label.strip())
        try:
            perm = np.array([int(x) for x in images.split()], dtype=np.int64)
        except ValueError as exc:
            raise GraphFormatError(f"Line {lineno}: non-integer image.") from exc
        if degree is None:
            degree = len(perm)
        elif len(perm) != degree:
            raise GraphFormatError(f"Line {lineno}: {len(perm)} images, expected {degree}.")
        if element in table:
            raise GraphFormatError(f"Line {lineno}: element {label.strip()!r} listed twice.")
        table[element] = perm
    if degree is None:
        raise GraphFormatError("Permutation table is empty.")
    return make_almost_hom(degree, table, "user")


def load_permutation_table(path: PathLike, group: GroupCarrier) -> AlmostHom:
    return parse_permutation_table(Path(path).read_text(encoding="utf-8"), group)


# ----- Series and coefficients -----


def save_series(s: TruncatedSeries, path: PathLike) -> None:
    write_json(series_to_dict(s), path)


def load_series(path: PathLike) -> TruncatedSeries:
    data = _read_json(path)
    try:
        return series_from_dict(data)
    except (TypeError, ValueError, IndexError) as exc:
        raise GraphFormatError(f"{path}: {exc}") from exc


def fractions_to_strs(values: Iterable[Fraction]) -> List[str]:
    return [fraction_to_str(v) for v in values]


# ----- Ball distributions -----


def distribution_to_dict(d: BallDistribution) -> Dict[str, Any]:
    return {
        "radius": d.radius,
        "degree_bound": d.degree_bound,
        "classes": [
            {
                "key": key.hex(),
                "frequency": fraction_to_str(p),
                "ball": graph_to_dict(d.representatives[key].graph),
            }
            for key, p in d.entries.items()
        ],
    }


def distribution_from_dict(data: Dict[str, Any]) -> BallDistribution:
    """Rebuild a distribution; keys are recomputed from the stored representatives."""

    try:
        radius = int(data["radius"])
        bound = int(data["degree_bound"])
        classes = data["classes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"Malformed ball distribution: {exc}") from exc
    entries: Dict[BallClassKey, Fraction] = {}
    reps: Dict[BallClassKey, RootedBall] = {}
    if not isinstance(classes, list):
        raise GraphFormatError("Field 'classes' must be a list.")
    for item in classes:
        if not isinstance(item, dict) or not isinstance(item.get("ball"), dict) or "frequency" not in item:
            raise GraphFormatError(f"Malformed ball class {item!r}.")
        g, _ = graph_from_dict({**item["ball"], "degree_bound": bound})
        b = RootedBall(graph=g, root=0, radius=radius)
        key = canonical_key(b)
        if item.get("key") and item["key"] != key.hex():
            logger.warning("Stored key %s differs from the recomputed key; using the recomputed one", item["key"])
        entries[key] = entries.get(key, Fraction(0)) + parse_fraction(str(item["frequency"]))
        reps.setdefault(key, b)
    ordered = dict(sorted(entries.items()))
    return BallDistribution(
        radius=radius,
        entries=ordered,
        representatives={k: reps[k] for k in ordered},
        degree_bound=bound,
    )


def load_distribution(path: PathLike) -> BallDistribution:
    return distribution_from_dict(_read_json(path))


# ----- Convergence reports -----


def report_header(report: ConvergenceReport) -> List[str]:
    header = ["n", "vertices"]
    header += [f"nbar_{j}" for j in range(1, report.order + 1)]
    header += [f"dev_nbar_{j}" for j in range(1, report.order + 1)]
    header += [f"dev_z_{k}" for k in range(1, len(report.eval_points) + 1)]
    return header


def report_rows(report: ConvergenceReport) -> List[List[str]]:
    rows = []
    for row in report.rows:
        cells = [str(row.n), str(row.vertex_count)]
        cells += fractions_to_strs(row.nbar)
        cells += fractions_to_strs(row.coefficient_deviation)
        cells += [repr(float(x)) for x in row.z_deviation]
        rows.append(cells)
    return rows


def report_to_dict(report: ConvergenceReport) -> Dict[str, Any]:
    return {
        "order": report.order,
        "eval_points": [complex_to_pair(u) for u in report.eval_points],
        "fundamental_size": report.fundamental_size,
        "limit": {
            "nbar": fractions_to_strs(report.limit_nbar),
            "z": [complex_to_pair(z) for z in report.limit_z],
            "tail_bounds": [float(t) for t in report.limit_tail_bounds],
        },
        "rows": [
            {
                "n": row.n,
                "vertices": row.vertex_count,
                "nbar": fractions_to_strs(row.nbar),
                "z": [complex_to_pair(z) for z in row.z_values],
                "coefficient_deviation": fractions_to_strs(row.coefficient_deviation),
                "z_deviation": [float(x) for x in row.z_deviation],
            }
            for row in report.rows
        ],
        "sup": {
            "coefficient_deviation": fractions_to_strs(report.sup_coefficient_deviation()),
            "z_deviation": [float(x) for x in report.sup_z_deviation()],
        },
    }


# ----- Writers and readers -----


def dump_json(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2)


def write_json(payload: Any, path: PathLike) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)


def dump_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    _write_csv(buffer, header, rows)
    return buffer.getvalue()


def _write_csv(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: PathLike) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as f:
        _write_csv(f, header, rows)


def _parse_cell(cell: str) -> Union[int, Fraction, float, str]:
    if "/" in cell:
        try:
            return Fraction(cell)
        except ValueError:
            return cell
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            continue
    return cell


def parse_csv(text: str) -> Tuple[List[str], List[List[Any]]]:
    """Header and rows; 'p/q' cells come back as Fraction, numbers as int or float."""

    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return [], []
    return rows[0], [[_parse_cell(c) for c in row] for row in rows[1:]]


def read_csv(path: PathLike) -> Tuple[List[str], List[List[Any]]]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))
