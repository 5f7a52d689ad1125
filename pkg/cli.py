import argparse
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import settings
from errors import DomainError, GraphFormatError, IdentityFailure
from graph_core import Graph
from limits import (
    BallDistribution,
    FamilyMember,
    ball_distribution,
    converge_run,
    cycle_graph,
    family_members,
    periodic_distribution,
    torus_graph,
)
from paths import locality_radius
from periodic import VoltageGraph, periodic_coefficients
from presets import PRESET_FIELDS, get_preset
from selftest import run_selftest
from series import CoefficientBound, TruncatedSeries, series_eval
from sofic import (
    AlmostHom,
    build_T,
    build_Ttilde,
    check_claim_bound,
    check_delta_guarantee,
    claim_bound,
    defects,
    good_index_fraction,
    provider_from_spec,
    sofic_graph,
    sofic_member,
)
from store import (
    complex_to_pair,
    distribution_to_dict,
    dump_csv,
    dump_json,
    fraction_to_str,
    fractions_to_strs,
    load_graph,
    load_permutation_table,
    load_provider_spec,
    parse_complex,
    parse_fraction,
    report_header,
    report_rows,
    report_to_dict,
    resolve_limit,
    resolve_voltage_graph,
    save_graph,
)
from zeta import (
    MeasureMode,
    coefficient_bound,
    coefficients,
    det_formula_eval,
    edge_matrix_eval,
    euler_characteristic,
    holomorphy_radius,
    regular_spectral_eval,
    verify_agreement,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_PARSE = 2
EXIT_DOMAIN = 3

CLI_METHODS = ("paths", "trace", "det", "euler", "spectral", "edge")
FAMILIES = ("cycle", "torus", "torus2", "sofic", "files")


# ----- Argument helpers -----


def parse_range(text: str) -> range:
    """'A..B' or 'A..B:step', both ends inclusive."""

    body, _, step_text = str(text).partition(":")
    start_text, sep, stop_text = body.partition("..")
    try:
        if not sep:
            raise ValueError(text)
        start, stop = int(start_text), int(stop_text)
        step = int(step_text) if step_text else 1
    except ValueError:
        raise GraphFormatError(f"{text!r} is not a range of the form A..B or A..B:step.") from None
    if step < 1 or stop < start:
        raise GraphFormatError(f"Range {text!r} is empty.")
    return range(start, stop + 1, step)


def _order(args: argparse.Namespace) -> int:
    order = args.order if args.order is not None else settings.default_order()
    if order < 1:
        raise GraphFormatError(f"--order must be positive, got {order}.")
    return order


def _seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else settings.default_seed()


def _eval_points(values: Optional[Sequence[str]]) -> List[complex]:
    return [parse_complex(v) for v in values or []]


def _finite(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None


def _emit(args: argparse.Namespace, payload: Any, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    text = dump_csv(header, rows) if args.out == "csv" else dump_json(payload) + "\n"
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text)


def _series_evaluation(series: TruncatedSeries, bound: CoefficientBound, u: complex) -> Tuple[complex, Optional[float]]:
    radius = holomorphy_radius(bound.degree_bound)
    if abs(u) >= radius:
        raise DomainError(f"|u| = {abs(u):.6g} is outside the disc |u| < {radius:.6g} of the zeta series.")
    evaluation = series_eval(series, u, bound)
    return evaluation.value, _finite(evaluation.tail_bound)


def _coefficient_rows(
    nbar: Sequence[Fraction],
    series: TruncatedSeries,
    evaluations: Sequence[Tuple[complex, complex, Optional[float]]],
) -> List[List[Any]]:
    rows: List[List[Any]] = []
    for j, c in enumerate(nbar, start=1):
        rows.append(["nbar", j, fraction_to_str(c), "", "", ""])
    for k, c in enumerate(series.coeffs):
        rows.append(["coefficient", k, fraction_to_str(c), "", "", ""])
    for k, (_, z, tail) in enumerate(evaluations, start=1):
        rows.append(["z", k, "", repr(z.real), repr(z.imag), "" if tail is None else repr(tail)])
    return rows


COEFFICIENT_HEADER = ["quantity", "index", "exact", "re", "im", "tail_bound"]


def _evaluations_payload(evaluations: Sequence[Tuple[complex, complex, Optional[float]]]) -> List[Dict[str, Any]]:
    return [
        {"u": complex_to_pair(u), "z": complex_to_pair(z), "tail_bound": tail}
        for u, z, tail in evaluations
    ]


# ----- Commands -----


def _evaluate_zeta(g: Graph, method: str, mode: MeasureMode, series: TruncatedSeries, u: complex) -> Tuple[complex, Optional[float]]:
    if method == "det":
        return det_formula_eval(g, u, mode), None
    if method == "spectral":
        return regular_spectral_eval(g, u, mode), None
    if method == "edge":
        return edge_matrix_eval(g, u, mode), None
    return _series_evaluation(series, coefficient_bound(g, mode), u)


def cmd_zeta(args: argparse.Namespace) -> int:
    g, _ = load_graph(args.input)
    J = _order(args)
    mode = MeasureMode(args.measure)
    points = _eval_points(args.eval)

    if args.verify:
        verify_agreement(g, J, mode)
        logger.info("All coefficient routes agree to order %d", J)

    # the spectral route only evaluates; its coefficients come from the trace route
    coeffs = coefficients(g, J, mode, "trace" if args.method == "spectral" else args.method)
    series = coeffs.series()
    evaluations = []
    for u in points:
        z, tail = _evaluate_zeta(g, args.method, mode, series, u)
        evaluations.append((u, z, tail))

    payload: Dict[str, Any] = {
        "input": str(args.input),
        "vertices": g.vertex_count,
        "edges": g.edge_count,
        "degree_bound": g.degree_bound,
        "method": args.method,
        "measure": mode.value,
        "order": J,
        "euler_characteristic": fraction_to_str(euler_characteristic(g, mode)),
        "nbar": fractions_to_strs(coeffs.nbar),
        "series": fractions_to_strs(series.coeffs),
        "evaluations": _evaluations_payload(evaluations),
        "verified": bool(args.verify),
    }
    if coeffs.pbar is not None:
        payload["pbar"] = fractions_to_strs(coeffs.pbar)
    _emit(args, payload, COEFFICIENT_HEADER, _coefficient_rows(coeffs.nbar, series, evaluations))
    return EXIT_OK


def cmd_balls(args: argparse.Namespace) -> int:
    g, _ = load_graph(args.input)
    if args.radius < 0:
        raise GraphFormatError(f"--radius must be non-negative, got {args.radius}.")
    d = ball_distribution(g, args.radius)
    rows = [
        [key.hex(), fraction_to_str(p), d.representatives[key].graph.vertex_count, d.representatives[key].graph.edge_count]
        for key, p in d.entries.items()
    ]
    _emit(args, distribution_to_dict(d), ["key", "frequency", "ball_vertices", "ball_edges"], rows)
    return EXIT_OK


def cmd_periodic(args: argparse.Namespace) -> int:
    vg = resolve_voltage_graph(args.voltage)
    J = _order(args)
    coeffs = periodic_coefficients(vg, J)
    series = coeffs.series()
    evaluations = []
    for u in _eval_points(args.eval):
        z, tail = _series_evaluation(series, vg.coefficient_bound(), u)
        evaluations.append((u, z, tail))
    payload: Dict[str, Any] = {
        "group": vg.group.to_dict(),
        "fundamental_size": vg.vertex_count,
        "mass": fraction_to_str(vg.mass()),
        "free": vg.is_free,
        "order": J,
        "nbar": fractions_to_strs(coeffs.nbar),
        "pbar": fractions_to_strs(coeffs.pbar or ()),
        "series": fractions_to_strs(series.coeffs),
        "evaluations": _evaluations_payload(evaluations),
    }
    if args.radius is not None:
        payload["distribution"] = distribution_to_dict(periodic_distribution(vg, args.radius))
    _emit(args, payload, COEFFICIENT_HEADER, _coefficient_rows(coeffs.nbar, series, evaluations))
    return EXIT_OK


def _provider(spec: Dict[str, Any], vg: VoltageGraph, r: int, seed: int, table_path: Optional[str]) -> AlmostHom:
    table = None
    if spec.get("provider") == "table":
        path = spec.get("file") or table_path
        if not path:
            raise GraphFormatError("A table provider needs a 'file' entry or --table.")
        table = load_permutation_table(path, vg.group)
    return provider_from_spec(spec, vg, r, seed=seed, table=table)


def cmd_sofic(args: argparse.Namespace) -> int:
    vg = resolve_voltage_graph(args.voltage)
    spec = load_provider_spec(args.provider)
    r = args.radius
    h = _provider(spec, vg, r, _seed(args), args.table)
    g = sofic_graph(vg, r, h)
    if args.save_graph:
        save_graph(g, args.save_graph)

    Ttilde = build_Ttilde(build_T(vg, r))
    report = defects(h, Ttilde)
    good = good_index_fraction(vg, r, h, graph=g)
    bound = claim_bound(report, len(Ttilde))
    check_claim_bound(good, bound)
    delta = check_delta_guarantee(vg, r, h, parse_fraction(args.delta), graph=g)

    summary = {
        "provenance": h.provenance,
        "degree": h.degree,
        "radius": r,
        "vertices": g.vertex_count,
        "edges": g.edge_count,
        "ttilde_size": len(Ttilde),
        "defect_i": fraction_to_str(report.defect_i),
        "defect_ii": fraction_to_str(report.defect_ii),
        "defect_iii": fraction_to_str(report.defect_iii),
        "good_index_fraction": fraction_to_str(good),
        "claim_bound": fraction_to_str(bound),
        "delta": fraction_to_str(delta.delta),
        "epsilon": fraction_to_str(delta.epsilon),
        "applicable": delta.applicable,
        "max_deviation": fraction_to_str(delta.max_deviation),
        "holds": delta.holds,
    }
    payload = {**summary, "deviations": {k: fraction_to_str(v) for k, v in delta.deviations.items()}}
    rows = [[k, str(v).lower() if isinstance(v, bool) else v] for k, v in summary.items()]
    _emit(args, payload, ["quantity", "value"], rows)
    return EXIT_OK


def _file_members(paths: Sequence[str]) -> List[FamilyMember]:
    """Graphs read from files, in the given order, each keyed by its vertex count."""

    members = []
    for path in paths:
        g, _ = load_graph(path)
        members.append(FamilyMember(n=g.vertex_count, graph=g))
    logger.debug("Family files with %d members", len(members))
    return members


def _family(args: argparse.Namespace, limit: Any, J: int) -> List[FamilyMember]:
    if args.family == "files":
        if not args.graphs:
            raise GraphFormatError("The files family needs --graphs.")
        return _file_members(args.graphs)
    sizes = parse_range(args.range)
    if args.family == "cycle":
        return family_members("cycle", sizes, cycle_graph)
    if args.family in ("torus", "torus2"):
        d = 2 if args.family == "torus2" else args.dimension
        return family_members(f"torus{d}", sizes, lambda n: torus_graph(n, d))
    if not isinstance(limit, VoltageGraph):
        raise GraphFormatError("The sofic family needs a voltage-graph limit.")
    if not args.provider:
        raise GraphFormatError("The sofic family needs --provider.")
    spec = load_provider_spec(args.provider)
    r = args.radius if args.radius is not None else locality_radius(J)
    seed = _seed(args)
    return family_members("sofic", sizes, lambda n: sofic_member(limit, r, spec, n, seed))


def cmd_converge(args: argparse.Namespace) -> int:
    if not args.family or not args.limit or (not args.range and args.family != "files"):
        raise GraphFormatError("converge needs --family, --range and --limit (directly or through --preset).")
    J = _order(args)
    limit = resolve_limit(args.limit)
    if isinstance(limit, BallDistribution):
        logger.info("Limit is a radius-%d ball distribution", limit.radius)
    members = _family(args, limit, J)
    points = _eval_points(args.eval if args.eval else args.preset_eval)
    report = converge_run(members, J, limit, points)
    if args.preset and not args.output:
        args.output = str(settings.data_dir() / f"{args.preset}.{args.out}")
    _emit(args, report_to_dict(report), report_header(report), report_rows(report))
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest(_seed(args))
    failed = [r for r in results if not r.passed]
    payload = {
        "passed": not failed,
        "checks": [
            {"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": round(r.seconds, 3)}
            for r in results
        ],
    }
    rows = [[r.name, str(r.passed).lower(), f"{r.seconds:.3f}", r.detail] for r in results]
    _emit(args, payload, ["check", "passed", "seconds", "detail"], rows)
    if failed:
        print(f"selftest failed: {failed[0].name}: {failed[0].detail}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


# ----- Parser -----


def build_parser() -> Tuple[argparse.ArgumentParser, argparse.ArgumentParser]:
    """The top-level parser and the converge subparser, which presets adjust."""

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="Only log errors.")
    common.add_argument("--log-level", help="Log level (default: IHARA_LOG_LEVEL or WARNING).")
    common.add_argument("--seed", type=int, help="Seed for random providers and families (default: IHARA_SEED).")
    common.add_argument("--order", type=int, help="Truncation order J (default: IHARA_DEFAULT_ORDER).")
    common.add_argument("--out", choices=("json", "csv"), default="json", help="Output format.")
    common.add_argument("--output", help="Write output to this file instead of stdout.")

    parser = argparse.ArgumentParser(
        description="Ihara zeta functions of finite, periodic and limit graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zeta", parents=[common], help="Coefficients and values of a finite graph's zeta function.")
    p.add_argument("--input", required=True, help="Graph file (.json or edge list).")
    p.add_argument("--method", choices=CLI_METHODS, default="trace")
    p.add_argument("--measure", choices=[m.value for m in MeasureMode], default=MeasureMode.COUNTING.value)
    p.add_argument("--eval", action="append", help="Evaluation point 're,im'; repeatable.")
    p.add_argument("--verify", action="store_true", help="Compute every route and require exact agreement.")
    p.set_defaults(handler=cmd_zeta)

    p = sub.add_parser("balls", parents=[common], help="Rooted ball distribution of a finite graph.")
    p.add_argument("--input", required=True, help="Graph file (.json or edge list).")
    p.add_argument("--radius", type=int, required=True)
    p.set_defaults(handler=cmd_balls)

    p = sub.add_parser("periodic", parents=[common], help="Zeta coefficients of a periodic graph.")
    p.add_argument("--voltage", required=True, help="Voltage-graph JSON file or built-in name (line, zd:d, free:k, honeycomb, ladder).")
    p.add_argument("--eval", action="append", help="Evaluation point 're,im'; repeatable.")
    p.add_argument("--radius", type=int, help="Also emit the periodic ball distribution at this radius.")
    p.set_defaults(handler=cmd_periodic)

    p = sub.add_parser("sofic", parents=[common], help="Glue a finite graph from an almost homomorphism and report on it.")
    p.add_argument("--voltage", required=True, help="Voltage-graph JSON file or built-in name.")
    p.add_argument("--provider", required=True, help="Provider spec as inline JSON or a JSON file.")
    p.add_argument("--table", help="Permutation table file for table providers.")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--delta", default="1/20", help="Target ball-statistics deviation (default: 1/20).")
    p.add_argument("--save-graph", help="Also write the glued graph as JSON.")
    p.set_defaults(handler=cmd_sofic)

    p = sub.add_parser("converge", parents=[common], help="Compare a graph family with a limit.")
    p.add_argument(
        "--preset",
        help=(
            "Name of an experiment preset from config/experiment_presets.json. "
            "Command-line options override preset values."
        ),
    )
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--range", help="Family sizes 'A..B' or 'A..B:step'.")
    p.add_argument("--graphs", nargs="+", help="Graph files (.json or edge list) for the files family.")
    p.add_argument("--dimension", type=int, default=2, help="Torus dimension.")
    p.add_argument("--limit", help="Built-in voltage graph name, voltage-graph JSON or ball-distribution JSON.")
    p.add_argument("--provider", help="Provider spec for the sofic family.")
    p.add_argument("--radius", type=int, help="Gluing radius for the sofic family (default: ceil(J/2) + 1).")
    p.add_argument("--eval", action="append", help="Evaluation point 're,im'; repeatable.")
    p.set_defaults(handler=cmd_converge, preset_eval=None)

    converge = p

    p = sub.add_parser("selftest", parents=[common], help="Run the identity suite at reduced sizes.")
    p.set_defaults(handler=cmd_selftest)
    return parser, converge


def _apply_preset(parser: argparse.ArgumentParser, converge: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    initial_args, _ = parser.parse_known_args(argv)
    if initial_args.command != "converge" or not initial_args.preset:
        return
    try:
        preset = get_preset(initial_args.preset)
    except KeyError:
        parser.error(f"Preset '{initial_args.preset}' not found in config/experiment_presets.json")

    preset_defaults: Dict[str, Any] = {}
    for key in PRESET_FIELDS:
        if key not in preset:
            continue
        if key == "eval":
            # kept apart so that --eval on the command line replaces rather than extends it
            values = preset["eval"]
            preset_defaults["preset_eval"] = values if isinstance(values, list) else [values]
        else:
            preset_defaults[key] = preset[key]
    converge.set_defaults(**preset_defaults)


def _configure_logging(args: argparse.Namespace) -> None:
    level = "ERROR" if args.quiet else (args.log_level or settings.log_level()).upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, converge = build_parser()
    try:
        _apply_preset(parser, converge, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    _configure_logging(args)
    try:
        return args.handler(args)
    except IdentityFailure as exc:
        print(f"identity failed: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
