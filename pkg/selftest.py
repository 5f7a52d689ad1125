"""
The identity suite run by `cli.py selftest`, at sizes that finish in well
under two minutes. Each check raises IdentityFailure naming what broke.
"""

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Sequence, Tuple

import numpy as np

import settings
from errors import IdentityFailure
from graph_core import Graph, greedy_edge_coloring, invariance_discrepancy
from limits import (
    FamilyMember,
    ball_distribution,
    converge_run,
    cycle_graph,
    random_bounded_graph,
    random_regular_graph,
    torus_graph,
)
from paths import closed_path_profile, prime_cycle_table
from periodic import lattice_voltage_graph, line_voltage_graph
from series import series_pow
from sofic import build_T, build_Ttilde, check_delta_guarantee, make_quotient_hom_Zd, sofic_graph
from zeta import (
    MeasureMode,
    b_identity_check,
    check_norm_bound,
    coefficients_by_paths,
    coefficients_by_trace,
    det_formula_eval,
    det_formula_series,
    euler_characteristic,
    euler_product_series,
    norm_radius,
    regular_spectral_eval,
    tail_counts_by_recursion,
    zeta_series,
)

logger = logging.getLogger(__name__)

COUNTING = MeasureMode.COUNTING
NORMALIZED = MeasureMode.NORMALIZED


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_suite(seed: int, count: int, max_vertices: int = 8, max_degree: int = 4) -> List[Graph]:
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        n = int(rng.integers(3, max_vertices + 1))
        D = int(rng.integers(2, max_degree + 1))
        graphs.append(random_bounded_graph(n, D, int(rng.integers(2 ** 31))))
    return graphs


def _fail(name: str, detail: str) -> None:
    raise IdentityFailure(name, detail)


def check_determinant_formula(graphs: Sequence[Graph], J: int) -> None:
    for idx, g in enumerate(graphs):
        by_paths = coefficients_by_paths(g, J, COUNTING)
        if coefficients_by_trace(g, J, COUNTING).nbar != by_paths.nbar:
            _fail("determinant-formula", f"graph {idx}: trace route differs from path counting")
        tails = tail_counts_by_recursion(g, J, COUNTING)
        counted = [0] * J
        for x in range(g.vertex_count):
            for j, t in enumerate(closed_path_profile(g, x, J).tailed):
                counted[j] += t
        if [Fraction(c) for c in counted] != tails:
            _fail("determinant-formula", f"graph {idx}: tail recursion differs from tailed path counts")
        if det_formula_series(g, J, COUNTING) != zeta_series(by_paths.nbar):
            _fail("determinant-formula", f"graph {idx}: determinant series differs from path series")
        if not b_identity_check(g, J, COUNTING, by_paths.nbar).passed:
            _fail("determinant-formula", f"graph {idx}: B_j identity fails")


def check_euler_product(graphs: Sequence[Graph], J: int) -> None:
    for idx, g in enumerate(graphs):
        coeffs = coefficients_by_paths(g, J, COUNTING)
        table = prime_cycle_table(g, J)
        for j in range(1, J + 1):
            if j * table.count(j) != coeffs.pbar[j - 1]:
                _fail("euler-product", f"graph {idx}: {table.count(j)} prime cycles of length {j}")
        if euler_product_series(g, J, COUNTING) != zeta_series(coeffs.nbar):
            _fail("euler-product", f"graph {idx}: product differs from exponential form")


def check_normalization_law(graphs: Sequence[Graph], J: int) -> None:
    for idx, g in enumerate(graphs):
        counting = det_formula_series(g, J, COUNTING)
        normalized = det_formula_series(g, J, NORMALIZED)
        if series_pow(normalized, g.vertex_count) != counting:
            _fail("normalization-law", f"graph {idx}: normalized series to the power |V| differs")


def check_regular_spectral(seed: int, count: int, points: int) -> None:
    rng = np.random.default_rng(seed)
    tol = settings.float_tolerance()
    for idx in range(count):
        n = 2 * int(rng.integers(3, 11))
        g = random_regular_graph(n, 3, int(rng.integers(2 ** 31)))
        radius = 1 / norm_radius(3)
        for _ in range(points):
            u = complex(*rng.uniform(-1, 1, size=2))
            u *= 0.95 * radius * rng.uniform() / max(abs(u), 1e-12)
            spectral = regular_spectral_eval(g, u, COUNTING)
            det = det_formula_eval(g, u, COUNTING)
            if abs(spectral - det) > tol * abs(det):
                _fail("regular-spectral", f"graph {idx} at u = {u}: {spectral} vs {det}")


def check_convergence() -> None:
    J = 6
    torus = [FamilyMember(n, torus_graph(n, 2)) for n in range(4, 10)]
    report = converge_run(torus, J, lattice_voltage_graph(2), [0.1])
    for row in report.rows:
        for j in range(1, J + 1):
            if row.n >= j + 2 and row.coefficient_deviation[j - 1] != 0:
                _fail("convergence", f"torus side {row.n}: coefficient {j} deviates")
    cycles = [FamilyMember(n, cycle_graph(n)) for n in range(8, 25, 4)]
    report = converge_run(cycles, 8, line_voltage_graph(), [0.5])
    devs = [row.z_deviation[0] for row in report.rows]
    if any(b >= a for a, b in zip(devs, devs[1:])):
        _fail("convergence", f"cycle deviations are not decreasing: {devs}")


def check_sofic() -> None:
    vg = lattice_voltage_graph(2)
    r, n = 2, 8
    h = make_quotient_hom_Zd(n, 2, build_Ttilde(build_T(vg, r)))
    g = sofic_graph(vg, r, h)
    if ball_distribution(g, r).entries != ball_distribution(torus_graph(n, 2), r).entries:
        _fail("sofic", "quotient construction does not reproduce the torus")
    report = check_delta_guarantee(vg, r, h, Fraction(1, 20), graph=g)
    if report.max_deviation != 0:
        _fail("sofic", f"ball statistics deviate by {report.max_deviation}")


def check_invariance(graphs: Sequence[Graph], r: int) -> None:
    for idx, g in enumerate(graphs):
        spread = invariance_discrepancy(greedy_edge_coloring(g), r)
        if spread:
            _fail("invariance", f"graph {idx}: injection counts differ by {spread}")


def check_bounds(graphs: Sequence[Graph], J: int) -> None:
    for idx, g in enumerate(graphs):
        D = g.degree_bound
        for x in range(g.vertex_count):
            for j, count in enumerate(closed_path_profile(g, x, J).reduced, start=1):
                if count > D * (D - 1) ** (j - 1):
                    _fail("bounds", f"graph {idx}: N_{j}({x}) = {count} exceeds the geometric bound")
        check_norm_bound(g, J)
        if euler_characteristic(g, COUNTING) != g.vertex_count - g.edge_count:
            _fail("bounds", f"graph {idx}: Euler characteristic is not |V| - |E|")


def suite(seed: int) -> List[Tuple[str, Callable[[], None]]]:
    graphs = random_suite(seed, 12)
    J = 10
    return [
        ("determinant-formula", lambda: check_determinant_formula(graphs, J)),
        ("euler-product", lambda: check_euler_product(graphs, J)),
        ("normalization-law", lambda: check_normalization_law(graphs[:6], J)),
        ("regular-spectral", lambda: check_regular_spectral(seed, 5, 5)),
        ("convergence", check_convergence),
        ("sofic", check_sofic),
        ("invariance", lambda: check_invariance(graphs[:6], 2)),
        ("bounds", lambda: check_bounds(graphs, J)),
    ]


def run_selftest(seed: int) -> List[CheckResult]:
    results = []
    for name, check in suite(seed):
        start = time.perf_counter()
        try:
            check()
        except IdentityFailure as exc:
            results.append(CheckResult(exc.identity, False, exc.detail, time.perf_counter() - start))
            logger.error("%s failed: %s", exc.identity, exc.detail)
            continue
        except Exception as exc:  # a crash inside a check counts as that check failing
            results.append(CheckResult(name, False, repr(exc), time.perf_counter() - start))
            logger.error("%s crashed: %r", name, exc)
            continue
        elapsed = time.perf_counter() - start
        results.append(CheckResult(name, True, "", elapsed))
        logger.info("%s passed in %.2fs", name, elapsed)
    return results
