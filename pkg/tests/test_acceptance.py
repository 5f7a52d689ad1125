"""End-to-end identity checks over seeded suites: 50 graphs with n <= 10, D <= 4 at J = 12."""

from fractions import Fraction
from typing import List

import numpy as np
import pytest

import zeta
from graph_core import Graph, greedy_edge_coloring, invariance_discrepancy
from limits import (
    FamilyMember,
    ball_distribution,
    converge_run,
    cycle_graph,
    random_regular_graph,
    torus_graph,
)
from paths import closed_path_profile, prime_cycle_table
from periodic import builtin_voltage_graph, lattice_voltage_graph, line_voltage_graph
from selftest import random_suite, run_selftest
from series import series_pow
from sofic import (
    build_T,
    build_Ttilde,
    check_delta_guarantee,
    defects,
    good_index_fraction,
    make_quotient_hom_Zd,
    make_random_almost_hom,
    sofic_graph,
)
from zeta import MeasureMode

COUNTING = MeasureMode.COUNTING
NORMALIZED = MeasureMode.NORMALIZED
J = 12


@pytest.fixture(scope="module")
def suite() -> List[Graph]:
    return random_suite(11, 50, max_vertices=10, max_degree=4)


def test_determinant_formula_is_exact(suite: List[Graph]) -> None:
    for g in suite:
        by_paths = zeta.coefficients_by_paths(g, J, COUNTING)
        assert zeta.det_formula_series(g, J, COUNTING) == zeta.zeta_series(by_paths.nbar)
        assert zeta.coefficients_by_edge_matrix(g, J, COUNTING).nbar == by_paths.nbar


def test_trace_route_and_tails(suite: List[Graph]) -> None:
    for g in suite:
        assert zeta.coefficients_by_trace(g, J, COUNTING).nbar == zeta.coefficients_by_paths(g, J, COUNTING).nbar
        counted = [0] * J
        for x in range(g.vertex_count):
            for j, t in enumerate(closed_path_profile(g, x, J).tailed):
                counted[j] += t
        assert zeta.tail_counts_by_recursion(g, J, COUNTING) == [Fraction(c) for c in counted]


def test_b_identities(suite: List[Graph]) -> None:
    for g in suite:
        assert zeta.b_identity_check(g, J, COUNTING).passed


def test_euler_product(suite: List[Graph]) -> None:
    for g in suite:
        coeffs = zeta.coefficients_by_paths(g, J, COUNTING)
        table = prime_cycle_table(g, J)
        assert all(j * table.count(j) == coeffs.pbar[j - 1] for j in range(1, J + 1))
        assert zeta.euler_product_series(g, J, COUNTING) == zeta.zeta_series(coeffs.nbar)


def test_regular_spectral_formula() -> None:
    rng = np.random.default_rng(5)
    radius = 1 / zeta.norm_radius(3)
    for k in range(20):
        g = random_regular_graph(50, 3, seed=k)
        for _ in range(20):
            u = complex(*rng.normal(size=2))
            u *= 0.95 * radius * rng.uniform() / abs(u)
            det = zeta.det_formula_eval(g, u, COUNTING)
            assert abs(zeta.regular_spectral_eval(g, u, COUNTING) - det) <= 1e-9 * abs(det)


def test_normalization_law(suite: List[Graph]) -> None:
    for g in suite:
        normalized = zeta.det_formula_series(g, J, NORMALIZED)
        assert series_pow(normalized, g.vertex_count) == zeta.det_formula_series(g, J, COUNTING)


def test_torus_coefficients_lock_onto_the_lattice() -> None:
    order = 8
    members = [FamilyMember(n, torus_graph(n, 2)) for n in range(4, 17)]
    report = converge_run(members, order, lattice_voltage_graph(2), [0.2])
    for row in report.rows:
        for j in range(1, order + 1):
            if row.n >= j + 2:
                assert row.coefficient_deviation[j - 1] == 0, (row.n, j)


def test_cycle_values_tend_to_one() -> None:
    members = [FamilyMember(n, cycle_graph(n)) for n in range(16, 65)]
    report = converge_run(members, 8, line_voltage_graph(), [0.5])
    devs = [row.z_deviation[0] for row in report.rows]
    assert all(d <= 1e-3 for d in devs)
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_quotient_provider_reproduces_the_torus() -> None:
    vg = lattice_voltage_graph(2)
    r, n = 2, 16
    h = make_quotient_hom_Zd(n, 2, build_Ttilde(build_T(vg, r)))
    g = sofic_graph(vg, r, h)
    assert ball_distribution(g, r).entries == ball_distribution(torus_graph(n, 2), r).entries
    report = check_delta_guarantee(vg, r, h, Fraction(1, 20), graph=g)
    assert report.max_deviation == 0
    assert report.applicable and report.holds


def test_random_provider_on_the_free_group() -> None:
    vg = builtin_voltage_graph("free:2")
    r = 1
    Ttilde = build_Ttilde(build_T(vg, r))
    h = make_random_almost_hom(2, 2000, seed=42, Ttilde=Ttilde)
    report = defects(h, Ttilde)
    assert report.defect_i == 0 and report.defect_ii == 0
    g = sofic_graph(vg, r, h)
    assert good_index_fraction(vg, r, h, graph=g) >= Fraction(9, 10)
    assert check_delta_guarantee(vg, r, h, Fraction(1, 20), graph=g).max_deviation < Fraction(1, 10)


def test_injection_counts_are_root_independent() -> None:
    for g in random_suite(13, 30, max_vertices=8, max_degree=3):
        assert invariance_discrepancy(greedy_edge_coloring(g), 3) == 0


def test_bounds(suite: List[Graph]) -> None:
    for g in suite:
        D = g.degree_bound
        for x in range(g.vertex_count):
            for j, count in enumerate(closed_path_profile(g, x, J).reduced, start=1):
                assert count <= D * (D - 1) ** (j - 1)
        zeta.check_norm_bound(g, J)
        assert zeta.euler_characteristic(g, COUNTING) == g.vertex_count - g.edge_count


def test_selftest_passes() -> None:
    results = run_selftest(42)
    assert [r.name for r in results if not r.passed] == []


def test_selftest_catches_a_broken_recursion(monkeypatch: pytest.MonkeyPatch) -> None:
    original = zeta.proper_path_matrices

    def corrupted(g, J):
        mats = original(g, J)
        if J >= 3:
            mats[3] = mats[3] + np.eye(g.vertex_count, dtype=np.int64)
        return mats

    monkeypatch.setattr(zeta, "proper_path_matrices", corrupted)
    results = run_selftest(42)
    first = next(r for r in results if not r.passed)
    assert first.name == "determinant-formula"
