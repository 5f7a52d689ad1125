import cmath
from fractions import Fraction
from typing import List

import numpy as np
import pytest

from errors import DomainError, IdentityFailure
from graph_core import Graph
from limits import random_regular_graph
from paths import closed_path_profile
from series import make_series, series_pow
from zeta import (
    METHODS,
    MeasureMode,
    b_identity_check,
    bass_log_eval,
    check_norm_bound,
    check_spectrum,
    coefficients,
    coefficients_by_paths,
    coefficients_by_trace,
    coefficients_from_series,
    det_formula_eval,
    det_formula_series,
    edge_matrix,
    edge_matrix_eval,
    edge_matrix_log_eval,
    euler_characteristic,
    euler_product_series,
    holomorphy_radius,
    mobius,
    norm_radius,
    normalized_log_zeta,
    primitive_from_reduced,
    proper_path_matrices,
    regular_spectral_eval,
    tail_counts_by_recursion,
    verify_agreement,
    zeta_series,
)

COUNTING = MeasureMode.COUNTING
NORMALIZED = MeasureMode.NORMALIZED

TRIANGLE_SERIES = make_series([1, 0, 0, 2, 0, 0, 3, 0], 7)


def test_triangle_zeta_by_every_route(c3: Graph) -> None:
    for method in METHODS:
        assert coefficients(c3, 7, COUNTING, method).series() == TRIANGLE_SERIES, method
    assert det_formula_series(c3, 7, COUNTING) == TRIANGLE_SERIES


def test_pendant_vertex_does_not_change_zeta(triangle_pendant: Graph) -> None:
    assert det_formula_series(triangle_pendant, 7, COUNTING) == TRIANGLE_SERIES
    assert coefficients_by_trace(triangle_pendant, 7, COUNTING).series() == TRIANGLE_SERIES


def test_trees_have_trivial_zeta(p4: Graph) -> None:
    assert det_formula_series(p4, 8, COUNTING) == make_series([1], 8)
    assert coefficients_by_trace(p4, 8, COUNTING).nbar == (Fraction(0),) * 8


def test_complete_graph_coefficients(k4: Graph) -> None:
    nbar = coefficients_by_trace(k4, 4, COUNTING).nbar
    assert nbar[:4] == (0, 0, 24, 24)
    assert euler_characteristic(k4, COUNTING) == -2


def test_proper_path_matrices_count_non_backtracking_paths(k4: Graph) -> None:
    mats = proper_path_matrices(k4, 3)
    assert (mats[0] == np.eye(4, dtype=np.int64)).all()
    # from p, three first steps then two non-backtracking choices each
    assert mats[2].sum(axis=1).tolist() == [6, 6, 6, 6]
    assert mats[2][0, 0] == 0
    assert mats[3][0, 0] == 6


def test_tail_recursion_matches_brute_force(random_graphs: List[Graph], triangle_pendant: Graph) -> None:
    J = 9
    for g in random_graphs + [triangle_pendant]:
        tails = tail_counts_by_recursion(g, J, COUNTING)
        brute = [0] * J
        for x in range(g.vertex_count):
            for j, t in enumerate(closed_path_profile(g, x, J).tailed):
                brute[j] += t
        assert tails == [Fraction(t) for t in brute]


def test_trace_route_equals_path_counting(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        for mode in MeasureMode:
            assert coefficients_by_trace(g, 9, mode).nbar == coefficients_by_paths(g, 9, mode).nbar


def test_determinant_series_equals_path_series(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        nbar = coefficients_by_paths(g, 9, COUNTING).nbar
        assert det_formula_series(g, 9, COUNTING) == zeta_series(nbar)


def test_b_identities_hold(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        report = b_identity_check(g, 9, COUNTING)
        assert report.passed
        assert report.failures() == []


def test_b_identity_detects_wrong_reference(c3: Graph) -> None:
    wrong = [Fraction(0), Fraction(0), Fraction(5), Fraction(0)]
    report = b_identity_check(c3, 4, COUNTING, wrong)
    assert not report.passed
    assert [row.j for row in report.failures()] == [3]


def test_normalization_law(random_graphs: List[Graph]) -> None:
    for g in random_graphs[:4]:
        counting = det_formula_series(g, 8, COUNTING)
        normalized = det_formula_series(g, 8, NORMALIZED)
        assert series_pow(normalized, g.vertex_count) == counting


def test_euler_product_and_divisor_identity(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        coeffs = coefficients_by_paths(g, 8, COUNTING)
        assert euler_product_series(g, 8, COUNTING) == zeta_series(coeffs.nbar)
        assert primitive_from_reduced(coeffs.nbar) == coeffs.pbar


def test_mobius() -> None:
    assert [mobius(n) for n in (1, 2, 3, 4, 6, 8, 12, 30)] == [1, -1, -1, 0, 1, 0, 0, -1]


def test_series_coefficient_round_trip(c4: Graph) -> None:
    nbar = coefficients_by_trace(c4, 8, NORMALIZED).nbar
    assert coefficients_from_series(zeta_series(nbar)) == nbar


def test_verify_agreement(random_graphs: List[Graph]) -> None:
    for g in random_graphs[:3]:
        assert verify_agreement(g, 8, COUNTING).order == 8


def test_verify_agreement_names_the_broken_route(monkeypatch: pytest.MonkeyPatch, c4: Graph) -> None:
    import zeta

    original = zeta.coefficients_by_edge_matrix

    def skewed(g, J, mode):
        coeffs = original(g, J, mode)
        return zeta.ZetaCoefficients(mode, coeffs.nbar[:-1] + (coeffs.nbar[-1] + 1,))

    monkeypatch.setattr(zeta, "coefficients_by_edge_matrix", skewed)
    with pytest.raises(IdentityFailure) as info:
        verify_agreement(c4, 6, COUNTING)
    assert info.value.identity == "edge-route"


def test_radii() -> None:
    assert norm_radius(2) == pytest.approx(1 + 3 ** 0.5)
    assert holomorphy_radius(3) == 0.5
    assert holomorphy_radius(1) == float("inf")


def test_norm_bound(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        check_norm_bound(g, 8)


def test_det_eval_triangle(c3: Graph) -> None:
    u = 0.1 + 0.05j
    expected = (1 - u ** 3) ** -2
    assert det_formula_eval(c3, u, COUNTING) == pytest.approx(expected, rel=1e-12)
    assert det_formula_eval(c3, u, NORMALIZED) == pytest.approx(expected ** (1 / 3), rel=1e-12)


def test_det_eval_outside_disc(k4: Graph) -> None:
    with pytest.raises(DomainError):
        det_formula_eval(k4, 0.5, COUNTING)


def test_regular_spectral_formula_matches_determinant() -> None:
    rng = np.random.default_rng(5)
    for k in range(3):
        g = random_regular_graph(12 + 2 * k, 3, seed=k)
        for _ in range(4):
            u = complex(*rng.uniform(-0.15, 0.15, size=2))
            det = det_formula_eval(g, u, COUNTING)
            assert abs(regular_spectral_eval(g, u, COUNTING) - det) <= 1e-9 * abs(det)


def test_spectrum_containment(k4: Graph) -> None:
    eig = check_spectrum(k4)
    assert sorted(np.round(eig, 9).tolist()) == [-1.0, -1.0, -1.0, 3.0]


def test_spectral_formula_needs_regular_graph(triangle_pendant: Graph) -> None:
    with pytest.raises(DomainError):
        regular_spectral_eval(triangle_pendant, 0.1, COUNTING)


def test_edge_matrix_shape_and_traces(c4: Graph) -> None:
    B, darts = edge_matrix(c4)
    assert B.shape == (8, 8)
    assert len(darts) == 8
    assert coefficients(c4, 8, COUNTING, "edge").nbar[3] == 8


def test_edge_eval_on_full_disc(c3: Graph) -> None:
    u = 0.9
    assert edge_matrix_eval(c3, u, COUNTING) == pytest.approx((1 - u ** 3) ** -2, rel=1e-9)
    with pytest.raises(DomainError):
        edge_matrix_eval(c3, 1.0, COUNTING)


def test_bass_route_matches_edge_route(random_graphs: List[Graph]) -> None:
    for g in random_graphs:
        u = 0.3 / max(g.degree_bound - 1, 1) * (1 + 0.5j)
        bass = cmath.exp(bass_log_eval(g, u, NORMALIZED))
        edge = cmath.exp(edge_matrix_log_eval(g, u, NORMALIZED))
        assert bass == pytest.approx(edge, rel=1e-7)


def test_normalized_log_zeta_picks_a_valid_route() -> None:
    g = random_regular_graph(10, 3, seed=2)
    for u in (0.1, 0.45):
        value = cmath.exp(g.vertex_count * normalized_log_zeta(g, u))
        assert value == pytest.approx(edge_matrix_eval(g, u, COUNTING), rel=1e-8)
