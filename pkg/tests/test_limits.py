import math
from fractions import Fraction

import networkx as nx
import pytest

from errors import DomainError, GraphFormatError
from graph_core import Graph, ball
from limits import (
    ball_distribution,
    coarsen,
    converge_run,
    cycle_graph,
    distribution_distance,
    exact_log_gap,
    family_members,
    from_networkx,
    limit_coefficients,
    nj_of_class,
    periodic_distribution,
    random_bounded_graph,
    random_regular_graph,
    torus_graph,
)
from periodic import builtin_voltage_graph, lattice_voltage_graph, line_voltage_graph, periodic_coefficients


def test_cycle_has_one_ball_class(c6: Graph) -> None:
    d = ball_distribution(c6, 2)
    assert list(d.entries.values()) == [Fraction(1)]
    assert d.total() == 1


def test_path_ball_frequencies(p3: Graph) -> None:
    d = ball_distribution(p3, 1)
    assert sorted(d.entries.values()) == [Fraction(1, 3), Fraction(2, 3)]


def test_long_cycle_looks_like_the_line() -> None:
    r = 3
    cycle = ball_distribution(cycle_graph(8), r)
    line = periodic_distribution(line_voltage_graph(), r)
    assert distribution_distance(cycle, line) == 0
    short = ball_distribution(cycle_graph(6), r)
    assert distribution_distance(short, line) == 1


def test_torus_balls_match_lattice_balls() -> None:
    J = 4
    torus = ball_distribution(torus_graph(8, 2), 3)
    lattice = periodic_distribution(lattice_voltage_graph(2), 3)
    assert distribution_distance(torus, lattice) == 0
    assert limit_coefficients(torus, J).nbar == periodic_coefficients(lattice_voltage_graph(2), J).nbar


def test_honeycomb_distribution_is_weighted_by_mass() -> None:
    d = periodic_distribution(builtin_voltage_graph("honeycomb"), 4)
    assert d.total() == 1
    assert len(d.entries) == 1
    # coefficients per vertex are half the per-domain ones
    assert limit_coefficients(d, 6).nbar[5] == 6


def test_nj_needs_large_enough_ball(c6: Graph) -> None:
    with pytest.raises(DomainError):
        nj_of_class(ball(c6, 0, 1), 3)
    assert nj_of_class(ball(cycle_graph(3), 0, 3), 3) == 2


def test_limit_coefficients_need_radius(c6: Graph) -> None:
    with pytest.raises(DomainError):
        limit_coefficients(ball_distribution(c6, 2), 6)


def test_coarsen(p4: Graph) -> None:
    assert coarsen(ball_distribution(p4, 2), 1) == ball_distribution(p4, 1)
    with pytest.raises(DomainError):
        coarsen(ball_distribution(p4, 1), 2)


def test_distance_needs_equal_radii(c6: Graph) -> None:
    with pytest.raises(DomainError):
        distribution_distance(ball_distribution(c6, 1), ball_distribution(c6, 2))


def test_torus_family_converges_to_lattice() -> None:
    J = 6
    members = family_members("torus", [8, 9], lambda n: torus_graph(n, 2))
    report = converge_run(members, J, lattice_voltage_graph(2), [0.1])
    assert report.fundamental_size == 1
    assert report.sup_coefficient_deviation() == (Fraction(0),) * J
    assert report.limit_nbar[3] == 8
    assert report.sup_z_deviation()[0] <= report.limit_tail_bounds[0] + 1e-9


def test_cycle_family_deviation_and_values() -> None:
    members = family_members("cycle", [3, 8], cycle_graph)
    report = converge_run(members, 6, line_voltage_graph(), [0.3])
    small, large = report.rows
    assert small.coefficient_deviation[2] == 2
    assert large.coefficient_deviation == (Fraction(0),) * 6
    assert small.z_values[0] == pytest.approx((1 - 0.3 ** 3) ** (-2 / 3), rel=1e-9)
    assert report.limit_z[0] == pytest.approx(1.0)


def _cycle_gap(n: int, u: float) -> float:
    # Z_norm(C_n)(u) = (1 - u^n)^(-2/n)
    return -2 / n * math.log1p(-(u ** n))


def test_cycle_values_decrease_past_float_noise() -> None:
    u = 0.5
    members = family_members("cycle", range(4, 65), cycle_graph)
    report = converge_run(members, 8, line_voltage_graph(), [u])
    devs = [row.z_deviation[0] for row in report.rows]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    for row, dev in zip(report.rows, devs):
        assert dev == pytest.approx(math.expm1(_cycle_gap(row.n, u)), rel=1e-4)
    assert 0 < devs[-1] < 1e-20


def test_exact_log_gap_on_a_long_cycle() -> None:
    gap = exact_log_gap(cycle_graph(40), 0.5, 1, (Fraction(0),) * 8)
    assert gap.real == pytest.approx(_cycle_gap(40, 0.5), rel=1e-9)
    assert gap.imag == 0
    assert exact_log_gap(torus_graph(12, 2), 0.1, 1, (Fraction(0),) * 8) is None


def test_eval_point_outside_limit_disc() -> None:
    members = family_members("torus", [6], lambda n: torus_graph(n, 2))
    with pytest.raises(DomainError):
        converge_run(members, 4, lattice_voltage_graph(2), [0.5])


def test_distribution_limit_uses_unit_mass() -> None:
    limit = ball_distribution(cycle_graph(12), 4)
    report = converge_run(family_members("cycle", [10], cycle_graph), 6, limit, [])
    assert report.fundamental_size == 1
    assert report.rows[0].coefficient_deviation == (Fraction(0),) * 6


def test_generated_graphs() -> None:
    for seed in range(4):
        g = random_bounded_graph(15, 3, seed=seed)
        assert g.is_connected()
        assert max(g.degrees()) <= 3
    h = random_regular_graph(10, 3, seed=1)
    assert h.is_regular() and h.degree(0) == 3
    t = torus_graph(4, 2)
    assert t.vertex_count == 16 and t.is_regular() and t.degree(0) == 4
    with pytest.raises(GraphFormatError):
        cycle_graph(2)
    with pytest.raises(GraphFormatError):
        torus_graph(2, 2)


def test_from_networkx_relabels() -> None:
    g = from_networkx(nx.petersen_graph())
    assert g.vertex_count == 10
    assert g.edge_count == 15
    assert g.is_regular()
