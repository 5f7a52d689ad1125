"""
Ball statistics of finite graphs and the convergence runner.

A BallDistribution is the empirical law of rooted r-ball classes; limit
zeta coefficients are frequency-weighted root path counts.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

import settings
from errors import DomainError, GraphFormatError
from graph_core import BallClassKey, Graph, RootedBall, ball, build_graph, canonical_key
from paths import closed_path_profile, locality_radius
from periodic import VoltageGraph, periodic_coefficients, unfold
from series import CoefficientBound, exponent_tail, series_eval
from zeta import (
    MeasureMode,
    ZetaCoefficients,
    coefficient_bound,
    coefficients_by_edge_matrix,
    coefficients_by_trace,
    normalized_log_zeta,
    zeta_series,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BallDistribution:
    radius: int
    entries: Dict[BallClassKey, Fraction]
    # one representative ball per key, for evaluating root statistics
    representatives: Dict[BallClassKey, RootedBall] = field(compare=False)
    degree_bound: int

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def frequency(self, key: BallClassKey) -> Fraction:
        return self.entries.get(key, Fraction(0))


def _distribution_from_balls(
    radius: int,
    weighted_balls: Iterable[Tuple[RootedBall, Fraction]],
    degree_bound: int,
) -> BallDistribution:
    entries: Dict[BallClassKey, Fraction] = {}
    representatives: Dict[BallClassKey, RootedBall] = {}
    for b, weight in weighted_balls:
        key = canonical_key(b)
        entries[key] = entries.get(key, Fraction(0)) + weight
        representatives.setdefault(key, b)
    ordered = dict(sorted(entries.items()))
    return BallDistribution(
        radius=radius,
        entries=ordered,
        representatives={k: representatives[k] for k in ordered},
        degree_bound=degree_bound,
    )


def ball_distribution(g: Graph, r: int) -> BallDistribution:
    """p(alpha) = |{v : B_r(v) is in class alpha}| / |V|, exactly."""

    w = Fraction(1, g.vertex_count)
    return _distribution_from_balls(
        r,
        ((ball(g, v, r), w) for v in range(g.vertex_count)),
        g.degree_bound,
    )


def periodic_distribution(vg: VoltageGraph, r: int) -> BallDistribution:
    """Law of B_r(f) for f in the fundamental domain, weighted by 1 / |stabilizer of f|."""

    mass = vg.mass()
    return _distribution_from_balls(
        r,
        ((unfold(vg, f, r).ball, Fraction(1, vg.stabilizers[f]) / mass) for f in range(vg.vertex_count)),
        vg.degree_bound,
    )


def nj_of_class(b: RootedBall, j: int) -> int:
    """Reduced closed paths of length j at the root; needs radius >= ceil(j/2) + 1."""

    need = locality_radius(j)
    if b.radius < need:
        raise DomainError(f"Counting paths of length {j} needs a ball of radius >= {need}, got {b.radius}.")
    return closed_path_profile(b.graph, b.root, j).reduced[j - 1]


def limit_coefficients(d: BallDistribution, J: int) -> ZetaCoefficients:
    need = locality_radius(J)
    if d.radius < need:
        raise DomainError(f"Order {J} needs a distribution of radius >= {need}, got {d.radius}.")
    nbar = [Fraction(0)] * J
    pbar = [Fraction(0)] * J
    for key, p in d.entries.items():
        rep = d.representatives[key]
        profile = closed_path_profile(rep.graph, rep.root, J)
        for j in range(J):
            nbar[j] += p * profile.reduced[j]
            pbar[j] += p * profile.primitive[j]
    return ZetaCoefficients(mode=MeasureMode.NORMALIZED, nbar=tuple(nbar), pbar=tuple(pbar))


def distribution_distance(p: BallDistribution, q: BallDistribution) -> Fraction:
    """Total variation distance over the union of classes."""

    if p.radius != q.radius:
        raise DomainError(f"Distributions have different radii {p.radius} and {q.radius}.")
    keys = set(p.entries) | set(q.entries)
    return sum((abs(p.frequency(k) - q.frequency(k)) for k in keys), Fraction(0)) / 2


def _shrink(b: RootedBall, r: int) -> RootedBall:
    return ball(b.graph, b.root, r)


def coarsen(d: BallDistribution, r: int) -> BallDistribution:
    """Distribution at a smaller radius, read off the representatives."""

    if r > d.radius:
        raise DomainError(f"Cannot refine radius {d.radius} to {r}.")
    return _distribution_from_balls(
        r,
        ((_shrink(d.representatives[k], r), p) for k, p in d.entries.items()),
        d.degree_bound,
    )


# ----- Families -----


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphFormatError(f"A simple cycle needs at least 3 vertices, got {n}.")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def torus_graph(n: int, d: int) -> Graph:
    """The d-dimensional discrete torus of side n, vertices in row-major order."""

    if n < 3:
        raise GraphFormatError(f"A simple torus needs side >= 3, got {n}.")
    shape = (n,) * d
    edges = []
    for coords in product(range(n), repeat=d):
        v = int(np.ravel_multi_index(coords, shape))
        for axis in range(d):
            shifted = list(coords)
            shifted[axis] = (shifted[axis] + 1) % n
            edges.append((v, int(np.ravel_multi_index(tuple(shifted), shape))))
    return build_graph(n ** d, edges)


def random_bounded_graph(n: int, max_degree: int, seed: int, extra_edges: Optional[int] = None) -> Graph:
    """Connected random graph with maximum degree <= max_degree.

    A random spanning tree respecting the bound is grown first, then up to
    `extra_edges` further edges (default n // 2) are tried at random.
    """

    if max_degree < 2 and n > 2:
        raise GraphFormatError("A connected graph on more than two vertices needs max_degree >= 2.")
    rng = np.random.default_rng(seed)
    degree = [0] * n
    edges = set()
    order = [int(v) for v in rng.permutation(n)]
    for i in range(1, n):
        v = order[i]
        candidates = [u for u in order[:i] if degree[u] < max_degree]
        u = candidates[int(rng.integers(len(candidates)))]
        edges.add((min(u, v), max(u, v)))
        degree[u] += 1
        degree[v] += 1
    tries = n // 2 if extra_edges is None else extra_edges
    for _ in range(tries):
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        e = (min(u, v), max(u, v))
        if e in edges or degree[u] >= max_degree or degree[v] >= max_degree:
            continue
        edges.add(e)
        degree[u] += 1
        degree[v] += 1
    return build_graph(n, sorted(edges))


def random_regular_graph(n: int, k: int, seed: int) -> Graph:
    h = nx.random_regular_graph(k, n, seed=seed)
    return build_graph(n, [(int(u), int(v)) for u, v in h.edges()])


def from_networkx(h: nx.Graph) -> Graph:
    index = {v: i for i, v in enumerate(sorted(h.nodes()))}
    return build_graph(len(index), [(index[u], index[v]) for u, v in h.edges()])


# ----- Convergence runner -----


Limit = Union[VoltageGraph, BallDistribution]


@dataclass(frozen=True)
class FamilyMember:
    n: int
    graph: Graph


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    vertex_count: int
    nbar: Tuple[Fraction, ...]
    z_values: Tuple[complex, ...]
    coefficient_deviation: Tuple[Fraction, ...]
    z_deviation: Tuple[float, ...]


@dataclass(frozen=True)
class ConvergenceReport:
    order: int
    eval_points: Tuple[complex, ...]
    # nbar of the limit per fundamental domain (|F| = 1 for ball distributions)
    limit_nbar: Tuple[Fraction, ...]
    limit_z: Tuple[complex, ...]
    limit_tail_bounds: Tuple[float, ...]
    fundamental_size: int
    rows: Tuple[ConvergenceRow, ...]

    def sup_coefficient_deviation(self) -> Tuple[Fraction, ...]:
        return tuple(
            max((row.coefficient_deviation[j] for row in self.rows), default=Fraction(0))
            for j in range(self.order)
        )

    def sup_z_deviation(self) -> Tuple[float, ...]:
        return tuple(max((row.z_deviation[k] for row in self.rows), default=0.0) for k in range(len(self.eval_points)))


def _limit_data(limit: Limit, J: int) -> Tuple[Tuple[Fraction, ...], CoefficientBound, int]:
    if isinstance(limit, VoltageGraph):
        coeffs = periodic_coefficients(limit, J)
        return coeffs.nbar, limit.coefficient_bound(), limit.vertex_count
    coeffs = limit_coefficients(limit, J)
    return coeffs.nbar, CoefficientBound(limit.degree_bound, 1.0), 1


def _check_points(points: Sequence[complex], D: int, what: str) -> None:
    if D <= 1:
        return
    for u in points:
        if abs(u) * (D - 1) >= 1:
            raise DomainError(
                f"Evaluation point {u} lies outside |u| < {1 / (D - 1):.6g} required by {what}."
            )


REFINE_RELATIVE = 1e-6
REFINE_MAX_ORDER = 256
REFINE_MAX_DARTS = 512


def exact_log_gap(g: Graph, u: complex, size: int, limit_nbar: Sequence[Fraction]) -> Optional[complex]:
    """size * log Z_norm(g)(u) - sum_{j <= J} limit_nbar_j u^j / j from exact coefficient differences.

    Coefficients come from integer traces of B^j. The order doubles until the
    exponent tail past it is below REFINE_RELATIVE of the gap, or reaches the
    largest order whose traces fit int64. None when g has too many darts.
    """

    J = len(limit_nbar)
    D = g.degree_bound
    if 2 * g.edge_count > REFINE_MAX_DARTS:
        return None
    max_order = REFINE_MAX_ORDER
    if D > 2:
        # entries of B^j are at most (D-1)^(j-1)
        max_order = min(max_order, int(62 / math.log2(D - 1)))
    if max_order < J:
        return None
    bound = coefficient_bound(g, MeasureMode.NORMALIZED)
    K = J
    while True:
        K = min(max(2 * K, 1), max_order)
        nbar = coefficients_by_edge_matrix(g, K, MeasureMode.NORMALIZED).nbar
        gap = 0j
        for j in range(1, K + 1):
            d = size * nbar[j - 1] - (limit_nbar[j - 1] if j <= J else 0)
            if d:
                gap += float(d) * u ** j / j
        tail = size * exponent_tail(bound, K, abs(u))
        if tail <= REFINE_RELATIVE * abs(gap):
            return gap
        if K >= max_order:
            logger.debug("Exponent gap %s at order %d still carries tail %.3g", gap, K, tail)
            return gap


def converge_run(
    family: Iterable[FamilyMember],
    J: int,
    limit: Limit,
    eval_points: Sequence[complex],
) -> ConvergenceReport:
    """Compare normalized coefficients and zeta values of each member with the limit.

    For a voltage-graph limit the member side is scaled to one fundamental
    domain: nbar_j * |F| and Z_norm^|F|. A member whose spectral value lies
    within the float tolerance of the limit is re-evaluated from exact
    coefficient differences, since the spectral logarithms cancel to noise there.
    """

    points = tuple(complex(u) for u in eval_points)
    limit_nbar, bound, size = _limit_data(limit, J)
    _check_points(points, bound.degree_bound, "the limit")
    limit_series = zeta_series(limit_nbar)
    limit_evals = [series_eval(limit_series, u, bound) for u in points]
    limit_logs = [sum(float(c) * u ** j / j for j, c in enumerate(limit_nbar, start=1)) for u in points]
    floor = settings.float_tolerance()

    rows = []
    for member in family:
        g = member.graph
        _check_points(points, g.degree_bound, f"member n = {member.n}")
        nbar = coefficients_by_trace(g, J, MeasureMode.NORMALIZED).nbar
        scaled = tuple(c * size for c in nbar)
        z_values: List[complex] = []
        z_deviation: List[float] = []
        for u, ev, limit_log in zip(points, limit_evals, limit_logs):
            z = complex(cmath.exp(size * normalized_log_zeta(g, u)))
            deviation = abs(z - ev.value)
            if deviation <= floor * max(1.0, abs(ev.value)):
                gap = exact_log_gap(g, u, size, limit_nbar)
                if gap is not None:
                    z_ref = cmath.exp(limit_log)
                    z = z_ref * cmath.exp(gap)
                    deviation = abs(z_ref * complex(np.expm1(gap)) + (z_ref - ev.value))
            z_values.append(z)
            z_deviation.append(deviation)
        rows.append(
            ConvergenceRow(
                n=member.n,
                vertex_count=g.vertex_count,
                nbar=nbar,
                z_values=tuple(z_values),
                coefficient_deviation=tuple(abs(a - b) for a, b in zip(scaled, limit_nbar)),
                z_deviation=tuple(z_deviation),
            )
        )
        logger.info("Member n = %d with %d vertices done", member.n, g.vertex_count)

    return ConvergenceReport(
        order=J,
        eval_points=points,
        limit_nbar=limit_nbar,
        limit_z=tuple(ev.value for ev in limit_evals),
        limit_tail_bounds=tuple(ev.tail_bound for ev in limit_evals),
        fundamental_size=size,
        rows=tuple(rows),
    )


def family_members(kind: str, sizes: Iterable[int], build: Callable[[int], Graph]) -> List[FamilyMember]:
    members = [FamilyMember(n=n, graph=build(n)) for n in sizes]
    logger.debug("Family %s with %d members", kind, len(members))
    return members
