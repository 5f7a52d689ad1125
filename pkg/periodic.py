"""
Periodic graphs as voltage graphs: a finite quotient with group-labeled
darts whose covering graph is the periodic graph.

Group carriers: integer lattices Z^d and free groups of finite rank.
"""

import logging
import string
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple, Union

from errors import GraphFormatError
from graph_core import Graph, RootedBall, build_graph
from paths import closed_path_profile, locality_radius
from series import CoefficientBound, TruncatedSeries
from zeta import MeasureMode, ZetaCoefficients, zeta_series

logger = logging.getLogger(__name__)


# ----- Group carriers -----


@dataclass(frozen=True, order=True)
class ZdElement:
    coords: Tuple[int, ...]

    def __mul__(self, other: "ZdElement") -> "ZdElement":
        return ZdElement(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def inverse(self) -> "ZdElement":
        return ZdElement(tuple(-a for a in self.coords))


def _reduce(letters: Iterable[int]) -> Tuple[int, ...]:
    out: List[int] = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


@dataclass(frozen=True, order=True)
class FreeWord:
    # +k is generator k (1-based), -k its inverse; always freely reduced
    letters: Tuple[int, ...]

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(_reduce(self.letters + other.letters))

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(-a for a in reversed(self.letters)))


GroupElement = Union[ZdElement, FreeWord]


class GroupCarrier(Protocol):
    """What a voltage graph needs from its group."""

    kind: str

    def identity(self) -> GroupElement: ...

    def parse(self, label: object) -> GroupElement: ...

    def format(self, element: GroupElement) -> object: ...

    def to_dict(self) -> Dict[str, object]: ...


@dataclass(frozen=True)
class ZdGroup:
    d: int
    kind: str = "Zd"

    def identity(self) -> ZdElement:
        return ZdElement((0,) * self.d)

    def basis(self, i: int) -> ZdElement:
        return ZdElement(tuple(1 if k == i else 0 for k in range(self.d)))

    def parse(self, label: object) -> ZdElement:
        if isinstance(label, str):
            label = [p for p in label.replace(" ", "").split(",") if p]
        if isinstance(label, int):
            label = [label]
        try:
            coords = tuple(int(c) for c in label)  # type: ignore[union-attr]
        except (TypeError, ValueError) as exc:
            raise GraphFormatError(f"Label {label!r} is not a Z^{self.d} vector.") from exc
        if len(coords) != self.d:
            raise GraphFormatError(f"Label {label!r} has {len(coords)} coordinates, expected {self.d}.")
        return ZdElement(coords)

    def format(self, element: ZdElement) -> List[int]:
        return list(element.coords)

    def to_dict(self) -> Dict[str, object]:
        return {"type": "Zd", "d": self.d}


@dataclass(frozen=True)
class FreeGroup:
    rank: int
    kind: str = "free"

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= 26:
            raise GraphFormatError(f"Free group rank must be in 1..26, got {self.rank}.")

    def identity(self) -> FreeWord:
        return FreeWord(())

    def generator(self, k: int) -> FreeWord:
        return FreeWord((k,))

    def parse(self, label: object) -> FreeWord:
        if not isinstance(label, str):
            raise GraphFormatError(f"Free-group label {label!r} must be a word string.")
        if label in ("", "e"):
            return self.identity()
        letters = []
        for ch in label:
            if ch in string.ascii_lowercase:
                k = ord(ch) - ord("a") + 1
            elif ch in string.ascii_uppercase:
                k = -(ord(ch) - ord("A") + 1)
            else:
                raise GraphFormatError(f"Unexpected letter {ch!r} in word {label!r}.")
            if abs(k) > self.rank:
                raise GraphFormatError(f"Letter {ch!r} exceeds rank {self.rank}.")
            letters.append(k)
        return FreeWord(_reduce(letters))

    def format(self, element: FreeWord) -> str:
        if not element.letters:
            return "e"
        return "".join(
            chr(ord("a") + a - 1) if a > 0 else chr(ord("A") - a - 1) for a in element.letters
        )

    def to_dict(self) -> Dict[str, object]:
        return {"type": "free", "rank": self.rank}


def group_from_dict(data: Dict[str, object]) -> GroupCarrier:
    kind = data.get("type")
    try:
        if kind == "Zd":
            return ZdGroup(int(data["d"]))  # type: ignore[arg-type]
        if kind == "free":
            return FreeGroup(int(data["rank"]))  # type: ignore[arg-type]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"Malformed group description {data!r}.") from exc
    raise GraphFormatError(f"Unknown group type {kind!r}; expected 'Zd' or 'free'.")


# ----- Voltage graphs -----


Dart = Tuple[int, int, GroupElement]


@dataclass(frozen=True)
class VoltageGraph:
    group: GroupCarrier
    vertex_count: int
    # symmetric: (f, g, l) present iff (g, f, l^-1) present
    darts: Tuple[Dart, ...]
    stabilizers: Tuple[int, ...]
    degree_bound: int

    def darts_at(self, f: int) -> Tuple[Dart, ...]:
        return tuple(d for d in self.darts if d[0] == f)

    @property
    def is_free(self) -> bool:
        return all(s == 1 for s in self.stabilizers)

    def mass(self) -> Fraction:
        """Sum over the fundamental domain of 1 / |stabilizer|."""
        return sum((Fraction(1, s) for s in self.stabilizers), Fraction(0))

    def coefficient_bound(self) -> CoefficientBound:
        return CoefficientBound(self.degree_bound, float(self.mass()))


def build_voltage_graph(
    group: GroupCarrier,
    vertex_count: int,
    edges: Iterable[Tuple[int, int, GroupElement]],
    stabilizers: Optional[Sequence[int]] = None,
    degree_bound: Optional[int] = None,
) -> VoltageGraph:
    """Validate labeled edges and close them under reversal.

    An edge and its reverse may both be listed; listing the same dart twice is a
    multi-edge in the cover and is rejected, as are cover loops (f, f, identity).
    """

    if not isinstance(vertex_count, int) or vertex_count <= 0:
        raise GraphFormatError(f"A voltage graph needs at least one vertex, got {vertex_count!r}.")
    identity = group.identity()
    given: List[Dart] = []
    for edge in edges:
        f, g, label = int(edge[0]), int(edge[1]), edge[2]
        for v in (f, g):
            if v < 0 or v >= vertex_count:
                raise GraphFormatError(f"Vertex {v} of labeled edge {edge!r} is outside [0, {vertex_count}).")
        if f == g and label == identity:
            raise GraphFormatError(f"Labeled edge ({f}, {f}, identity) is a loop in the cover.")
        if (f, g, label) in given:
            raise GraphFormatError(f"Labeled edge ({f}, {g}, {group.format(label)!r}) is listed twice.")
        given.append((f, g, label))

    darts = set(given)
    for f, g, label in given:
        darts.add((g, f, label.inverse()))
    ordered = tuple(sorted(darts, key=lambda d: (d[0], d[1], d[2])))

    per_vertex = [0] * vertex_count
    for f, _, _ in ordered:
        per_vertex[f] += 1
    max_degree = max(per_vertex)
    if degree_bound is None:
        degree_bound = max_degree
    elif max_degree > degree_bound:
        worst = per_vertex.index(max_degree)
        raise GraphFormatError(
            f"Vertex {worst} has {max_degree} labeled edges, above the declared bound {degree_bound}."
        )

    if stabilizers is None:
        stabilizers = [1] * vertex_count
    stabilizers = tuple(int(s) for s in stabilizers)
    if len(stabilizers) != vertex_count or any(s < 1 for s in stabilizers):
        raise GraphFormatError("Stabilizer orders must be positive integers, one per vertex.")

    return VoltageGraph(
        group=group,
        vertex_count=vertex_count,
        darts=ordered,
        stabilizers=stabilizers,
        degree_bound=degree_bound,
    )


CoverVertex = Tuple[int, GroupElement]


@dataclass(frozen=True)
class PeriodicBall:
    ball: RootedBall
    # identities[i] is the cover vertex (f, gamma) of ball vertex i
    identities: Tuple[CoverVertex, ...]


@dataclass(frozen=True)
class CoverRegion:
    """Induced subgraph of the cover on all vertices within distance r of the fundamental domain."""

    radius: int
    identities: Tuple[CoverVertex, ...]
    graph: Graph

    def group_elements(self) -> List[GroupElement]:
        seen = []
        known = set()
        for _, gamma in self.identities:
            if gamma not in known:
                known.add(gamma)
                seen.append(gamma)
        return seen


def _cover_bfs(vg: VoltageGraph, sources: Sequence[CoverVertex], r: int) -> Tuple[List[CoverVertex], Graph]:
    if r < 0:
        raise GraphFormatError(f"Radius must be nonnegative, got {r}.")
    adjacency: Dict[int, List[Dart]] = {f: [] for f in range(vg.vertex_count)}
    for dart in vg.darts:
        adjacency[dart[0]].append(dart)

    dist: Dict[CoverVertex, int] = {s: 0 for s in sources}
    order = list(sources)
    queue = deque(sources)
    while queue:
        v = queue.popleft()
        if dist[v] == r:
            continue
        f, gamma = v
        for _, g, label in adjacency[f]:
            w = (g, gamma * label)
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                queue.append(w)

    index = {v: i for i, v in enumerate(order)}
    edges = set()
    for i, (f, gamma) in enumerate(order):
        neighbors = []
        for _, g, label in adjacency[f]:
            j = index.get((g, gamma * label))
            if j is None:
                continue
            if j == i:
                raise GraphFormatError(f"Cover vertex ({f}, {gamma}) is adjacent to itself.")
            if j in neighbors:
                raise GraphFormatError(f"Cover vertex ({f}, {gamma}) has a multi-edge.")
            neighbors.append(j)
            edges.add((min(i, j), max(i, j)))
    graph = build_graph(len(order), sorted(edges), degree_bound=vg.degree_bound)
    return order, graph


def unfold(vg: VoltageGraph, f: int, r: int) -> PeriodicBall:
    """Radius-r ball of the cover around (f, identity), in BFS order."""

    if f < 0 or f >= vg.vertex_count:
        raise GraphFormatError(f"Vertex {f} is outside [0, {vg.vertex_count}).")
    order, graph = _cover_bfs(vg, [(f, vg.group.identity())], r)
    return PeriodicBall(
        ball=RootedBall(graph=graph, root=0, radius=r),
        identities=tuple(order),
    )


def unfold_region(vg: VoltageGraph, r: int) -> CoverRegion:
    identity = vg.group.identity()
    order, graph = _cover_bfs(vg, [(f, identity) for f in range(vg.vertex_count)], r)
    return CoverRegion(radius=r, identities=tuple(order), graph=graph)


def periodic_coefficients(vg: VoltageGraph, J: int) -> ZetaCoefficients:
    """nbar_j = sum_f N_j(f) / |stabilizer of f|, counted at the root of an unfolded ball."""

    r = locality_radius(J)
    nbar = [Fraction(0)] * J
    pbar = [Fraction(0)] * J
    for f in range(vg.vertex_count):
        pb = unfold(vg, f, r)
        profile = closed_path_profile(pb.ball.graph, pb.ball.root, J)
        weight = Fraction(1, vg.stabilizers[f])
        for j in range(J):
            nbar[j] += weight * profile.reduced[j]
            pbar[j] += weight * profile.primitive[j]
        logger.debug("Fundamental vertex %d: %d cover vertices within radius %d", f, pb.ball.graph.vertex_count, r)
    return ZetaCoefficients(mode=MeasureMode.COUNTING, nbar=tuple(nbar), pbar=tuple(pbar))


def periodic_zeta_series(vg: VoltageGraph, J: int) -> TruncatedSeries:
    return zeta_series(periodic_coefficients(vg, J).nbar)


# ----- Standard voltage graphs -----


def lattice_voltage_graph(d: int) -> VoltageGraph:
    """Z^d with one fundamental vertex and the unit vectors as labels."""
    group = ZdGroup(d)
    return build_voltage_graph(group, 1, [(0, 0, group.basis(i)) for i in range(d)])


def line_voltage_graph() -> VoltageGraph:
    return lattice_voltage_graph(1)


def free_cayley_voltage_graph(rank: int) -> VoltageGraph:
    """Cayley graph of the free group: the (2 rank)-regular tree."""
    group = FreeGroup(rank)
    return build_voltage_graph(group, 1, [(0, 0, group.generator(k)) for k in range(1, rank + 1)])


def honeycomb_voltage_graph() -> VoltageGraph:
    group = ZdGroup(2)
    edges = [
        (0, 1, ZdElement((0, 0))),
        (0, 1, ZdElement((1, 0))),
        (0, 1, ZdElement((0, 1))),
    ]
    return build_voltage_graph(group, 2, edges)


def ladder_voltage_graph() -> VoltageGraph:
    """The ladder Z x {0, 1} under translation."""
    group = ZdGroup(1)
    edges = [
        (0, 0, ZdElement((1,))),
        (1, 1, ZdElement((1,))),
        (0, 1, ZdElement((0,))),
    ]
    return build_voltage_graph(group, 2, edges)


def builtin_voltage_graph(name: str) -> VoltageGraph:
    """Named voltage graphs: 'line', 'zd:<d>', 'free:<rank>', 'honeycomb', 'ladder'."""

    kind, _, arg = name.partition(":")
    if kind == "line":
        return line_voltage_graph()
    if kind == "zd" and arg.isdigit():
        return lattice_voltage_graph(int(arg))
    if kind == "free" and arg.isdigit():
        return free_cayley_voltage_graph(int(arg))
    if kind == "honeycomb":
        return honeycomb_voltage_graph()
    if kind == "ladder":
        return ladder_voltage_graph()
    raise GraphFormatError(f"Unknown voltage graph {name!r}.")
