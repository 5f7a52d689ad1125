"""
Finite bounded-degree graphs, rooted balls and their canonical keys.

Handles:
- Building and validating simple undirected graphs
- Rooted r-balls (induced subgraphs around a root)
- Canonical keys of rooted balls, uncolored and edge-colored
- Greedy proper edge colorings and color-walk injections
- The local similarity radius and its 2^-r pseudo-ultrametric
"""

import logging
import struct
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from errors import GraphFormatError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Graph:
    vertex_count: int
    adjacency: Tuple[Tuple[int, ...], ...]
    degree_bound: int

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        """Undirected edges as (u, v) with u < v, sorted."""
        return tuple(
            (u, v) for u in range(self.vertex_count) for v in self.adjacency[u] if u < v
        )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> List[int]:
        return [len(nbrs) for nbrs in self.adjacency]

    def adjacency_matrix(self, dtype: object = np.int64) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=dtype)
        for u, v in self.edges:
            a[u, v] = 1
            a[v, u] = 1
        return a

    def distances_from(self, x: int) -> List[int]:
        """BFS distances from x; -1 marks unreachable vertices."""
        dist = [-1] * self.vertex_count
        dist[x] = 0
        queue = deque([x])
        while queue:
            v = queue.popleft()
            for w in self.adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        return all(d >= 0 for d in self.distances_from(0))

    def is_regular(self) -> bool:
        return len(set(self.degrees())) <= 1


def build_graph(
    vertex_count: int,
    edges: Iterable[Sequence[int]],
    degree_bound: Optional[int] = None,
) -> Graph:
    """Validate an edge list and build a Graph.

    The degree bound defaults to the maximum degree. A declared bound that
    some vertex exceeds is rejected.
    """

    if not isinstance(vertex_count, int) or vertex_count <= 0:
        raise GraphFormatError(f"A graph needs at least one vertex, got {vertex_count!r}.")

    neighbor_sets: List[set] = [set() for _ in range(vertex_count)]
    for edge in edges:
        if len(edge) != 2:
            raise GraphFormatError(f"Edge {tuple(edge)!r} must have exactly two endpoints.")
        u, v = int(edge[0]), int(edge[1])
        for w in (u, v):
            if w < 0 or w >= vertex_count:
                raise GraphFormatError(
                    f"Vertex {w} of edge ({u}, {v}) is outside [0, {vertex_count})."
                )
        if u == v:
            raise GraphFormatError(f"Self-loop at vertex {u} is not allowed.")
        if v in neighbor_sets[u]:
            raise GraphFormatError(f"Duplicate edge ({min(u, v)}, {max(u, v)}).")
        neighbor_sets[u].add(v)
        neighbor_sets[v].add(u)

    max_degree = max(len(s) for s in neighbor_sets)
    if degree_bound is None:
        degree_bound = max_degree
    elif max_degree > degree_bound:
        worst = max(range(vertex_count), key=lambda w: len(neighbor_sets[w]))
        raise GraphFormatError(
            f"Vertex {worst} has degree {max_degree}, above the declared bound {degree_bound}."
        )

    adjacency = tuple(tuple(sorted(s)) for s in neighbor_sets)
    return Graph(vertex_count=vertex_count, adjacency=adjacency, degree_bound=degree_bound)


# ----- Rooted balls -----


@dataclass(frozen=True)
class RootedBall:
    graph: Graph
    root: int
    radius: int
    # origin[i] is the vertex of the ambient graph that ball vertex i came from
    origin: Tuple[int, ...] = ()

    def depth(self) -> int:
        """Largest distance of a ball vertex from the root."""
        return max(self.graph.distances_from(self.root))


def _induced(g: Graph, vertices: Sequence[int]) -> Tuple[Graph, Dict[int, int]]:
    index = {v: i for i, v in enumerate(vertices)}
    edges = [
        (index[u], index[w])
        for u in vertices
        for w in g.adjacency[u]
        if w in index and u < w
    ]
    sub = build_graph(len(vertices), edges, degree_bound=g.degree_bound)
    return sub, index


def ball(g: Graph, x: int, r: int) -> RootedBall:
    """The induced subgraph on {y : d(x, y) <= r}, relabeled in BFS order (root = 0)."""

    if x < 0 or x >= g.vertex_count:
        raise GraphFormatError(f"Vertex {x} is outside [0, {g.vertex_count}).")
    if r < 0:
        raise GraphFormatError(f"Radius must be nonnegative, got {r}.")

    dist = {x: 0}
    order = [x]
    queue = deque([x])
    while queue:
        v = queue.popleft()
        if dist[v] == r:
            continue
        for w in g.adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                queue.append(w)

    sub, _ = _induced(g, order)
    return RootedBall(graph=sub, root=0, radius=r, origin=tuple(order))


# ----- Edge colorings -----


@dataclass(frozen=True)
class ColoredGraph:
    graph: Graph
    # colors[k] is the color of graph.edges[k]
    colors: Tuple[int, ...]

    @cached_property
    def _color_lookup(self) -> Dict[Edge, int]:
        return dict(zip(self.graph.edges, self.colors))

    @cached_property
    def _walks(self) -> Tuple[Dict[int, int], ...]:
        walks: List[Dict[int, int]] = [dict() for _ in range(self.graph.vertex_count)]
        for (u, v), c in zip(self.graph.edges, self.colors):
            walks[u][c] = v
            walks[v][c] = u
        return tuple(walks)

    @property
    def num_colors(self) -> int:
        return max(self.colors, default=0)

    def color(self, u: int, v: int) -> int:
        return self._color_lookup[(min(u, v), max(u, v))]

    def walk(self, v: int, c: int) -> Optional[int]:
        """The unique neighbor of v across an edge of color c, if any."""
        return self._walks[v].get(c)

    def color_map(self) -> Dict[Edge, int]:
        return dict(self._color_lookup)


def make_colored_graph(g: Graph, colors: Mapping[Edge, int]) -> ColoredGraph:
    """Attach a coloring given per undirected edge; either orientation may be used as key."""

    normalized: Dict[Edge, int] = {}
    for (u, v), c in colors.items():
        key = (min(u, v), max(u, v))
        if key in normalized and normalized[key] != c:
            raise GraphFormatError(
                f"Edge {key} has two colors {normalized[key]} and {c}; C(e) must equal C(ē)."
            )
        normalized[key] = int(c)

    missing = [e for e in g.edges if e not in normalized]
    if missing:
        raise GraphFormatError(f"Edge {missing[0]} has no color.")
    extra = [e for e in normalized if e not in set(g.edges)]
    if extra:
        raise GraphFormatError(f"Color given for {extra[0]}, which is not an edge.")

    limit = max(2 * g.degree_bound - 1, 1)
    for v in range(g.vertex_count):
        seen: Dict[int, int] = {}
        for w in g.adjacency[v]:
            c = normalized[(min(v, w), max(v, w))]
            if c < 1 or c > limit:
                raise GraphFormatError(
                    f"Color {c} on edge ({v}, {w}) is outside 1..{limit} (= 2D-1)."
                )
            if c in seen:
                raise GraphFormatError(
                    f"Improper coloring: edges ({v}, {seen[c]}) and ({v}, {w}) share color {c}."
                )
            seen[c] = w

    return ColoredGraph(graph=g, colors=tuple(normalized[e] for e in g.edges))


def greedy_edge_coloring(g: Graph) -> ColoredGraph:
    """Proper coloring with colors in 1..2D-1, edges taken in (min, max) order."""

    used: List[set] = [set() for _ in range(g.vertex_count)]
    colors: Dict[Edge, int] = {}
    for u, v in g.edges:
        c = 1
        while c in used[u] or c in used[v]:
            c += 1
        colors[(u, v)] = c
        used[u].add(c)
        used[v].add(c)
    return make_colored_graph(g, colors)


def colored_ball(cg: ColoredGraph, x: int, r: int) -> Tuple[RootedBall, ColoredGraph]:
    b = ball(cg.graph, x, r)
    colors = {
        (u, v): cg.color(b.origin[u], b.origin[v]) for u, v in b.graph.edges
    }
    return b, make_colored_graph(b.graph, colors)


# ----- Canonical keys -----


@dataclass(frozen=True, order=True)
class BallClassKey:
    data: bytes

    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def from_hex(cls, text: str) -> "BallClassKey":
        return cls(bytes.fromhex(text))


def _pack(values: Iterable[int]) -> bytes:
    values = list(values)
    return struct.pack(f">I{len(values)}I", len(values), *values)


def _normalize(colors: Sequence) -> List[int]:
    index = {c: i for i, c in enumerate(sorted(set(colors)))}
    return [index[c] for c in colors]


def _refine(adj: Sequence[Sequence[int]], colors: List[int]) -> List[int]:
    # colors are dense; each round keeps the cell order of the previous one
    count = len(set(colors))
    while True:
        signatures = [
            (colors[v], tuple(sorted(colors[w] for w in adj[v]))) for v in range(len(adj))
        ]
        refined = _normalize(signatures)
        new_count = len(set(refined))
        if new_count == count:
            return refined
        colors, count = refined, new_count


def _individualize(colors: List[int], v: int) -> List[int]:
    return _normalize([(c, 0 if u == v else 1) for u, c in enumerate(colors)])


class _CanonicalSearch:
    """Individualization-refinement search for the lexicographically least adjacency code.

    Subtrees are skipped when a known automorphism maps them onto an explored one.
    """

    def __init__(self, adj: Sequence[Sequence[int]], initial: List[int]) -> None:
        self.adj = adj
        self.n = len(adj)
        self.initial = _normalize(initial)
        self.best_code: Optional[Tuple[Edge, ...]] = None
        self.leaves: Dict[Tuple[Edge, ...], Tuple[List[int], Tuple[int, ...]]] = {}
        self.generators: List[List[int]] = []

    def run(self) -> Tuple[Edge, ...]:
        self._search(_refine(self.adj, self.initial), ())
        assert self.best_code is not None
        return self.best_code

    def _target_cell(self, colors: List[int]) -> Optional[List[int]]:
        cells: Dict[int, List[int]] = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        for c in sorted(cells):
            if len(cells[c]) > 1:
                return cells[c]
        return None

    def _code(self, lab: List[int]) -> Tuple[Edge, ...]:
        return tuple(
            sorted(
                (min(lab[u], lab[w]), max(lab[u], lab[w]))
                for u in range(self.n)
                for w in self.adj[u]
                if u < w
            )
        )

    def _same_orbit(self, v: int, explored: List[int], path: Tuple[int, ...]) -> bool:
        parent = list(range(self.n))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for perm in self.generators:
            if any(perm[p] != p for p in path):
                continue
            for a in range(self.n):
                ra, rb = find(a), find(perm[a])
                if ra != rb:
                    parent[ra] = rb
        root = find(v)
        return any(find(u) == root for u in explored)

    def _search(self, colors: List[int], path: Tuple[int, ...]) -> Optional[int]:
        """Returns the depth to unwind to when a subtree is known to repeat, else None."""
        cell = self._target_cell(colors)
        if cell is None:
            return self._leaf(colors, path)

        explored: List[int] = []
        for v in cell:
            if explored and self._same_orbit(v, explored, path):
                continue
            explored.append(v)
            unwind = self._search(_refine(self.adj, _individualize(colors, v)), path + (v,))
            if unwind is not None and unwind < len(path):
                return unwind
        return None

    def _leaf(self, lab: List[int], path: Tuple[int, ...]) -> Optional[int]:
        code = self._code(lab)
        if code in self.leaves:
            other_lab, other_path = self.leaves[code]
            position = [0] * self.n
            for w in range(self.n):
                position[lab[w]] = w
            perm = [position[other_lab[v]] for v in range(self.n)]
            self.generators.append(perm)
            if len(other_path) == len(path) and all(
                perm[a] == b for a, b in zip(other_path, path)
            ):
                k = 0
                while k < len(path) and other_path[k] == path[k]:
                    k += 1
                return k
            return None

        self.leaves[code] = (lab, path)
        if self.best_code is None or code < self.best_code:
            self.best_code = code
        return None


def _uncolored_key(b: RootedBall) -> BallClassKey:
    g = b.graph
    dist = g.distances_from(b.root)
    initial = [(dist[v], g.degree(v)) for v in range(g.vertex_count)]
    code = _CanonicalSearch(g.adjacency, list(initial)).run()
    flat = [value for edge in code for value in edge]
    return BallClassKey(b"U" + _pack([g.vertex_count]) + _pack(flat))


def _colored_key(b: RootedBall, cg: ColoredGraph) -> BallClassKey:
    # colors make every walk deterministic, so BFS in color order is canonical
    order = [b.root]
    index = {b.root: 0}
    parts: List[bytes] = []
    pos = 0
    while pos < len(order):
        v = order[pos]
        pos += 1
        row: List[int] = []
        for c, w in sorted((cg.color(v, w), w) for w in cg.graph.adjacency[v]):
            if w not in index:
                index[w] = len(order)
                order.append(w)
            row.extend((c, index[w]))
        parts.append(_pack(row))
    if len(order) != cg.graph.vertex_count:
        raise GraphFormatError("Colored ball is not connected.")
    return BallClassKey(b"C" + _pack([len(order)]) + b"".join(parts))


def canonical_key(
    b: RootedBall,
    colors: Optional[Union[ColoredGraph, Mapping[Edge, int]]] = None,
) -> BallClassKey:
    """Key equal for rooted-isomorphic balls (color-preserving when colors are given)."""

    if colors is None:
        return _uncolored_key(b)
    if isinstance(colors, ColoredGraph):
        if colors.graph is not b.graph and colors.graph != b.graph:
            raise GraphFormatError("Coloring does not belong to this ball.")
        cg = colors
    else:
        cg = make_colored_graph(b.graph, colors)
    return _colored_key(b, cg)


# ----- Injections and invariance -----


def _walk_plan(h: ColoredGraph, x: int) -> Tuple[List[Tuple[int, int, int]], List[Tuple[int, int, int]]]:
    """BFS tree steps (parent, child, color) from x and the remaining edges."""
    seen = {x}
    tree: List[Tuple[int, int, int]] = []
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in h.graph.adjacency[v]:
            if w not in seen:
                seen.add(w)
                tree.append((v, w, h.color(v, w)))
                queue.append(w)
    if len(seen) != h.graph.vertex_count:
        raise GraphFormatError("Pattern graph for injection counting must be connected.")
    tree_edges = {(min(p, c), max(p, c)) for p, c, _ in tree}
    rest = [(u, v, h.color(u, v)) for u, v in h.graph.edges if (u, v) not in tree_edges]
    return tree, rest


def count_injections(h: ColoredGraph, x: int, g: ColoredGraph) -> int:
    """Number of vertices v of g admitting a color-preserving injection (h, x) -> (g, v).

    Each candidate image is forced by following colors from v, so at most one
    injection exists per v.
    """

    tree, rest = _walk_plan(h, x)
    count = 0
    for v in range(g.graph.vertex_count):
        image = {x: v}
        ok = True
        for parent, child, c in tree:
            w = g.walk(image[parent], c)
            if w is None:
                ok = False
                break
            image[child] = w
        if not ok or len(set(image.values())) != len(image):
            continue
        if all(g.walk(image[a], c) == image[b] for a, b, c in rest):
            count += 1
    return count


def invariance_discrepancy(g: ColoredGraph, r: int) -> int:
    """Largest difference of injection counts between two roots of a ball pattern of g."""

    worst = 0
    done = set()
    for v in range(g.graph.vertex_count):
        for s in range(r + 1):
            b, pattern = colored_ball(g, v, s)
            key = canonical_key(b, pattern)
            if key in done:
                continue
            done.add(key)
            counts = [count_injections(pattern, y, g) for y in range(b.graph.vertex_count)]
            spread = max(counts) - min(counts)
            if spread:
                logger.debug("Pattern at vertex %d radius %d has spread %d", v, s, spread)
            worst = max(worst, spread)
    return worst


# ----- Local similarity -----


class Similarity(NamedTuple):
    radius: int
    # True when balls agree at every radius up to the search bound
    saturated: bool

    @property
    def distance(self) -> float:
        """The pseudo-ultrametric value 2^-radius."""
        return 2.0 ** (-self.radius)


def similarity_radius(
    g: Union[Graph, ColoredGraph],
    x: int,
    y: int,
    r_max: int,
) -> Similarity:
    """Largest r <= r_max at which the rooted balls around x and y are isomorphic."""

    colored = isinstance(g, ColoredGraph)

    def key_at(v: int, r: int) -> BallClassKey:
        if colored:
            b, cb = colored_ball(g, v, r)
            return canonical_key(b, cb)
        return canonical_key(ball(g, v, r))

    if x == y:
        return Similarity(r_max, True)
    best = -1
    for r in range(r_max + 1):
        if key_at(x, r) != key_at(y, r):
            break
        best = r
    return Similarity(max(best, 0), best == r_max)
