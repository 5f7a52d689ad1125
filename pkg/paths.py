"""
Brute-force enumeration of non-backtracking closed paths.

This is the slow reference layer: every count here comes from walking
the graph, so the faster matrix routes in zeta.py can be checked against it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

from errors import GraphFormatError
from graph_core import Graph

logger = logging.getLogger(__name__)

KINDS = ("reduced", "primitive", "tailed")


@dataclass(frozen=True)
class ClosedPathProfile:
    # index j - 1 holds the count for length j
    reduced: Tuple[int, ...]
    primitive: Tuple[int, ...]
    tailed: Tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.reduced)

    def counts(self, kind: str) -> Tuple[int, ...]:
        if kind not in KINDS:
            raise ValueError(f"Unknown path kind {kind!r}; expected one of {KINDS}.")
        return getattr(self, kind)


@dataclass(frozen=True)
class PathCounts:
    kind: str
    per_vertex: Dict[int, Tuple[int, ...]]

    def total(self, j: int) -> int:
        return sum(counts[j - 1] for counts in self.per_vertex.values())


@dataclass(frozen=True)
class PrimeCycleTable:
    entries: Tuple[Tuple[int, int], ...]

    def count(self, j: int) -> int:
        for length, n in self.entries:
            if length == j:
                return n
        return 0


def locality_radius(j: int) -> int:
    """Ball radius that contains every reduced closed path of length j at the root."""
    return math.ceil(j / 2) + 1


def _check_length(g: Graph, x: int, j: int) -> None:
    if x < 0 or x >= g.vertex_count:
        raise GraphFormatError(f"Vertex {x} is outside [0, {g.vertex_count}).")
    if j < 1:
        raise ValueError(f"Path length must be positive, got {j}.")


def iter_closed_walks(g: Graph, x: int, max_length: int) -> Iterator[Tuple[int, ...]]:
    """Yield every non-backtracking closed walk at x of length <= max_length.

    Walks are vertex sequences starting and ending at x, produced in DFS
    order with neighbors ascending. Branches that cannot get back to x in
    the remaining steps are pruned by BFS distance.
    """

    adj = g.adjacency
    dist = g.distances_from(x)
    path = [x]
    stack = [iter(adj[x])]
    while stack:
        depth = len(path) - 1
        advanced = False
        for w in stack[-1]:
            if depth >= 1 and w == path[-2]:
                continue
            if dist[w] > max_length - depth - 1:
                continue
            path.append(w)
            if w == x:
                yield tuple(path)
            if depth + 1 < max_length:
                stack.append(iter(adj[w]))
                advanced = True
                break
            path.pop()
        if not advanced:
            stack.pop()
            path.pop()


def is_tailed(walk: Sequence[int]) -> bool:
    """A closed non-backtracking walk has a tail when it leaves and returns along the same edge."""
    return walk[1] == walk[-2]


def smallest_period(seq: Sequence[int]) -> int:
    n = len(seq)
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and seq[i] != seq[k]:
            k = fail[k - 1]
        if seq[i] == seq[k]:
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return p if n % p == 0 else n


def is_primitive(walk: Sequence[int]) -> bool:
    """True when the cyclic vertex sequence of a closed walk is not a repetition."""
    cycle = walk[:-1]
    return smallest_period(cycle) == len(cycle)


def min_rotation(cycle: Sequence[int]) -> Tuple[int, ...]:
    seq = tuple(cycle)
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


def closed_path_profile(g: Graph, x: int, max_length: int) -> ClosedPathProfile:
    """Counts of reduced, primitive reduced and tailed closed paths at x for j = 1..max_length."""

    _check_length(g, x, max_length)
    reduced = [0] * max_length
    primitive = [0] * max_length
    tailed = [0] * max_length
    for walk in iter_closed_walks(g, x, max_length):
        j = len(walk) - 1
        if is_tailed(walk):
            tailed[j - 1] += 1
            continue
        reduced[j - 1] += 1
        if is_primitive(walk):
            primitive[j - 1] += 1
    return ClosedPathProfile(tuple(reduced), tuple(primitive), tuple(tailed))


def count_reduced_closed(g: Graph, x: int, j: int) -> int:
    return closed_path_profile(g, x, j).reduced[j - 1]


def count_primitive_reduced(g: Graph, x: int, j: int) -> int:
    return closed_path_profile(g, x, j).primitive[j - 1]


def count_tailed(g: Graph, x: int, j: int) -> int:
    return closed_path_profile(g, x, j).tailed[j - 1]


def path_counts(g: Graph, max_length: int, kind: str = "reduced") -> PathCounts:
    """Per-vertex counts of one kind for every vertex of g."""

    per_vertex = {
        x: closed_path_profile(g, x, max_length).counts(kind)
        for x in range(g.vertex_count)
    }
    return PathCounts(kind=kind, per_vertex=per_vertex)


def prime_cycle_table(g: Graph, j_max: int) -> PrimeCycleTable:
    """Number of prime cycles of each length j <= j_max.

    A prime cycle is a rotation class of primitive reduced closed paths;
    each class is recorded once through its lexicographically minimal rotation.
    """

    if j_max < 1:
        raise ValueError(f"Path length must be positive, got {j_max}.")
    seen: List[set] = [set() for _ in range(j_max)]
    for x in range(g.vertex_count):
        for walk in iter_closed_walks(g, x, j_max):
            if is_tailed(walk) or not is_primitive(walk):
                continue
            cycle = walk[:-1]
            seen[len(cycle) - 1].add(min_rotation(cycle))
    entries = tuple((j + 1, len(s)) for j, s in enumerate(seen) if s)
    logger.debug("Prime cycles up to length %d: %s", j_max, entries)
    return PrimeCycleTable(entries=entries)
