"""
Almost homomorphisms into symmetric groups and the finite graphs they glue.

Permutations act on {0..N-1} as integer arrays; composition is
(s t)(i) = s(t(i)), i.e. s[t] in numpy indexing.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from errors import DomainError, GraphFormatError, IdentityFailure
from graph_core import Graph, build_graph
from limits import BallDistribution, ball_distribution, periodic_distribution
from periodic import FreeGroup, FreeWord, GroupElement, VoltageGraph, ZdElement, unfold_region

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlmostHom:
    degree: int
    table: Dict[GroupElement, np.ndarray]
    provenance: str

    def sigma(self, gamma: GroupElement) -> np.ndarray:
        try:
            return self.table[gamma]
        except KeyError:
            raise GraphFormatError(f"Permutation table has no entry for {gamma!r}.") from None

    def inverse(self, gamma: GroupElement) -> np.ndarray:
        return np.argsort(self.sigma(gamma))


def make_almost_hom(degree: int, table: Dict[GroupElement, np.ndarray], provenance: str) -> AlmostHom:
    """Validate that every entry is a permutation of {0..degree-1}."""

    if degree < 1:
        raise GraphFormatError(f"Permutation degree must be positive, got {degree}.")
    checked = {}
    reference = np.arange(degree)
    for gamma, perm in table.items():
        arr = np.asarray(perm, dtype=np.int64)
        if arr.shape != (degree,) or not np.array_equal(np.sort(arr), reference):
            raise GraphFormatError(f"Entry for {gamma!r} is not a permutation of 0..{degree - 1}.")
        checked[gamma] = arr
    return AlmostHom(degree=degree, table=checked, provenance=provenance)


@dataclass(frozen=True)
class DefectReport:
    # max over s, t, st in the domain of d_H(sigma_s sigma_t, sigma_st)
    defect_i: Fraction
    # d_H(sigma_e, Id)
    defect_ii: Fraction
    # min over s != t of d_H(sigma_s, sigma_t); 1 when fewer than two elements
    defect_iii: Fraction
    domain_size: int


def hamming(a: np.ndarray, b: np.ndarray) -> Fraction:
    """Normalized Hamming distance: fraction of points where two permutations differ."""
    return Fraction(int(np.count_nonzero(a != b)), len(a))


# ----- Finite sets of group elements -----


def build_T(vg: VoltageGraph, r: int) -> Set[GroupElement]:
    """Group elements gamma_x of the cover vertices within distance r of the fundamental domain."""

    if not vg.is_free:
        raise DomainError("The sofic construction needs a free action; stabilizers must all be 1.")
    return set(unfold_region(vg, r).group_elements())


def build_Ttilde(T: Iterable[GroupElement]) -> Set[GroupElement]:
    """TT, its inverses, T^-1 T and T T^-1."""

    T = list(T)
    inv = [t.inverse() for t in T]
    out: Set[GroupElement] = set()
    for s in T:
        for t in T:
            st = s * t
            out.add(st)
            out.add(st.inverse())
    for s in inv:
        for t in T:
            out.add(s * t)
            out.add(t * s)
    return out


# ----- Providers -----


def _sorted(elements: Iterable[GroupElement]) -> List[GroupElement]:
    return sorted(elements)


def quotient_collisions(n: int, Ttilde: Iterable[GroupElement]) -> List[Tuple[ZdElement, ZdElement]]:
    """Pairs of distinct lattice elements that coincide modulo n."""

    by_residue: Dict[Tuple[int, ...], ZdElement] = {}
    clashes = []
    for gamma in _sorted(Ttilde):
        residue = tuple(c % n for c in gamma.coords)
        if residue in by_residue:
            clashes.append((by_residue[residue], gamma))
        else:
            by_residue[residue] = gamma
    return clashes


def make_quotient_hom_Zd(n: int, d: int, Ttilde: Iterable[GroupElement]) -> AlmostHom:
    """Translations of the n^d discrete torus, indexed row-major."""

    if n < 1:
        raise GraphFormatError(f"Quotient modulus must be positive, got {n}.")
    elements = _sorted(Ttilde)
    shape = (n,) * d
    coords = np.indices(shape).reshape(d, -1)
    table = {}
    for gamma in elements:
        if not isinstance(gamma, ZdElement) or len(gamma.coords) != d:
            raise GraphFormatError(f"{gamma!r} is not an element of Z^{d}.")
        shifted = (coords + np.array(gamma.coords, dtype=np.int64)[:, None]) % n
        table[gamma] = np.ravel_multi_index(tuple(shifted), shape).astype(np.int64)
    clashes = quotient_collisions(n, elements)
    if clashes:
        logger.warning(
            "Modulus %d identifies %d pairs of elements, e.g. %s and %s; separation fails",
            n,
            len(clashes),
            clashes[0][0].coords,
            clashes[0][1].coords,
        )
    return make_almost_hom(n ** d, table, f"quotient(n={n})")


def make_random_almost_hom(rank: int, N: int, seed: int, Ttilde: Iterable[GroupElement]) -> AlmostHom:
    """Independent uniform permutations for the generators, extended to words by composition."""

    if N < 1:
        raise GraphFormatError(f"Permutation degree must be positive, got {N}.")
    group = FreeGroup(rank)
    rng = np.random.default_rng(seed)
    generators = {}
    for k in range(1, rank + 1):
        perm = rng.permutation(N).astype(np.int64)
        generators[k] = perm
        generators[-k] = np.argsort(perm)
    identity = np.arange(N, dtype=np.int64)
    table = {}
    for word in _sorted(Ttilde):
        if not isinstance(word, FreeWord) or any(abs(a) > rank for a in word.letters):
            raise GraphFormatError(f"{word!r} is not a word in the free group of rank {group.rank}.")
        perm = identity
        for a in reversed(word.letters):
            perm = generators[a][perm]
        table[word] = perm
    return make_almost_hom(N, table, f"random(seed={seed})")


def defects(h: AlmostHom, domain: Iterable[GroupElement]) -> DefectReport:
    """Defects (i)-(iii) over the given domain, computed pointwise."""

    elements = _sorted(domain)
    present = set(elements)
    identity_perm = np.arange(h.degree)

    d_i = Fraction(0)
    for s in elements:
        sigma_s = h.sigma(s)
        for t in elements:
            st = s * t
            if st not in present:
                continue
            d_i = max(d_i, hamming(sigma_s[h.sigma(t)], h.sigma(st)))

    d_ii = Fraction(0)
    if elements:
        unit = elements[0] * elements[0].inverse()
        if unit in present:
            d_ii = hamming(h.sigma(unit), identity_perm)

    d_iii = Fraction(1)
    for a in range(len(elements)):
        for b in range(a + 1, len(elements)):
            d_iii = min(d_iii, hamming(h.sigma(elements[a]), h.sigma(elements[b])))

    return DefectReport(defect_i=d_i, defect_ii=d_ii, defect_iii=d_iii, domain_size=len(elements))


# ----- The glued graph -----


def _glued_edges(vg: VoltageGraph, T: Set[GroupElement], h: AlmostHom) -> np.ndarray:
    N = h.degree
    idx = np.arange(N, dtype=np.int64)
    blocks = []
    for f, g, label in vg.darts:
        for gamma in T:
            target = gamma * label
            if target not in T:
                continue
            # (f, i) ~ (g, j) when sigma_gamma(i) = sigma_{gamma label}(j)
            j = h.inverse(target)[h.sigma(gamma)]
            blocks.append(np.stack([f * N + idx, g * N + j], axis=1))
    if not blocks:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = np.concatenate(blocks)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs.sort(axis=1)
    return np.unique(pairs, axis=0)


def sofic_graph(vg: VoltageGraph, r: int, h: AlmostHom) -> Graph:
    """Graph on F x {0..N-1} glued along the labeled edges of the cover within radius r."""

    T = build_T(vg, r)
    edges = _glued_edges(vg, T, h)
    g = build_graph(vg.vertex_count * h.degree, edges.tolist())
    if g.degree_bound > vg.degree_bound:
        logger.warning(
            "Glued graph has maximum degree %d above the cover bound %d; the permutations are far from a homomorphism",
            g.degree_bound,
            vg.degree_bound,
        )
    return g


def good_index_fraction(vg: VoltageGraph, r: int, h: AlmostHom, graph: Optional[Graph] = None) -> Fraction:
    """Fraction of indices i for which x -> (pi(x), sigma_{gamma_x^-1}(i)) embeds B_r(F) as an induced subgraph."""

    if graph is None:
        graph = sofic_graph(vg, r, h)
    region = unfold_region(vg, r)
    N = h.degree
    V = graph.vertex_count
    images = np.stack(
        [f * N + h.sigma(gamma.inverse()) for f, gamma in region.identities]
    )  # (|B|, N)

    good = np.ones(N, dtype=bool)
    ordered = np.sort(images, axis=0)
    if len(region.identities) > 1:
        good &= np.all(np.diff(ordered, axis=0) != 0, axis=0)

    codes = np.array(sorted(u * V + v for u, w in enumerate(graph.adjacency) for v in w), dtype=np.int64)
    cover_edges = set(region.graph.edges)
    count = len(region.identities)
    for a in range(count):
        for b in range(a + 1, count):
            pair = images[a] * V + images[b]
            pos = np.searchsorted(codes, pair)
            pos = np.minimum(pos, max(len(codes) - 1, 0))
            present = codes[pos] == pair if len(codes) else np.zeros(N, dtype=bool)
            expected = (a, b) in cover_edges
            good &= present == expected
    return Fraction(int(good.sum()), N)


def claim_bound(report: DefectReport, ttilde_size: int) -> Fraction:
    """Lower bound 1 - 2 |T~|^2 (defect_i + (1 - defect_iii)) on the good index fraction."""
    return 1 - 2 * ttilde_size ** 2 * (report.defect_i + (1 - report.defect_iii))


def check_claim_bound(good: Fraction, bound: Fraction) -> None:
    if good < bound:
        raise IdentityFailure("claim-bound", f"good index fraction {good} is below the lower bound {bound}")


@dataclass(frozen=True)
class DeltaReport:
    delta: Fraction
    epsilon: Fraction
    defects: DefectReport
    # True when the defects meet the epsilon precondition
    applicable: bool
    deviations: Dict[str, Fraction]
    max_deviation: Fraction

    @property
    def holds(self) -> bool:
        return self.max_deviation < self.delta


def check_delta_guarantee(
    vg: VoltageGraph,
    r: int,
    h: AlmostHom,
    delta: Fraction,
    graph: Optional[Graph] = None,
) -> DeltaReport:
    """Compare p(G_r, alpha) with |F_alpha| / |F| for every radius-r class on either side."""

    delta = Fraction(delta)
    T = build_T(vg, r)
    Ttilde = build_Ttilde(T)
    epsilon = delta / (2 * len(Ttilde) ** 2)
    report = defects(h, Ttilde)
    applicable = report.defect_i < epsilon and report.defect_ii < epsilon and report.defect_iii >= 1 - epsilon
    if not applicable:
        logger.info("Defects %s miss epsilon = %s; measuring without the guarantee", report, epsilon)

    if graph is None:
        graph = sofic_graph(vg, r, h)
    observed: BallDistribution = ball_distribution(graph, r)
    target: BallDistribution = periodic_distribution(vg, r)
    keys = sorted(set(observed.entries) | set(target.entries))
    deviations = {k.hex(): abs(observed.frequency(k) - target.frequency(k)) for k in keys}
    max_dev = max(deviations.values(), default=Fraction(0))
    return DeltaReport(
        delta=delta,
        epsilon=epsilon,
        defects=report,
        applicable=applicable,
        deviations=deviations,
        max_deviation=max_dev,
    )


def provider_from_spec(
    spec: Dict[str, object],
    vg: VoltageGraph,
    r: int,
    seed: Optional[int] = None,
    table: Optional[AlmostHom] = None,
) -> AlmostHom:
    """Build the provider named by a spec dict: quotient, random, or `table` read from its file."""

    kind = spec.get("provider")
    Ttilde = build_Ttilde(build_T(vg, r))
    if kind == "quotient":
        d = getattr(vg.group, "d", None)
        if d is None:
            raise GraphFormatError("The quotient provider needs a Z^d voltage graph.")
        return make_quotient_hom_Zd(int(spec["n"]), d, Ttilde)  # type: ignore[arg-type]
    if kind == "random":
        rank = getattr(vg.group, "rank", None)
        if rank is None:
            raise GraphFormatError("The random provider needs a free-group voltage graph.")
        chosen = spec.get("seed", seed)
        return make_random_almost_hom(rank, int(spec["N"]), int(chosen if chosen is not None else 0), Ttilde)  # type: ignore[arg-type]
    if kind == "table":
        if table is None:
            raise GraphFormatError("Table providers must be loaded from their permutation file first.")
        missing = [g for g in Ttilde if g not in table.table]
        if missing:
            raise GraphFormatError(f"Permutation table lacks {len(missing)} required elements, e.g. {missing[0]!r}.")
        return table
    raise GraphFormatError(f"Unknown provider {kind!r}; expected quotient, random or table.")


def sofic_member(vg: VoltageGraph, r: int, spec: Dict[str, object], n: int, seed: int) -> Graph:
    """Family member of size parameter n: a quotient of side n, or n random permutations.

    Only T is tabulated here since gluing never looks past it.
    """

    T = build_T(vg, r)
    kind = spec.get("provider")
    if kind == "quotient":
        d = getattr(vg.group, "d", None)
        if d is None:
            raise GraphFormatError("The quotient provider needs a Z^d voltage graph.")
        h = make_quotient_hom_Zd(n, d, T)
    elif kind == "random":
        rank = getattr(vg.group, "rank", None)
        if rank is None:
            raise GraphFormatError("The random provider needs a free-group voltage graph.")
        h = make_random_almost_hom(rank, n, int(spec.get("seed", seed)), T)  # type: ignore[arg-type]
    else:
        raise GraphFormatError(f"Sofic families support quotient and random providers, not {kind!r}.")
    return sofic_graph(vg, r, h)
