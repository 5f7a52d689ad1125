"""
Zeta coefficients of finite graphs by independent routes.

Handles:
- Path counting (paths.py) and the proper-path matrix recursion A_j
- The determinant formula, as an exact series and as a numeric evaluation
- The Euler product over prime cycles
- The spectral formula for regular graphs
- The non-backtracking edge matrix, exact traces and evaluation
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import lu_factor

import settings
from errors import DomainError, IdentityFailure
from graph_core import Graph
from paths import closed_path_profile, prime_cycle_table
from series import (
    CoefficientBound,
    TruncatedSeries,
    make_series,
    series_eval,
    series_exp,
    series_log,
    series_mul,
    series_pow,
)

logger = logging.getLogger(__name__)

METHODS = ("paths", "trace", "det", "euler", "edge")

# integer matrices stay int64 while entries provably fit, object (Python int) otherwise
_INT64_LIMIT = 2 ** 62
_FLOAT_EXACT_LIMIT = 2 ** 52


class MeasureMode(str, Enum):
    COUNTING = "counting"
    NORMALIZED = "normalized"


@dataclass(frozen=True)
class ZetaCoefficients:
    mode: MeasureMode
    nbar: Tuple[Fraction, ...]
    pbar: Optional[Tuple[Fraction, ...]] = None

    @property
    def order(self) -> int:
        return len(self.nbar)

    def series(self) -> TruncatedSeries:
        return zeta_series(self.nbar)


def vertex_weight(g: Graph, mode: MeasureMode) -> Fraction:
    return Fraction(1) if mode == MeasureMode.COUNTING else Fraction(1, g.vertex_count)


def tau(trace_value: int, g: Graph, mode: MeasureMode) -> Fraction:
    """The trace in the active mode: matrix trace, or matrix trace / |V|."""
    return Fraction(int(trace_value)) * vertex_weight(g, mode)


def coefficient_bound(g: Graph, mode: MeasureMode) -> CoefficientBound:
    mass = g.vertex_count if mode == MeasureMode.COUNTING else 1
    return CoefficientBound(g.degree_bound, mass)


def zeta_series(nbar: Sequence[Fraction]) -> TruncatedSeries:
    """exp(sum_j nbar_j u^j / j), exact."""
    exponent = [Fraction(0)] + [Fraction(c) / j for j, c in enumerate(nbar, start=1)]
    return series_exp(make_series(exponent, len(nbar)))


def coefficients_from_series(s: TruncatedSeries) -> Tuple[Fraction, ...]:
    """Inverse of zeta_series: nbar_j = j [u^j] log s."""
    log_s = series_log(s)
    return tuple(j * log_s[j] for j in range(1, s.order + 1))


# ----- Path counting route -----


def coefficients_by_paths(g: Graph, J: int, mode: MeasureMode) -> ZetaCoefficients:
    nbar = [0] * J
    pbar = [0] * J
    for x in range(g.vertex_count):
        profile = closed_path_profile(g, x, J)
        for j in range(J):
            nbar[j] += profile.reduced[j]
            pbar[j] += profile.primitive[j]
    w = vertex_weight(g, mode)
    return ZetaCoefficients(
        mode=mode,
        nbar=tuple(w * c for c in nbar),
        pbar=tuple(w * c for c in pbar),
    )


# ----- Proper path matrices -----


def _exact_dtype(g: Graph, J: int) -> object:
    growth = 2 * max(g.degree_bound, 1) + 1
    return np.int64 if growth ** max(J, 1) < _INT64_LIMIT else object


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact integer product, through float BLAS when the result provably fits a double."""

    if a.dtype == object or b.dtype == object:
        return a.dot(b)
    n = a.shape[1]
    bound = float(np.abs(a).max(initial=0)) * float(np.abs(b).max(initial=0)) * n
    if bound < _FLOAT_EXACT_LIMIT:
        return np.rint(a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
    return a @ b


def _q_diagonal(g: Graph, dtype: object) -> np.ndarray:
    return np.array([d - 1 for d in g.degrees()], dtype=dtype)


def proper_path_matrices(g: Graph, J: int) -> List[np.ndarray]:
    """A_0..A_J, where A_j[p, q] counts non-backtracking paths of length j from p to q."""

    dtype = _exact_dtype(g, J)
    n = g.vertex_count
    eye = np.eye(n, dtype=np.int64).astype(dtype)
    A = g.adjacency_matrix().astype(dtype)
    q = _q_diagonal(g, dtype)
    mats = [eye]
    if J >= 1:
        mats.append(A)
    if J >= 2:
        mats.append(_matmul(A, A) - np.diag(q) - eye)
    for _ in range(3, J + 1):
        # right multiplication by the diagonal Q scales columns
        mats.append(_matmul(mats[-1], A) - mats[-2] * q[None, :])
    return mats


def tail_counts_by_recursion(
    g: Graph,
    J: int,
    mode: MeasureMode,
    mats: Optional[List[np.ndarray]] = None,
) -> List[Fraction]:
    """t_1..t_J with t_1 = t_2 = 0 and t_j = t_{j-2} + tau((Q - I) A_{j-2})."""

    mats = mats if mats is not None else proper_path_matrices(g, J)
    q_minus = [d - 2 for d in g.degrees()]
    t = [Fraction(0)] * (J + 1)
    for j in range(3, J + 1):
        diag = np.diagonal(mats[j - 2])
        weighted = sum(int(c) * int(a) for c, a in zip(q_minus, diag))
        t[j] = t[j - 2] + tau(weighted, g, mode)
    return t[1:]


def coefficients_by_trace(g: Graph, J: int, mode: MeasureMode) -> ZetaCoefficients:
    """nbar_j = tau(A_j) - t_j."""

    mats = proper_path_matrices(g, J)
    tails = tail_counts_by_recursion(g, J, mode, mats)
    nbar = tuple(tau(np.trace(mats[j]), g, mode) - tails[j - 1] for j in range(1, J + 1))
    return ZetaCoefficients(mode=mode, nbar=nbar)


def euler_characteristic(g: Graph, mode: MeasureMode) -> Fraction:
    """Half the trace of I - Q, which is |V| - |E| in counting mode."""
    return tau(sum(2 - d for d in g.degrees()), g, mode) / 2


class BIdentityRow(NamedTuple):
    j: int
    traced: Fraction
    expected: Fraction

    @property
    def holds(self) -> bool:
        return self.traced == self.expected


@dataclass(frozen=True)
class BIdentityReport:
    mode: MeasureMode
    rows: Tuple[BIdentityRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.holds for row in self.rows)

    def failures(self) -> List[BIdentityRow]:
        return [row for row in self.rows if not row.holds]


def b_identity_check(
    g: Graph,
    J: int,
    mode: MeasureMode,
    nbar: Optional[Sequence[Fraction]] = None,
) -> BIdentityReport:
    """Check tau(B_j) against nbar_j - tau(Q - I) (even j) or nbar_j (odd j).

    B_j = A_j - (Q - I) sum_{i=1}^{j//2} A_{j-2i}. The reference nbar defaults
    to path counting.
    """

    if nbar is None:
        nbar = coefficients_by_paths(g, J, mode).nbar
    mats = proper_path_matrices(g, J)
    q_minus = np.array([d - 2 for d in g.degrees()], dtype=object)
    tau_q_minus = tau(int(q_minus.sum()), g, mode)
    rows = []
    for j in range(1, J + 1):
        total = int(np.trace(mats[j]))
        for i in range(1, j // 2 + 1):
            diag = np.diagonal(mats[j - 2 * i]).astype(object)
            total -= int((q_minus * diag).sum())
        expected = nbar[j - 1] - tau_q_minus if j % 2 == 0 else nbar[j - 1]
        rows.append(BIdentityRow(j, tau(total, g, mode), Fraction(expected)))
    report = BIdentityReport(mode=mode, rows=tuple(rows))
    if not report.passed:
        logger.warning("B_j identity fails at j = %s", [row.j for row in report.failures()])
    return report


def path_matrix_norms(g: Graph, J: int) -> List[Tuple[int, float, float]]:
    """(j, ||A_j||_2, R^j) for j = 0..J."""

    R = norm_radius(g.degree_bound)
    return [
        (j, float(np.linalg.norm(m.astype(np.float64), 2)), R ** j)
        for j, m in enumerate(proper_path_matrices(g, J))
    ]


def check_norm_bound(g: Graph, J: int, rel_tol: float = 1e-9) -> None:
    for j, norm, bound in path_matrix_norms(g, J):
        if norm > bound * (1 + rel_tol):
            raise IdentityFailure("norm-bound", f"||A_{j}|| = {norm} exceeds R^{j} = {bound}")


# ----- Radii -----


def norm_radius(D: int) -> float:
    """R = (D + sqrt(D^2 + 4D)) / 2; the determinant formula is evaluated for |u| < 1/R."""
    return (D + math.sqrt(D * D + 4 * D)) / 2


def holomorphy_radius(D: int) -> float:
    """The zeta series converges for |u| < 1/(D - 1)."""
    return math.inf if D <= 1 else 1.0 / (D - 1)


def _check_norm_disc(g: Graph, u: complex) -> None:
    R = norm_radius(g.degree_bound)
    if R > 0 and abs(u) * R >= 1:
        raise DomainError(
            f"|u| = {abs(u):.6g} is outside the disc |u| < {1 / R:.6g} of the determinant formula."
        )


# ----- Determinant formula -----


def det_formula_series(g: Graph, J: int, mode: MeasureMode) -> TruncatedSeries:
    """Z to order J from (1 - u^2)^chi / det(I - X), X = uA - u^2 Q.

    log det(I - X) = -sum_k tau(X^k) / k. X^k is kept as matrix coefficients
    of u^m; A and Q need not commute.
    """

    dtype = _exact_dtype(g, J)
    n = g.vertex_count
    A = g.adjacency_matrix().astype(dtype)
    q = _q_diagonal(g, dtype)
    log_z = [Fraction(0)] * (J + 1)
    power: Dict[int, np.ndarray] = {0: np.eye(n, dtype=np.int64).astype(dtype)}
    for k in range(1, J + 1):
        nxt: Dict[int, np.ndarray] = {}
        for m, M in power.items():
            if m + 1 <= J:
                nxt[m + 1] = nxt[m + 1] + _matmul(A, M) if m + 1 in nxt else _matmul(A, M)
            if m + 2 <= J:
                term = -(q[:, None] * M)
                nxt[m + 2] = nxt[m + 2] + term if m + 2 in nxt else term
        power = nxt
        if not power:
            break
        for m, M in power.items():
            log_z[m] += tau(np.trace(M), g, mode) / k
    chi = euler_characteristic(g, mode)
    for i in range(1, J // 2 + 1):
        log_z[2 * i] -= chi / i
    return series_exp(make_series(log_z, J))


def det_formula_eval(
    g: Graph,
    u: complex,
    mode: MeasureMode,
    check_order: Optional[int] = None,
) -> complex:
    """Z(u) from a dense LU factorization of I - uA + u^2 Q.

    Normalized mode takes the |V|-th root on the principal branch and checks
    it against the series route at `check_order` (0 disables the check).
    """

    u = complex(u)
    _check_norm_disc(g, u)
    n = g.vertex_count
    M = np.eye(n, dtype=complex) - u * g.adjacency_matrix(np.float64)
    M += u * u * np.diag(np.array([d - 1 for d in g.degrees()], dtype=np.float64))
    lu, piv = lu_factor(M, check_finite=True)
    pivots = np.diag(lu)
    if np.any(pivots == 0):
        raise DomainError(f"u = {u} is a zero of 1/Z.")
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    chi = euler_characteristic(g, mode)
    if mode == MeasureMode.COUNTING:
        det = complex(np.prod(pivots)) * (-1) ** swaps
        return (1 - u * u) ** int(chi) / det

    log_det = complex(np.sum(np.log(pivots.astype(complex)))) + 1j * math.pi * swaps
    value = cmath.exp(float(chi) * cmath.log(1 - u * u) - log_det / n)
    order = settings.default_order() if check_order is None else check_order
    if order > 0:
        reference = series_eval(
            coefficients_by_trace(g, order, mode).series(),
            u,
            coefficient_bound(g, mode),
        )
        slack = reference.tail_bound + settings.float_tolerance() * max(1.0, abs(reference.value))
        if abs(value - reference.value) > slack:
            logger.info("Principal branch at u = %s disagrees with the series route", u)
            raise DomainError(f"Branch ambiguity at u = {u}: the principal root does not match the series.")
    return value


# ----- Euler product -----


def mobius(n: int) -> int:
    result, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def primitive_from_reduced(nbar: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Möbius inversion of nbar_j = sum_{i | j} pbar_i."""
    J = len(nbar)
    return tuple(
        sum((mobius(j // d) * Fraction(nbar[d - 1]) for d in range(1, j + 1) if j % d == 0), Fraction(0))
        for j in range(1, J + 1)
    )


def euler_product_series(g: Graph, J: int, mode: MeasureMode) -> TruncatedSeries:
    """prod_{j <= J} (1 - u^j)^(-pbar_j / j), truncated at order J.

    In counting mode pbar_j / j is the number of prime cycles of length j,
    and the enumerated prime cycle table must agree with it.
    """

    pbar = coefficients_by_paths(g, J, mode).pbar
    table = prime_cycle_table(g, J) if mode == MeasureMode.COUNTING else None
    result = make_series([1], J)
    for j in range(1, J + 1):
        exponent = -Fraction(pbar[j - 1]) / j
        if exponent == 0:
            continue
        if table is not None:
            if exponent.denominator != 1:
                raise IdentityFailure("euler-product", f"P_{j} = {pbar[j - 1]} is not divisible by {j}")
            if -exponent != table.count(j):
                raise IdentityFailure(
                    "euler-product",
                    f"{table.count(j)} prime cycles of length {j}, expected {-exponent}",
                )
        factor = make_series([1] + [0] * (j - 1) + [-1], J)
        result = series_mul(result, series_pow(factor, exponent))
    return result


# ----- Regular graphs -----


def check_spectrum(g: Graph, tol: float = 1e-9) -> np.ndarray:
    """Adjacency eigenvalues, which must lie in [-D, D]."""

    eig = np.linalg.eigvalsh(g.adjacency_matrix(np.float64))
    D = g.degree_bound
    if eig.size and (eig.max() > D + tol or eig.min() < -D - tol):
        raise IdentityFailure("spectrum-containment", f"eigenvalues leave [-{D}, {D}]")
    return eig


def regular_spectral_log_eval(g: Graph, u: complex, mode: MeasureMode) -> complex:
    """log Z(u) from (1 - u^2)^(-(r-1) tau(I) / 2) prod_lambda (1 - u lambda + r u^2)^(-w) for (r+1)-regular g."""

    if not g.is_regular():
        raise DomainError("The spectral formula needs a regular graph.")
    u = complex(u)
    _check_norm_disc(g, u)
    r = g.degree(0) - 1
    eig = check_spectrum(g)
    w = float(vertex_weight(g, mode))
    tau_identity = g.vertex_count * w
    factors = 1 - u * eig + r * u * u
    bad = (factors.imag == 0) & (factors.real <= 0)
    if np.any(bad):
        raise DomainError(f"1 - u*lambda + r*u^2 leaves the slit plane at u = {u}.")
    return -(r - 1) * tau_identity / 2 * cmath.log(1 - u * u) - w * complex(np.sum(np.log(factors)))


def regular_spectral_eval(g: Graph, u: complex, mode: MeasureMode) -> complex:
    return cmath.exp(regular_spectral_log_eval(g, u, mode))


# ----- Non-backtracking edge matrix -----


def edge_matrix(g: Graph) -> Tuple[sparse.csr_matrix, List[Tuple[int, int]]]:
    """B over directed edges: B[(a, b), (b, c)] = 1 iff c != a."""

    darts = [(u, v) for u in range(g.vertex_count) for v in g.adjacency[u]]
    index = {d: i for i, d in enumerate(darts)}
    rows, cols = [], []
    for i, (a, b) in enumerate(darts):
        for c in g.adjacency[b]:
            if c != a:
                rows.append(i)
                cols.append(index[(b, c)])
    m = len(darts)
    B = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(m, m))
    return B, darts


def coefficients_by_edge_matrix(g: Graph, J: int, mode: MeasureMode) -> ZetaCoefficients:
    """nbar_j = tau-weighted trace of B^j."""

    B, _ = edge_matrix(g)
    w = vertex_weight(g, mode)
    nbar = []
    power = B
    for j in range(1, J + 1):
        if j > 1:
            power = power @ B
        nbar.append(w * sum(int(v) for v in power.diagonal()))
    return ZetaCoefficients(mode=mode, nbar=tuple(nbar))


def edge_matrix_log_eval(g: Graph, u: complex, mode: MeasureMode) -> complex:
    """log Z(u) = -w sum_mu Log(1 - u mu) over eigenvalues mu of B."""

    u = complex(u)
    _check_holomorphy_disc(g, u)
    B, darts = edge_matrix(g)
    if not darts:
        return 0j
    mu = np.linalg.eigvals(B.toarray().astype(np.float64))
    w = float(vertex_weight(g, mode))
    return -w * complex(np.sum(np.log(1 - u * mu)))


def edge_matrix_eval(g: Graph, u: complex, mode: MeasureMode) -> complex:
    return cmath.exp(edge_matrix_log_eval(g, u, mode))


def _check_holomorphy_disc(g: Graph, u: complex) -> None:
    D = g.degree_bound
    if D > 1 and abs(u) * (D - 1) >= 1:
        raise DomainError(f"|u| = {abs(u):.6g} is outside the disc |u| < {1 / (D - 1):.6g}.")


def bass_log_eval(g: Graph, u: complex, mode: MeasureMode) -> complex:
    """log Z(u) through the 2|V| x 2|V| matrix K = [[A, I - Deg], [I, 0]].

    det(I - uB) = (1 - u^2)^(|E| - |V|) det(I - uK), and every eigenvalue of K
    is an eigenvalue of B or +-1, so principal logarithms are exact on the
    whole disc |u| < 1/(D - 1).
    """

    u = complex(u)
    _check_holomorphy_disc(g, u)
    if g.edge_count == 0:
        return 0j
    n = g.vertex_count
    K = np.zeros((2 * n, 2 * n))
    K[:n, :n] = g.adjacency_matrix(np.float64)
    K[:n, n:] = np.diag([1.0 - d for d in g.degrees()])
    K[n:, :n] = np.eye(n)
    kappa = np.linalg.eigvals(K)
    w = float(vertex_weight(g, mode))
    excess = g.edge_count - n
    return -w * (excess * cmath.log(1 - u * u) + complex(np.sum(np.log(1 - u * kappa))))


def normalized_log_zeta(g: Graph, u: complex) -> complex:
    """log Z_norm(u) by the cheapest exact spectral route available at u."""

    u = complex(u)
    R = norm_radius(g.degree_bound)
    if g.is_regular() and abs(u) * R < 1:
        return regular_spectral_log_eval(g, u, MeasureMode.NORMALIZED)
    return bass_log_eval(g, u, MeasureMode.NORMALIZED)


# ----- Dispatch -----


def coefficients(g: Graph, J: int, mode: MeasureMode, method: str) -> ZetaCoefficients:
    if method == "paths":
        return coefficients_by_paths(g, J, mode)
    if method == "trace":
        return coefficients_by_trace(g, J, mode)
    if method == "edge":
        return coefficients_by_edge_matrix(g, J, mode)
    if method == "det":
        return ZetaCoefficients(mode, coefficients_from_series(det_formula_series(g, J, mode)))
    if method == "euler":
        return ZetaCoefficients(mode, coefficients_from_series(euler_product_series(g, J, mode)))
    raise ValueError(f"Unknown method {method!r}; expected one of {METHODS}.")


def verify_agreement(g: Graph, J: int, mode: MeasureMode) -> ZetaCoefficients:
    """Compute every coefficient route and raise IdentityFailure unless all agree exactly."""

    reference = coefficients_by_paths(g, J, mode)
    for method in METHODS[1:]:
        other = coefficients(g, J, mode, method)
        if other.nbar != reference.nbar:
            raise IdentityFailure(
                f"{method}-route",
                f"{method} gives {[str(c) for c in other.nbar]}, paths give {[str(c) for c in reference.nbar]}",
            )
    if primitive_from_reduced(reference.nbar) != reference.pbar:
        raise IdentityFailure("divisor-identity", "primitive counts disagree with Möbius inversion")
    report = b_identity_check(g, J, mode, reference.nbar)
    if not report.passed:
        raise IdentityFailure("b-identity", f"fails at j = {[row.j for row in report.failures()]}")
    return reference
