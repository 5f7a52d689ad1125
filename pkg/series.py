"""
Truncated power series in one variable u.

Two coefficient modes:
- "exact": fractions.Fraction coefficients, computed in sympy's ring_series over QQ
- "float": complex coefficients, computed with numpy

Operations never mix modes; convert explicitly with to_float().
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import Rational
from sympy.polys.domains import QQ
from sympy.polys.ring_series import rs_exp, rs_log, rs_mul, rs_pow, rs_series_inversion
from sympy.polys.rings import PolyElement, ring

from errors import DomainError, SeriesModeError

logger = logging.getLogger(__name__)

EXACT = "exact"
FLOAT = "float"

Exponent = Union[int, Fraction, float, complex]

# exact series are elements of QQ[u] reduced mod u^(order + 1)
_RING, _U = ring("u", QQ)


@dataclass(frozen=True)
class TruncatedSeries:
    order: int
    coeffs: Tuple[Any, ...]
    mode: str = EXACT

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ValueError(f"Series order must be nonnegative, got {self.order}.")
        if self.mode not in (EXACT, FLOAT):
            raise ValueError(f"Unknown series mode {self.mode!r}.")
        if len(self.coeffs) != self.order + 1:
            raise ValueError("Series must carry exactly order + 1 coefficients.")

    def __getitem__(self, k: int) -> Any:
        return self.coeffs[k]

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        mode = _common_mode(self, other)
        order = min(self.order, other.order)
        return TruncatedSeries(order, tuple(self[k] + other[k] for k in range(order + 1)), mode)

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.order, tuple(-c for c in self.coeffs), self.mode)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + (-other)

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return series_mul(self, other)

    def scale(self, factor: Any) -> "TruncatedSeries":
        factor = _coerce(factor, self.mode)
        return TruncatedSeries(self.order, tuple(factor * c for c in self.coeffs), self.mode)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError(f"Cannot extend a series of order {self.order} to {order}.")
        return TruncatedSeries(order, self.coeffs[: order + 1], self.mode)

    def to_float(self) -> "TruncatedSeries":
        if self.mode == FLOAT:
            return self
        return TruncatedSeries(self.order, tuple(complex(c) for c in self.coeffs), FLOAT)

    def is_close(self, other: "TruncatedSeries", rel_tol: float = 1e-12) -> bool:
        a, b = self.to_float(), other.to_float()
        if a.order != b.order:
            return False
        scale = max([1.0] + [abs(c) for c in a.coeffs])
        return all(abs(x - y) <= rel_tol * scale for x, y in zip(a.coeffs, b.coeffs))


def _coerce(value: Any, mode: str) -> Any:
    if mode == EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        raise SeriesModeError(f"Value {value!r} is not exact; use a float series instead.")
    return complex(value)


def _common_mode(a: TruncatedSeries, b: TruncatedSeries) -> str:
    if a.mode != b.mode:
        raise SeriesModeError(f"Cannot combine a {a.mode} series with a {b.mode} series.")
    return a.mode


def make_series(coeffs: Iterable[Any], order: Optional[int] = None, mode: str = EXACT) -> TruncatedSeries:
    """Series from leading coefficients, zero-padded or truncated to `order`."""

    values = [_coerce(c, mode) for c in coeffs]
    if order is None:
        order = max(len(values) - 1, 0)
    zero = _coerce(0, mode)
    values = (values + [zero] * (order + 1))[: order + 1]
    return TruncatedSeries(order, tuple(values), mode)


def one(order: int, mode: str = EXACT) -> TruncatedSeries:
    return make_series([1], order, mode)


# ----- Exact mode: QQ[u] through ring_series -----


def _to_ring(s: TruncatedSeries) -> PolyElement:
    return _RING.from_dict({(k,): QQ(c.numerator, c.denominator) for k, c in enumerate(s.coeffs) if c})


def _from_ring(p: PolyElement, order: int) -> TruncatedSeries:
    coeffs = [Fraction(0)] * (order + 1)
    for (k,), c in p.items():
        if k <= order:
            coeffs[k] = Fraction(int(c.numerator), int(c.denominator))
    return TruncatedSeries(order, tuple(coeffs), EXACT)


# ----- Float mode: numpy recurrences -----


def _array(s: TruncatedSeries) -> np.ndarray:
    return np.array(s.coeffs, dtype=complex)


def _from_array(values: np.ndarray, order: int) -> TruncatedSeries:
    return TruncatedSeries(order, tuple(complex(c) for c in values[: order + 1]), FLOAT)


def _float_exp(s: np.ndarray) -> np.ndarray:
    # n f_n = sum_k k s_k f_{n-k}
    order = len(s) - 1
    ks = np.arange(order + 1)
    f = np.zeros(order + 1, dtype=complex)
    f[0] = 1
    for n in range(1, order + 1):
        f[n] = np.dot(ks[1 : n + 1] * s[1 : n + 1], f[n - 1 :: -1]) / n
    return f


def _float_log(s: np.ndarray) -> np.ndarray:
    order = len(s) - 1
    ks = np.arange(order + 1)
    g = np.zeros(order + 1, dtype=complex)
    for n in range(1, order + 1):
        acc = n * s[n] - np.dot(ks[1:n] * g[1:n], s[n - 1 : 0 : -1])
        g[n] = acc / n
    return g


def _float_inverse(s: np.ndarray) -> np.ndarray:
    order = len(s) - 1
    inv = np.zeros(order + 1, dtype=complex)
    inv[0] = 1 / s[0]
    for n in range(1, order + 1):
        inv[n] = -np.dot(s[1 : n + 1], inv[n - 1 :: -1]) * inv[0]
    return inv


def _float_pow(s: np.ndarray, e: complex) -> np.ndarray:
    # h_n = (1/n) sum_k ((e+1)k - n) s_k h_{n-k}, for s_0 = 1
    order = len(s) - 1
    ks = np.arange(order + 1)
    h = np.zeros(order + 1, dtype=complex)
    h[0] = 1
    for n in range(1, order + 1):
        weights = ((e + 1) * ks[1 : n + 1] - n) * s[1 : n + 1]
        h[n] = np.dot(weights, h[n - 1 :: -1]) / n
    return h


# ----- Operations -----


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    mode = _common_mode(a, b)
    order = min(a.order, b.order)
    if mode == EXACT:
        return _from_ring(rs_mul(_to_ring(a), _to_ring(b), _U, order + 1), order)
    return _from_array(np.convolve(_array(a)[: order + 1], _array(b)[: order + 1]), order)


def series_exp(s: TruncatedSeries) -> TruncatedSeries:
    """exp(s) for s with zero constant term."""

    if s[0] != 0:
        raise DomainError("exp needs a series with zero constant term.")
    if s.mode == FLOAT:
        return _from_array(_float_exp(_array(s)), s.order)
    p = _to_ring(s)
    if not p:
        return one(s.order)
    return _from_ring(rs_exp(p, _U, s.order + 1), s.order)


def series_log(s: TruncatedSeries) -> TruncatedSeries:
    """log(s) for s with constant term 1."""

    if s[0] != 1:
        raise DomainError("log needs a series with constant term 1.")
    if s.mode == FLOAT:
        return _from_array(_float_log(_array(s)), s.order)
    if s.order == 0:
        return make_series([], 0)
    return _from_ring(rs_log(_to_ring(s), _U, s.order + 1), s.order)


def series_inverse(s: TruncatedSeries) -> TruncatedSeries:
    if s[0] == 0:
        raise DomainError("Series with zero constant term has no inverse.")
    if s.mode == FLOAT:
        return _from_array(_float_inverse(_array(s)), s.order)
    return _from_ring(rs_series_inversion(_to_ring(s), _U, s.order + 1), s.order)


def _integer_power(s: TruncatedSeries, e: int) -> TruncatedSeries:
    if e < 0:
        return _integer_power(series_inverse(s), -e)
    result = one(s.order, s.mode)
    base = s
    while e:
        if e & 1:
            result = series_mul(result, base)
        e >>= 1
        if e:
            base = series_mul(base, base)
    return result


def series_pow(s: TruncatedSeries, e: Exponent) -> TruncatedSeries:
    """s**e. Integer exponents work for any invertible s; others need constant term 1."""

    if isinstance(e, Fraction) and e.denominator == 1:
        e = int(e)
    if isinstance(e, int):
        if e < 0 and s[0] == 0:
            raise DomainError("Series with zero constant term has no inverse.")
        if s.mode == FLOAT:
            return _integer_power(s, e)
        if e == 0:
            return one(s.order)
        return _from_ring(rs_pow(_to_ring(s), e, _U, s.order + 1), s.order)
    if s.mode == EXACT and not isinstance(e, Fraction):
        raise SeriesModeError(f"Exponent {e!r} is not exact; use a float series instead.")
    if s[0] != 1:
        raise DomainError("Non-integer powers need a series with constant term 1.")
    if s.mode == FLOAT:
        return _from_array(_float_pow(_array(s), complex(e)), s.order)
    if s.order == 0:
        return one(0)
    exponent = Rational(e.numerator, e.denominator)
    return _from_ring(rs_pow(_to_ring(s), exponent, _U, s.order + 1), s.order)


class Evaluation(NamedTuple):
    value: complex
    # bound on |sum_{j > order} c_j u^j|; inf when unknown or divergent
    tail_bound: float


class CoefficientBound(NamedTuple):
    """N̄_j <= mass * D (D - 1)^(j - 1) for the exponent of exp(sum N̄_j u^j / j)."""

    degree_bound: int
    mass: float


def majorant_tail(bound: CoefficientBound, order: int, radius: float, max_terms: int = 100000) -> float:
    """Tail past `order` of (1 - (D-1)x)^(-c), c = mass * D / (D-1), at x = radius.

    Every zeta series whose exponent obeys the coefficient bound is dominated
    coefficientwise by this majorant.
    """

    D, mass = bound.degree_bound, float(bound.mass)
    if D <= 1 or mass == 0:
        return 0.0
    q = (D - 1) * radius
    if q >= 1:
        return math.inf
    if radius == 0:
        return 0.0
    c = mass * D / (D - 1)
    # m_j |u|^j, built up by the binomial ratio (c + j - 1) / j * q
    term = 1.0
    for j in range(1, order + 2):
        term *= (c + j - 1) / j * q
    total = 0.0
    j = order + 1
    for _ in range(max_terms):
        total += term
        ratio = q * max(1.0, (c + j) / (j + 1))
        if ratio < 1 and term <= 1e-17 * max(total, 1e-300):
            return total + term * ratio / (1 - ratio)
        term *= (c + j) / (j + 1) * q
        j += 1
    ratio = q * max(1.0, (c + j) / (j + 1))
    if ratio >= 1:
        return math.inf
    return total + term / (1 - ratio)


def exponent_tail(bound: CoefficientBound, order: int, radius: float) -> float:
    """Bound on |sum_{j > order} N̄_j u^j / j| for |u| = radius.

    sum_{j > K} mass D (D-1)^(j-1) r^j / j <= mass D / (D-1) * x^(K+1) / ((K+1)(1-x)), x = (D-1) r.
    """

    D, mass = bound.degree_bound, float(bound.mass)
    if D <= 1 or mass == 0 or radius == 0:
        return 0.0
    x = (D - 1) * radius
    if x >= 1:
        return math.inf
    return mass * D / (D - 1) * x ** (order + 1) / ((order + 1) * (1 - x))


def series_eval(s: TruncatedSeries, u: complex, bound: Optional[CoefficientBound] = None) -> Evaluation:
    """Horner evaluation with a rigorous truncation tail bound when `bound` is given."""

    u = complex(u)
    value = 0j
    for c in reversed(s.coeffs):
        value = value * u + complex(c)
    if bound is None:
        tail = 0.0 if u == 0 else math.inf
    else:
        tail = majorant_tail(bound, s.order, abs(u))
    return Evaluation(value, tail)


# ----- JSON form -----


def series_to_dict(s: TruncatedSeries) -> Dict[str, Any]:
    if s.mode == EXACT:
        coeffs: List[List[Any]] = [[str(c.numerator), str(c.denominator)] for c in s.coeffs]
    else:
        coeffs = [[c.real, c.imag] for c in s.coeffs]
    return {"order": s.order, "mode": s.mode, "coeffs": coeffs}


def series_from_dict(data: Dict[str, Any]) -> TruncatedSeries:
    try:
        order = int(data["order"])
        raw: Sequence[Sequence[Any]] = data["coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"Malformed series: {exc}") from exc
    mode = data.get("mode")
    if mode is None:
        mode = EXACT if raw and isinstance(raw[0][0], str) else FLOAT
    if mode == EXACT:
        values: List[Any] = [Fraction(int(num), int(den)) for num, den in raw]
    else:
        values = [complex(float(re), float(im)) for re, im in raw]
    return make_series(values, order, mode)
