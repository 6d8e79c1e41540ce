"""Distribution-free risk bounds as functions of sample size, confidence and complexity.

Three polynomial equations drive everything here.  For a sample of size N,
confidence parameter beta in (0, 1) and complexity k, the one-sided bound
eps(k) is 1 - t(k) where t(k) is the unique root in (0, 1) of

    (beta/2N) * sum_{m=k}^{N-1} C(m,k) t^(m-k)  -  C(N,k) t^(N-k)  =  0,

and the two-sided pair (eps_lo(k), eps_hi(k)) comes from the two nonnegative
roots t_lo(k) <= t_hi(k) of

    C(N,k) t^(N-k) - (beta/2N) sum_{i=k}^{N-1} C(i,k) t^(i-k)
                   - (beta/6N) sum_{i=N+1}^{4N} C(i,k) t^(i-k)  =  0,

with eps_lo(k) = max{0, 1 - t_hi(k)} and eps_hi(k) = 1 - t_lo(k).  At k = N
the one-sided bound is 1 by definition, t_lo(N) = 0, and t_hi(N) is the
unique nonnegative root of

    1 - (beta/6N) sum_{i=N+1}^{4N} C(i,N) t^(i-N)  =  0.

Binomial coefficients like C(4N, k) overflow doubles long before N reaches
the sizes of interest, so every polynomial is evaluated in log space: terms
are log-binomials plus exponent * log(t), accumulated with log-sum-exp into
separate positive and negative piles, and only the signed difference of the
two piles is ever formed.  Roots are then located by sign-based bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import NumericalError

__all__ = [
    "BoundQuery",
    "EpsilonTable",
    "PolynomialValue",
    "epsilon_upper",
    "epsilon_pair",
    "explicit_interval_bounds",
    "eval_certificate_polynomial",
    "build_table",
]

# Bisection per the module contract: absolute tolerance 1e-12 on t, hard cap
# of 200 iterations.  In practice the loop runs to floating-point saturation
# of the bracket (~55 iterations), which keeps the relative residual at the
# returned root near machine level instead of the ~1e-9 it would be if we
# stopped exactly at 1e-12.
_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class BoundQuery:
    """One (N, beta, k) evaluation point for the bound functions."""

    sample_size: int
    confidence_beta: float
    complexity: int

    def __post_init__(self):
        n, beta, k = self.sample_size, self.confidence_beta, self.complexity
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"sample_size must be a positive integer, got {n!r}")
        if not isinstance(k, (int, np.integer)):
            raise ValueError(f"complexity must be an integer, got {k!r}")
        if not (0 <= k <= n):
            raise ValueError(f"complexity must lie in [0, {n}], got {k}")
        if not (0.0 < beta < 1.0):
            raise ValueError(f"confidence_beta must lie in (0, 1), got {beta!r}")


@dataclass(frozen=True)
class EpsilonTable:
    """All three bound functions tabulated over k = 0..N for one (N, beta)."""

    sample_size: int
    confidence_beta: float
    upper: np.ndarray       # one-sided bound, entry k = eps(k)
    pair_lower: np.ndarray  # two-sided lower, entry k = eps_lo(k)
    pair_upper: np.ndarray  # two-sided upper, entry k = eps_hi(k)

    def __post_init__(self):
        n = self.sample_size
        for name in ("upper", "pair_lower", "pair_upper"):
            arr = getattr(self, name)
            if arr.shape != (n + 1,):
                raise ValueError(f"{name} must have N+1 = {n + 1} entries")


class PolynomialValue(NamedTuple):
    """Signed log-magnitude of a certificate polynomial at one point.

    sign is -1, 0 or +1; log_abs is log|value|; log_scale is the log of the
    larger of the positive/negative term piles, so exp(log_abs - log_scale)
    is the residual relative to the dominant accumulated mass.
    """

    sign: int
    log_abs: float
    log_scale: float


@lru_cache(maxsize=16)
def _log_factorials(limit: int) -> np.ndarray:
    """log(i!) for i = 0..limit via the log-gamma function."""
    return gammaln(np.arange(limit + 1, dtype=np.float64) + 1.0)


def _log_binomials(lf: np.ndarray, upper: np.ndarray, k: int) -> np.ndarray:
    """log C(upper, k) elementwise, upper >= k assumed."""
    return lf[upper] - lf[k] - lf[upper - k]


def _logsumexp(terms: np.ndarray) -> float:
    if terms.size == 0:
        return _NEG_INF
    peak = terms.max()
    if peak == _NEG_INF:
        return _NEG_INF
    return float(peak + np.log(np.exp(terms - peak).sum()))


def _powers(log_terms: np.ndarray, exponents: np.ndarray, t: float) -> np.ndarray:
    """log_terms + exponents*log(t), with the t=0 convention 0*log(0) = 0."""
    if t == 0.0:
        out = np.full_like(log_terms, _NEG_INF)
        zero = exponents == 0
        out[zero] = log_terms[zero]
        return out
    return log_terms + exponents * math.log(t)


def _signed_difference(log_pos: float, log_neg: float) -> PolynomialValue:
    scale = max(log_pos, log_neg)
    if log_pos == log_neg:
        return PolynomialValue(0, _NEG_INF, scale)
    # log|e^a - e^b| = a + log(-expm1(b - a)) for b < a; expm1 keeps the
    # cancellation accurate when the two piles differ by less than an ulp
    if log_pos > log_neg:
        shrink = -math.expm1(log_neg - log_pos)
        if shrink == 0.0:
            return PolynomialValue(0, _NEG_INF, scale)
        return PolynomialValue(1, log_pos + math.log(shrink), scale)
    shrink = -math.expm1(log_pos - log_neg)
    if shrink == 0.0:
        return PolynomialValue(0, _NEG_INF, scale)
    return PolynomialValue(-1, log_neg + math.log(shrink), scale)


class _Evaluator:
    """Caches per-(N, beta, k) term tables for repeated polynomial evaluations."""

    def __init__(self, sample_size: int, confidence_beta: float):
        self.n = int(sample_size)
        self.beta = float(confidence_beta)
        self.lf = _log_factorials(4 * self.n)
        self._k = None

    def set_k(self, k: int) -> None:
        if self._k == k:
            return
        self._k = k
        n, lf = self.n, self.lf
        # one-sided equation: positive sum m=k..N-1, negative single term at N
        m = np.arange(k, n, dtype=np.int64)
        self._one_pos_log = math.log(self.beta / (2 * n)) + _log_binomials(lf, m, k)
        self._one_pos_exp = m - k
        self._one_neg_log = float(_log_binomials(lf, np.array([n]), k)[0])
        self._one_neg_exp = n - k
        # two-sided equation: positive single term at N, negative sums
        # i=k..N-1 (weight beta/2N) and i=N+1..4N (weight beta/6N)
        i_low = np.arange(k, n, dtype=np.int64)
        i_high = np.arange(n + 1, 4 * n + 1, dtype=np.int64)
        self._two_neg_log = np.concatenate([
            math.log(self.beta / (2 * n)) + _log_binomials(lf, i_low, k),
            math.log(self.beta / (6 * n)) + _log_binomials(lf, i_high, k),
        ])
        self._two_neg_exp = np.concatenate([i_low, i_high]) - k
        # saturation equation (k = N only): 1 minus the high sum with C(i, N)
        i_sat = np.arange(n + 1, 4 * n + 1, dtype=np.int64)
        self._sat_neg_log = math.log(self.beta / (6 * n)) + _log_binomials(lf, i_sat, n)
        self._sat_neg_exp = i_sat - n

    def one_sided(self, k: int, t: float) -> PolynomialValue:
        self.set_k(k)
        pos = _logsumexp(_powers(self._one_pos_log, self._one_pos_exp, t))
        if t == 0.0:
            neg = self._one_neg_log if self._one_neg_exp == 0 else _NEG_INF
        else:
            neg = self._one_neg_log + self._one_neg_exp * math.log(t)
        return _signed_difference(pos, neg)

    def two_sided_parts(self, k: int, t: float) -> tuple[float, float]:
        """(log positive pile, log negative pile) of the interval equation."""
        self.set_k(k)
        if t == 0.0:
            pos = 0.0 if self.n == k else _NEG_INF
        else:
            pos = float(_log_binomials(self.lf, np.array([self.n]), k)[0]) \
                + (self.n - k) * math.log(t)
        neg = _logsumexp(_powers(self._two_neg_log, self._two_neg_exp, t))
        return pos, neg

    def two_sided(self, k: int, t: float) -> PolynomialValue:
        return _signed_difference(*self.two_sided_parts(k, t))

    def saturation(self, k: int, t: float) -> PolynomialValue:
        self.set_k(k)
        neg = _logsumexp(_powers(self._sat_neg_log, self._sat_neg_exp, t))
        return _signed_difference(0.0, neg)


def eval_certificate_polynomial(kind: str, query: BoundQuery, t: float) -> PolynomialValue:
    """Evaluate one of the three certificate polynomials in log space.

    kind is 'one_sided' (single-root bound equation), 'two_sided' (two-root
    interval equation) or 'saturation' (the k = N closure of the interval
    equation).  Returns the signed log-magnitude of the value; no
    intermediate quantity overflows for N up to around 1e6 since binomials
    are carried as log-gammas.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    ev = _Evaluator(query.sample_size, query.confidence_beta)
    k = query.complexity
    if kind == "one_sided":
        return ev.one_sided(k, t)
    if kind == "two_sided":
        return ev.two_sided(k, t)
    if kind == "saturation":
        return ev.saturation(k, t)
    raise ValueError(f"unknown polynomial kind {kind!r}")


def _bisect(sign_at: Callable[[float], int], lo: float, hi: float,
            sign_lo: int) -> float:
    """Bisect a sign change; runs to bracket saturation under the hard cap."""
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        s = sign_at(mid)
        if s == 0:
            return mid
        if s == sign_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= min(_BISECT_TOL, 4.0 * math.ulp(hi)):
            break
    return 0.5 * (lo + hi)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _positive_interior_point(parts_at: Callable[[float], tuple[float, float]],
                             hi: float) -> float:
    """Golden-section search on [0, hi] for a point where the interval equation is positive.

    The search maximizes the log-ratio of the positive to the negative term
    pile.  That ratio is unimodal in t (the softmax-weighted mean exponent of
    the negative pile increases monotonically with t and crosses the fixed
    positive-term exponent exactly once), so golden section cannot stall on a
    spurious lobe the way a search on the signed value itself can.  Stops at
    the first strictly positive point, which by sign structure lies between
    the two roots; raises NumericalError if the maximum ratio never turns
    positive (no two real roots at this beta).
    """

    def ratio(t: float) -> float:
        pos, neg = parts_at(t)
        if pos == _NEG_INF:
            return _NEG_INF
        return pos - neg

    a, b = 0.0, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    r1, r2 = ratio(x1), ratio(x2)
    for _ in range(300):
        if r1 > 0.0:
            return x1
        if r2 > 0.0:
            return x2
        if r1 >= r2:
            b, x2, r2 = x2, x1, r1
            x1 = b - _GOLDEN * (b - a)
            r1 = ratio(x1)
        else:
            a, x1, r1 = x1, x2, r2
            x2 = a + _GOLDEN * (b - a)
            r2 = ratio(x2)
        if b - a < 1e-14:
            break
    raise NumericalError(
        "no interior point with positive polynomial value found in "
        f"[0, {hi}]; confidence_beta is too large for two real roots")


def epsilon_upper(query: BoundQuery) -> float:
    """One-sided risk bound eps(k); equals 1 at k = N."""
    n, k = query.sample_size, query.complexity
    if k == n:
        return 1.0
    ev = _Evaluator(n, query.confidence_beta)
    sign_lo = ev.one_sided(k, 0.0).sign
    sign_hi = ev.one_sided(k, 1.0).sign
    if not (sign_lo > 0 > sign_hi):
        raise NumericalError(
            f"lost bracket for the one-sided equation at k={k}: "
            f"sign(0)={sign_lo}, sign(1)={sign_hi}")
    t = _bisect(lambda x: ev.one_sided(k, x).sign, 0.0, 1.0, sign_lo)
    return 1.0 - t


def _pair_roots(ev: _Evaluator, k: int) -> tuple[float, float]:
    """The two nonnegative roots of the interval equation for k < N."""
    sign0 = ev.two_sided(k, 0.0).sign
    if sign0 >= 0:
        raise NumericalError(
            f"interval equation is not negative at t=0 for k={k} (sign {sign0})")
    hi = 4.0
    while ev.two_sided(k, hi).sign >= 0:
        hi *= 2.0
        if hi > 2.0 ** 40:
            raise NumericalError("no sign change found while expanding the bracket")
    t_mid = _positive_interior_point(lambda x: ev.two_sided_parts(k, x), hi)
    t_lo = _bisect(lambda x: ev.two_sided(k, x).sign, 0.0, t_mid, -1)
    t_hi = _bisect(lambda x: ev.two_sided(k, x).sign, t_mid, hi, 1)
    return t_lo, t_hi


def _saturation_root(ev: _Evaluator, n: int) -> float:
    """Unique nonnegative root of the k = N closure equation."""
    lo = 0.0
    hi = 1.0
    while ev.saturation(n, hi).sign > 0:
        lo = hi
        hi *= 2.0
        if hi > 2.0 ** 40:
            raise NumericalError("saturation equation never turned negative")
    return _bisect(lambda x: ev.saturation(n, x).sign, lo, hi, 1)


def epsilon_pair(query: BoundQuery) -> tuple[float, float]:
    """Two-sided risk interval (eps_lo(k), eps_hi(k)); the upper is 1 at k = N."""
    n, k = query.sample_size, query.complexity
    ev = _Evaluator(n, query.confidence_beta)
    if k == n:
        t_hi = _saturation_root(ev, n)
        return max(0.0, 1.0 - t_hi), 1.0
    t_lo, t_hi = _pair_roots(ev, k)
    return max(0.0, 1.0 - t_hi), 1.0 - t_lo


def explicit_interval_bounds(query: BoundQuery) -> tuple[float, float]:
    """Closed-form sanity brackets around the two-sided interval.

    floor is a lower bound on eps_lo(k) and ceiling an upper bound on
    eps_hi(k); both are loose O(sqrt(log N)/sqrt(N)) envelopes around k/N and
    are meant for cross-checks, never as certificates.
    """
    n = query.sample_size
    k = query.complexity
    log_inv_beta = -math.log(query.confidence_beta)
    sq = math.sqrt(k + 1.0)
    sq_log = math.sqrt(math.log(k + 1.0))
    sq_beta = math.sqrt(log_inv_beta)
    ceiling = (k / n
               + 2.0 * sq / n * (sq_log + 4.0)
               + 2.0 * sq * sq_beta / n
               + log_inv_beta / n)
    floor = (k / n
             - 3.0 * sq / n * (sq_log + 2.0)
             - 3.0 * sq * sq_beta / n)
    return floor, ceiling


def build_table(sample_size: int, confidence_beta: float) -> EpsilonTable:
    """Tabulate all three bound functions for k = 0..N.

    Entries are identical to one-at-a-time queries; the batch path only
    shares the log-factorial table and reuses the previous k's interior
    point as a bracket hint for the two-root equation.
    """
    probe = BoundQuery(sample_size, confidence_beta, 0)  # validates N, beta
    n = probe.sample_size
    ev = _Evaluator(n, confidence_beta)
    upper = np.empty(n + 1)
    pair_lower = np.empty(n + 1)
    pair_upper = np.empty(n + 1)
    t_mid_hint = None
    for k in range(n):
        try:
            sign0 = ev.one_sided(k, 0.0).sign
            if not (sign0 > 0 > ev.one_sided(k, 1.0).sign):
                raise NumericalError("lost bracket for the one-sided equation")
            upper[k] = 1.0 - _bisect(lambda x: ev.one_sided(k, x).sign, 0.0, 1.0, sign0)

            if ev.two_sided(k, 0.0).sign >= 0:
                raise NumericalError("interval equation not negative at t=0")
            hi = 4.0
            while ev.two_sided(k, hi).sign >= 0:
                hi *= 2.0
            if t_mid_hint is not None and 0.0 < t_mid_hint < hi \
                    and ev.two_sided(k, t_mid_hint).sign > 0:
                t_mid = t_mid_hint
            else:
                t_mid = _positive_interior_point(lambda x: ev.two_sided_parts(k, x), hi)
            t_lo = _bisect(lambda x: ev.two_sided(k, x).sign, 0.0, t_mid, -1)
            t_hi = _bisect(lambda x: ev.two_sided(k, x).sign, t_mid, hi, 1)
            t_mid_hint = 0.5 * (t_lo + t_hi)
            pair_lower[k] = max(0.0, 1.0 - t_hi)
            pair_upper[k] = 1.0 - t_lo
        except NumericalError as exc:
            raise NumericalError(f"table entry k={k} failed: {exc}") from exc
    upper[n] = 1.0
    try:
        t_sat = _saturation_root(ev, n)
    except NumericalError as exc:
        raise NumericalError(f"table entry k={n} failed: {exc}") from exc
    pair_lower[n] = max(0.0, 1.0 - t_sat)
    pair_upper[n] = 1.0
    return EpsilonTable(n, confidence_beta, upper, pair_lower, pair_upper)
