"""Special functions for the counting model.

Integer-order regularized incomplete gamma, the modified Bessel function
:math:`I_1` on the nonnegative axis, and the Poisson pmf. Everything here is
scalar, pure Python and safe to call concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationError

__all__ = [
    "SeriesTolerance",
    "DEFAULT_TOL",
    "regularized_lower_gamma",
    "regularized_upper_gamma",
    "gamma_pq_table",
    "bessel_i1",
    "poisson_pmf",
    "log_factorial",
]

# Above this argument bessel_i1 uses the large-z asymptotic expansion.
BESSEL_ASYMPTOTIC_THRESHOLD = 30.0

_EXACT_LOG_FACTORIALS = [math.log(math.factorial(k)) for k in range(21)]


@dataclass(frozen=True)
class SeriesTolerance:
    """Stopping rule for every series summation in the package.

    A series stops once its remainder estimate drops below ``abs_tol``
    (relative to a sum normalised to order one) and raises
    :class:`~spolight.errors.TruncationError` if that needs more than
    ``max_terms`` terms.
    """

    abs_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")


DEFAULT_TOL = SeriesTolerance()


def log_factorial(n: int) -> float:
    """``log(n!)``; exact table up to 20, ``lgamma`` beyond."""
    if n < 0:
        raise DomainError(f"log_factorial needs n >= 0, got {n}")
    if n <= 20:
        return _EXACT_LOG_FACTORIALS[n]
    return math.lgamma(n + 1)


def _check_order(n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"order n must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise DomainError(f"order n must be >= 1, got {n}")
    return n


def _check_arg(x) -> float:
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError(f"argument x must be >= 0, got {x}")
    return x


def _gamma_pq(n: int, x: float, tol: SeriesTolerance) -> tuple[float, float]:
    """Return ``(P(n, x), Q(n, x))`` with the smaller of the two accurate to
    relative precision (the other is its complement)."""
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < n:
        # P = e^-x x^n / n! * sum_j x^j / ((n+1)...(n+j)); ratios fall below 1.
        lead = math.exp(n * math.log(x) - x - log_factorial(n))
        total = 1.0
        term = 1.0
        for j in range(1, tol.max_terms + 1):
            term *= x / (n + j)
            total += term
            r = x / (n + j + 1)
            if term * r / (1.0 - r) < tol.abs_tol * total:
                break
        else:
            raise TruncationError(
                f"P({n}, {x}) series did not converge in {tol.max_terms} terms"
            )
        p = lead * total
        return p, 1.0 - p
    # x >= n: Q = e^-x sum_{k<n} x^k/k! is a finite sum of terms growing in k.
    top = math.exp((n - 1) * math.log(x) - x - log_factorial(n - 1))
    terms = [top]
    t = top
    for k in range(n - 1, 0, -1):
        t *= k / x
        terms.append(t)
    q = math.fsum(terms)
    return 1.0 - q, q


def regularized_lower_gamma(n: int, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Regularized lower incomplete gamma ``P(n, x) = gamma(n, x) / Gamma(n)``.

    For integer order this is the probability that a Poisson variable of mean
    ``x`` is at least ``n``, equivalently ``1 - exp(-x) sum_{k<n} x^k/k!``.

    Parameters
    ----------
    n : int
        Order, ``n >= 1``.
    x : float
        Argument, ``x >= 0``.
    tol : SeriesTolerance, optional
        Stopping rule for the series used when ``x < n``.

    Returns
    -------
    float
        Value in ``[0, 1]``; tiny values keep full relative precision.
    """
    return _gamma_pq(_check_order(n), _check_arg(x), tol)[0]


def regularized_upper_gamma(n: int, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Complement ``Q(n, x) = 1 - P(n, x)``, accurate when it is small."""
    return _gamma_pq(_check_order(n), _check_arg(x), tol)[1]


def gamma_pq_table(
    nmax: int, x: float, tol: SeriesTolerance = DEFAULT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """``P(n, x)`` and ``Q(n, x)`` for ``n = 1..nmax`` (index ``n - 1``).

    Both arrays are built by recurrences that only add positive Poisson
    terms: ``Q`` upwards from ``Q(1, x) = exp(-x)``, ``P`` downwards from
    ``P(nmax, x)``. Each entry therefore keeps relative accuracy even where it
    is many orders of magnitude below one.
    """
    nmax = _check_order(nmax)
    x = _check_arg(x)
    if x == 0.0:
        return np.zeros(nmax), np.ones(nmax)
    pois = np.array([poisson_pmf(k, x) for k in range(nmax)])
    q = np.cumsum(pois)
    p = np.empty(nmax)
    p[-1] = _gamma_pq(nmax, x, tol)[0]
    for i in range(nmax - 2, -1, -1):
        # P(n) = P(n + 1) + pois(n); index i holds n = i + 1
        p[i] = p[i + 1] + pois[i + 1]
    # each value came from its own accurate recurrence; clamp rounding drift
    return np.minimum(p, 1.0), np.minimum(q, 1.0)


def _i1_series(z: float, tol: SeriesTolerance) -> float:
    half = 0.5 * z
    quarter_sq = half * half
    term = half
    total = term
    for k in range(1, tol.max_terms + 1):
        term *= quarter_sq / (k * (k + 1))
        total += term
        # factorial decay sets in once k exceeds z/2
        if k > half and term < tol.abs_tol * total:
            return total
    raise TruncationError(f"I1({z}) series did not converge in {tol.max_terms} terms")


def _i1_asymptotic(z: float) -> float:
    # e^z / sqrt(2 pi z) * sum_k (-1)^k a_k(1) / z^k, cut at the smallest term
    total = 1.0
    term = 1.0
    for k in range(1, 60):
        nxt = -term * (4.0 - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    try:
        scale = math.exp(z) / math.sqrt(2.0 * math.pi * z)
    except OverflowError:
        return math.inf
    return scale * total


def bessel_i1(z: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Modified Bessel function of the first kind, order one, for ``z >= 0``.

    Power series ``sum_k (z/2)^(2k+1) / (k! (k+1)!)`` up to ``z = 30``;
    above that the Hankel asymptotic expansion, whose smallest term is below
    ``exp(-60)`` relative there.
    """
    z = float(z)
    if math.isnan(z) or z < 0:
        raise DomainError(f"bessel_i1 needs z >= 0, got {z}")
    if z == 0.0:
        return 0.0
    if z > BESSEL_ASYMPTOTIC_THRESHOLD:
        return _i1_asymptotic(z)
    return _i1_series(z, tol)


def poisson_pmf(k: int, mean: float) -> float:
    """Poisson probability ``mean^k exp(-mean) / k!`` evaluated in log space."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    mean = float(mean)
    if math.isnan(mean) or mean < 0:
        raise DomainError(f"Poisson mean must be >= 0, got {mean}")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    if math.isinf(mean):
        return 0.0
    return math.exp(k * math.log(mean) - mean - log_factorial(k))
