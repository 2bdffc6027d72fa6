"""Photoelectron counting statistics of a dilute single-photon emitter.

The count distribution is a Poisson law weighted term by term with the
probability of ``n`` photon emissions during the interaction time::

    W_n = W_0 * s * lam**n / n! * P(n, x)          (n >= 1)
    W_0 = 1 / (1 + s * sum_{n>=1} lam**n / n! * P(n, x))

where ``P`` is the regularized lower incomplete gamma function, ``x`` the
dimensionless interaction time and ``s`` the coupling parameter. The
Poisson parameter ``lam`` is either fixed or proportional to ``x``.

Every quantity is available through two independent routes: a truncated
series over ``n`` and a quadrature over a modified Bessel function. The
routes are cross-checked on every call.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np
from scipy import integrate

from .errors import (
    ConsistencyError,
    DomainError,
    QuadratureError,
    SpolightError,
    TruncationError,
    UndefinedMomentError,
)
from .specfun import DEFAULT_TOL, SeriesTolerance, bessel_i1, gamma_pq_table, poisson_pmf, regularized_lower_gamma

__all__ = [
    "CountingParams",
    "CountDistribution",
    "MomentSet",
    "SweepRow",
    "weight_zero",
    "distribution",
    "generating_function",
    "moments",
    "reduced_covariance",
    "fano_weak_coupling_limit",
    "sweep",
    "x_grid",
    "make_grid",
    "write_sweep_csv",
    "SWEEP_QUANTITIES",
]

# Agreement required between series and quadrature routes.
ROUTE_TOL = 1e-8
# Mean below which Fano factor and reduced covariance are reported absent.
MEAN_FLOOR = 1e-12
FD_STEP = 1e-5
FD_RTOL = 1e-5
# Absolute floor for the derivative check: rounding of G near 1 divided by the step.
FD_ATOL = 1e-9

_QUAD_EPSREL = 1e-12
_QUAD_EPSABS = 1e-300
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CountingParams:
    """Model parameters.

    Exactly one of ``lam`` (fixed Poisson parameter) and ``eta`` (Poisson
    parameter ``eta * x``) must be given. ``s`` in (0, 1] is the physical
    regime but any positive value is accepted.
    """

    s: float
    x: float
    lam: float | None = None
    eta: float | None = None
    tol: SeriesTolerance = field(default=DEFAULT_TOL)

    def __post_init__(self) -> None:
        if not (self.s > 0 and math.isfinite(self.s)):
            raise DomainError(f"coupling s must be > 0, got {self.s}")
        if not (self.x >= 0 and math.isfinite(self.x)):
            raise DomainError(f"interaction time x must be >= 0, got {self.x}")
        if (self.lam is None) == (self.eta is None):
            raise DomainError("give exactly one of lam (fixed) or eta (proportional)")
        if self.lam is not None and not (self.lam >= 0 and math.isfinite(self.lam)):
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.eta is not None and not (0 < self.eta <= 1):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @classmethod
    def fixed(cls, s: float, lam: float, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> "CountingParams":
        return cls(s=s, x=x, lam=lam, tol=tol)

    @classmethod
    def proportional(cls, s: float, eta: float, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> "CountingParams":
        return cls(s=s, x=x, eta=eta, tol=tol)

    @property
    def lam_eff(self) -> float:
        return self.lam if self.lam is not None else self.eta * self.x


@dataclass(frozen=True)
class CountDistribution:
    """Weights ``W_0 .. W_nmax`` and a rigorous bound on the mass beyond."""

    weights: np.ndarray
    tail_bound: float

    @property
    def nmax(self) -> int:
        return len(self.weights) - 1

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class MomentSet:
    mean: float
    variance: float
    fano: float | None
    mandel_q: float | None
    reduced_covariance: float | None


# --------------------------------------------------------------------------
# series route


@dataclass(frozen=True)
class _Sums:
    """Truncated sums with everything scaled by ``c = exp(-lam)``.

    ``S_k = sum n^(k) pi_n P_n`` and ``d_k = sum n^(k) pi_n Q_n`` where
    ``pi_n`` is the Poisson pmf at ``lam`` and ``n^(k)`` the falling factorial.
    """

    n: np.ndarray
    pi: np.ndarray
    P: np.ndarray
    c: float
    S: tuple[float, float, float]
    d: tuple[float, float, float]
    denom: float  # c + s * S0, equal to c / W0
    tail_mass: float
    tail_moment: float


def _falling(n: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.ones_like(n, dtype=float)
    if k == 1:
        return n.astype(float)
    return (n * (n - 1)).astype(float)


def _initial_nmax(lam: float, x: float) -> int:
    m = max(lam, x)
    return int(math.ceil(m + 8.0 * math.sqrt(m) + 12))


def _model_sums(p: CountingParams) -> _Sums:
    lam, x, s, tol = p.lam_eff, p.x, p.s, p.tol
    c = math.exp(-lam)
    nmax = min(_initial_nmax(lam, x), tol.max_terms)
    while True:
        n = np.arange(1, nmax + 1)
        pi = np.array([poisson_pmf(k, lam) for k in n])
        P, Q = gamma_pq_table(nmax, x, tol)
        S = tuple(math.fsum(_falling(n, k) * pi * P) for k in range(3))
        d = tuple(math.fsum(_falling(n, k) * pi * Q) for k in range(3))
        denom = c + s * S[0]

        px_next = regularized_lower_gamma(nmax + 1, x, tol) if x > 0 else 0.0
        if lam > 0:
            pl = [regularized_lower_gamma(nmax + 1 - k, lam, tol) for k in range(3)]
        else:
            pl = [0.0, 0.0, 0.0]
        # sum_{n>N} n^(k) pi_n = lam^k P(N+1-k, lam); P(n, x) <= P(N+1, x) there
        tail_mass = s * px_next * pl[0] / denom
        tail_moment = s * px_next * (lam**2 * pl[2] + lam * pl[1]) / denom
        moment_ok = tail_moment < tol.abs_tol
        # the cancellation-free variance form needs the deficit sums to full precision
        deficit_ok = all(
            d[k] == 0.0 or lam**k * pl[k] <= _EPS * d[k] for k in range(3)
        )
        if moment_ok and (deficit_ok or nmax >= tol.max_terms):
            break
        if nmax >= tol.max_terms:
            raise TruncationError(
                f"weights for s={s}, lam={lam}, x={x} need more than {tol.max_terms} terms"
            )
        nmax = min(nmax + max(10, nmax // 4), tol.max_terms)
    return _Sums(n, pi, P, c, S, d, denom, tail_mass, tail_moment)


def _w0_series(p: CountingParams, sums: _Sums | None = None) -> float:
    sums = sums or _model_sums(p)
    return sums.c / sums.denom


# --------------------------------------------------------------------------
# quadrature route


def _quad(f: Callable[[float], float], a: float, b: float) -> float:
    val, err, info, *msg = integrate.quad(
        f, a, b, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=200, full_output=1
    )
    # ier=2 (roundoff) still carries a usable error estimate
    if msg and err > 1e-10 * abs(val) + 1e-300:
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: {msg[0]}")
    return val


def _w0_quadrature(p: CountingParams) -> float:
    # sqrt(lam) int_0^x du/sqrt(u) I1(2 sqrt(lam u)) e^-u with u = v^2
    lam, x, s = p.lam_eff, p.x, p.s
    if lam == 0.0 or x == 0.0:
        return 1.0
    a = 2.0 * math.sqrt(lam)
    tol = p.tol
    integral = _quad(lambda v: bessel_i1(a * v, tol) * math.exp(-v * v), 0.0, math.sqrt(x))
    return 1.0 / (1.0 + s * a * integral)


def _g_quadrature(p: CountingParams, z: float) -> float:
    lam, x, s = p.lam_eff, p.x, p.s
    w0 = _w0_quadrature(p)
    arg = lam * z * x
    if arg == 0.0:
        return w0
    b = 2.0 * math.sqrt(arg)
    tol = p.tol
    integral = _quad(lambda u: bessel_i1(b * u, tol) * math.exp(-x * u * u), 0.0, 1.0)
    return w0 * (1.0 + s * b * integral)


# --------------------------------------------------------------------------
# public operations


def weight_zero_routes(p: CountingParams) -> tuple[float, float]:
    """``W_0`` as ``(series, quadrature)`` without comparing them."""
    return _w0_series(p), _w0_quadrature(p)


def generating_function_routes(p: CountingParams, z: float) -> tuple[float, float]:
    """``G(z)`` as ``(series, quadrature)`` without comparing them."""
    z = float(z)
    if not (z >= 0 and math.isfinite(z)):
        raise DomainError(f"z must be finite and >= 0, got {z}")
    w = distribution(p).weights
    return math.fsum(w * z ** np.arange(len(w))), _g_quadrature(p, z)


def weight_zero(p: CountingParams) -> float:
    """Probability of zero counts, ``W_0``.

    Computed by the truncated series and by quadrature of the Bessel-integral
    form; raises :class:`ConsistencyError` if the two differ by more than
    ``1e-8``. The series value is returned.
    """
    w_series = _w0_series(p)
    w_quad = _w0_quadrature(p)
    if abs(w_series - w_quad) > ROUTE_TOL:
        raise ConsistencyError(
            f"W0 series {w_series!r} and quadrature {w_quad!r} disagree for {p}"
        )
    return w_series


def distribution(p: CountingParams, nmax: int | None = None) -> CountDistribution:
    """Count distribution ``W_0 .. W_nmax``.

    By default ``nmax`` is the first truncation point at which the bound on
    the omitted second moment, and hence on the omitted mass, is below
    ``p.tol.abs_tol``. An explicit ``nmax`` cuts or extends the table;
    ``tail_bound`` then covers whatever is left out.
    """
    sums = _model_sums(p)
    w = np.empty(len(sums.n) + 1)
    w[0] = sums.c / sums.denom
    w[1:] = p.s * sums.pi * sums.P / sums.denom
    tail = sums.tail_mass
    if nmax is not None:
        if isinstance(nmax, bool) or int(nmax) != nmax or nmax < 0:
            raise DomainError(f"nmax must be a nonnegative integer, got {nmax!r}")
        nmax = int(nmax)
        if nmax < len(w) - 1:
            tail += math.fsum(w[nmax + 1:])
            w = w[: nmax + 1]
        elif nmax > len(w) - 1:
            lam, x = p.lam_eff, p.x
            extra = [
                p.s * poisson_pmf(k, lam) * regularized_lower_gamma(k, x, p.tol) / sums.denom
                for k in range(len(w), nmax + 1)
            ]
            w = np.concatenate([w, extra])
    return CountDistribution(weights=w, tail_bound=tail)


def generating_function(p: CountingParams, z: float) -> float:
    """Probability generating function ``G(z) = sum_n W_n z^n``.

    Evaluated through the Bessel-function integral over ``[0, 1]`` and
    checked against the direct power series to ``1e-8``.
    """
    z = float(z)
    if not (z >= 0 and math.isfinite(z)):
        raise DomainError(f"z must be finite and >= 0, got {z}")
    g_quad = _g_quadrature(p, z)
    w = distribution(p).weights
    g_series = math.fsum(w * z ** np.arange(len(w)))
    if abs(g_quad - g_series) > ROUTE_TOL * max(1.0, abs(g_series)):
        raise ConsistencyError(
            f"G({z}) quadrature {g_quad!r} and series {g_series!r} disagree for {p}"
        )
    return g_quad


def _covariance_numerator(s: float, lam: float, sums: _Sums) -> float:
    """``S2 (c + s S0) - s S1^2``, which fixes the sign of ``F - 1``.

    Near the Poisson limit (``s = 1``, ``Q_n`` small) the direct form cancels
    catastrophically. Substituting ``S_k = lam^k - d_k`` for ``k = 1, 2``
    removes the leading terms analytically and leaves sums of deficits.
    """
    c = sums.c
    S0, S1, S2 = sums.S
    d0, d1, d2 = sums.d
    if d0 <= S0:
        return (
            c * lam * lam * (1.0 - s)
            - c * d2
            - s * (lam * lam * d0 + d2 * S0 - 2.0 * lam * d1 + d1 * d1)
        )
    return S2 * (c + s * S0) - s * S1 * S1


def moments(p: CountingParams, verify: bool = True) -> MomentSet:
    """Mean, variance, Fano factor ``F``, ``F - 1`` and reduced covariance.

    The mean comes from ``sum n W_n``. ``F - 1`` and ``R = (F - 1) / mean``
    come from a rearrangement of ``sum n(n-1) W_n - mean**2`` that stays
    accurate when ``R`` is tiny. Ratio statistics are ``None`` when the mean
    is below ``1e-12``.

    With ``verify`` the mean is checked against a central difference of
    :func:`generating_function` at ``z = 1`` (step ``1e-5``).
    """
    lam, s = p.lam_eff, p.s
    sums = _model_sums(p)
    S0, S1, S2 = sums.S
    mean = s * S1 / sums.denom
    if mean < MEAN_FLOOR:
        var = s * (S2 + S1) / sums.denom - mean * mean
        return MomentSet(mean=mean, variance=max(var, 0.0), fano=None, mandel_q=None, reduced_covariance=None)

    R = _covariance_numerator(s, lam, sums) / (s * S1 * S1)
    q = mean * R
    if verify:
        gp = generating_function(p, 1.0 + FD_STEP)
        gm = generating_function(p, 1.0 - FD_STEP)
        fd = (gp - gm) / (2.0 * FD_STEP)
        if abs(fd - mean) > FD_RTOL * mean + FD_ATOL:
            raise ConsistencyError(f"mean {mean!r} disagrees with G'(1) ~ {fd!r} for {p}")
    return MomentSet(
        mean=mean,
        variance=mean * (1.0 + q),
        fano=1.0 + q,
        mandel_q=q,
        reduced_covariance=q / mean,
    )


def reduced_covariance(p: CountingParams, verify: bool = True) -> float:
    """Reduced two-detector covariance ``R = K - 1 = (F - 1) / mean``."""
    m = moments(p, verify=verify)
    if m.reduced_covariance is None:
        raise UndefinedMomentError(f"mean {m.mean!r} is too small for R at {p}")
    return m.reduced_covariance


def fano_weak_coupling_limit(lam: float, x: float, tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """Limit of the Fano factor as ``s -> 0`` at fixed ``lam`` and ``x``.

    ``F -> 1 + S2 / S1``: finite, so the weak-coupling curve saturates.
    """
    sums = _model_sums(CountingParams(s=1.0, x=x, lam=lam, tol=tol))
    _, S1, S2 = sums.S
    if S1 == 0.0:
        raise UndefinedMomentError("no counts at this lam, x")
    return 1.0 + S2 / S1


# --------------------------------------------------------------------------
# sweeps

SWEEP_QUANTITIES = ("mean", "fano", "reduced_covariance")


@dataclass(frozen=True)
class SweepRow:
    s: float
    lam: float
    x: float
    value: float | None
    error: str | None = None


def _evaluate(args: tuple[CountingParams, str]) -> SweepRow:
    p, quantity = args
    try:
        m = moments(p)
        value = getattr(m, quantity)
        if value is None:
            raise UndefinedMomentError(f"{quantity} undefined: mean {m.mean!r} too small")
        return SweepRow(p.s, p.lam_eff, p.x, float(value))
    except SpolightError as exc:
        return SweepRow(p.s, p.lam_eff, p.x, None, f"{type(exc).__name__}: {exc}")


def sweep(grid: Sequence[CountingParams], quantity: str, workers: int = 1) -> list[SweepRow]:
    """Evaluate ``quantity`` at every grid point, in input order.

    A failing point yields a row with ``value=None`` and the error message;
    the sweep itself never aborts on a numerical error.
    """
    if quantity not in SWEEP_QUANTITIES:
        raise DomainError(f"quantity must be one of {SWEEP_QUANTITIES}, got {quantity!r}")
    grid = list(grid)
    if not grid:
        raise DomainError("sweep grid is empty")
    jobs = [(p, quantity) for p in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(j) for j in jobs]


def x_grid(x_min: float, x_max: float, steps: int, log: bool = False) -> np.ndarray:
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if x_min < 0 or x_max < x_min:
        raise DomainError(f"need 0 <= x_min <= x_max, got {x_min}, {x_max}")
    if steps == 1:
        return np.array([float(x_min)])
    if log:
        if x_min <= 0:
            raise DomainError("log grid needs x_min > 0")
        return np.geomspace(x_min, x_max, steps)
    return np.linspace(x_min, x_max, steps)


def make_grid(
    s_values: Iterable[float],
    xs: Iterable[float],
    lam: float | None = None,
    eta: float | None = None,
    tol: SeriesTolerance = DEFAULT_TOL,
) -> list[CountingParams]:
    """Cartesian grid, ``s`` outermost."""
    xs = [float(v) for v in xs]
    return [CountingParams(s=float(s), x=x, lam=lam, eta=eta, tol=tol) for s in s_values for x in xs]


def _fmt(v: float) -> str:
    return format(v, ".10g")


def write_sweep_csv(rows: Sequence[SweepRow], fh: TextIO) -> None:
    """CSV with header ``s,lambda,x,value``; failed rows carry ``nan``."""
    fh.write("s,lambda,x,value\n")
    for r in rows:
        value = "nan" if r.value is None else _fmt(r.value)
        fh.write(f"{_fmt(r.s)},{_fmt(r.lam)},{_fmt(r.x)},{value}\n")
