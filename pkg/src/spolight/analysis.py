"""Correlation and Fano-factor estimators on binned count streams.

All pair sums are accumulated in integers and the normalised correlation

    K(d) = T^2 sum_t A(t) B(t+d) / ((T - d) sum_t A(t) sum_t B(t))

is formed from a single rational, so it does not depend on the overall
count scale beyond the final rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ConfigError, DomainError, ZeroMeanChannelError
from .stream import BinnedCountStream

MODES = ("cross", "auto")


@dataclass(frozen=True, eq=False)
class CorrelationResult:
    delays: np.ndarray  # bins
    bin_width: float  # ns
    K: np.ndarray
    R: np.ndarray
    stderr_R: np.ndarray
    mode: str
    channel: int  # first channel used (0-based)
    stderr_source: str  # "shot_noise" or "run_split"
    n_runs: int = 1

    @property
    def delay_ns(self) -> np.ndarray:
        return self.delays * self.bin_width

    @property
    def self_product_delays(self) -> np.ndarray:
        """Delays whose value includes the ``A(t)^2`` self-product term
        (auto-correlation at zero delay)."""
        return self.delays[self.delays == 0] if self.mode == "auto" else self.delays[:0]


def default_delays(mode: str, max_delay: int) -> np.ndarray:
    """``0..max_delay`` for cross-correlation, ``1..max_delay`` for auto."""
    _check_mode(mode)
    if max_delay < 0:
        raise DomainError("max_delay must be >= 0")
    start = 1 if mode == "auto" else 0
    return np.arange(start, max_delay + 1, dtype=np.int64)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")


def _check_delays(delays: Iterable[int], n_bins: int) -> np.ndarray:
    d = np.asarray(list(delays) if not isinstance(delays, np.ndarray) else delays)
    if d.ndim != 1 or d.size == 0:
        raise DomainError("delays must be a nonempty 1-D sequence")
    if not np.issubdtype(d.dtype, np.integer):
        if not np.all(np.mod(d, 1) == 0):
            raise DomainError("delays must be integers")
    d = d.astype(np.int64)
    if d.min() < 0:
        raise DomainError("delays must be >= 0")
    if d.max() >= n_bins:
        raise DomainError(f"delay {int(d.max())} not below the stream length {n_bins}")
    return d


def lagged_products(
    bins_a: np.ndarray,
    counts_a: np.ndarray,
    bins_b: np.ndarray,
    counts_b: np.ndarray,
    max_delay: int,
) -> np.ndarray:
    """``sum_t A(t) B(t + d)`` for ``d = 0..max_delay`` from sparse channels.

    Walks the k-th occupied B bin at or after each occupied A bin for
    k = 0, 1, ... until no pair is within ``max_delay``.
    """
    out = np.zeros(max_delay + 1, dtype=np.int64)
    if bins_a.size == 0 or bins_b.size == 0:
        return out
    first = np.searchsorted(bins_b, bins_a, side="left")
    active = np.arange(bins_a.size)
    k = 0
    while active.size:
        j = first[active] + k
        ok = j < bins_b.size
        active, j = active[ok], j[ok]
        lag = bins_b[j] - bins_a[active]
        ok = lag <= max_delay
        active, j, lag = active[ok], j[ok], lag[ok]
        if active.size:
            prod = counts_a[active] * counts_b[j]
            # group sums stay far below 2^53, so float accumulation is exact
            out += np.rint(np.bincount(lag, weights=prod, minlength=max_delay + 1)).astype(np.int64)
        k += 1
    return out


def _channels(stream: BinnedCountStream, mode: str, channel: int) -> tuple[int, int]:
    _check_mode(mode)
    if mode == "cross":
        if stream.n_channels != 2:
            raise DomainError("cross-correlation needs a two-channel stream")
        return 0, 1
    if not 0 <= channel < stream.n_channels:
        raise DomainError(f"channel {channel + 1} not present")
    return channel, channel


def shot_noise_stderr(n_bins: int, delay: np.ndarray, mean_a: float, mean_b: float) -> np.ndarray:
    """Leading-order standard error of ``R(d)`` for uncorrelated Poisson
    channels, ``1 / sqrt((T - d) mean_a mean_b)``."""
    return 1.0 / np.sqrt((n_bins - delay) * mean_a * mean_b)


def correlation(
    stream: BinnedCountStream,
    delays: Sequence[int] | None = None,
    mode: str = "cross",
    channel: int = 0,
    max_delay: int = 80,
) -> CorrelationResult:
    """Normalised correlation ``K(d)`` and ``R(d) = K(d) - 1``.

    Parameters
    ----------
    stream : BinnedCountStream
    delays : sequence of int, optional
        Defaults to :func:`default_delays` up to ``max_delay``.
    mode : {"cross", "auto"}
        Cross uses channel 1 then channel 2; auto uses ``channel`` twice.
    channel : int
        0-based channel for auto-correlation.

    Raises
    ------
    ZeroMeanChannelError
        If a participating channel has no counts.
    """
    ia, ib = _channels(stream, mode, channel)
    d = default_delays(mode, max_delay) if delays is None else _check_delays(delays, stream.n_bins)
    T = stream.n_bins
    sa, sb = stream.total(ia), stream.total(ib)
    if sa == 0 or sb == 0:
        raise ZeroMeanChannelError(f"channel {(ia if sa == 0 else ib) + 1} has zero mean")
    sums = lagged_products(
        stream.occupied[ia], stream.counts[ia], stream.occupied[ib], stream.counts[ib], int(d.max())
    )
    K = np.array([float(Fraction(int(sums[k]) * T * T, (T - int(k)) * sa * sb)) for k in d])
    se = shot_noise_stderr(T, d, sa / T, sb / T)
    return CorrelationResult(d, stream.bin_width, K, K - 1.0, se, mode, ia, "shot_noise")


def run_split(
    stream: BinnedCountStream,
    n_runs: int,
    delays: Sequence[int] | None = None,
    mode: str = "cross",
    channel: int = 0,
    max_delay: int = 80,
) -> CorrelationResult:
    """Correlation averaged over ``n_runs`` equal consecutive segments.

    ``R`` is the segment mean and its standard error is the sample standard
    deviation over segments divided by ``sqrt(n_runs)``. Trailing bins that do
    not fill a segment are dropped.
    """
    if isinstance(n_runs, bool) or int(n_runs) != n_runs or n_runs < 2:
        raise ConfigError(f"n_runs must be an integer >= 2, got {n_runs!r}")
    n_runs = int(n_runs)
    d = default_delays(mode, max_delay) if delays is None else _check_delays(delays, stream.n_bins)
    seg = stream.n_bins // n_runs
    if seg < int(d.max()) + 2:
        raise ConfigError(
            f"too few bins: {stream.n_bins} bins in {n_runs} runs leaves {seg} per run, "
            f"need at least {int(d.max()) + 2}"
        )
    rs = np.array(
        [
            correlation(stream.segment(i * seg, (i + 1) * seg), d, mode, channel).R
            for i in range(n_runs)
        ]
    )
    R = rs.mean(axis=0)
    se = rs.std(axis=0, ddof=1) / math.sqrt(n_runs)
    ia, _ = _channels(stream, mode, channel)
    return CorrelationResult(d, stream.bin_width, R + 1.0, R, se, mode, ia, "run_split", n_runs)


def empirical_fano(counts: Sequence[int]) -> float:
    """Variance over mean of a count record, population variance, exact sums."""
    c = np.asarray(counts, dtype=np.int64)
    if c.ndim != 1 or c.size == 0:
        raise DomainError("counts must be a nonempty 1-D sequence")
    if c.min() < 0:
        raise DomainError("counts must be nonnegative")
    return _fano_from_sums(c.size, int(c.sum()), int((c * c).sum()))


def channel_fano(stream: BinnedCountStream, ch: int = 0) -> float:
    """:func:`empirical_fano` of one channel without densifying it."""
    c = stream.counts[ch]
    return _fano_from_sums(stream.n_bins, int(c.sum()), int((c * c).sum()))


def _fano_from_sums(n: int, s1: int, s2: int) -> float:
    if s1 == 0:
        raise ZeroMeanChannelError("Fano factor undefined for a zero-mean record")
    return float(Fraction(n * s2 - s1 * s1, n * s1))


def poisson_fano_stderr(n_bins: int) -> float:
    """Standard error of the empirical Fano factor of ``n_bins`` Poisson
    counts, ``sqrt(2 / n_bins)`` to leading order at any mean."""
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    return math.sqrt(2.0 / n_bins)


def write_correlation_csv(result: CorrelationResult, fh: TextIO) -> None:
    fh.write("delay_bins,delay_ns,K,R,stderr_R\n")
    for d, t, k, r, e in zip(result.delays, result.delay_ns, result.K, result.R, result.stderr_R):
        fh.write(f"{int(d)},{t:.10g},{k:.10g},{r:.10g},{e:.10g}\n")
