"""Seeded Monte Carlo of the photon detection chain.

source (Poisson emission) -> optional 50/50-type beam splitter -> per-channel
detector (quantum efficiency, non-paralyzable dead time) -> time binning.

Timestamps are in nanoseconds. Every stage draws from its own generator
seeded by :func:`derive_seed`, so the whole chain is a pure function of
:class:`SimConfig`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .stream import BinnedCountStream

SEED_LIMIT = 2**64

# stage indices fed to derive_seed
STAGE_SOURCE = 0
STAGE_SPLITTER = 1
STAGE_DETECTOR = 2  # + channel index

TOPOLOGIES = ("single_detector", "beam_splitter")


def derive_seed(master: int, stage: int) -> int:
    """64-bit sub-seed for pipeline ``stage``.

    The first 64-bit word of ``numpy.random.SeedSequence([master, stage])``,
    a hash of both integers that is stable across numpy versions.
    """
    _check_seed(master)
    return int(np.random.SeedSequence([master, stage]).generate_state(1, np.uint64)[0])


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < SEED_LIMIT:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


@dataclass(frozen=True, eq=False)
class EventTimes:
    times: np.ndarray  # ns, sorted
    duration: float  # ns

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if not self.duration > 0:
            raise DomainError(f"duration must be > 0, got {self.duration}")
        if t.ndim != 1:
            raise DomainError("times must be one-dimensional")
        if t.size:
            if t[0] < 0 or t[-1] >= self.duration:
                raise DomainError("event times must lie in [0, duration)")
            if np.any(np.diff(t) < 0):
                raise DomainError("event times must be sorted")

    def __len__(self) -> int:
        return self.times.size

    @property
    def rate(self) -> float:
        """Events per second."""
        return self.times.size / (self.duration * 1e-9)


def simulate_source(flux: float, duration: float, seed: int) -> EventTimes:
    """Homogeneous Poisson emission at ``flux`` (s^-1) for ``duration`` (s),
    sampled as cumulative exponential inter-arrival times."""
    if not flux >= 0:
        raise DomainError(f"flux must be >= 0, got {flux}")
    if not duration > 0:
        raise DomainError(f"duration must be > 0, got {duration}")
    dur_ns = duration * 1e9
    if flux == 0:
        return EventTimes(np.empty(0), dur_ns)
    rng = _rng(seed)
    scale = 1e9 / flux
    pieces = []
    t0 = 0.0
    while True:
        remaining = (dur_ns - t0) / scale
        k = int(remaining + 6.0 * math.sqrt(remaining) + 64)
        t = t0 + np.cumsum(rng.exponential(scale, k))
        if t[-1] >= dur_ns:
            pieces.append(t[t < dur_ns])
            break
        pieces.append(t)
        t0 = t[-1]
    return EventTimes(np.concatenate(pieces), dur_ns)


def _nonparalyzable(t: np.ndarray, dead_time: float) -> np.ndarray:
    """Mask of registered events under a non-paralyzable dead time."""
    keep = np.ones(t.size, dtype=bool)
    if dead_time <= 0 or t.size < 2:
        return keep
    # An event at least dead_time after its raw predecessor is always registered,
    # so only events inside such gaps need the sequential rule.
    close = np.flatnonzero(np.diff(t) < dead_time) + 1
    prev = -2
    last = 0.0
    for j in close.tolist():
        if j != prev + 1:
            last = t[j - 1]
        if t[j] - last < dead_time:
            keep[j] = False
        else:
            last = t[j]
        prev = j
    return keep


def apply_detector(ev: EventTimes, efficiency: float, dead_time: float, seed: int) -> EventTimes:
    """Bernoulli detection with probability ``efficiency``, then a
    non-paralyzable ``dead_time`` (ns) after each registered event."""
    if not 0 <= efficiency <= 1:
        raise DomainError(f"efficiency must lie in [0, 1], got {efficiency}")
    if not dead_time >= 0:
        raise DomainError(f"dead_time must be >= 0, got {dead_time}")
    t = ev.times
    if efficiency < 1:
        t = t[_rng(seed).random(t.size) < efficiency]
    t = t[_nonparalyzable(t, dead_time)]
    return EventTimes(t, ev.duration)


def beam_split(ev: EventTimes, ratio: float, seed: int) -> tuple[EventTimes, EventTimes]:
    """Route each event to channel 1 with probability ``ratio``, else channel 2."""
    if not 0 <= ratio <= 1:
        raise DomainError(f"split ratio must lie in [0, 1], got {ratio}")
    to_first = _rng(seed).random(len(ev)) < ratio
    return EventTimes(ev.times[to_first], ev.duration), EventTimes(ev.times[~to_first], ev.duration)


def n_bins_for(duration: float, bin_width: float) -> int:
    if not bin_width > 0:
        raise DomainError(f"bin_width must be > 0, got {bin_width}")
    return int(math.ceil(duration / bin_width))


def bin_indices(ev: EventTimes, bin_width: float) -> np.ndarray:
    """Bin index of every event; a time on a boundary goes to the later bin."""
    n = n_bins_for(ev.duration, bin_width)
    return np.minimum(np.floor(ev.times / bin_width).astype(np.int64), n - 1)


def bin_events(ev: EventTimes, bin_width: float) -> np.ndarray:
    """Counts in the ``ceil(duration / bin_width)`` bins ``[k w, (k+1) w)``."""
    n = n_bins_for(ev.duration, bin_width)
    return np.bincount(bin_indices(ev, bin_width), minlength=n)


def synthetic_source(weights, n_bins: int, bin_width: float, seed: int) -> EventTimes:
    """Events whose per-bin number is drawn i.i.d. from ``weights``
    (``weights[n]`` = probability of ``n`` events), placed uniformly inside
    their bin. Drives the chain with a source of prescribed statistics."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or w.sum() <= 0:
        raise DomainError("weights must be a nonempty nonnegative vector")
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    rng = _rng(seed)
    per_bin = rng.choice(w.size, size=n_bins, p=w / w.sum())
    bins = np.repeat(np.arange(n_bins), per_bin)
    times = (bins + rng.random(bins.size)) * bin_width
    times.sort()
    duration = n_bins * bin_width
    return EventTimes(np.minimum(times, np.nextafter(duration, 0)), duration)


@dataclass(frozen=True)
class SimConfig:
    photon_flux: float = 2e5  # s^-1
    duration: float = 1.0  # s
    quantum_efficiency: float = 1.0
    dead_time: float = 63.5  # ns
    bin_width: float = 12.5  # ns
    split_ratio: float = 0.5
    topology: str = "single_detector"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.photon_flux >= 0:
            raise ConfigError("photon_flux must be >= 0")
        if not self.duration > 0:
            raise ConfigError("duration must be > 0")
        if not 0 <= self.quantum_efficiency <= 1:
            raise ConfigError("quantum_efficiency must lie in [0, 1]")
        if not self.dead_time >= 0:
            raise ConfigError("dead_time must be >= 0")
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be > 0")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.topology == "beam_splitter" and not 0 < self.split_ratio < 1:
            raise ConfigError("beam_splitter topology needs 0 < split_ratio < 1")
        _check_seed(self.seed)


def detect_and_bin(
    channels: tuple[EventTimes, ...], cfg: SimConfig
) -> BinnedCountStream:
    """Detector stage and binning for already-split channels."""
    duration = channels[0].duration
    n_bins = n_bins_for(duration, cfg.bin_width)
    idx = []
    for i, ch in enumerate(channels):
        det = apply_detector(
            ch, cfg.quantum_efficiency, cfg.dead_time, derive_seed(cfg.seed, STAGE_DETECTOR + i)
        )
        idx.append(bin_indices(det, cfg.bin_width))
    return BinnedCountStream.from_bin_indices(cfg.bin_width, n_bins, *idx)


def run_experiment(cfg: SimConfig) -> BinnedCountStream:
    """Full chain for ``cfg``: one channel, or two behind the beam splitter."""
    events = simulate_source(cfg.photon_flux, cfg.duration, derive_seed(cfg.seed, STAGE_SOURCE))
    if cfg.topology == "beam_splitter":
        channels = beam_split(events, cfg.split_ratio, derive_seed(cfg.seed, STAGE_SPLITTER))
    else:
        channels = (events,)
    return detect_and_bin(channels, cfg)
