"""Binned photon-count streams and their CSV representation.

Detector records at 12.5 ns resolution run to 10^8 bins per second, almost
all of them empty, so a stream is held sparsely: for each channel the sorted
indices of occupied bins and the counts in them. ``dense()`` materializes a
channel when that is affordable.

File grammar (``\\n`` line endings)::

    # spolight-binned v1
    # bin_width_ns=<decimal>
    # channels=<1|2>
    bin,ch1[,ch2]
    0,<count>[,<count>]
    1,...

Bin indices are contiguous from 0 and counts are nonnegative integers.
"""
from __future__ import annotations

import mmap
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np
import polars as pl

from .errors import DomainError, MalformedStreamError

MAGIC = "# spolight-binned v1"
_WIDTH_RE = re.compile(r"# bin_width_ns=([0-9]+(?:\.[0-9]+)?)")
_CHANNELS_RE = re.compile(r"# channels=([12])")
_WRITE_CHUNK = 2_000_000


def _run_length(sorted_bins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Occupied bins and multiplicities of a nondecreasing index array."""
    if sorted_bins.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    starts = np.flatnonzero(np.diff(sorted_bins, prepend=sorted_bins[0] - 1))
    counts = np.diff(np.append(starts, sorted_bins.size))
    return sorted_bins[starts].astype(np.int64), counts.astype(np.int64)


@dataclass(frozen=True, eq=False)
class BinnedCountStream:
    bin_width: float  # ns
    n_bins: int
    occupied: tuple[np.ndarray, ...]
    counts: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.bin_width > 0:
            raise DomainError(f"bin_width must be > 0, got {self.bin_width}")
        if self.n_bins < 0:
            raise DomainError("n_bins must be >= 0")
        if len(self.occupied) not in (1, 2) or len(self.occupied) != len(self.counts):
            raise DomainError("a stream holds one or two channels")
        for b, c in zip(self.occupied, self.counts):
            if b.shape != c.shape:
                raise DomainError("occupied bins and counts differ in length")
            if b.size and (b[0] < 0 or b[-1] >= self.n_bins or np.any(np.diff(b) <= 0)):
                raise DomainError("occupied bins must be strictly increasing within [0, n_bins)")
            if c.size and c.min() <= 0:
                raise DomainError("stored counts must be positive")

    # construction ---------------------------------------------------------

    @classmethod
    def from_dense(cls, bin_width: float, *channels: Sequence[int]) -> "BinnedCountStream":
        arrays = [np.asarray(ch, dtype=np.int64) for ch in channels]
        if not arrays or len({a.size for a in arrays}) != 1:
            raise DomainError("channels must be non-empty in number and of equal length")
        if any(a.size and a.min() < 0 for a in arrays):
            raise DomainError("counts must be nonnegative")
        occ = tuple(np.flatnonzero(a).astype(np.int64) for a in arrays)
        cnt = tuple(a[o] for a, o in zip(arrays, occ))
        return cls(float(bin_width), int(arrays[0].size), occ, cnt)

    @classmethod
    def from_bin_indices(
        cls, bin_width: float, n_bins: int, *indices: np.ndarray
    ) -> "BinnedCountStream":
        """One channel per array of (nondecreasing) per-event bin indices."""
        pairs = [_run_length(np.asarray(ix, dtype=np.int64)) for ix in indices]
        return cls(float(bin_width), int(n_bins), tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    # access ---------------------------------------------------------------

    @property
    def n_channels(self) -> int:
        return len(self.occupied)

    def total(self, ch: int = 0) -> int:
        return int(self.counts[ch].sum())

    def mean(self, ch: int = 0) -> float:
        return self.total(ch) / self.n_bins

    def dense(self, ch: int = 0) -> np.ndarray:
        out = np.zeros(self.n_bins, dtype=np.int64)
        out[self.occupied[ch]] = self.counts[ch]
        return out

    @property
    def channels(self) -> tuple[np.ndarray, ...]:
        return tuple(self.dense(i) for i in range(self.n_channels))

    def segment(self, start: int, stop: int) -> "BinnedCountStream":
        """Bins ``[start, stop)`` re-indexed from zero."""
        if not 0 <= start <= stop <= self.n_bins:
            raise DomainError(f"segment [{start}, {stop}) outside [0, {self.n_bins})")
        occ, cnt = [], []
        for b, c in zip(self.occupied, self.counts):
            lo, hi = np.searchsorted(b, [start, stop])
            occ.append(b[lo:hi] - start)
            cnt.append(c[lo:hi])
        return BinnedCountStream(self.bin_width, stop - start, tuple(occ), tuple(cnt))

    def equals(self, other: "BinnedCountStream") -> bool:
        return (
            self.bin_width == other.bin_width
            and self.n_bins == other.n_bins
            and self.n_channels == other.n_channels
            and all(np.array_equal(a, b) for a, b in zip(self.occupied, other.occupied))
            and all(np.array_equal(a, b) for a, b in zip(self.counts, other.counts))
        )


# CSV ----------------------------------------------------------------------


def format_bin_width(width: float) -> str:
    return np.format_float_positional(float(width), trim="-")


def write_stream_csv(stream: BinnedCountStream, fh: TextIO, chunk: int = _WRITE_CHUNK) -> None:
    """Write ``stream`` in the binned-count grammar, ``chunk`` rows at a time."""
    nch = stream.n_channels
    fh.write(f"{MAGIC}\n# bin_width_ns={format_bin_width(stream.bin_width)}\n# channels={nch}\n")
    fh.write("bin," + ",".join(f"ch{i + 1}" for i in range(nch)) + "\n")
    for lo in range(0, stream.n_bins, chunk):
        hi = min(lo + chunk, stream.n_bins)
        cols = {"bin": np.arange(lo, hi, dtype=np.int64)}
        for i, (b, c) in enumerate(zip(stream.occupied, stream.counts)):
            dense = np.zeros(hi - lo, dtype=np.int64)
            a, z = np.searchsorted(b, [lo, hi])
            dense[b[a:z] - lo] = c[a:z]
            cols[f"ch{i + 1}"] = dense
        fh.write(pl.DataFrame(cols).write_csv(include_header=False, line_terminator="\n"))


def save_stream(stream: BinnedCountStream, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        write_stream_csv(stream, fh)


def _read_header(path: Path) -> tuple[float, int]:
    with open(path, "rb") as fh:
        raw = [fh.readline() for _ in range(4)]
    try:
        lines = [r.decode("ascii") for r in raw]
    except UnicodeDecodeError as exc:
        raise MalformedStreamError(f"{path}: header is not ASCII") from exc
    for i, line in enumerate(lines):
        if not line.endswith("\n") or line.endswith("\r\n"):
            raise MalformedStreamError(f"{path}: line {i + 1} missing or not '\\n'-terminated")
    lines = [line[:-1] for line in lines]
    if lines[0] != MAGIC:
        raise MalformedStreamError(f"{path}: line 1 must be {MAGIC!r}, got {lines[0]!r}")
    m = _WIDTH_RE.fullmatch(lines[1])
    if not m:
        raise MalformedStreamError(f"{path}: line 2 must be '# bin_width_ns=<decimal>'")
    width = float(m.group(1))
    if width <= 0:
        raise MalformedStreamError(f"{path}: bin width must be positive")
    m = _CHANNELS_RE.fullmatch(lines[2])
    if not m:
        raise MalformedStreamError(f"{path}: line 3 must be '# channels=<1|2>'")
    nch = int(m.group(1))
    expected = "bin," + ",".join(f"ch{i + 1}" for i in range(nch))
    if lines[3] != expected:
        raise MalformedStreamError(f"{path}: line 4 must be {expected!r}, got {lines[3]!r}")
    return width, nch


def _reject_carriage_returns(path: Path) -> None:
    with open(path, "rb") as fh:
        if path.stat().st_size == 0:
            return
        with mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ) as mm:
            pos = mm.find(b"\r")
    if pos >= 0:
        raise MalformedStreamError(f"{path}: carriage return at byte {pos}; lines must end in '\\n'")


def load_stream(path: str | Path) -> BinnedCountStream:
    """Parse and validate a binned-count CSV file.

    Raises ``FileNotFoundError`` for a missing file and
    :class:`MalformedStreamError` for any grammar violation.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such stream file: {path}")
    width, nch = _read_header(path)
    _reject_carriage_returns(path)
    names = ["bin"] + [f"ch{i + 1}" for i in range(nch)]
    lf = pl.scan_csv(
        path,
        skip_rows=3,
        has_header=True,
        schema={n: pl.Int64 for n in names},
        truncate_ragged_lines=False,
    )
    chans = [pl.col(n) for n in names[1:]]
    try:
        stats = (
            lf.with_row_index("_row")
            .select(
                pl.len().alias("rows"),
                (pl.col("bin") != pl.col("_row").cast(pl.Int64)).sum().alias("misplaced"),
                pl.sum_horizontal([c.null_count() for c in [pl.col("bin"), *chans]]).alias("nulls"),
                pl.min_horizontal([c.min() for c in chans]).alias("min_count"),
            )
            .collect(engine="streaming")
            .row(0, named=True)
        )
        occupied = lf.filter(pl.any_horizontal([c > 0 for c in chans])).collect(engine="streaming")
    except (pl.exceptions.ComputeError, pl.exceptions.PolarsError) as exc:
        raise MalformedStreamError(f"{path}: {str(exc).splitlines()[0]}") from exc
    if stats["rows"] == 0:
        raise MalformedStreamError(f"{path}: no data rows")
    if stats["nulls"]:
        raise MalformedStreamError(f"{path}: missing values")
    if stats["misplaced"]:
        raise MalformedStreamError(f"{path}: bin indices must run 0, 1, 2, ... without gaps")
    if stats["min_count"] < 0:
        raise MalformedStreamError(f"{path}: negative count")
    bins = occupied["bin"].to_numpy()
    occ, cnt = [], []
    for n in names[1:]:
        c = occupied[n].to_numpy()
        keep = c > 0
        occ.append(bins[keep].astype(np.int64))
        cnt.append(c[keep].astype(np.int64))
    return BinnedCountStream(width, int(stats["rows"]), tuple(occ), tuple(cnt))
