"""Minimal deterministic SVG line plots for CSV tables.

Output depends only on the input rows and options: coordinates are written
with fixed precision and series keep their order of first appearance, so the
same table always renders to the same bytes.
"""
from __future__ import annotations

import csv
import math
from typing import Iterable, Mapping, Sequence, TextIO
from xml.sax.saxutils import escape

from .errors import DomainError, EmptySelectionError

WIDTH = 640
HEIGHT = 420
_MARGIN = dict(left=72, right=24, top=36, bottom=56)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def read_csv_rows(fh: TextIO) -> list[dict[str, str]]:
    return list(csv.DictReader(fh))


def _number(row: Mapping[str, object], col: str) -> float:
    try:
        return float(row[col])  # type: ignore[arg-type]
    except (TypeError, ValueError) as exc:
        raise DomainError(f"column {col!r} holds non-numeric value {row[col]!r}") from exc


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _pad(lo: float, hi: float) -> tuple[float, float]:
    if hi > lo:
        return lo, hi
    half = abs(lo) * 0.05 or 0.5
    return lo - half, hi + half


def render_plot(
    rows: Sequence[Mapping[str, object]],
    x: str,
    y: str,
    series: str | None = None,
    log_x: bool = False,
    title: str | None = None,
) -> str:
    """SVG document plotting column ``y`` against column ``x``.

    One polyline per distinct value of column ``series`` (a single line if
    ``None``); a group with one point is drawn as a marker. Rows whose ``y``
    is not finite (failed sweep points) are skipped.

    Raises
    ------
    EmptySelectionError
        If the table is empty, a selected column is absent, or no plottable
        point remains.
    DomainError
        If a selected column is not numeric, or ``log_x`` meets ``x <= 0``.
    """
    if not rows:
        raise EmptySelectionError("table has no rows")
    for col in (x, y) + ((series,) if series else ()):
        if col not in rows[0]:
            raise EmptySelectionError(f"column {col!r} not in table")

    groups: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        xv, yv = _number(row, x), _number(row, y)
        if not (math.isfinite(xv) and math.isfinite(yv)):
            continue
        if log_x and xv <= 0:
            raise DomainError(f"log x-axis needs positive {x!r}, got {xv}")
        key = str(row[series]) if series else ""
        groups.setdefault(key, []).append((xv, yv))
    if not groups:
        raise EmptySelectionError("no finite points selected")

    pts = [p for g in groups.values() for p in g]
    fx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    x_lo, x_hi = _pad(min(fx(p[0]) for p in pts), max(fx(p[0]) for p in pts))
    y_lo, y_hi = _pad(min(p[1] for p in pts), max(p[1] for p in pts))

    left, top = _MARGIN["left"], _MARGIN["top"]
    pw = WIDTH - left - _MARGIN["right"]
    ph = HEIGHT - top - _MARGIN["bottom"]

    def px(v: float) -> float:
        return left + (fx(v) - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle">{escape(title)}</text>')

    if log_x:
        xticks = [10.0**k for k in range(math.ceil(x_lo - 1e-9), math.floor(x_hi + 1e-9) + 1)]
        if not xticks:
            xticks = [10.0**x_lo, 10.0**x_hi]
    else:
        xticks = _nice_ticks(x_lo, x_hi)
    for t in xticks:
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">'
        f'{escape(x)}{" (log)" if log_x else ""}</text>'
    )
    out.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">{escape(y)}</text>'
    )

    for i, (key, g) in enumerate(groups.items()):
        color = _PALETTE[i % len(_PALETTE)]
        g = sorted(g)
        label = f' data-series="{escape(key, {chr(34): "&quot;"})}"' if series else ""
        if len(g) == 1:
            X, Y = px(g[0][0]), py(g[0][1])
            out.append(f'<circle cx="{X:.2f}" cy="{Y:.2f}" r="3" fill="{color}"{label}/>')
        else:
            coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in g)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{label}/>')
        if series:
            ly = top + 14 + 16 * i
            out.append(f'<text x="{left + pw - 8}" y="{ly}" text-anchor="end" fill="{color}">'
                       f'{escape(series)}={escape(key)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_rows_to_file(rows: Iterable[Mapping[str, object]], path: str, **kwargs) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(render_plot(list(rows), **kwargs))
