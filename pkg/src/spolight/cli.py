"""Command-line front end.

Exit status: 0 on success, 2 on a usage error (bad or missing flags,
invalid parameter values), 1 on a runtime or numerical failure.

Numbers printed to the terminal are library values rounded half-to-even
with ``decimal``: a fixed number of decimals for ``moments`` and ``dist``,
significant digits for ``plasmon``. CSV files written by ``sweep`` and
``analyze`` carry 10 significant digits.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Iterator, Sequence, TextIO

from . import analysis, counting, plasmon, plot, simulator, stream
from .errors import ConfigError, DomainError, MalformedStreamError, SpolightError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# display rule ---------------------------------------------------------------


def format_fixed(value: float | None, places: int) -> str:
    """``value`` rounded half-to-even to ``places`` decimals."""
    if value is None or value != value:
        return "nan"
    q = Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN)
    return str(q) if places > 0 or q.adjusted() < 28 else format(q, "f")


def format_significant(value: float, digits: int) -> str:
    """``value`` rounded half-to-even to ``digits`` significant digits."""
    if value != value:
        return "nan"
    d = Decimal(repr(float(value)))
    if d.is_zero() or not d.is_finite():
        return str(d)
    q = d.quantize(Decimal(1).scaleb(d.adjusted() - digits + 1), rounding=ROUND_HALF_EVEN)
    return str(q)


# argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < simulator.SEED_LIMIT:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_coupling(p: argparse.ArgumentParser, need_x: bool = True) -> None:
    p.add_argument("--s", type=float, required=True, help="coupling parameter s")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float, help="fixed Poisson parameter")
    g.add_argument("--eta", type=float, help="Poisson parameter proportional to x: lambda = eta * x")
    if need_x:
        p.add_argument("--x", type=float, required=True, help="dimensionless interaction time")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spolight", description="Photon counting statistics of surface-plasmon light.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gold = plasmon.GOLD_HENE
    p = sub.add_parser("plasmon", help="derived surface plasmon parameters")
    p.add_argument("--lambda0-nm", type=float, default=gold["lambda0"])
    p.add_argument("--eps-r", type=float, default=gold["epsR"], help="minus the real metal permittivity")
    p.add_argument("--eps-i", type=float, default=gold["epsI"], help="imaginary metal permittivity")
    p.add_argument("--eps1", type=float, default=gold["eps1"], help="prism permittivity")
    p.add_argument("--eps3", type=float, default=gold["eps3"], help="exit medium permittivity")
    p.add_argument("--d-nm", type=float, default=gold["d"], help="film thickness")
    p.add_argument("--ly-nm", type=float, default=gold["Ly"], help="transverse spot extent")
    p.add_argument("--rel-linewidth", type=float, default=gold["rel_linewidth"])
    p.add_argument("--mu-over-omega0", type=float, default=plasmon.DEFAULT_MU_OVER_OMEGA0)
    p.add_argument("--convention", choices=("angular", "ordinary"), default="angular")
    p.add_argument("--precision", type=_positive_int, default=6, help="significant digits")

    p = sub.add_parser("moments", help="mean, variance, Fano factor and R")
    _add_coupling(p)
    p.add_argument("--precision", type=_nonneg_int, default=4, help="decimal places")
    p.add_argument("--no-verify", action="store_true", help="skip the cross-route checks")

    p = sub.add_parser("dist", help="count distribution W_n")
    _add_coupling(p)
    p.add_argument("--n-max", type=_nonneg_int, default=None, help="last n to print")
    p.add_argument("--precision", type=_nonneg_int, default=10, help="decimal places")

    p = sub.add_parser("sweep", help="a moment over an (s, x) grid as CSV")
    p.add_argument("--quantity", choices=counting.SWEEP_QUANTITIES, required=True)
    p.add_argument("--s-list", type=_float_list, required=True, help="comma-separated s values")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--eta", type=float)
    p.add_argument("--x-min", type=float, required=True)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--x-steps", type=_positive_int, required=True)
    p.add_argument("--log", action="store_true", help="logarithmic x grid and plot axis")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", default="-", help="CSV path, '-' for standard output")
    p.add_argument("--plot", default=None, help="also write an SVG plot here")

    p = sub.add_parser("simulate", help="Monte Carlo detection chain to a binned CSV")
    p.add_argument("--flux", type=float, default=2e5, help="photon flux, s^-1")
    p.add_argument("--duration-s", type=float, default=1.0)
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--dead-time-ns", type=float, default=63.5)
    p.add_argument("--bin-ns", type=float, default=12.5)
    p.add_argument("--split-ratio", type=float, default=0.5)
    p.add_argument("--topology", choices=simulator.TOPOLOGIES, default="single_detector")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, help="CSV path, '-' for standard output")

    p = sub.add_parser("analyze", help="correlation of a binned CSV")
    p.add_argument("--in", dest="inp", required=True, help="binned CSV path")
    p.add_argument("--mode", choices=analysis.MODES, default="cross")
    p.add_argument("--channel", type=_positive_int, default=1, help="channel for auto mode")
    p.add_argument("--max-delay", type=_nonneg_int, default=80, help="largest delay in bins")
    p.add_argument("--min-delay", type=_nonneg_int, default=None,
                   help="smallest delay (default 0 cross, 1 auto)")
    p.add_argument("--runs", type=_positive_int, default=None,
                   help="split into this many runs for the standard error")
    p.add_argument("--out", default="-", help="CSV path, '-' for standard output")
    p.add_argument("--plot", default=None, help="also write an SVG correlogram here")
    return parser


# subcommands ------------------------------------------------------------------


@contextlib.contextmanager
def _output(path: str, stdout: TextIO) -> Iterator[TextIO]:
    if path == "-":
        yield stdout
        return
    with open(path, "w", newline="") as fh:
        yield fh


def _params(args) -> counting.CountingParams:
    return counting.CountingParams(s=args.s, x=args.x, lam=args.lam, eta=args.eta)


def _cmd_plasmon(args, out: TextIO) -> None:
    cfg = plasmon.OpticalConfig(
        lambda0=args.lambda0_nm,
        eps1=args.eps1,
        epsR=args.eps_r,
        epsI=args.eps_i,
        eps3=args.eps3,
        d=args.d_nm,
        Ly=args.ly_nm,
        rel_linewidth=args.rel_linewidth,
    )
    derived = plasmon.derive_plasmon_parameters(cfg, args.mu_over_omega0, args.convention)
    out.write("quantity,value,unit\n")
    for name, value in derived.as_dict().items():
        out.write(f"{name},{format_significant(value, args.precision)},{plasmon.UNITS[name]}\n")


def _cmd_moments(args, out: TextIO) -> None:
    m = counting.moments(_params(args), verify=not args.no_verify)
    vals = (m.mean, m.variance, m.fano, m.reduced_covariance)
    out.write("mean,variance,fano,R\n")
    out.write(",".join(format_fixed(v, args.precision) for v in vals) + "\n")


def _cmd_dist(args, out: TextIO) -> None:
    d = counting.distribution(_params(args), args.n_max)
    out.write("n,W\n")
    for n, w in enumerate(d.weights):
        out.write(f"{n},{format_fixed(w, args.precision)}\n")


def _cmd_sweep(args, out: TextIO) -> None:
    xs = counting.x_grid(args.x_min, args.x_max, args.x_steps, args.log)
    grid = counting.make_grid(args.s_list, xs, lam=args.lam, eta=args.eta)
    rows = counting.sweep(grid, args.quantity, workers=args.workers)
    with _output(args.out, out) as fh:
        counting.write_sweep_csv(rows, fh)
    for r in rows:
        if r.error:
            print(f"warning: s={r.s} x={r.x}: {r.error}", file=sys.stderr)
    if args.plot:
        table = [{"s": r.s, "lambda": r.lam, "x": r.x, "value": r.value if r.value is not None else "nan"}
                 for r in rows]
        along_x = len(xs) > 1
        svg = plot.render_plot(
            table,
            x="x" if along_x else "s",
            y="value",
            series="s" if along_x and len(args.s_list) > 1 else None,
            log_x=args.log,
            title=args.quantity,
        )
        with open(args.plot, "w", newline="") as fh:
            fh.write(svg)


def _cmd_simulate(args, out: TextIO) -> None:
    cfg = simulator.SimConfig(
        photon_flux=args.flux,
        duration=args.duration_s,
        quantum_efficiency=args.efficiency,
        dead_time=args.dead_time_ns,
        bin_width=args.bin_ns,
        split_ratio=args.split_ratio,
        topology=args.topology,
        seed=args.seed,
    )
    result = simulator.run_experiment(cfg)
    with _output(args.out, out) as fh:
        stream.write_stream_csv(result, fh)


def _cmd_analyze(args, out: TextIO) -> None:
    data = stream.load_stream(args.inp)
    if args.min_delay is None:
        delays = analysis.default_delays(args.mode, args.max_delay)
    else:
        if args.min_delay > args.max_delay:
            raise ConfigError("--min-delay exceeds --max-delay")
        delays = list(range(args.min_delay, args.max_delay + 1))
    ch = args.channel - 1
    if args.runs is None or args.runs == 1:
        result = analysis.correlation(data, delays, args.mode, ch)
    else:
        result = analysis.run_split(data, args.runs, delays, args.mode, ch)
    with _output(args.out, out) as fh:
        analysis.write_correlation_csv(result, fh)
    if args.plot:
        table = [{"delay_ns": t, "R": r} for t, r in zip(result.delay_ns, result.R)]
        with open(args.plot, "w", newline="") as fh:
            fh.write(plot.render_plot(table, x="delay_ns", y="R", title=f"{args.mode} R(d)"))


_COMMANDS = {
    "plasmon": _cmd_plasmon,
    "moments": _cmd_moments,
    "dist": _cmd_dist,
    "sweep": _cmd_sweep,
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
}


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args, stdout)
    except (ConfigError, DomainError) as exc:
        print(f"spolight {args.command}: invalid argument: {exc}", file=stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"spolight {args.command}: file not found: {exc.filename or exc}", file=stderr)
        return EXIT_RUNTIME
    except MalformedStreamError as exc:
        print(f"spolight {args.command}: malformed stream CSV: {exc}", file=stderr)
        return EXIT_RUNTIME
    except (SpolightError, ArithmeticError, OSError) as exc:
        print(f"spolight {args.command}: error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
