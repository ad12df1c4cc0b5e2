"""Command-line front end: ``sqkd {keyrate,threshold,cad,loss,simulate,verify}``.

Every subcommand writes one delimited table (CSV by default) to ``--out`` or
stdout. Files are written atomically. Exit status: 0 success, 1 failed
verification or unexpected numerical error, 2 usage error, 3 infeasible
estimate.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bb84cad, keyrate, loss, simulate, verify
from .attack import AttackPair, depolarizing_attack
from .errors import DomainError, InfeasibleError, SqkdError
from .estimate import Mode, load_stats, stats_to_csv

WORKERS_ENV = simulate.WORKERS_ENV
DEFAULT_POINTS = 200
SWEEP_MARGIN = 0.02
EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def log10_rate(rate: float) -> str:
    return repr(math.log10(rate)) if rate > 0.0 and math.isfinite(rate) else ""


def render(header, rows, fmt: str = "csv") -> str:
    sep = "\t" if fmt == "tsv" else ","
    lines = [sep.join(header)]
    lines += [sep.join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str) -> None:
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def ordered_map(fn, items):
    """``map`` over grid points, optionally in worker processes, in input order."""
    items = list(items)
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


def grid(hi: float, points: int, lo: float = 0.0) -> list[float]:
    return [float(x) for x in np.linspace(lo, hi, points)]


# keyrate

KEYRATE_HEADER = ("mode", "kind", "Q", "Q_X", "s_ae_lower", "h_ab", "rate",
                  "effective_rate", "lambda2_worst", "log10_rate")


def _keyrate_row(job):
    mode, kind, q, q_x, sum_at_least = job
    fam = keyrate.ChannelFamily.make(kind, q, q_x)
    try:
        r = keyrate.channel_rate(mode, fam, sum_at_least=sum_at_least)
    except InfeasibleError:
        return (int(mode), kind, fam.q, fam.q_x) + (math.nan,) * 5 + ("",)
    return (int(mode), kind, fam.q, fam.q_x, r.s_ae_lower, r.h_ab, r.rate,
            r.effective_rate, r.lambda2_worst, log10_rate(r.rate))


def cmd_keyrate(args) -> int:
    mode = args.mode
    if args.stats:
        stats = load_stats(args.stats)
        r = keyrate.key_rate(mode, stats, sum_at_least=args.sum_at_least)
        row = (int(mode), "stats", r.key_error, math.nan, r.s_ae_lower, r.h_ab, r.rate,
               r.effective_rate, r.lambda2_worst, log10_rate(r.rate))
        emit(args, render(KEYRATE_HEADER, [row], args.format))
        return 0
    if args.channel == "custom" and args.qx is None:
        raise UsageError("--channel custom needs --qx")
    if args.q is not None:
        qs = [args.q]
        if args.channel != "custom":
            keyrate.ChannelFamily.make(args.channel, args.q, args.qx)
    else:
        if args.channel == "custom":
            top = 0.5
        else:
            top = min(0.5, keyrate.noise_threshold(mode, args.channel) + SWEEP_MARGIN)
        qs = grid(top, args.points)
    jobs = [(mode, args.channel, q, args.qx, args.sum_at_least) for q in qs]
    rows = ordered_map(_keyrate_row, jobs)
    if args.q is not None and math.isnan(rows[0][6]):
        raise InfeasibleError(f"no feasible Lambda_2 at Q = {args.q}")
    emit(args, render(KEYRATE_HEADER, rows, args.format))
    return 0


def cmd_threshold(args) -> int:
    t = keyrate.noise_threshold(args.mode, args.channel)
    emit(args, render(("mode", "kind", "threshold"), [(int(args.mode), args.channel, t)], args.format))
    return 0


# cad

CAD_HEADER = ("protocol_tag", "C", "Q", "rate", "effective_rate", "entropy", "log10_rate")


def _cad_row(job):
    c, basis, q, two = job
    row = next(bb84cad.comparison_rows(c, basis, [q], two_channels=two))
    return row + (log10_rate(row[3]),)


def cmd_cad(args) -> int:
    if args.threshold:
        t = bb84cad.cad_threshold(args.c, args.basis)
        emit(args, render(("C", "basis", "threshold"), [(args.c, args.basis, t)], args.format))
        return 0
    if args.q is not None:
        qs = [args.q]
    else:
        qs = grid(min(0.5, bb84cad.cad_threshold(args.c, args.basis) + SWEEP_MARGIN), args.points)
    rows = ordered_map(_cad_row, [(args.c, args.basis, q, args.two_channels) for q in qs])
    emit(args, render(CAD_HEADER, rows, args.format))
    return 0


# loss

LOSS_HEADER = ("mode", "Q", "Q_X", "alpha", "d", "p_l", "rate")
DEFAULT_MAX_KM = 100.0


def cmd_loss(args) -> int:
    mode = args.mode
    if args.max_distance:
        dist = loss.max_distance(args.q, args.qx, args.alpha, mode)
        emit(args, render(("mode", "Q", "Q_X", "alpha", "max_distance"),
                          [(int(mode), args.q, args.qx, args.alpha, dist)], args.format))
        return 0
    if args.d is not None:
        ds = [args.d]
    else:
        dist = loss.max_distance(args.q, args.qx, args.alpha, mode)
        top = dist * 1.1 if 0.0 < dist < math.inf else DEFAULT_MAX_KM
        ds = grid(top, args.points)
    rows = list(loss.distance_rows(args.q, args.qx, args.alpha, mode, ds))
    emit(args, render(LOSS_HEADER, rows, args.format))
    return 0


# simulate

def cmd_simulate(args) -> int:
    if args.attack:
        attack = AttackPair.load(args.attack)
    elif args.depolarizing is not None:
        attack = depolarizing_attack(args.depolarizing)
    else:
        raise UsageError("simulate needs --attack FILE.json or --depolarizing Q")
    cfg = simulate.ProtocolConfig(mode=args.mode, p=args.p, q=args.q_test,
                                  iterations=args.iters, seed=args.seed)
    outcome = simulate.run_protocol(cfg, attack)
    if args.stats_out:
        write_atomic(args.stats_out, stats_to_csv(outcome.empirical))
    text = simulate.outcome_to_csv(outcome)
    if args.format == "tsv":
        text = "\n".join(line if line.startswith("#") else line.replace(",", "\t")
                         for line in text.splitlines()) + "\n"
    emit(args, text)
    return 0


# verify

def cmd_verify(args) -> int:
    report = verify.fuzz(args.fuzz, args.seed, d_e=args.dim)
    rows = []
    for name in sorted(report.worst):
        w = report.worst[name]
        rows.append((name, w, verify.IDENTITY_TOL, "pass" if w <= verify.IDENTITY_TOL else "FAIL"))
    emit(args, render(("check", "worst", "tolerance", "status"), rows, args.format))
    if not report.ok:
        seed, name = report.failures[0]
        print(f"sqkd: verify: {len(report.failures)} failures, first {name} at seed {seed}",
              file=sys.stderr)
        return EXIT_FAIL
    return 0


# argument parsing

def _prob(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 0.5:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 0.5]")
    return v


def _open_prob(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"{text} is outside (0, 1)")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def _block(text: str) -> int:
    v = _positive_int(text)
    if v > bb84cad.MAX_BLOCK:
        raise argparse.ArgumentTypeError(f"block size above {bb84cad.MAX_BLOCK} is not supported")
    return v


def _mode(text: str) -> Mode:
    try:
        return Mode.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "tsv"), default="csv")

    p = sub.add_parser("keyrate", help="key rate at one Q or on a sweep")
    p.add_argument("--mode", type=_mode, default=Mode.MODE3)
    p.add_argument("--channel", choices=("independent", "dependent", "custom"), default="independent")
    p.add_argument("--q", type=_prob)
    p.add_argument("--qx", type=_prob)
    p.add_argument("--stats", help="statistics CSV to evaluate instead of a channel family")
    p.add_argument("--sum-at-least", action="store_true",
                   help="treat the Lambda sum as a lower bound and minimise over it")
    p.add_argument("--points", type=_positive_int, default=DEFAULT_POINTS)
    common(p)
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("threshold", help="largest Q with a positive key rate")
    p.add_argument("--mode", type=_mode, default=Mode.MODE3)
    p.add_argument("--channel", choices=("independent", "dependent"), default="independent")
    common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("cad", help="BB84 with advantage distillation")
    p.add_argument("--c", type=_block, required=True)
    p.add_argument("--basis", choices=("4", "6"), default="6")
    p.add_argument("--two-channels", action="store_true")
    p.add_argument("--q", type=_prob)
    p.add_argument("--threshold", action="store_true")
    p.add_argument("--points", type=_positive_int, default=DEFAULT_POINTS)
    common(p)
    p.set_defaults(func=cmd_cad)

    p = sub.add_parser("loss", help="lossy fiber rate and maximal distance")
    p.add_argument("--mode", type=_mode, default=Mode.MODE3)
    p.add_argument("--q", type=_prob, required=True)
    p.add_argument("--qx", type=_prob, required=True)
    p.add_argument("--alpha", type=_nonneg, default=loss.DEFAULT_ALPHA)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--d", type=_nonneg)
    g.add_argument("--max-distance", action="store_true")
    p.add_argument("--points", type=_positive_int, default=DEFAULT_POINTS)
    common(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("simulate", help="Monte Carlo run of the protocol")
    p.add_argument("--mode", type=_mode, default=Mode.MODE3)
    p.add_argument("--p", type=_open_prob, default=0.9)
    p.add_argument("--q-test", type=_open_prob, default=0.9)
    p.add_argument("--iters", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--attack", help="attack JSON (d_E, chi, U_F, U_R)")
    g.add_argument("--depolarizing", type=_prob, metavar="Q")
    p.add_argument("--stats-out", help="also write the empirical statistics CSV here")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check estimation identities on random attacks")
    p.add_argument("--fuzz", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dim", type=int, default=4)
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"sqkd: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DomainError, FileNotFoundError, ValueError) as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SqkdError as exc:
        print(f"sqkd: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
