"""Command-line front end: ``anchorlaw {anchor,envelope,design,tables,verify}``.

Exit codes: 0 success, 1 verification failure, 2 bad input or unknown suite,
3 LDP violation, 4 budget outside the low-budget regime, 5 table mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import design, rawcap, shuffle, verify
from .channel import Channel, anchor_with_diagnostics, ldp_check
from .errors import AnchorError, InvalidChannel, OutOfRegime, TooLarge
from .frontier import FrontierConfig, frontier, svg_plot
from .plotting import line_svg

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_LDP = 3
EXIT_REGIME = 4
EXIT_TABLE = 5

logger = logging.getLogger("anchorlaw")


class UsageError(Exception):
    pass


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def emit(text: str, out: str | None, suffix: str = ""):
    """Write ``text`` to ``out`` (adding ``suffix`` if it is a directory) or stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if suffix and path.is_dir():
        path = path / suffix
    path.write_text(text)


def parse_grid(text: str) -> np.ndarray:
    """``"a,b,c"`` or ``"lo:hi:num"`` (linear) into an array."""
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            return np.linspace(float(lo), float(hi), int(num))
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from exc


# -- anchor ---------------------------------------------------------------------

def cmd_anchor(args) -> int:
    try:
        ch = Channel.load(args.channel)
    except (OSError, InvalidChannel) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    res = anchor_with_diagnostics(ch)
    emit(dump_json(res.law.to_json()), args.out)
    print(
        f"atoms: {res.law.size}  dropped columns: {res.dropped_columns}  "
        f"merged columns: {res.merged_columns}  mean residual: {res.mean_residual:.3e}",
        file=sys.stderr,
    )
    return EXIT_OK


# -- envelope -------------------------------------------------------------------

def _alphas(args):
    if args.alphas:
        a = parse_grid(args.alphas)
        if (a < 1).any():
            raise UsageError("alpha values must be at least 1")
        return a
    return shuffle.default_alphas(args.eps0, args.n, args.num_alphas)


def cmd_envelope(args) -> int:
    if args.eps0 < 0 or args.n < 1:
        raise UsageError("need --eps0 >= 0 and --n >= 1")
    alphas = _alphas(args)
    env = shuffle.envelope(args.eps0, args.n, alphas)
    if args.channel is None:
        if args.format == "json":
            emit(dump_json(env.to_json()), args.out)
        elif args.format == "svg":
            emit(_profile_svg(env), args.out)
        else:
            emit(env.to_csv(), args.out)
        return EXIT_OK

    try:
        ch = Channel.load(args.channel)
    except (OSError, InvalidChannel) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    rho = anchor_with_diagnostics(ch).law
    rep = ldp_check(rho, args.eps0)
    if not rep:
        i, j = rep.worst_pair
        print(
            f"error: channel is not {args.eps0}-LDP; worst ratio exp({rep.worst_log_ratio:.6g}) "
            f"between rows {i} and {j}",
            file=sys.stderr,
        )
        return EXIT_LDP
    header = ["i", "j", "alpha", "forward", "reverse", "env_forward", "env_reverse", "slack_forward", "slack_reverse"]
    if args.verify_oracle:
        header += ["oracle_forward", "oracle_reverse"]
    rows = []
    worst_oracle = 0.0
    min_slack = math.inf
    for i, j in itertools.permutations(range(rho.d), 2):
        p = shuffle.pair_profile(rho, i, j, args.n, alphas)
        if args.verify_oracle:
            try:
                o = shuffle.brute_force_shuffle(ch, i, j, args.n, alphas)
            except TooLarge as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_INPUT
            worst_oracle = max(
                worst_oracle, float(np.abs(o.forward - p.forward).max()), float(np.abs(o.reverse - p.reverse).max())
            )
        for k, a in enumerate(alphas):
            sf = env.forward[k] - p.forward[k]
            sr = env.reverse[k] - p.reverse[k]
            min_slack = min(min_slack, sf, sr)
            row = [i, j, repr(float(a)), repr(float(p.forward[k])), repr(float(p.reverse[k])),
                   repr(float(env.forward[k])), repr(float(env.reverse[k])), repr(float(sf)), repr(float(sr))]
            if args.verify_oracle:
                row += [repr(float(o.forward[k])), repr(float(o.reverse[k]))]
            rows.append(row)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    emit(buf.getvalue(), args.out)
    print(f"pairs: {rho.d * (rho.d - 1)}  min slack: {min_slack:.3e}", file=sys.stderr)
    if args.verify_oracle:
        print(f"oracle max |diff|: {worst_oracle:.3e}", file=sys.stderr)
    return EXIT_OK if min_slack >= -args.tol else EXIT_FAIL


def _profile_svg(env) -> str:
    return line_svg(np.log(env.alphas), env.forward, "log alpha", "H", "forward envelope")


# -- design ---------------------------------------------------------------------

def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"design {args.mode} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_design(args) -> int:
    if args.mode == "chi-budget":
        _require(args, "d", "C", "n")
        try:
            opt = design.finite_n_optimum(args.d, args.C, args.n)
        except OutOfRegime as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_REGIME
        law = opt.law
        report = {
            "mode": "chi-budget",
            "d": opt.d,
            "C": opt.C,
            "n": opt.n,
            "C_star": design.c_star(opt.d),
            "lambda_star": design.lambda_star(opt.d),
            "p": opt.p,
            "risk_iid": opt.iid,
            "risk_fc": opt.fc,
            "chi_star": design.chi_star(law).value,
            "trace": design.moment_stats(law).trace,
            "trace_cap": design.trace_cap(opt.d, opt.C),
            "law": law.to_json(),
        }
        emit(dump_json(report), args.out)
        print(f"risk_iid = {opt.iid:.10g}  risk_fc = {opt.fc:.10g}  p = {opt.p:.6g}", file=sys.stderr)
        return EXIT_OK
    if args.mode == "raw-cap":
        _require(args, "d", "eps0", "n")
        rep = rawcap.rawcap_optimum(args.d, args.eps0, args.n)
        row = rawcap.rawcap_vs_budget(args.d, args.eps0) if args.d >= 3 else None
        report = {"mode": "raw-cap", "n": args.n, **rep.to_json()}
        report["risk_iid"] = rep.n_times_risk_iid / args.n
        report["risk_fc"] = rep.n_times_risk_fc / args.n
        report["t_curve"] = [float(v) for v in rawcap.t_curve(args.d, rep.lam).values]
        if row is not None:
            report.update(Kd_chi=row.kd_chi, crude=row.crude, chi_star=row.chi)
        report["template"] = [float(v) for v in rawcap.subset_template(args.d, rep.lam, rep.s_star)]
        emit(dump_json(report), args.out)
        print(
            f"s_star = {rep.s_star}  nR_iid = {rawcap.round4(rep.n_times_risk_iid)}  "
            f"nR_fc = {rawcap.round4(rep.n_times_risk_fc)}",
            file=sys.stderr,
        )
        return EXIT_OK
    _require(args, "d", "grid")
    cfg = FrontierConfig(n_lambda=args.n_lambda, lambda_max=args.lambda_max)
    curve = frontier(args.d, parse_grid(args.grid), cfg)
    if args.format == "csv":
        emit(curve.to_csv(), args.out)
    elif args.format == "svg":
        emit(svg_plot(curve), args.out)
    else:
        report = {"mode": "frontier", "c_max": curve.c_max, **curve.to_json()}
        if args.d >= 3:
            report["K_d"] = design.trace_cap_constant(args.d)
            report["C_star"] = design.c_star(args.d)
        emit(dump_json(report), args.out)
    if args.svg:
        Path(args.svg).write_text(svg_plot(curve))
    print(f"grid points: {len(curve.grid)}  hull vertices: {len(curve.vertices)}", file=sys.stderr)
    return EXIT_OK


# -- tables ---------------------------------------------------------------------

def cmd_tables(args) -> int:
    t1, t2 = rawcap.table1(), rawcap.table2()
    if args.format == "json":
        obj = {
            "table1": [dict(zip(rawcap.TABLE1_HEADER, r)) for r in t1.rows],
            "table2": [dict(zip(rawcap.TABLE2_HEADER, r)) for r in t2.rows],
        }
        emit(dump_json(obj), args.out, "tables.json")
    elif args.out is not None and Path(args.out).is_dir():
        emit(rawcap.table_csv(rawcap.TABLE1_HEADER, t1.rows), args.out, "table1.csv")
        emit(rawcap.table_csv(rawcap.TABLE2_HEADER, t2.rows), args.out, "table2.csv")
    else:
        text = rawcap.table_csv(rawcap.TABLE1_HEADER, t1.rows) + "\n" + rawcap.table_csv(rawcap.TABLE2_HEADER, t2.rows)
        emit(text, args.out)
    if args.no_golden:
        return EXIT_OK
    for name, t in (("table1", t1), ("table2", t2)):
        if t.mismatches:
            got, want = t.mismatches[0]
            print(f"error: {name} row d={got[0]} eps0={got[1]}: got {got[2:]}, expected {want}", file=sys.stderr)
            return EXIT_TABLE
    print("tables match the reference values", file=sys.stderr)
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.suite not in verify.SUITES and args.suite != "all":
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_INPUT
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        res = verify.SUITES[name](args.seed)
        print(res.summary())
        for note in res.notes:
            print("  " + note)
        ok = ok and res.ok
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=["json", "csv", "svg"], default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="anchorlaw", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("anchor", parents=[common], help="convert a channel to its anchored law")
    a.add_argument("channel", help="channel JSON or CSV")
    a.set_defaults(func=cmd_anchor)

    e = sub.add_parser("envelope", parents=[common], help="shuffled BRR envelope or per-pair profiles")
    e.add_argument("--eps0", type=float, required=True)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--alphas", help="comma list or lo:hi:num")
    e.add_argument("--num-alphas", type=int, default=25)
    e.add_argument("--channel", help="channel JSON or CSV to compare against the envelope")
    e.add_argument("--verify-oracle", action="store_true", help="add brute-force histogram columns")
    e.set_defaults(func=cmd_envelope)

    d = sub.add_parser("design", parents=[common], help="canonical design optima")
    d.add_argument("mode", choices=["chi-budget", "raw-cap", "frontier"])
    d.add_argument("--d", type=int)
    d.add_argument("--C", type=float)
    d.add_argument("--n", type=int)
    d.add_argument("--eps0", type=float)
    d.add_argument("--grid", help="budget grid for frontier mode: comma list or lo:hi:num")
    d.add_argument("--n-lambda", type=int, default=400)
    d.add_argument("--lambda-max", type=float, default=1e3)
    d.add_argument("--svg", help="also write an SVG plot of the frontier")
    d.set_defaults(func=cmd_design)

    t = sub.add_parser("tables", parents=[common], help="regenerate the raw-cap reference tables")
    t.add_argument("--no-golden", action="store_true", help="skip comparison with the reference values")
    t.set_defaults(func=cmd_tables)

    v = sub.add_parser("verify", parents=[common], help="run a seeded property suite")
    v.add_argument("suite", help="one of: " + ", ".join(verify.SUITES) + ", all")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnchorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
