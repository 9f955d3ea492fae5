"""Command line: ``membound bench ...`` and ``membound bound-curve ...``."""
import argparse
import logging
import sys

from .bench import BenchConfig, ConfigError, emit_bound_curve, run_bench
from .methods import METHODS

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [t for t in text.split(",") if t]


def _cap(text):
    if text == "default":
        return text
    if text in ("none", "inf"):
        return None
    return int(text)


def build_parser():
    p = argparse.ArgumentParser(prog="membound", description="Gradient methods with memory: benchmarks and bounds.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a method x bundle-size grid")
    b.add_argument("--problem", choices=["quad", "lrsp"], default="quad")
    b.add_argument("--n", type=int, help="dimension (quad: 1000, lrsp: 2000)")
    b.add_argument("--m", type=int, default=10000, help="lrsp rows")
    b.add_argument("--density", type=float, default=1e-3, help="lrsp nonzero fraction")
    b.add_argument("--method", type=_str_list, default=["fgm", "ogm"],
                   help=f"comma-separated subset of {','.join(METHODS)}")
    b.add_argument("--bundle", type=_int_list, default=[1], help="bundle sizes, e.g. 1,2,4")
    b.add_argument("--L-scale", type=float, default=1.0, dest="L_scale")
    b.add_argument("--eps-rel", type=float, default=1e-4, dest="eps_rel")
    b.add_argument("--seed", type=_int_list, default=[0], help="lrsp seeds, comma-separated")
    b.add_argument("--newton-iters", type=int, default=2, dest="newton_iters")
    b.add_argument("--inner-cap", type=_cap, default="default", dest="inner_cap",
                   help="inner iterations per multiplier solve ('none' for unlimited)")
    b.add_argument("--tol-factor", type=float, dest="tol_factor",
                   help="subsolver tolerance as a multiple of eps_abs (gmm 0.5, others 1e-3)")
    b.add_argument("--weight-rule", choices=["listing", "eq89"], default="eq89", dest="weight_rule")
    b.add_argument("--audit", type=_str_list, default=[], help="comma-separated subset of esp,potential,rate,step")
    b.add_argument("--max-outer", type=int, default=10_000_000, dest="max_outer")
    b.add_argument("--out", help="output path (stdout when omitted)")
    b.add_argument("--format", choices=["csv", "md"], default="csv")

    c = sub.add_parser("bound-curve", help="tabulate the optimal lower bound of 1-D records")
    c.add_argument("--records", required=True, help="CSV with columns z_0,f,g_0")
    c.add_argument("--L", type=float, required=True)
    c.add_argument("--grid", required=True, help="a:b:step")
    c.add_argument("--out", help="output path (stdout when omitted)")
    return p


def _join_negative_grid(argv):
    # "--grid -2:2:0.01" would otherwise read as an unknown option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--grid={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_grid(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bench":
            config = BenchConfig(problem=args.problem, n=args.n, m=args.m, density=args.density,
                                 methods=args.method, bundles=args.bundle, L_scale=args.L_scale,
                                 eps_rel=args.eps_rel, seeds=args.seed, newton_iters=args.newton_iters,
                                 inner_cap=args.inner_cap, weight_rule=args.weight_rule, tol_factor=args.tol_factor,
                                 audit=tuple(args.audit), max_outer=args.max_outer)
            table = run_bench(config, args.out, args.format)
            if args.out is None:
                sys.stdout.write(table.to_markdown() if args.format == "md" else table.to_csv())
            if table.aborted:
                for rep in table.reports:
                    if rep.message:
                        print(f"error: {rep.method} m={rep.bundle}: {rep.message}", file=sys.stderr)
                return EXIT_ABORT
        else:
            text = emit_bound_curve(args.records, args.L, args.grid, args.out)
            if args.out is None:
                sys.stdout.write(text)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
