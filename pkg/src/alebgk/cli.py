"""Command line entry point: ``run``, ``convergence`` and ``riemann``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .boundary import BoundaryClosureError
from .config import load_config, parse_pairs, resolve
from .kinetic import AdmissibilityError
from .mls import StencilDegeneracyError


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def cmd_run(args) -> int:
    from .harness import run_case

    cfg = load_config(args.config, args.override)
    res = run_case(cfg, args.out)
    for k, v in res.summary.items():
        print(f"{k}={v}")
    return 0


def cmd_convergence(args) -> int:
    from .harness import convergence_study
    from .output import write_table

    if args.config:
        cfg = load_config(args.config, args.override)
    else:
        vals = {"case": args.case}
        vals.update(parse_pairs(args.override))
        cfg = resolve(vals)
    schemes = args.schemes.split(",") if args.schemes else [cfg.scheme]
    ref_scheme = args.ref_scheme or schemes[0]
    table = convergence_study(cfg, schemes, _ints(args.nx), args.ref_nx, ref_scheme,
                              cache_dir=args.cache, audit_n=args.audit)
    header = list(table[0].keys())
    print(" ".join(f"{h:>14s}" for h in header))
    for row in table:
        print(" ".join(f"{v:>14.6g}" if isinstance(v, float) else f"{v!s:>14s}"
                       for v in row.values()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_table(out / "convergence.csv", header, [list(r.values()) for r in table])
    return 0


def cmd_riemann(args) -> int:
    from .output import write_table
    from .riemann import exact_riemann

    x = np.linspace(args.xmin, args.xmax, args.n)
    rho, u, p = exact_riemann(tuple(_floats(args.left)), tuple(_floats(args.right)), args.t, x,
                              x0=args.x0, gamma=args.gamma, Rs=args.Rs)
    cols = ["x", "rho", "u", "p"]
    data = np.column_stack([x, rho, u, p])
    if args.Rs is not None:
        cols.append("T")
        data = np.column_stack([data, p / (rho * args.Rs)])
    if args.out:
        write_table(args.out, cols, data)
    else:
        print(",".join(cols))
        for row in data:
            print(",".join("%.17g" % v for v in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="alebgk", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one case from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("convergence", help="Nx sweep against a fine self-reference")
    c.add_argument("--config")
    c.add_argument("--case", default="convergence1d")
    c.add_argument("--schemes", help="comma separated; default is the config scheme")
    c.add_argument("--nx", default="50,100,200")
    c.add_argument("--ref-nx", type=int, default=1500)
    c.add_argument("--ref-scheme")
    c.add_argument("--audit", type=int, help="audit points per axis")
    c.add_argument("--cache", help="directory for cached runs")
    c.add_argument("--out")
    c.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    c.set_defaults(func=cmd_convergence)

    q = sub.add_parser("riemann", help="exact Euler Riemann solution")
    q.add_argument("--left", required=True, help="rho,u,p (or rho,u,T with --Rs)")
    q.add_argument("--right", required=True)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--x0", type=float, default=0.5)
    q.add_argument("--xmin", type=float, default=0.0)
    q.add_argument("--xmax", type=float, default=1.0)
    q.add_argument("--n", type=int, default=201)
    q.add_argument("--gamma", type=float, default=5.0 / 3.0)
    q.add_argument("--Rs", type=float)
    q.add_argument("--out")
    q.set_defaults(func=cmd_riemann)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (AdmissibilityError, StencilDegeneracyError, BoundaryClosureError) as err:
        print(f"solver aborted: {err}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
