"""Command line interface.

::

    nepspace solve --config run.yaml [--out DIR]
    nepspace generate --kind {banded,delay,quadratic} --out DIR [...]
    nepspace oracle --config run.yaml [--out DIR]

``solve`` writes ``iterations.csv`` and ``result.json``; it exits with 0 on
convergence, 2 when the iteration stopped unconverged and 1 on any error.
"""

import argparse
import csv
import io
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy
from pydantic import ValidationError

from . import __version__
from .config import load_config
from .errors import NepspaceError
from .generators import generate_banded, generate_delay, generate_quadratic
from .nep_solver import solve_nep
from .oracle import oracle_nep, oracle_rep
from .rep_solver import solve_rep
from .sparse import atomic_write_text, write_matrix_market

log = logging.getLogger("nepspace")

CSV_COLUMNS = ["iter", "candidate", "lambda_re", "lambda_im", "residual", "subdim", "nfact", "elapsed_s"]

EXIT_OK, EXIT_ERROR, EXIT_UNCONVERGED = 0, 1, 2


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _out_dir(cfg, config_path, override):
    if override:
        return Path(override)
    out = Path(cfg.out)
    return out if out.is_absolute() else Path(config_path).parent / out


def run_solver(cfg):
    """Build the problem described by ``cfg`` and run the matching solver."""
    problem = cfg.problem.build()
    common = dict(
        q=cfg.q,
        mode=cfg.mode,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        init_points=cfg.init.points,
        radius=cfg.init.radius,
        seed=cfg.seed,
        filter_tol=cfg.filter_tol,
    )
    if cfg.problem.is_rational:
        return solve_rep(problem, cfg.target, cfg.num_eigs, cfg.strategy, **common)
    return solve_nep(problem, cfg.target, cfg.num_eigs, cfg.strategy, m=cfg.m, perm=cfg.perm,
                     embedded_norm=cfg.embedded_norm, **common)


def iterations_csv(report):
    """The per-candidate iteration log as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in report.iterations:
        for j, (lam, res) in enumerate(zip(rec.candidates, rec.residuals)):
            lam = complex(lam)
            w.writerow([rec.iter, j, repr(lam.real), repr(lam.imag), repr(float(res)), rec.subdim, rec.nfact,
                        f"{rec.elapsed:.6f}"])
    return buf.getvalue()


def result_dict(report, cfg):
    return {
        "converged": report.converged,
        "message": report.message,
        "target": _pair(report.tau),
        "eigenvalues": [_pair(e.lam) for e in report.estimates],
        "residuals": [e.residual for e in report.estimates],
        "iterations": report.niter,
        "counts": report.counts,
        "interpolation": [
            {
                "iter": rec.iter,
                "points": [_pair(z) for z in rec.points],
                "selected": [_pair(z) for z in rec.selected],
                "pole_shifts": [[_pair(a), _pair(b)] for a, b in rec.pole_shifts],
                "subdim": rec.subdim,
                "nfact": rec.nfact,
            }
            for rec in report.iterations
        ],
        "permutation": None if report.permutation is None else [int(i) for i in report.permutation],
        "config": cfg.model_dump(mode="json"),
        "versions": {
            "nepspace": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def cmd_solve(args):
    cfg = load_config(args.config)
    out = _out_dir(cfg, args.config, args.out)
    report = run_solver(cfg)
    # all files are written at the end of the run
    atomic_write_text(out / "iterations.csv", iterations_csv(report))
    atomic_write_text(out / "result.json", json.dumps(result_dict(report, cfg), indent=2) + "\n")
    status = "converged" if report.converged else "NOT converged"
    print(f"{status} after {report.niter} iterations: {report.message}")
    for e in report.estimates:
        print(f"  lambda = {e.lam.real:+.15e} {e.lam.imag:+.15e}i   residual = {e.residual:.3e}")
    print(f"wrote {out / 'iterations.csv'} and {out / 'result.json'}")
    return EXIT_OK if report.converged else EXIT_UNCONVERGED


def cmd_oracle(args):
    cfg = load_config(args.config)
    problem = cfg.problem.build()
    if cfg.problem.is_rational:
        lams = oracle_rep(problem, cfg.target, cfg.num_eigs)
    else:
        radius = args.radius if args.radius is not None else cfg.init.radius
        lams = oracle_nep(problem, cfg.target, cfg.num_eigs, radius)
    payload = {"target": _pair(cfg.target), "eigenvalues": [_pair(z) for z in lams]}
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        atomic_write_text(Path(args.out) / "oracle.json", text)
    print(text, end="")
    return EXIT_OK


def _write_config(out, problem, target, num_eigs, extra=None):
    cfg = {"problem": problem, "target": _pair(target), "num_eigs": num_eigs, "out": "out"}
    cfg.update(extra or {})
    atomic_write_text(out / "config.json", json.dumps(cfg, indent=2) + "\n")


def cmd_generate(args):
    out = Path(args.out)
    tag = f"generated by nepspace {__version__}: kind={args.kind} seed={args.seed}"
    if args.kind == "banded":
        sys_ = generate_banded(args.k, args.bandwidth, args.n_io, args.seed)
        write_matrix_market(out / "A.mtx", sys_.A.real, tag)
        write_matrix_market(out / "B.mtx", sys_.B.real, tag)
        write_matrix_market(out / "C.mtx", sys_.C.real, tag)
        problem = {"kind": "rational-statespace", "A": "A.mtx", "B": "B.mtx", "C": "C.mtx"}
    else:
        if args.kind == "delay":
            nep = generate_delay(args.n, args.density, args.g_scale, args.seed)
        else:
            nep = generate_quadratic(args.n, args.density, args.seed)
        terms = []
        for j, (f, T) in enumerate(nep.terms):
            name = f"T{j}.mtx"
            write_matrix_market(out / name, T, tag)
            fn = {"kind": f.kind, "coef": _pair(f.coef)}
            if f.kind == "monomial":
                fn["power"] = f.power
            if f.kind == "exponential":
                fn["alpha"] = _pair(f.alpha)
            terms.append({"fn": fn, "matrix": name})
        problem = {"kind": "split-nep", "terms": terms}
    _write_config(out, problem, complex(args.target), args.num_eigs, {"seed": args.seed})
    print(f"wrote problem files and config.json to {out}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="nepspace", description="Subspace eigensolvers for rational and nonlinear eigenvalue problems.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the subspace solver described by a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: 'out' in the config)")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="dense reference eigenvalues for a small problem")
    o.add_argument("--config", required=True)
    o.add_argument("--out", help="also write oracle.json here")
    o.add_argument("--radius", type=float, help="contour radius for non-polynomial split problems")
    o.set_defaults(func=cmd_oracle)

    g = sub.add_parser("generate", help="write a seeded synthetic problem and a matching config")
    g.add_argument("--kind", choices=["banded", "delay", "quadratic"], required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--k", type=int, default=2000, help="state dimension (banded)")
    g.add_argument("--bandwidth", type=int, default=5, help="number of nonzero diagonals (banded)")
    g.add_argument("--n-io", type=int, default=2, help="inputs/outputs (banded)")
    g.add_argument("--n", type=int, default=100, help="problem size (delay, quadratic)")
    g.add_argument("--density", type=float, default=0.05)
    g.add_argument("--g-scale", type=float, default=0.1, help="delay coefficient scale")
    g.add_argument("--target", type=complex, default=0j, help="target written into config.json")
    g.add_argument("--num-eigs", type=int, default=1)
    g.set_defaults(func=cmd_generate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: invalid configuration\n{exc}", file=sys.stderr)
    except (NepspaceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
