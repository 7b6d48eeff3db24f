"""Command-line front end: ``conecalib <command> ...``.

Exit status: 0 on success, 1 on errors, 2 when ``--expect global`` was
given and the verdict is not Global.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from typing import Sequence

import numpy as np

from . import comass
from .catalog import DomainError, derive_params, get_entry, list_catalog
from .certify import Verdict, certify, sweep_row1
from .deform import build_theorem_c_deformation
from .odecal import build_phi0, glue_lambda1, halving_check, solve_lambda1
from .report import (CertReport, RunConfig, atomic_write, csv_text, read_config,
                     svg_line_chart, to_json)

__all__ = ["main", "build_parser", "cmd_catalog", "cmd_certify", "cmd_sweep", "cmd_plot",
           "cmd_deform", "cmd_ode", "cmd_phi0"]


class CliError(Exception):
    pass


def _config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = cfg.merged(read_config(args.config))
    flags = {name: getattr(args, name, None) for name in ("tol", "betas", "outdir")}
    flags["stable"] = True if getattr(args, "stable", False) else None
    return cfg.merged(flags)


def _target(cfg: RunConfig, path: str | None) -> str | None:
    if path is None or path == "-":
        return None
    return path if os.path.isabs(path) else os.path.join(cfg.outdir, path)


def _emit(cfg: RunConfig, path: str | None, text: str) -> None:
    target = _target(cfg, path)
    if target is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(target))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise CliError(f"output directory is not writable: {directory}")
    atomic_write(target, text)


def _params(args):
    entry = get_entry(args.row)
    kw = {}
    if entry.shape_kind == "rs":
        kw = {"r": args.r, "s": args.s}
    elif entry.shape_kind == "k":
        kw = {"k": args.k}
    elif any(getattr(args, n, None) is not None for n in ("r", "s", "k")):
        raise DomainError(f"row {args.row} takes no shape parameters")
    return derive_params(entry, **kw)


# -- commands -------------------------------------------------------------------

def cmd_catalog(args) -> int:
    cfg = _config(args)
    rows = [e.to_dict() for e in list_catalog()]
    if args.json:
        _emit(cfg, args.out, to_json({"schema": 1, "rows": rows}))
    else:
        lines = [f"{r['row_id']:>2}  {r['group']:<16} {r['angle']:<5} {r['family']:<19} "
                 f"{r['link']}" for r in rows]
        _emit(cfg, args.out, "\n".join(lines) + "\n")
    return 0


def cmd_certify(args) -> int:
    cfg = _config(args)
    params = _params(args)
    start = time.perf_counter()
    v = certify(params, args.beta, cfg.tol)
    wall = None if cfg.stable else time.perf_counter() - start
    rep = CertReport.from_verdict(v, params, wall)
    if args.json:
        _emit(cfg, args.out, rep.to_json(stable=cfg.stable))
    else:
        li = "-" if v.local_interval is None else f"[{v.local_interval[0]:.9g}, {v.local_interval[1]:.9g}]"
        _emit(cfg, args.out, f"{params.label} beta={v.beta:g}: {v.verdict.value} via "
                             f"{v.method.value}; sup psi <= {v.sup_psi:.12g}; local {li}\n")
    if args.expect == "global" and v.verdict is not Verdict.GLOBAL:
        return 2
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.row != 1:
        raise CliError("the sweep is defined for row 1 only")
    table = sweep_row1(args.max, args.max, cfg.betas, cfg.tol, workers=args.workers)
    rows = []
    for t in table:
        b = t.best
        lo, hi = b.local_interval if b.local_interval else ("", "")
        rows.append((t.r, t.s, b.verdict.value, b.beta, b.method.value, b.sup_psi, lo, hi))
    header = ("r", "s", "verdict", "beta", "method", "sup_psi", "local_lo", "local_hi")
    if args.csv or args.out:
        _emit(cfg, args.out, csv_text(header, rows))
    else:
        lines = [f"({r},{s}) {v:<13} beta={b:g}" for r, s, v, b, *_ in rows]
        _emit(cfg, None, "\n".join(lines) + "\n")
    return 0


def cmd_plot(args) -> int:
    cfg = _config(args)
    params = _params(args)
    lo, hi = params.domain
    n = args.points or cfg.plot_points
    th = np.linspace(lo, hi, n)
    ps = comass.psi(th, params, args.beta)
    if args.csv:
        inner = np.clip(th, np.nextafter(lo, hi), np.nextafter(hi, lo))
        et = comass.eta(inner, params, args.beta)
        ph = comass.phi(th, params)
        _emit(cfg, args.csv, csv_text(("theta", "psi", "eta", "phi"),
                                      zip(th.tolist(), ps.tolist(), et.tolist(), ph.tolist())))
    if args.svg or not args.csv:
        title = f"psi for {params.label}, beta={args.beta:g}"
        _emit(cfg, args.svg, svg_line_chart(th, ps, title=title))
    return 0


def _deform_grid(d, n: int) -> np.ndarray:
    h = (math.pi / 2) / n
    pts = [(np.arange(n) + 0.5) * h]
    x0, e = d.report.x0, d.report.eps
    if x0 > 0:
        w = np.linspace(0.5 * x0 - e, x0 + e, 201)
        pts += [w, math.pi / 2 - w]
    g = np.unique(np.concatenate(pts))
    return g[(g > 0) & (g < math.pi / 2)]


def cmd_deform(args) -> int:
    cfg = _config(args)
    params = _params(args)
    if params.row_id != 1:
        raise CliError("the deformation is defined for row 1 only")
    d = build_theorem_c_deformation(params, args.beta, x0=args.x0, eps=args.eps,
                                    n_uniform=cfg.verify_points)
    grid = _deform_grid(d, cfg.plot_points)
    lam, _ = d.lambda_values(grid)
    mu, _ = d.mu_values(grid)
    val = d.comass_sq(grid)
    if args.csv:
        _emit(cfg, args.csv, csv_text(("theta", "lambda", "mu", "deformed_comass_sq"),
                                      zip(grid.tolist(), lam.tolist(), mu.tolist(), val.tolist())))
    rep = {"schema": 1, "cone": {"row_id": 1, "shape": dict(params.shape)}, **d.report.to_dict()}
    _emit(cfg, args.report, to_json(rep))
    return 0


def cmd_ode(args) -> int:
    cfg = _config(args)
    if args.which != "lambda1":
        raise CliError(f"unknown ODE {args.which!r}")
    sol = solve_lambda1(args.start, args.end, rtol=cfg.ode_rtol, atol=cfg.ode_atol)
    if args.csv:
        _emit(cfg, args.csv, csv_text(("theta", "lambda1", "star_comass_sq"), sol.to_rows()))
    rep = {"schema": 1, "theta_start": sol.theta_start, "theta_end": sol.theta_end,
           "theta1": sol.theta1, "peak": sol.peak, "trough": sol.trough, "zeros": sol.zeros,
           "steps": sol.steps, "star_residual": sol.star_residual(),
           "halving": halving_check(sol)}
    if args.glue:
        g = glue_lambda1(sol)
        rep["glue"] = {"support": g.support, "max_comass_sq": g.max_comass_sq,
                       "outside_sup": g.outside_sup, "window": g.width}
    _emit(cfg, args.report, to_json(rep))
    return 0


def cmd_phi0(args) -> int:
    cfg = _config(args)
    params = _params(args)
    prof = build_phi0(params, args.beta, n_verify=cfg.verify_points)
    lo, hi = params.domain
    n = cfg.plot_points
    th = lo + (np.arange(n) + 0.5) * ((hi - lo) / n)
    v, _ = prof.evaluate(th)
    res = prof.residual(th)
    if args.csv:
        _emit(cfg, args.csv, csv_text(("theta", "phi0", "residual"),
                                      zip(th.tolist(), v.tolist(), res.tolist())))
    rep = {"schema": 1, "cone": {"row_id": params.row_id, "shape": dict(params.shape)},
           "beta": prof.seed.beta, "support": prof.support, "residual_max": prof.residual_max,
           "theta0": prof.theta0, "value_at_theta0": prof.value_at_theta0,
           "glue_windows": prof.glue_windows}
    _emit(cfg, args.report, to_json(rep))
    return 0


# -- parser ---------------------------------------------------------------------

def _shape_args(p: argparse.ArgumentParser, row_required: bool = True) -> None:
    p.add_argument("--row", type=int, required=row_required, help="catalog row (1-13)")
    p.add_argument("--r", type=int, help="row 1: first sphere factor")
    p.add_argument("--s", type=int, help="row 1: second sphere factor")
    p.add_argument("--k", type=int, help="rows 2-4: shape parameter")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file merged under the flags")
    common.add_argument("--stable", action="store_true",
                        help="omit wall time so outputs are byte-identical across runs")
    common.add_argument("--outdir", help="directory for relative output paths")
    common.add_argument("--tol", type=float, help="certification tolerance")

    ap = argparse.ArgumentParser(prog="conecalib",
                                 description="Calibration certificates for homogeneous cones.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[common], help="list the classification table")
    p.add_argument("action", choices=["list"])
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("certify", parents=[common], help="certify psi <= 1 for one cone")
    _shape_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.add_argument("--expect", choices=["global"])
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="row-1 classification sweep")
    p.add_argument("--row", type=int, default=1)
    p.add_argument("--max", type=int, default=12)
    p.add_argument("--betas", help="comma-separated exponents (default 1,1.2)")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, help="process count (default CONECALIB_THREADS or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", parents=[common], help="figure of psi")
    p.add_argument("what", choices=["psi"])
    _shape_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--svg")
    p.add_argument("--csv")
    p.add_argument("--points", "--samples", dest="points", type=int)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("deform", parents=[common], help="smooth deformation for row 1")
    _shape_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--x0", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("ode", parents=[common], help="exponent ODE for row 3, k=4")
    p.add_argument("which", choices=["lambda1"])
    p.add_argument("--start", type=float, default=1.007)
    p.add_argument("--end", type=float, default=1.25)
    p.add_argument("--glue", action="store_true", help="also glue and verify the full domain")
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("phi0", parents=[common], help="profile vanishing near both ends")
    _shape_args(p)
    p.add_argument("--beta", type=float, help="seed exponent (default: scanned)")
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_phi0)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (CliError, DomainError, ValueError, OSError, RuntimeError) as e:
        print(f"conecalib: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
