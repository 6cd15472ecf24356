"""Command-line interface: fit curves, estimate p, select bandwidths,
compute bootstrap bands, and run simulation experiments.

CSV in (header ``x,y`` or ``x1,x2,y``), CSV out, with a JSON sidecar
carrying the fully resolved configuration and seed.  Exit codes:
0 success, 2 input error, 3 numerical degeneracy, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .inference import BandSpec, bootstrap_bands
from .kernels import GAUSSIAN
from .localreg import Dataset1D, Dataset2D, FitSpec, default_grid_2d, fit_local_2d
from .lpsolve import DegenerateProblemError
from .simlab import (
    ErrorModel,
    ExperimentError,
    run_experiment,
    run_experiment_2d,
    write_report_csv,
    write_report_json,
)
from .tuning import PGrid, auto_fit, convert_bandwidth, estimate_p_K, estimate_p_Q, select_h2

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_INTERNAL = 4


class InputError(Exception):
    """Malformed input file or unusable command configuration."""


def _read_csv(path):
    """Read an x,y or x1,x2,y CSV; returns (columns, kind) with kind '1d'/'2d'."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        names = [h.strip().lower() for h in header]
        if names == ["x", "y"]:
            kind, width = "1d", 2
        elif names == ["x1", "x2", "y"]:
            kind, width = "2d", 3
        else:
            raise InputError(
                f"{path}: line 1: header must be 'x,y' or 'x1,x2,y', got {','.join(names)}"
            )
        cols: list[list[float]] = [[] for _ in range(width)]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise InputError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
            for j, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path}: line {lineno}: field {j + 1} is not a number: {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise InputError(f"{path}: line {lineno}: non-finite value {cell!r}")
                cols[j].append(v)
        if not cols[0]:
            raise InputError(f"{path}: no data rows")
    return [np.asarray(c) for c in cols], kind


def _sidecar_path(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".json"


def _write_json(path, payload: dict) -> None:
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return None
        if isinstance(v, np.ndarray):
            return [clean(float(t)) for t in v]
        if isinstance(v, (np.floating, np.integer)):
            return clean(float(v)) if isinstance(v, np.floating) else int(v)
        if isinstance(v, dict):
            return {k: clean(t) for k, t in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(t) for t in v]
        return v

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _diag_summary(result) -> dict:
    d = result.diagnostics
    return {
        "grid_points": int(result.grid.shape[0]),
        "converged_fraction": float(np.mean(d.converged)),
        "degenerate_points": int(np.sum(d.degenerate)),
        "clamped_points": int(np.sum(d.clamped)),
        "max_iterations": int(np.max(d.iterations)),
    }


def _p_grid(args) -> PGrid:
    lo, hi, step = args.p_grid
    return PGrid.default(lo, hi, step)


def _cmd_fit(args, force_bands: bool = False) -> int:
    cols, kind = _read_csv(args.input)
    bands_on = force_bands or args.bands

    if kind == "2d":
        if args.p is None or args.h is None:
            raise InputError("2D fits need explicit --p and --h")
        if bands_on:
            raise InputError("bands are available for 1D fits only")
        data = Dataset2D(cols[0], cols[1], cols[2])
        grid = default_grid_2d(data.x1, data.x2, args.grid_size_2d)
        spec = FitSpec(degree="linear", exponent=args.p, bandwidth=args.h,
                       kernel=GAUSSIAN, grid=grid)
        fit = fit_local_2d(data, spec)
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "m_hat", "interior"])
            for (g1, g2), mh, im in zip(fit.grid, fit.m_hat, fit.interior_mask):
                w.writerow([repr(float(g1)), repr(float(g2)), repr(float(mh)), int(im)])
        _write_json(_sidecar_path(args.out), {
            "command": "fit", "input": args.input, "n": int(data.y.size),
            "dimension": 2, "p_hat": args.p, "h2": None, "hp": args.h,
            "kernel": "gaussian", "degree": "linear", "seed": args.seed,
            "diagnostics": _diag_summary(fit), "version": __version__,
        })
        return EXIT_OK

    data = Dataset1D(cols[0], cols[1])
    pipe = auto_fit(
        data, degree=args.degree, grid_size=args.grid_size,
        p=args.p, h2=args.h2, hp=args.h, h2_mode=args.h2_mode,
        p_grid=_p_grid(args),
        interior_only_residuals=args.interior_only_residuals,
    )
    fit = pipe.result

    band = None
    if bands_on:
        spec = FitSpec(degree=args.degree, exponent=pipe.p_hat,
                       bandwidth=pipe.bandwidth.hp, kernel=GAUSSIAN, grid=fit.grid)
        band = bootstrap_bands(data, spec, BandSpec(
            alpha=args.alpha, replicates=args.boot_reps,
            bandwidth_grid_size=args.band_grid, seed=args.seed,
        ))

    header = ["x", "m_hat"] + (["m1_hat"] if fit.m1_hat is not None else []) + ["interior"]
    if band is not None:
        header += ["lower", "upper"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, g in enumerate(fit.grid):
            row = [repr(float(g)), repr(float(fit.m_hat[i]))]
            if fit.m1_hat is not None:
                row.append(repr(float(fit.m1_hat[i])))
            row.append(int(fit.interior_mask[i]))
            if band is not None:
                row += [repr(float(band.lower[i])), repr(float(band.upper[i]))]
            w.writerow(row)

    if args.emit_plot_data:
        with open(args.emit_plot_data, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "series", "value"])
            for xi, yi in zip(data.x, data.y):
                w.writerow([repr(float(xi)), "data", repr(float(yi))])
            series = {"m_hat": fit.m_hat, "lls": pipe.pilot_grid.m_hat}
            if band is not None:
                series["lower"] = band.lower
                series["upper"] = band.upper
            for name, vals in series.items():
                for g, v in zip(fit.grid, vals):
                    w.writerow([repr(float(g)), name, repr(float(v))])

    payload = {
        "command": "bands" if force_bands else "fit",
        "input": args.input, "n": int(data.y.size), "dimension": 1,
        "p_hat": pipe.p_hat, "h2": pipe.bandwidth.h2, "hp": pipe.bandwidth.hp,
        "kernel": "gaussian", "degree": args.degree, "h2_mode": args.h2_mode,
        "seed": args.seed, "grid_size": args.grid_size,
        "diagnostics": _diag_summary(fit), "version": __version__,
    }
    if band is not None:
        payload["alpha"] = args.alpha
        payload["boot_reps"] = args.boot_reps
        payload["band_grid"] = args.band_grid
        payload["dropped_replicates"] = band.dropped
    _write_json(_sidecar_path(args.out), payload)
    return EXIT_OK


def _cmd_estimate_p(args) -> int:
    cols, kind = _read_csv(args.input)
    if kind != "1d":
        raise InputError("estimate-p expects 1D x,y input")
    data = Dataset1D(cols[0], cols[1])
    pipe = auto_fit(data, degree=args.degree, h2=args.h2, h2_mode=args.h2_mode,
                    p_grid=_p_grid(args),
                    interior_only_residuals=args.interior_only_residuals)
    payload = {
        "command": "estimate-p", "input": args.input, "n": int(data.y.size),
        "h2": pipe.bandwidth.h2, "h2_mode": args.h2_mode,
        "p_hat_q": pipe.p_hat, "p_hat_k": estimate_p_K(pipe.residuals),
        "seed": args.seed, "kernel": "gaussian", "version": __version__,
    }
    if pipe.q_scores is not None:
        payload["candidates"] = pipe.q_scores.candidates
        payload["scores"] = pipe.q_scores.scores
    _write_json(args.out, payload)
    return EXIT_OK


def _cmd_bandwidth(args) -> int:
    cols, kind = _read_csv(args.input)
    if kind != "1d":
        raise InputError("bandwidth expects 1D x,y input")
    data = Dataset1D(cols[0], cols[1])
    h2 = args.h2 if args.h2 is not None else select_h2(data, args.h2_mode)
    payload = {
        "command": "bandwidth", "input": args.input, "n": int(data.y.size),
        "h2": h2, "h2_mode": args.h2_mode, "seed": args.seed,
        "kernel": "gaussian", "version": __version__,
    }
    if args.p is not None or not args.h2_only:
        pipe = auto_fit(data, degree=args.degree, p=args.p, h2=h2,
                        p_grid=_p_grid(args))
        bw = pipe.bandwidth
        payload.update({
            "p_used": bw.p_used, "hp": bw.hp,
            "moments": {"abs_2pm2": bw.moment_2pm2, "abs_pm2": bw.moment_pm2,
                        "squared": bw.moment_2},
        })
    _write_json(args.out, payload)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    workers = int(os.environ.get("LPREG_THREADS", "1"))
    if args.function == "2d":
        if args.errors != "ged":
            raise InputError("2D experiments support GED errors only")
        if args.h is None:
            raise InputError("2D experiments need an explicit --h")
        shapes = args.shape or [2.0]
        rows = run_experiment_2d(shapes, args.n, args.reps, args.seed, args.h,
                                 sigma_p=args.sigma_p, grid_size=args.grid_size_2d)
    else:
        try:
            fid = int(args.function)
        except ValueError:
            raise InputError(f"unknown function {args.function!r}") from None
        if fid not in (1, 2, 3, 4):
            raise InputError(f"unknown function {args.function!r}")
        shapes = args.shape or [2.0]
        model = ErrorModel(args.errors, sigma_p=args.sigma_p, shape=shapes[0],
                           alpha=args.alpha_bimodal)
        rows = [run_experiment(fid, model, args.n, args.reps, args.seed,
                               grid_size=args.grid_size, h2_mode=args.h2_mode,
                               workers=workers)]
    write_report_csv(rows, args.out)
    meta = {
        "command": "simulate", "function": args.function, "errors": args.errors,
        "n": args.n, "replicates": args.reps, "seed": args.seed,
        "sigma_p": args.sigma_p, "shape": args.shape, "alpha_bimodal": args.alpha_bimodal,
        "h": args.h, "grid_size": args.grid_size, "h2_mode": args.h2_mode,
        "workers": workers, "version": __version__,
    }
    write_report_json(rows, _sidecar_path(args.out), meta)
    return EXIT_OK


def _add_common(sp, with_input=True):
    if with_input:
        sp.add_argument("input", help="input CSV (header 'x,y' or 'x1,x2,y')")
    sp.add_argument("--out", required=True, help="output path")
    sp.add_argument("--seed", type=int, default=0, help="rng seed (recorded in metadata)")
    sp.add_argument("--degree", choices=["constant", "linear"], default="linear")
    sp.add_argument("--h2-mode", choices=["plugin", "cv"], default="plugin")
    sp.add_argument("--p-grid", type=float, nargs=3, default=[1.0, 20.0, 0.25],
                    metavar=("LO", "HI", "STEP"), help="candidate exponent grid")
    sp.add_argument("--interior-only-residuals", action="store_true",
                    help="estimate p from interior residuals only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpreg",
                                 description="Local polynomial Lp-norm regression")
    ap.add_argument("--version", action="version", version=f"lpreg {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, force in (("fit", False), ("bands", True)):
        sp = sub.add_parser(name, help="fit a curve" if not force else
                            "fit a curve with bootstrap confidence bands")
        _add_common(sp)
        sp.add_argument("--p", type=float, help="fix the norm exponent")
        sp.add_argument("--h2", type=float, help="fix the pilot bandwidth")
        sp.add_argument("--h", type=float, help="fix the final bandwidth")
        sp.add_argument("--grid-size", type=int, default=101)
        sp.add_argument("--grid-size-2d", type=int, default=21)
        sp.add_argument("--bands", action="store_true", help="add bootstrap bands")
        sp.add_argument("--alpha", type=float, default=0.025)
        sp.add_argument("--boot-reps", type=int, default=500)
        sp.add_argument("--band-grid", type=int, default=10,
                        help="pilot bandwidth grid size for the bias-reduced fit")
        sp.add_argument("--emit-plot-data", metavar="PATH",
                        help="write tidy long-format CSV for external plotting")
        sp.set_defaults(func=lambda a, f=force: _cmd_fit(a, force_bands=f))

    sp = sub.add_parser("estimate-p", help="estimate the shape parameter")
    _add_common(sp)
    sp.add_argument("--h2", type=float, help="fix the pilot bandwidth")
    sp.set_defaults(func=_cmd_estimate_p)

    sp = sub.add_parser("bandwidth", help="select bandwidths")
    _add_common(sp)
    sp.add_argument("--p", type=float, help="exponent for the h2 -> hp conversion")
    sp.add_argument("--h2", type=float, help="fix the pilot bandwidth")
    sp.add_argument("--h2-only", action="store_true", help="skip the hp conversion")
    sp.set_defaults(func=_cmd_bandwidth)

    sp = sub.add_parser("simulate", help="run a Monte-Carlo experiment")
    sp.add_argument("--function", required=True, help="1-4 or '2d'")
    sp.add_argument("--errors", choices=["uniform", "triangular", "bimodal", "ged"],
                    default="uniform")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sigma-p", type=float, default=0.2, help="GED scale")
    sp.add_argument("--shape", type=float, action="append",
                    help="GED shape; repeatable for 2D sweeps")
    sp.add_argument("--alpha-bimodal", type=float, default=1.0)
    sp.add_argument("--h", type=float, help="2D bandwidth")
    sp.add_argument("--grid-size", type=int, default=101)
    sp.add_argument("--grid-size-2d", type=int, default=21)
    sp.add_argument("--h2-mode", choices=["plugin", "cv"], default="plugin")
    sp.set_defaults(func=_cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateProblemError, ExperimentError) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
