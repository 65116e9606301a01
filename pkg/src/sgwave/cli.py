"""Batch command line: ``sgwave <subcommand> --config cfg.json --out DIR``.

Every flag can also be given through an environment variable with the
``SGWAVE_`` prefix (``SGWAVE_CONFIG``, ``SGWAVE_OUT``, ``SGWAVE_SEED``,
``SGWAVE_WORKERS``, ``SGWAVE_ENSEMBLE``); explicit flags win.

Exit codes: 0 success, 1 a verification or acceptance check failed,
2 usage error, 3 invalid configuration, 4 missing output directory,
5 numerical module error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, acceptance, fbs, lp, null_coords, solver, wave_ops
from .config import (ConfigError, build_data, build_grid, build_hurst, build_sigma, build_solver_config,
                     build_table, config_hash, load_config)
from .cutoffs import CutoffPair
from .ensembles import trig_ensemble
from .geometry import composition_bound_check
from .spectral import CARTESIAN, Field2, save_field

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTDIR = 4
EXIT_MODULE = 5

ENV_PREFIX = "SGWAVE_"
SUBCOMMANDS = ("sample-fbs", "verify-norms", "verify-inverse", "verify-composition", "solve", "glue", "accept")


class OutputDirError(RuntimeError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


class Run:
    """Shared state of one invocation: configuration, seed, output directory, manifest."""

    def __init__(self, command: str, doc: dict, out: Path, seed: int, workers: int, ensemble: int):
        self.command = command
        self.doc = doc
        self.out = out
        self.seed = seed
        self.workers = workers
        self.ensemble = ensemble
        self.outputs: list[str] = []
        self.measured: dict = {}
        self.seeds: dict = {"base_seed": seed}
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        return self.out / name

    def csv(self, name, header, rows):
        write_csv(self.path(name), header, rows)
        self.outputs.append(name)

    def field(self, name: str, f: Field2):
        if self.doc["output"]["save_fields"]:
            b, h = save_field(f, self.path(name))
            self.outputs += [b.name, h.name]

    def manifest(self, status: str) -> Path:
        doc = {
            "command": self.command,
            "status": status,
            "config": self.doc,
            "config_hash": config_hash(self.doc),
            "seeds": self.seeds,
            "workers": self.workers,
            "ensemble": self.ensemble,
            "versions": {
                "sgwave": __version__, "python": platform.python_version(),
                "numpy": np.__version__, "scipy": scipy.__version__,
            },
            "platform": platform.platform(),
            "wall_time_seconds": time.perf_counter() - self.t0,
            "measured": self.measured,
            "outputs": sorted(self.outputs),
        }
        p = self.path("manifest.json")
        p.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
        return p


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sample_fbs(run: Run) -> int:
    grid, hurst = build_grid(run.doc), build_hurst(run.doc)
    factors = fbs.axis_factors(grid, hurst)
    rows = []
    for r in range(run.ensemble):
        seed = acceptance.seed_for(run.seed, 100, r)
        smp = fbs.sample_sheet(grid, hurst, seed, factors)
        # the sheet vanishes on the axes, so its value at (1, 1) is the unit-square increment
        m = 1.0 / grid.spacing
        i = grid.n // 2 + int(round(m))
        inc = smp.sheet.values[i, i] if abs(m - round(m)) < 1e-9 and i < grid.n else float("nan")
        rows.append((r, seed, float(np.sqrt(np.mean(smp.sheet.values**2))), float(inc)))
        run.field(f"sheet_{r:03d}", smp.sheet)
    run.seeds["replicates"] = [row[1] for row in rows]
    run.csv("sheets.csv", ["replicate", "seed", "sheet_rms", "unit_square_increment"], rows)
    return EXIT_OK


def cmd_verify_norms(run: Run) -> int:
    grid = build_grid(run.doc)
    n = run.doc["norms"]
    s, delta = n["s"], n["delta"]
    p = lp.build_partition(grid)
    ens = trig_ensemble(grid, acceptance.seed_for(run.seed, 200, 0), run.ensemble, modes=12, decay=0.5)
    cart = trig_ensemble(grid, acceptance.seed_for(run.seed, 200, 1), run.ensemble, modes=12, decay=0.5,
                         envelope=grid.half_width / 12, frame=CARTESIAN)
    rows, besov_ratios, iso_ratios = [], [], []
    for i, (f, u) in enumerate(zip(ens, cart)):
        # the ratio column is relative to the reference norm of the same field
        prod = lp.product_norm(f, lp.NormSpec(s, delta))
        besov = lp.besov_norm(f, s, delta, p)
        hyp = lp.hyperbolic_norm(u, s, delta)
        mixed = lp.mixed_norm(null_coords.to_null(u), s, delta)
        besov_ratios.append(besov / prod)
        iso_ratios.append(mixed / hyp)
        rows += [(i, lp.PRODUCT_AB, s, delta, prod, 1.0), (i, lp.BESOV, s, delta, besov, besov / prod),
                 (i, lp.HYPERBOLIC, s, delta, hyp, 1.0), (i, lp.MIXED, s, delta, mixed, mixed / hyp)]
    run.csv("norms.csv", ["field_id", "norm_family", "s", "delta", "value", "ratio"], rows)
    run.measured["besov_over_product_range"] = [min(besov_ratios), max(besov_ratios)]
    run.measured["isomorphism_ratio_range"] = [min(iso_ratios), max(iso_ratios)]
    return EXIT_OK


def cmd_verify_inverse(run: Run) -> int:
    grid = build_grid(run.doc)
    n = run.doc["norms"]
    s, delta = n["s"], n["delta"]
    cut = CutoffPair()
    p = lp.build_partition(grid)
    ens = trig_ensemble(grid, acceptance.seed_for(run.seed, 300, 0), run.ensemble, modes=12, decay=0.5,
                        envelope=grid.half_width / 12)
    a, b = grid.mesh()
    inner = (np.abs(a) <= grid.half_width / 4) & (np.abs(b) <= grid.half_width / 4)
    win = cut.window(grid) > 0
    rows, worst = [], 0.0
    for i, f in enumerate(ens):
        routes = {"quadrature": wave_ops.dalembert_inverse_quadrature(f),
                  "lp": wave_ops.dalembert_inverse_lp(f, p)}
        ref = wave_ops.dalembert_inverse_quadrature(f, method="spectral").values
        scale = max(np.max(np.abs(ref[win])), 1e-300)
        worst = max(worst, np.max(np.abs(routes["lp"].values - ref)[win]) / scale)
        for name, F in routes.items():
            res = float(np.max(np.abs(wave_ops.box_central(F) - f.values)[inner]) / np.max(np.abs(f.values)))
            ratio = lp.mixed_norm(F * cut.window(grid), s, delta) / lp.mixed_norm(f, s - 1.0, delta - 1.0)
            rows.append((i, name, res, ratio))
    run.csv("inverse.csv", ["f_id", "route", "residual", "ratio"], rows)
    run.measured["lp_vs_spectral_quadrature_relative"] = worst
    run.measured["max_ratio"] = max(r[3] for r in rows)
    return EXIT_OK if worst <= 1e-6 else EXIT_CHECK_FAILED


def cmd_verify_composition(run: Run) -> int:
    grid = build_grid(run.doc)
    n = run.doc["norms"]
    sigma = build_sigma(run.doc)
    ens = trig_ensemble(grid, acceptance.seed_for(run.seed, 400, 0), run.ensemble, modes=12, decay=0.5,
                        envelope=grid.half_width / 10, vector=True)
    ens = [f * (0.05 + 0.05 * k) for k, f in enumerate(ens)]
    rep = composition_bound_check(sigma, ens, n["s"], n["delta"])
    rows = [("c1", i, v) for i, v in enumerate(rep.ratios1)] + [("c2", i, v) for i, v in enumerate(rep.ratios2)]
    run.csv("composition.csv", ["bound", "index", "ratio"], rows)
    run.measured.update({"c1": rep.c1, "c2": rep.c2, "skipped": rep.skipped})
    return EXIT_OK


def _problem(run: Run):
    cfg = build_solver_config(run.doc, acceptance.seed_for(run.seed, 500, 0))
    data, table, sigma = build_data(run.doc), build_table(run.doc), build_sigma(run.doc)
    sample = fbs.sample_sheet(cfg.grid, cfg.hurst, cfg.seed)
    run.seeds["noise"] = cfg.seed
    return cfg, data, sample, table, sigma


def _trace_rows(state: solver.PicardState):
    rows = []
    inc = state.increments
    for n in range(1, len(inc) + 1):
        factor = inc[n - 1] / inc[n - 2] if n >= 2 and inc[n - 2] > 0 else float("nan")
        defect = inc[n] if n < len(inc) else state.residual
        rows.append((n, inc[n - 1], factor, defect))
    return rows


def cmd_solve(run: Run) -> int:
    cfg, data, sample, table, sigma = _problem(run)
    cut = CutoffPair()
    lam = run.doc["solver"]["lam"] or solver.choose_lambda(cfg, data, sample, table, sigma, cut)
    cfg = cfg.with_lambda(lam)
    sol = solver.solve_local(cfg, data, sample, table, sigma, cut, run.doc["solver"]["centers"][0])
    run.csv("picard_trace.csv", ["iter", "increment", "factor", "residual"], _trace_rows(sol.state))
    run.field("solution", sol.u)
    run.measured.update({
        "lambda": lam, "iterations": sol.state.iteration, "contraction_factor": sol.state.contraction_factor,
        "rescaled_residual": sol.residual, "norm": sol.norm, "mean": sol.mean,
    })
    return EXIT_OK


def cmd_glue(run: Run) -> int:
    cfg, data, sample, table, sigma = _problem(run)
    sv = run.doc["solver"]
    rep = solver.glue_solutions(sv["centers"], cfg, data, sample, table, sigma, CutoffPair(),
                                lam=sv["lam"], tol=sv["glue_tol"])
    rows = [(a, b, d, rep.overlap_cells[(a, b)]) for (a, b), d in rep.disagreements.items()]
    run.csv("glue.csv", ["center_a", "center_b", "disagreement", "overlap_points"], rows)
    for i, sol in enumerate(rep.solutions):
        run.field(f"local_{i:02d}", sol.u)
    run.measured.update({"lambda": rep.lam, "centers": rep.centers, "max_disagreement": rep.max_disagreement,
                         "residuals": [s.residual for s in rep.solutions]})
    return EXIT_OK if rep.success else EXIT_CHECK_FAILED


def cmd_accept(run: Run, criteria=None) -> int:
    report, det = acceptance.run_acceptance(run.seed, criteria, run.workers, echo=print)
    text = report.csv_text()
    run.path("acceptance.csv").write_text(text)
    run.outputs.append("acceptance.csv")
    run.measured["timings"] = {str(k): v for k, v in report.timings().items()}
    run.measured["passed"] = report.passed
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


COMMANDS = {
    "sample-fbs": cmd_sample_fbs,
    "verify-norms": cmd_verify_norms,
    "verify-inverse": cmd_verify_inverse,
    "verify-composition": cmd_verify_composition,
    "solve": cmd_solve,
    "glue": cmd_glue,
    "accept": cmd_accept,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgwave", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"sgwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="existing output directory")
        p.add_argument("--seed", type=int, help="base seed (overrides the configuration)")
        p.add_argument("--workers", type=int, help="worker processes for ensemble work")
        p.add_argument("--ensemble", type=int, help="ensemble size")
        if name == "sample-fbs":
            p.add_argument("--h1", type=float, help="Hurst index along alpha")
            p.add_argument("--h2", type=float, help="Hurst index along beta")
            p.add_argument("--n", type=int, help="grid points per axis")
            p.add_argument("--l", type=float, help="half width L of the box [-L, L)")
        if name == "glue":
            p.add_argument("--centers", help="comma-separated diagonal points, e.g. 0,0.0625")
        if name == "accept":
            p.add_argument("--criteria", help="comma-separated subset of 1-10 (default: all)")
    return parser


def _env_or(value, key, cast=str):
    if value is not None:
        return value
    raw = os.environ.get(ENV_PREFIX + key)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"environment variable {ENV_PREFIX + key}={raw!r} is not a valid {cast.__name__}") from None


def _parse_list(text: str, cast, what: str):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse {what} from {text!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = _env_or(args.config, "CONFIG")
        out = _env_or(args.out, "OUT")
        seed = _env_or(args.seed, "SEED", int)
        workers = _env_or(args.workers, "WORKERS", int)
        ensemble = _env_or(args.ensemble, "ENSEMBLE", int)
        overrides = {}
        if seed is not None:
            overrides["base_seed"] = seed
        for key, section, name in (("h1", "hurst", "h1"), ("h2", "hurst", "h2"),
                                   ("n", "grid", "n"), ("l", "grid", "half_width")):
            if getattr(args, key, None) is not None:
                overrides.setdefault(section, {})[name] = getattr(args, key)
        if getattr(args, "centers", None):
            overrides.setdefault("solver", {})["centers"] = _parse_list(args.centers, float, "centers")
        output = {}
        if workers is not None:
            output["workers"] = workers
        if ensemble is not None:
            output["ensemble"] = ensemble
        if output:
            overrides["output"] = output
        doc = load_config(config_path, overrides)
        if "base_seed" not in doc:
            raise ConfigError("base_seed is required: set it in the configuration, with --seed or SGWAVE_SEED")
        criteria = None
        if getattr(args, "criteria", None):
            criteria = _parse_list(args.criteria, int, "criteria")
            if not set(criteria) <= set(range(1, 11)):
                raise ConfigError(f"criteria must be drawn from 1-10, got {criteria}")
        if out is None:
            raise OutputDirError("no output directory given (--out or SGWAVE_OUT)")
        out = Path(out)
        if not out.is_dir():
            raise OutputDirError(f"output directory {out} does not exist")
    except ConfigError as exc:
        print(f"sgwave: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputDirError as exc:
        print(f"sgwave: {exc}", file=sys.stderr)
        return EXIT_OUTDIR

    run = Run(args.command, doc, out, doc["base_seed"], doc["output"]["workers"], doc["output"]["ensemble"])
    try:
        if args.command == "accept":
            code = cmd_accept(run, criteria)
        else:
            code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"sgwave: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sgwave: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        run.measured["error"] = f"{type(exc).__name__}: {exc}"
        run.manifest("error")
        return EXIT_MODULE
    run.manifest("ok" if code == EXIT_OK else "check_failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
