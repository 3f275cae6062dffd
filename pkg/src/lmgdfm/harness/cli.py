"""Command-line entry point: ``python -m lmgdfm <command> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..diagnostics import r_criterion
from ..filterbank import apply_filter_range, feasible_estimate, oracle_bank, static_pca_estimate
from ..fracsim import analytic_spectrum, simulate_panel
from ..spectral import FrequencyGrid, SpectralField, default_grid_size, get_kernel, smoothed_spectrum
from ..theory import MemoryDomainError, rho_recursion, tune_common, tune_factor_hetero, tune_row_hetero
from .config import PRESETS, ConfigError, ExperimentConfig, load_config, preset_config, preset_model
from .figures import FIGURES, run_figure
from .montecarlo import emit_table, resolve_threads, run_montecarlo


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $LMGDFM_THREADS or 1)")


def _model_args(p: argparse.ArgumentParser, default_preset: str = "table12") -> None:
    p.add_argument("--preset", default=default_preset, choices=sorted(PRESETS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--T", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmgdfm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a panel and write X, chi, xi as CSV")
    _common(p)
    _model_args(p)

    p = sub.add_parser("spectrum", help="smoothed-periodogram (or population) spectral field as CSV")
    _common(p)
    _model_args(p)
    p.add_argument("--b", type=float, default=0.5, help="bandwidth exponent, B_T = T^-b")
    p.add_argument("--kernel", default="epanechnikov")
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--analytic", action="store_true", help="write the population spectrum instead")

    p = sub.add_parser("estimate", help="estimate the common component of a simulated panel")
    _common(p)
    _model_args(p)
    p.add_argument("--method", choices=["dynamic", "static", "oracle"], default="dynamic")
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--kernel", default="epanechnikov")

    p = sub.add_parser("eigengap", help="population eigengap curve and its log-log slope")
    _common(p)
    p.add_argument("--preset", default="companion-rank2", choices=sorted(PRESETS))
    p.add_argument("--n", type=int, default=80)
    p.add_argument("--lo", type=float, default=1e-3)
    p.add_argument("--hi", type=float, default=1e-1)
    p.add_argument("--points", type=int, default=50)

    p = sub.add_parser("decay", help="oracle filter-coefficient norms and their tail slope")
    _common(p)
    p.add_argument("--preset", default="rank1-rowpert", choices=sorted(PRESETS))
    p.add_argument("--n", type=int, default=80)
    p.add_argument("--row", type=int, default=9, help="0-based target row")
    p.add_argument("--M", type=int, default=400)
    p.add_argument("--N", type=int, default=1 << 14)
    p.add_argument("--h-min", type=float, default=80)

    p = sub.add_parser("tune", help="optimal polynomial tuning exponents")
    p.add_argument("--regime", choices=["common", "factor", "row"], required=True)
    p.add_argument("--d", type=float, required=True, help="largest memory parameter")
    p.add_argument("--delta", type=float, default=0.0, help="memory spread")
    p.add_argument("--rho", type=float, default=None, help="Hoelder exponent (factor regime)")

    p = sub.add_parser("montecarlo", help="Monte Carlo R-criterion tables")
    _common(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--grid", default=None, help="cells as NxT, comma separated, e.g. 20x20,50x200")
    p.add_argument("--methods", default=None, help="comma separated subset of dynamic,static,oracle")

    p = sub.add_parser("figure", help="figure dataset (eigengap, decay, l1, mainterm)")
    _common(p)
    p.add_argument("name", choices=sorted(FIGURES))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override an option; VALUE is parsed as JSON when possible")
    return parser


def _write_matrix(path: Path, A: np.ndarray) -> None:
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def _manifest(out: Path, command: str, config: dict, seed, wall: float, summary: dict | None = None) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": {"lmgdfm": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time": wall,
    }
    if summary is not None:
        doc["summary"] = summary
    (out / "run.json").write_text(json.dumps(doc, indent=2, default=float) + "\n")


def _model_and_panel(args):
    if args.config:
        cfg = load_config(args.config)
        n, T = cfg.grid[0]
        spec = cfg.model_for(n)
        seed = cfg.seed if args.seed is None else args.seed
    else:
        spec = preset_model(args.preset, args.n)
        T = args.T
        seed = 0 if args.seed is None else args.seed
    if T < 16:
        raise ConfigError("T must be at least 16")
    return spec, T, seed


def _read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _parse_grid(text: str) -> list[list[int]]:
    cells = []
    for part in text.split(","):
        try:
            n, T = part.lower().split("x")
            cells.append([int(n), int(T)])
        except ValueError:
            raise ConfigError(f"bad grid cell {part!r}; expected NxT") from None
    return cells


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _run(args) -> int:
    start = time.perf_counter()
    if args.command == "tune":
        return _tune(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "simulate":
        spec, T, seed = _model_and_panel(args)
        panel = simulate_panel(spec, T, seed)
        _write_matrix(out / "X.csv", panel.X)
        _write_matrix(out / "chi.csv", panel.chi)
        _write_matrix(out / "xi.csv", panel.xi)
        _manifest(out, "simulate", {"model": spec.to_dict(), "T": T}, seed, time.perf_counter() - start)
        print(f"wrote {spec.n}x{T} panel to {out}")
    elif args.command == "spectrum":
        spec, T, seed = _model_and_panel(args)
        grid = FrequencyGrid.uniform(args.grid_size or default_grid_size(T))
        if args.analytic:
            field = SpectralField(grid, analytic_spectrum(spec, grid.points))
        else:
            field = smoothed_spectrum(simulate_panel(spec, T, seed), grid, T ** -args.b, get_kernel(args.kernel))
        field.to_csv(out / "spectrum.csv")
        _manifest(out, "spectrum", {"model": spec.to_dict(), "T": T, "b": args.b, "N": len(grid)}, seed,
                  time.perf_counter() - start)
        print(f"wrote spectral field on {len(grid)} frequencies to {out / 'spectrum.csv'}")
    elif args.command == "estimate":
        spec, T, seed = _model_and_panel(args)
        panel = simulate_panel(spec, T, seed)
        if args.method == "dynamic":
            chi_hat = feasible_estimate(panel, spec.q, T ** -args.b, get_kernel(args.kernel), args.M)
        elif args.method == "oracle":
            chi_hat = apply_filter_range(oracle_bank(spec, args.M), panel.X, 1, T)
        else:
            chi_hat = static_pca_estimate(panel, spec.q)
        _write_matrix(out / "chi_hat.csv", chi_hat)
        R = r_criterion(chi_hat, panel.chi)
        _manifest(out, "estimate", {"model": spec.to_dict(), "T": T, "method": args.method, "M": args.M},
                  seed, time.perf_counter() - start, {"R": R})
        print(f"R = {R:.6f}")
    elif args.command in ("eigengap", "decay", "figure"):
        if args.command == "eigengap":
            name, opts = "eigengap", {"preset": args.preset, "n": args.n, "lo": args.lo, "hi": args.hi,
                                      "points": args.points}
        elif args.command == "decay":
            name, opts = "decay", {"preset": args.preset, "n": args.n, "row": args.row, "M": args.M,
                                   "N": args.N, "h_min": args.h_min}
        else:
            name, opts = args.name, _parse_set(args.set)
            if args.config:
                opts = {**_read_json(args.config), **opts}
            if name in ("l1", "mainterm"):
                opts.setdefault("threads", resolve_threads(args.threads))
                if args.seed is not None:
                    opts["seed"] = args.seed
        res = run_figure(name, **opts)
        res.to_csv(out / f"fig_{name}.csv")
        _manifest(out, name, {k: v for k, v in opts.items() if k != "norms"}, args.seed,
                  time.perf_counter() - start, res.summary)
        print(json.dumps(res.summary, default=float))
    elif args.command == "montecarlo":
        cfg = _montecarlo_config(args)
        table = run_montecarlo(cfg, args.threads)
        for method in cfg.methods:
            (out / f"table_{method}.csv").write_text(emit_table(table, method, "csv"))
            (out / f"table_{method}.md").write_text(emit_table(table, method, "markdown"))
            print(f"{method}:")
            print(emit_table(table, method, "markdown"))
        _manifest(out, "montecarlo", cfg.to_dict(), cfg.seed, table.wall_time, table.meta)
    return 0


def _montecarlo_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        raise ConfigError("montecarlo needs --config or --preset")
    changes = {}
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.grid is not None:
        changes["grid"] = _parse_grid(args.grid)
    if args.methods is not None:
        changes["methods"] = [m.strip() for m in args.methods.split(",")]
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def _tune(args) -> int:
    if args.regime == "common":
        res = tune_common(args.d)
    elif args.regime == "row":
        res = tune_row_hetero(args.d, args.delta)
    else:
        rho = args.rho
        if rho is None:
            rho = rho_recursion([args.d, args.d - args.delta])[-1] if args.delta > 0 else 1.0
        res = tune_factor_hetero(args.d, args.delta, rho)
    print(f"regime: {res.regime}")
    print(f"b*: {res.b_star:.4f}" if np.isfinite(res.b_star) else "b*: -")
    print(f"m*: {res.cell('m', 4)}")
    print(f"kappa*: {res.cell('kappa', 4)}")
    if not res.valid:
        print(f"infeasible: {res.reason}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on unknown flags
    try:
        return _run(args)
    except (ConfigError, MemoryDomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
