"""Plot-ready datasets for the eigengap, decay, spectral-error and main-term experiments."""

from __future__ import annotations

import csv
import inspect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..diagnostics import (SlopeFit, decay_slope, eigengap_curve, eigengap_slope, l1_spectral_error,
                           main_term_moment)
from ..filterbank import coefficient_norms, feasible_bank, oracle_bank
from ..fracsim import analytic_spectrum, simulate_panel
from ..spectral import FrequencyGrid, SpectralField, default_grid_size, smoothed_spectrum
from ..theory import MemoryProfile, delta_rate, truncation_M
from .config import ConfigError, preset_model
from .montecarlo import replication_seed, resolve_threads

__all__ = ["FIGURES", "FigureResult", "run_figure"]


@dataclass
class FigureResult:
    name: str
    columns: tuple[str, ...]
    data: np.ndarray
    fit: SlopeFit | None = None
    summary: dict[str, Any] = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            extra = ["fit_slope", "fit_intercept"] if self.fit is not None else []
            writer.writerow(list(self.columns) + extra)
            for row in self.data:
                vals = [repr(float(v)) for v in row]
                if self.fit is not None:
                    vals += [repr(self.fit.slope), repr(self.fit.intercept)]
                writer.writerow(vals)


def _pmap(func, items, threads):
    threads = resolve_threads(threads)
    if threads == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _eigengap(preset="companion-rank2", n=80, lo=1e-3, hi=1e-1, points=50, theta_ref=0.01):
    spec = preset_model(preset, n)
    theta = np.logspace(np.log10(lo), np.log10(hi), points)
    curve = eigengap_curve(spec, spec.q, theta)
    fit = eigengap_slope(curve, lo, hi)
    g1 = eigengap_curve(spec, spec.q, [theta_ref])[0, 1]
    g2 = eigengap_curve(preset_model(preset, 2 * n), spec.q, [theta_ref])[0, 1]
    summary = {"preset": preset, "n": n, "slope": fit.slope, "r2": fit.r2, "doubling_ratio": float(g2 / g1),
               "theta_ref": theta_ref}
    return FigureResult("eigengap", ("theta", "gap"), curve, fit, summary)


def _decay(preset="rank1-rowpert", n=80, row=9, M=400, N=1 << 14, h_min=80, h_max=None, norms=None):
    if norms is None:
        spec = preset_model(preset, n)
        rows = None if row is None else [row]
        norms = coefficient_norms(oracle_bank(spec, M, N, rows=rows), row)
    norms = np.asarray(norms, dtype=float)
    fit = decay_slope(norms, h_min, np.inf if h_max is None else h_max)
    summary = {"preset": preset, "row": row, "M": M, "N": N, "h_min": h_min, "slope": fit.slope, "r2": fit.r2}
    return FigureResult("decay", ("h", "norm"), norms, fit, summary)


def _l1(preset="companion-rank2", n=20, Ts=(128, 256, 512), reps=20, b=0.5, seed=0, threads=None):
    spec = preset_model(preset, n)
    profile = MemoryProfile.from_matrix(spec.d)
    rows = []
    for T in Ts:
        grid = FrequencyGrid.uniform(default_grid_size(T))
        truth = SpectralField(grid, analytic_spectrum(spec, grid.points))
        B = T ** -b

        def one(r, T=T, grid=grid, truth=truth, B=B):
            panel = simulate_panel(spec, T, replication_seed(seed, n, T, r))
            return l1_spectral_error(smoothed_spectrum(panel, grid, B), truth, profile.d_tilde)

        errs = np.array(_pmap(one, range(reps), threads))
        delta = delta_rate(T, B, profile.spread)
        rows.append([T, errs.mean(), errs.std(ddof=1) if reps > 1 else 0.0, delta, errs.mean() / delta])
    data = np.array(rows)
    summary = {"preset": preset, "n": n, "reps": reps, "b": b,
               "decreasing": bool(np.all(np.diff(data[:, 1]) < 0)),
               "ratio_spread": float(data[:, 4].max() / data[:, 4].min())}
    return FigureResult("l1", ("T", "mean_error", "std_error", "delta", "error_over_delta"), data, None, summary)


def _mainterm(preset="companion-rank2", n=20, Ts=(160, 192, 256, 384, 512, 768, 1024), reps=20, i=0, t=50,
              b=0.4, beta=0.6, C_M=100.0, seed=0, threads=None):
    spec = preset_model(preset, n)
    spread = MemoryProfile.from_matrix(spec.d).spread
    rows = []
    for T in Ts:
        B = T ** -b
        delta = delta_rate(T, B, spread)
        M = truncation_M(delta, n, beta, C_M)
        N = max(default_grid_size(T), 4 * M)
        oracle = oracle_bank(spec, M, N, rows=[i])

        def one(r, T=T, B=B, M=M, N=N):
            panel = simulate_panel(spec, T, replication_seed(seed, n, T, r))
            return panel, feasible_bank(panel, spec.q, B, M=M, N=N, rows=[i])

        pairs = _pmap(one, range(reps), threads)
        res = main_term_moment([p for p, _ in pairs], oracle, [k for _, k in pairs], i, t, delta)
        rows.append([T, M, res.rms, res.bench_m_delta, res.bench_delta])
    data = np.array(rows, dtype=float)
    ratio = data[:, 2] / data[:, 3]
    summary = {"preset": preset, "n": n, "i": i, "t": t, "b": b, "beta": beta, "C_M": C_M, "reps": reps,
               "ratio_spread": float(ratio.max() / ratio.min())}
    return FigureResult("mainterm", ("T", "M", "rms", "M_delta_sqrt_n", "delta_sqrt_n"), data, None, summary)


FIGURES = {"eigengap": _eigengap, "decay": _decay, "l1": _l1, "mainterm": _mainterm}


def run_figure(name: str, **overrides) -> FigureResult:
    """Run a figure experiment; keyword overrides replace its defaults."""
    try:
        func = FIGURES[name]
    except KeyError:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}") from None
    unknown = set(overrides) - set(inspect.signature(func).parameters)
    if unknown:
        raise ConfigError(f"unknown option(s) for figure {name!r}: {sorted(unknown)}")
    return func(**overrides)
