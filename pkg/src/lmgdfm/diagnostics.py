"""Recovery criterion, eigengap curves, power-law slope fits and spectral error metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .eigenproj import eigengap, hermitian_eig
from .filterbank import FilterBank, apply_filter
from .fracsim import ModelSpec, TimeSeriesPanel, analytic_spectrum
from .spectral import SpectralField

__all__ = [
    "MainTerm",
    "SlopeFit",
    "decay_slope",
    "eigengap_curve",
    "eigengap_slope",
    "l1_spectral_error",
    "loglog_fit",
    "main_term_moment",
    "r_criterion",
    "write_xy_csv",
]


def r_criterion(chi_hat, chi) -> float:
    """Relative squared recovery error sum (chi_hat - chi)^2 / sum chi^2."""
    chi_hat = np.asarray(chi_hat, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if chi_hat.shape != chi.shape:
        raise ValueError(f"shape mismatch {chi_hat.shape} vs {chi.shape}")
    denom = float(np.sum(chi**2))
    if not denom > 0:
        raise ZeroDivisionError("true common component is identically zero")
    return float(np.sum((chi_hat - chi) ** 2)) / denom


@dataclass(frozen=True)
class SlopeFit:
    """OLS fit of log y on log x over ``[x_min, x_max]``."""

    slope: float
    intercept: float
    r2: float
    x_min: float
    x_max: float
    n_points: int
    n_dropped: int = 0

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def loglog_fit(x, y, x_min: float = -math.inf, x_max: float = math.inf, min_points: int = 5) -> SlopeFit:
    """Power-law fit y ~ exp(a) x^slope on points with x in [x_min, x_max] and y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    window = (x >= x_min) & (x <= x_max) & (x > 0)
    keep = window & (y > 0)
    dropped = int(np.sum(window & ~keep))
    if keep.sum() < min_points:
        raise ValueError(f"need at least {min_points} positive points in the fit window, got {int(keep.sum())}")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), min(1.0, max(0.0, r2)),
                    float(x[keep].min()), float(x[keep].max()), int(keep.sum()), dropped)


def decay_slope(norms, h_min: float = 80, h_max: float = math.inf) -> SlopeFit:
    """Tail decay rate of filter-coefficient norms from rows of (h, ||K_h||)."""
    norms = np.asarray(norms, dtype=float)
    return loglog_fit(norms[:, 0], norms[:, 1], h_min, h_max)


def eigengap_curve(spec: ModelSpec, q: int, theta) -> np.ndarray:
    """Population gaps lambda_q - lambda_{q+1}; rows of (theta, gap)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(theta == 0):
        raise ValueError("eigengap grid must avoid theta = 0")
    gaps = eigengap(hermitian_eig(analytic_spectrum(spec, theta)), q)
    return np.column_stack([theta, np.atleast_1d(gaps)])


def eigengap_slope(curve, lo: float = 1e-3, hi: float = 1e-1) -> SlopeFit:
    curve = np.asarray(curve, dtype=float)
    return loglog_fit(np.abs(curve[:, 0]), curve[:, 1], lo, hi)


def _op_norms(D: np.ndarray) -> np.ndarray:
    """Operator norm of each matrix in a stack; Hermitian stacks use |eigenvalues|."""
    if np.allclose(D, np.conj(np.swapaxes(D, -1, -2)), rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(D))))):
        H = 0.5 * (D + np.conj(np.swapaxes(D, -1, -2)))
        return np.max(np.abs(np.linalg.eigvalsh(H)), axis=-1)
    return np.linalg.norm(D, ord=2, axis=(-2, -1))


def l1_spectral_error(est: SpectralField, truth: SpectralField, d_tilde: float) -> float:
    """Rectangle-rule value of int |theta|^{2 d_tilde} ||est(theta) - truth(theta)||_op dtheta.

    The cell width is 2 pi / N, so the grid should be uniform.
    """
    if not est.grid.same_as(truth.grid):
        raise ValueError("fields live on different grids")
    theta = est.grid.points
    weight = np.abs(theta) ** (2 * d_tilde)
    ops = _op_norms(est.mats - truth.mats)
    return float(np.sum(weight * ops) * 2 * np.pi / theta.size)


@dataclass(frozen=True)
class MainTerm:
    rms: float
    M: int
    n: int
    delta: float
    z: np.ndarray

    @property
    def bench_m_delta(self) -> float:
        return self.M * self.delta * math.sqrt(self.n)

    @property
    def bench_delta(self) -> float:
        return self.delta * math.sqrt(self.n)


def main_term_moment(panels: Sequence[TimeSeriesPanel], oracle: FilterBank, estimated: Sequence[FilterBank],
                     i: int, t: int, delta: float = math.nan) -> MainTerm:
    """Root mean square over replications of Z = |sum_h (K_hat_h - K_h)[i] X_{t-h}|.

    ``i`` is a 0-based row, ``t`` a 1-based time.  Each replication pairs a
    panel with its own estimated bank; the oracle bank is shared.
    """
    if len(panels) != len(estimated):
        raise ValueError("need one estimated bank per panel")
    if len(panels) < 10:
        raise ValueError("need at least 10 replications")
    z = np.empty(len(panels))
    for r, (panel, bank) in enumerate(zip(panels, estimated)):
        if bank.M != oracle.M:
            raise ValueError("estimated and oracle banks use different truncation lags")
        diff = FilterBank(oracle.M, _row(bank, i) - _row(oracle, i), oracle.grid_size, (i,))
        z[r] = abs(float(apply_filter(diff, panel, t)[0]))
    return MainTerm(float(np.sqrt(np.mean(z**2))), oracle.M, panels[0].n, float(delta), z)


def _row(bank: FilterBank, i: int) -> np.ndarray:
    if bank.rows is None:
        return bank.coeffs[:, [i], :]
    return bank.coeffs[:, [bank.rows.index(i)], :]


def write_xy_csv(path, x, y, fit: SlopeFit | None = None, names=("x", "y")) -> None:
    """Plot-ready rows (x, y[, fit_slope, fit_intercept])."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(names) + (["fit_slope", "fit_intercept"] if fit is not None else [])
        writer.writerow(header)
        for a, b in zip(np.asarray(x, dtype=float), np.asarray(y, dtype=float)):
            row = [repr(float(a)), repr(float(b))]
            if fit is not None:
                row += [repr(fit.slope), repr(fit.intercept)]
            writer.writerow(row)
