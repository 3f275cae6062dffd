"""Lag/lead filter coefficients of the eigenprojection and two-sided filtering.

Conventions: ``K_h = (1/2pi) int K(theta) e^{-ih theta} d theta`` so that
``sum_h K_h e^{ih theta}`` rebuilds K(theta), and the filter is
``chi_hat_t = sum_h K_h X_{t-h}``.  Time indices ``t`` are 1-based as in
the window ``h in [max(t - T, -M), min(t - 1, M)]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .eigenproj import ProjectionField, hermitian_eig, leading_projection, projection_field, projection_from
from .fracsim import ModelSpec, TimeSeriesPanel, analytic_spectrum
from .spectral import EPANECHNIKOV, FrequencyGrid, KernelSpec, smoothed_spectrum

__all__ = [
    "FilterBank",
    "apply_filter",
    "coefficient_norms",
    "default_inversion_size",
    "feasible_bank",
    "feasible_estimate",
    "filter_window",
    "fourier_coefficients",
    "oracle_bank",
    "oracle_estimate",
    "static_pca_estimate",
]

REALITY_TOL = 1e-7


class FilterConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Real coefficients ``K_h`` for h = -M..M, stored as ``coeffs[h + M]``.

    ``coeffs`` has shape (2M + 1, r, n); r = n for a full bank, or the number
    of selected target rows (``rows``) for a row bank.
    """

    M: int
    coeffs: np.ndarray
    grid_size: int
    rows: tuple[int, ...] | None = None
    max_imag: float = 0.0

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    def lag(self, h: int) -> np.ndarray:
        if abs(h) > self.M:
            raise IndexError(f"lag {h} outside [-{self.M}, {self.M}]")
        return self.coeffs[h + self.M]

    def to_csv(self, path) -> None:
        rows = self.rows if self.rows is not None else range(self.coeffs.shape[1])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["h", "i", "j", "value"])
            for h in range(-self.M, self.M + 1):
                K = self.lag(h)
                for a, i in enumerate(rows):
                    for j in range(self.n):
                        writer.writerow([h, i, j, repr(float(K[a, j]))])


def default_inversion_size(M: int) -> int:
    return max(1 << 12, 8 * M)


def _uniform_offset(grid: FrequencyGrid) -> float:
    pts = grid.points
    if pts.size > 1 and np.allclose(np.diff(pts), 2 * np.pi / pts.size, rtol=0, atol=1e-9):
        return float(pts[0])
    raise FilterConfigError("Fourier inversion needs a uniform grid covering (-pi, pi]")


def fourier_coefficients(field: ProjectionField | np.ndarray, M: int,
                         grid: FrequencyGrid | None = None) -> FilterBank:
    """Rectangle-rule Fourier coefficients K_-M..K_M of a field on a uniform grid.

    K_h = (1/N) sum_k K(theta_k) exp(-i h theta_k), evaluated with one FFT.
    The imaginary part must vanish to ``1e-7`` relative (conjugate-symmetric
    fields) and is discarded.
    """
    if isinstance(field, ProjectionField):
        values, grid, rows = field.proj, field.grid, field.rows
    else:
        values, rows = np.asarray(field), None
        if grid is None:
            raise ValueError("grid required when passing a raw array")
    N = len(grid)
    if M < 0:
        raise FilterConfigError("M must be nonnegative")
    if N < 4 * M:
        raise FilterConfigError(f"grid of {N} points cannot resolve lags up to M={M} (need N >= 4M)")
    theta0 = _uniform_offset(grid)
    F = np.fft.fft(values, axis=0) / N
    h = np.arange(-M, M + 1)
    phase = np.exp(-1j * h * theta0)
    K = F[h % N] * phase.reshape((-1,) + (1,) * (values.ndim - 1))
    scale = float(np.max(np.abs(K.real))) if K.size else 0.0
    max_imag = float(np.max(np.abs(K.imag))) if K.size else 0.0
    if max_imag > REALITY_TOL * max(scale, np.finfo(float).tiny):
        raise ValueError(f"coefficients are not real (max |Im| = {max_imag:.3g}, max |Re| = {scale:.3g}); "
                         "field is not conjugate-symmetric")
    coeffs = K.real
    if coeffs.ndim == 2:
        coeffs = coeffs[:, None, :]
    return FilterBank(M, np.ascontiguousarray(coeffs), N, rows, max_imag)


def filter_window(T: int, t: int, M: int) -> tuple[int, int]:
    """Lag range [h_lo, h_hi] used at (1-based) time t."""
    if not 1 <= t <= T:
        raise IndexError(f"t={t} outside 1..{T}")
    return max(t - T, -M), min(t - 1, M)


def apply_filter(bank: FilterBank, panel: TimeSeriesPanel | np.ndarray, t) -> np.ndarray:
    """chi_hat_t = sum_h K_h X_{t-h} over the in-sample window at 1-based time(s) t.

    Scalar t gives an r-vector; a sequence of times gives shape (r, len(t)).
    """
    X = panel.X if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    n, T = X.shape
    if n != bank.n:
        raise ValueError(f"bank built for n={bank.n}, panel has n={n}")
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=int))
    out = np.zeros((bank.coeffs.shape[1], ts.size))
    for k, tt in enumerate(ts):
        lo, hi = filter_window(T, int(tt), bank.M)
        h = np.arange(lo, hi + 1)
        cols = tt - h - 1  # 0-based column of X_{t-h}
        assert cols.min() >= 0 and cols.max() < T
        out[:, k] = np.einsum("hrn,nh->r", bank.coeffs[h + bank.M], X[:, cols])
    return out[:, 0] if scalar else out


def apply_filter_range(bank: FilterBank, X: np.ndarray, t_start: int, t_stop: int) -> np.ndarray:
    """Vectorized :func:`apply_filter` for t_start..t_stop (1-based, inclusive).

    Lags falling outside the sample are dropped exactly as in the per-t window.
    """
    n, T = X.shape
    ts = np.arange(t_start, t_stop + 1)
    if ts.size == 0:
        return np.zeros((bank.coeffs.shape[1], 0))
    if ts[0] < 1 or ts[-1] > T:
        raise IndexError("time range outside the sample")
    M = bank.M
    pad = np.zeros((n, T + 2 * M))
    pad[:, M: M + T] = X
    out = np.zeros((bank.coeffs.shape[1], ts.size))
    for h in range(-M, M + 1):
        # X_{t-h} sits at padded column (t - h - 1) + M; zero padding drops out-of-sample lags
        cols = ts - h - 1 + M
        out += bank.coeffs[h + M] @ pad[:, cols]
    return out


def coefficient_norms(bank: FilterBank, i: int | None = None) -> np.ndarray:
    """(h, ||K_h||) for h = 1..M, symmetrized over +-h by taking the max.

    With a row index the Euclidean norm of that row is used; otherwise the
    spectral norm of the full coefficient matrix.
    """
    M = bank.M
    if i is not None:
        if bank.rows is None:
            if not 0 <= i < bank.coeffs.shape[1]:
                raise IndexError(f"row {i} out of range")
            a = i
        else:
            if i not in bank.rows:
                raise IndexError(f"row {i} not stored in this bank")
            a = bank.rows.index(i)
        norms = np.linalg.norm(bank.coeffs[:, a, :], axis=-1)
    else:
        norms = np.linalg.norm(bank.coeffs, ord=2, axis=(-2, -1))
    h = np.arange(1, M + 1)
    vals = np.maximum(norms[M + h], norms[M - h])
    return np.column_stack([h, vals])


def oracle_field(spec: ModelSpec, q: int, N: int, rows=None, chunk: int = 256) -> ProjectionField:
    """Transfer function of the oracle filter from the population spectrum on the N-grid."""
    grid = FrequencyGrid.uniform(N)
    return projection_from(lambda idx: analytic_spectrum(spec, grid.points[idx]), grid, spec.n, q,
                           rows=rows, chunk=chunk, conj_symmetric=True)


def oracle_bank(spec: ModelSpec, M: int, N: int | None = None, q: int | None = None,
                rows=None) -> FilterBank:
    q = spec.q if q is None else q
    N = default_inversion_size(M) if N is None else N
    key = None if rows is None else tuple(np.atleast_1d(rows).tolist())
    return _oracle_bank_cached(spec, M, N, q, key)


@lru_cache(maxsize=16)
def _oracle_bank_cached(spec, M, N, q, rows):
    return fourier_coefficients(oracle_field(spec, q, N, rows=rows), M)


def oracle_estimate(spec: ModelSpec, panel: TimeSeriesPanel, t, M: int, N: int | None = None) -> np.ndarray:
    """Population-filter estimate of chi at time(s) t."""
    return apply_filter(oracle_bank(spec, M, N), panel, t)


def feasible_bank(panel: TimeSeriesPanel | np.ndarray, q: int, bandwidth: float,
                  kernel: KernelSpec = EPANECHNIKOV, M: int = 10, N: int | None = None,
                  rows=None) -> FilterBank:
    X = panel.X if isinstance(panel, TimeSeriesPanel) else panel
    N = default_inversion_size(M) if N is None else N
    field = smoothed_spectrum(X, FrequencyGrid.uniform(N), bandwidth, kernel)
    return fourier_coefficients(projection_field(field, q, rows=rows), M)


def feasible_estimate(panel: TimeSeriesPanel, q: int, bandwidth: float,
                      kernel: KernelSpec = EPANECHNIKOV, M: int = 10, N: int | None = None,
                      t=None) -> np.ndarray:
    """End-to-end dynamic-PCA estimate: smoothing, eigenprojection, inversion, filtering."""
    bank = feasible_bank(panel, q, bandwidth, kernel, M, N)
    if t is None:
        return apply_filter_range(bank, panel.X, 1, panel.T)
    return apply_filter(bank, panel, t)


def static_pca_estimate(panel: TimeSeriesPanel | np.ndarray, q_static: int) -> np.ndarray:
    """Time-domain PCA common component.

    P is the leading-q projection of the demeaned sample covariance and the
    estimate is P (X - mean) + P mean = P X.
    """
    X = panel.X if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    n, T = X.shape
    if not 1 <= q_static <= n:
        raise ValueError(f"q_static={q_static} outside 1..{n}")
    mean = X.mean(axis=1, keepdims=True)
    Xc = X - mean
    P = leading_projection(hermitian_eig(Xc @ Xc.T / T), q_static).real
    return P @ Xc + P @ mean
