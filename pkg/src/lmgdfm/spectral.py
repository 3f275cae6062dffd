"""Periodogram and discrete smoothed-periodogram spectral estimation."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fracsim import TimeSeriesPanel

__all__ = [
    "FrequencyGrid",
    "KernelSpec",
    "SpectralField",
    "BARTLETT_PRIESTLEY",
    "EPANECHNIKOV",
    "default_grid_size",
    "get_kernel",
    "kernel_weight",
    "periodogram",
    "smoothed_spectrum",
]


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing frequencies in (-pi, pi].

    ``kind`` is ``"fourier"``, ``"uniform"`` or ``"custom"``.  A uniform grid
    of size N is the midpoint grid ``-pi + 2 pi (k + 1/2) / N``: it is
    symmetric about zero and never contains ``theta = 0``, where long-memory
    spectra are singular.
    """

    points: np.ndarray
    kind: str = "custom"
    size: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid must be a non-empty 1-D array")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] <= -np.pi - 1e-12 or pts[-1] > np.pi + 1e-12:
            raise ValueError("grid points must lie in (-pi, pi]")
        object.__setattr__(self, "points", pts)

    @classmethod
    def fourier(cls, T: int, exclude_zero: bool = True) -> "FrequencyGrid":
        T0 = (T - 1) // 2
        j = np.arange(-T0, T0 + 1)
        if exclude_zero:
            j = j[j != 0]
        return cls(2 * np.pi * j / T, kind="fourier", size=T)

    @classmethod
    def uniform(cls, N: int) -> "FrequencyGrid":
        k = np.arange(N)
        return cls(-np.pi + 2 * np.pi * (k + 0.5) / N, kind="uniform", size=N)

    @classmethod
    def custom(cls, points) -> "FrequencyGrid":
        return cls(np.asarray(points, dtype=float), kind="custom")

    def __len__(self) -> int:
        return self.points.size

    @property
    def is_symmetric(self) -> bool:
        p = self.points
        return bool(np.allclose(p, -p[::-1], atol=1e-12, rtol=0))

    def same_as(self, other: "FrequencyGrid") -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.points, other.points))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """One n x n Hermitian matrix per grid point; ``mats`` has shape (N, n, n)."""

    grid: FrequencyGrid
    mats: np.ndarray
    empty: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.mats.shape[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "i", "j", "re", "im"])
            for theta, mat in zip(self.grid.points, self.mats):
                for i in range(self.n):
                    for j in range(self.n):
                        z = mat[i, j]
                        writer.writerow([repr(float(theta)), i, j, repr(z.real), repr(z.imag)])


@dataclass(frozen=True)
class KernelSpec:
    name: str
    rho: float
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, x):
        return kernel_weight(self, x)


def _epanechnikov(x):
    return 0.75 * (1.0 - x**2)


def _bartlett_priestley(x):
    return 3.0 / (4.0 * np.pi) * (1.0 - (x / np.pi) ** 2)


EPANECHNIKOV = KernelSpec("epanechnikov", 1.0, _epanechnikov)
BARTLETT_PRIESTLEY = KernelSpec("bartlett-priestley", np.pi, _bartlett_priestley)
_KERNELS = {k.name: k for k in (EPANECHNIKOV, BARTLETT_PRIESTLEY)}


def get_kernel(name: str) -> KernelSpec:
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_KERNELS)}") from None


def kernel_weight(kernel: KernelSpec, x):
    """Kernel value, zero outside ``[-rho, rho]``."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= kernel.rho
    return np.where(inside, kernel.func(np.where(inside, x, 0.0)), 0.0)


def default_grid_size(T: int) -> int:
    return 1 << int(np.ceil(np.log2(8 * T)))


def dft(X: np.ndarray, freqs) -> np.ndarray:
    """d(lambda) = sum_{t=0}^{T-1} X_t exp(-i lambda t), shape (n, len(freqs))."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    t = np.arange(X.shape[1])
    return X @ np.exp(-1j * np.outer(t, freqs))


def fourier_dft(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """DFT at the Fourier frequencies j = -T0..T0, j != 0 (FFT path)."""
    T = X.shape[1]
    T0 = (T - 1) // 2
    j = np.arange(-T0, T0 + 1)
    j = j[j != 0]
    D = np.fft.fft(X, axis=1)[:, j % T]
    return 2 * np.pi * j / T, D


def periodogram(panel: TimeSeriesPanel | np.ndarray, lam) -> np.ndarray:
    """I_XX(lambda) = d d^* / (2 pi T); (n, n) for scalar lambda, else (K, n, n)."""
    X = panel.X if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    T = X.shape[1]
    if T < 2:
        raise ValueError("need T >= 2")
    D = dft(X, lam).T  # (K, n)
    out = D[:, :, None] * np.conj(D[:, None, :]) / (2 * np.pi * T)
    return out[0] if np.ndim(lam) == 0 else out


def smoothed_spectrum(panel: TimeSeriesPanel | np.ndarray, grid: FrequencyGrid, bandwidth: float,
                      kernel: KernelSpec = EPANECHNIKOV) -> SpectralField:
    """Discrete smoothed periodogram on ``grid``.

    Sigma_hat(theta) = 2 pi / (B T) sum_{j != 0} W((theta - lambda_j) / B) I(lambda_j),
    with j ranging over -T0..T0.  The mean frequency is excluded.  Grid points
    whose kernel window holds no Fourier frequency come back as zero
    matrices and are flagged in ``empty``.
    """
    X = panel.X if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    n, T = X.shape
    if not 0 < bandwidth <= 1:
        raise ValueError("bandwidth must lie in (0, 1]")
    if bandwidth * T < 1:
        raise ValueError("need B_T * T >= 1")
    lam, D = fourier_dft(X)
    theta = grid.points
    half = kernel.rho * bandwidth
    lo = np.searchsorted(lam, theta - half, side="left")
    hi = np.searchsorted(lam, theta + half, side="right")
    width = int(np.max(hi - lo)) if theta.size else 0
    N = theta.size
    mats = np.zeros((N, n, n), dtype=complex)
    empty = hi <= lo
    if width > 0:
        idx = lo[:, None] + np.arange(width)[None, :]
        valid = idx < hi[:, None]
        idx = np.where(valid, idx, 0)
        w = np.where(valid, kernel_weight(kernel, (theta[:, None] - lam[idx]) / bandwidth), 0.0)
        empty = empty | ~np.any(w > 0, axis=1)
        scale = 1.0 / (bandwidth * T * T)
        # chunk to bound memory: (chunk, n, width) complex
        chunk = max(1, int(2**24 // max(1, n * width)))
        for s in range(0, N, chunk):
            sl = slice(s, s + chunk)
            Y = D[:, idx[sl]].transpose(1, 0, 2) * np.sqrt(w[sl])[:, None, :]
            mats[sl] = scale * (Y @ np.conj(np.swapaxes(Y, -1, -2)))
    if np.any(empty):
        warnings.warn(f"{int(empty.sum())} grid point(s) have an empty kernel window",
                      RuntimeWarning, stacklevel=2)
    return SpectralField(grid, mats, empty)


def smoothed_spectrum_folded(panel: TimeSeriesPanel | np.ndarray, grid: FrequencyGrid,
                             bandwidth: float, kernel: KernelSpec = EPANECHNIKOV) -> np.ndarray:
    """Folded variant summing j = 1..T0 with weight W(theta-lam) + W(theta+lam) on I(lam_j).

    Dense reference implementation; agrees with :func:`smoothed_spectrum`
    in the real part only, since I(-lambda) is the conjugate of I(lambda).
    """
    X = panel.X if isinstance(panel, TimeSeriesPanel) else np.asarray(panel, dtype=float)
    T = X.shape[1]
    T0 = (T - 1) // 2
    lam = 2 * np.pi * np.arange(1, T0 + 1) / T
    I = periodogram(X, lam)
    th = grid.points[:, None]
    w = kernel_weight(kernel, (th - lam) / bandwidth) + kernel_weight(kernel, (th + lam) / bandwidth)
    return 2 * np.pi / (bandwidth * T) * np.einsum("kj,jab->kab", w, I)
