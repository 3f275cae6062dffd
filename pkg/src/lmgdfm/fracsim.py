"""Simulation and population spectra of long-memory dynamic factor panels.

The common component of series ``i`` is

    chi_it = sum_l c_il (1 - L)^{-d_il} Theta_il(L) / Phi_il(L) u_lt

with unit-variance Gaussian shocks ``u_lt``.  The population spectral
density carries the 1/(2 pi) factor, so ``Sigma_chi(theta) = B B^* / (2 pi)``
and ``E[I_XX(lambda)] ~ Sigma(lambda)`` for the periodogram in
:mod:`lmgdfm.spectral`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy import linalg, signal
from scipy.special import gammaln

__all__ = [
    "AR1Toeplitz",
    "ModelSpec",
    "TimeSeriesPanel",
    "WhiteNoise",
    "analytic_spectrum",
    "frac_coeffs",
    "make_rng",
    "simulate_panel",
    "transfer_coeffs",
    "transfer_matrix",
]

# stream ids for the counter-based generator
FACTOR_STREAM = 0
IDIO_STREAM = 1


class SingularityError(ValueError):
    """Spectrum requested at theta = 0 for a model with positive memory."""


@dataclass(frozen=True)
class WhiteNoise:
    """Orthonormal (scaled) white-noise idiosyncratic component."""

    sigma: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "white", "sigma": self.sigma}


@dataclass(frozen=True)
class AR1Toeplitz:
    """Dense AR(1) idiosyncratic component.

    ``xi_t = phi xi_{t-1} + eps_t`` with ``Cov(eps_t)_{ij} = sigma r_cs^{|i-j|}``,
    so ``Sigma_xi(theta) = Sigma_0 / (2 pi |1 - phi e^{-i theta}|^2)``.
    """

    sigma: float = 1.0
    phi: float = 0.4
    r_cs: float = 0.6

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ValueError(f"|phi| must be < 1, got {self.phi}")
        if not abs(self.r_cs) < 1:
            raise ValueError(f"|r_cs| must be < 1, got {self.r_cs}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def innovation_cov(self, n: int) -> np.ndarray:
        idx = np.arange(n)
        return self.sigma * self.r_cs ** np.abs(idx[:, None] - idx[None, :])

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "ar1", "sigma": self.sigma, "phi": self.phi, "r_cs": self.r_cs}


Idio = Union[WhiteNoise, AR1Toeplitz]


def idio_from_dict(doc: dict[str, Any]) -> Idio:
    kind = doc.get("kind", "white")
    if kind == "white":
        return WhiteNoise(float(doc.get("sigma", 1.0)))
    if kind == "ar1":
        return AR1Toeplitz(float(doc.get("sigma", 1.0)), float(doc.get("phi", 0.4)),
                           float(doc.get("r_cs", 0.6)))
    raise ValueError(f"unknown idiosyncratic kind {kind!r}")


def _check_ar_stable(ar: np.ndarray) -> None:
    """Raise if any Phi(z) = 1 - sum_k phi_k z^k has a root with |z| <= 1."""
    flat = ar.reshape(-1, ar.shape[-1])
    if ar.shape[-1] == 1:
        if np.any(np.abs(flat[:, 0]) >= 1):
            raise ValueError("AR pole must satisfy |alpha| < 1")
        return
    for coefs in np.unique(flat, axis=0):
        poly = np.concatenate([[1.0], -coefs])  # ascending powers
        roots = np.polynomial.polynomial.polyroots(poly) if np.any(coefs) else []
        if len(roots) and np.min(np.abs(roots)) <= 1.0:
            raise ValueError(f"AR polynomial {poly} has a root inside the unit circle")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Generative description of a long-memory factor panel.

    Parameters
    ----------
    d, c : array_like, shape (n, q)
        Memory parameters in [0, 0.5) and loading scales.
    ar : array_like, shape (n, q, p)
        AR coefficients ``phi_1..phi_p`` of ``Phi(z) = 1 - sum phi_k z^k``.
    ma : array_like, shape (n, q, r)
        MA coefficients ``theta_0..theta_{r-1}`` of ``Theta(z)``.
    idio : WhiteNoise or AR1Toeplitz
    shock_sd : float
        Standard deviation of the common shocks.
    """

    d: np.ndarray
    c: np.ndarray
    ar: np.ndarray
    ma: np.ndarray
    idio: Idio = field(default_factory=WhiteNoise)
    shock_sd: float = 1.0

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.d, dtype=float))
        c = np.broadcast_to(np.asarray(self.c, dtype=float), d.shape).copy()
        ar = np.asarray(self.ar, dtype=float)
        ma = np.asarray(self.ma, dtype=float)
        if ar.ndim == 2:
            ar = ar[..., None]
        if ma.ndim == 2:
            ma = ma[..., None]
        ar = np.broadcast_to(ar, d.shape + ar.shape[-1:]).copy()
        ma = np.broadcast_to(ma, d.shape + ma.shape[-1:]).copy()
        if np.any(d < 0) or np.any(d >= 0.5):
            raise ValueError("memory parameters must lie in [0, 0.5)")
        if d.shape[1] > d.shape[0]:
            raise ValueError("need q <= n")
        _check_ar_stable(ar)
        for name, arr in (("d", d), ("c", c), ("ar", ar), ("ma", ma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def one_pole(cls, d, c, alpha, idio: Idio | None = None, shock_sd: float = 1.0) -> "ModelSpec":
        """Model with ``b_il(L) = c_il (1-L)^{-d_il} / (1 - alpha_il L)``.

        ``d``, ``c`` and ``alpha`` broadcast against each other; 1-D inputs
        are read as a single factor (shape (n, 1)).
        """
        arrays = [np.asarray(a, dtype=float) for a in (d, c, alpha)]
        arrays = [a.reshape(-1, 1) if a.ndim < 2 else a for a in arrays]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        if len(shape) != 2:
            raise ValueError("d, c, alpha must broadcast to (n, q)")
        d_, c_, a_ = (np.broadcast_to(a, shape) for a in arrays)
        return cls(d=d_, c=c_, ar=a_[..., None], ma=np.ones(shape + (1,)),
                   idio=idio if idio is not None else WhiteNoise(), shock_sd=shock_sd)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def q(self) -> int:
        return self.d.shape[1]

    @property
    def regime(self) -> str:
        d = self.d
        if np.all(d == d.flat[0]):
            return "factor-homogeneous"
        if np.all(d == d[:1, :]):
            return "factor-heterogeneous"
        if np.all(d == d[:, :1]):
            return "row-heterogeneous"
        return "entry-wise"

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d.tolist(),
            "c": self.c.tolist(),
            "ar": self.ar.tolist(),
            "ma": self.ma.tolist(),
            "idio": self.idio.to_dict(),
            "shock_sd": self.shock_sd,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ModelSpec":
        if "alpha" in doc:
            return cls.one_pole(doc["d"], doc.get("c", 1.0), doc["alpha"],
                                idio=idio_from_dict(doc.get("idio", {})),
                                shock_sd=float(doc.get("shock_sd", 1.0)))
        return cls(d=doc["d"], c=doc["c"], ar=doc["ar"], ma=doc["ma"],
                   idio=idio_from_dict(doc.get("idio", {})),
                   shock_sd=float(doc.get("shock_sd", 1.0)))


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    """An n x T panel with optionally attached true components.

    For simulated panels ``xi`` is stored as the residual ``X - chi`` so
    that identity holds bitwise; it differs from the raw draw by at most
    one rounding of the sum.
    """

    X: np.ndarray
    chi: np.ndarray | None = None
    xi: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def T(self) -> int:
        return self.X.shape[1]

    def scaled(self, factor: float) -> "TimeSeriesPanel":
        return TimeSeriesPanel(
            factor * self.X,
            None if self.chi is None else factor * self.chi,
            None if self.xi is None else factor * self.xi,
        )


def make_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def frac_coeffs(d: float, K: int) -> np.ndarray:
    """MA(inf) coefficients psi_0..psi_K of ``(1 - L)^{-d}``."""
    if not 0 <= d < 0.5:
        raise ValueError(f"memory parameter must lie in [0, 0.5), got {d}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    k = np.arange(1, K + 1, dtype=float)
    return np.concatenate([[1.0], np.cumprod((k - 1 + d) / k)])


def frac_coeffs_gamma(d: float, K: int) -> np.ndarray:
    """Same coefficients via Gamma(k+d) / (Gamma(d) Gamma(k+1)).

    Reference only: log-gamma differences cost about 1e-11 relative accuracy
    near k = 1e4, so the recursion in :func:`frac_coeffs` is preferred.
    """
    if d == 0:
        out = np.zeros(K + 1)
        out[0] = 1.0
        return out
    k = np.arange(K + 1, dtype=float)
    return np.exp(gammaln(k + d) - gammaln(d) - gammaln(k + 1))


def _arma_impulse(ma: np.ndarray, ar: np.ndarray, K: int) -> np.ndarray:
    impulse = np.zeros(K + 1)
    impulse[0] = 1.0
    return signal.lfilter(ma, np.concatenate([[1.0], -ar]), impulse)


def transfer_coeffs(d: float, K: int, c: float = 1.0, alpha: float | None = None,
                    ma=None, ar=None) -> np.ndarray:
    """MA coefficients 0..K of ``c (1-L)^{-d} Theta(L) / Phi(L)``.

    Pass either a single pole ``alpha`` or coefficient lists ``ma``
    (theta_0, theta_1, ...) and ``ar`` (phi_1, phi_2, ...).
    """
    if alpha is not None:
        ar = [alpha]
    ar = np.atleast_1d(np.asarray([] if ar is None else ar, dtype=float))
    ma = np.atleast_1d(np.asarray([1.0] if ma is None else ma, dtype=float))
    if ar.size:
        _check_ar_stable(ar[None, :])
    psi = frac_coeffs(d, K)
    arma = _arma_impulse(ma, ar, K)
    return c * np.convolve(psi, arma)[: K + 1]


def transfer_matrix(spec: ModelSpec, theta) -> np.ndarray:
    """B(theta), shape (len(theta), n, q)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    z = np.exp(-1j * theta)[:, None, None]
    one_minus = 1.0 - z
    if np.any(theta == 0) and np.any(spec.d > 0):
        raise SingularityError("spectral density is singular at theta = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(spec.d[None] == 0, 1.0 + 0j, one_minus ** (-spec.d[None]))
    powers_ma = z[..., None] ** np.arange(spec.ma.shape[-1])
    powers_ar = z[..., None] ** np.arange(1, spec.ar.shape[-1] + 1)
    num = np.sum(spec.ma[None] * powers_ma, axis=-1)
    den = 1.0 - np.sum(spec.ar[None] * powers_ar, axis=-1)
    return spec.c[None] * frac * num / den


def idio_spectrum(spec: ModelSpec, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = spec.n
    idio = spec.idio
    if isinstance(idio, WhiteNoise):
        base = (idio.sigma**2) * np.eye(n)
        scale = np.ones_like(theta)
    else:
        base = idio.innovation_cov(n)
        scale = 1.0 / np.abs(1.0 - idio.phi * np.exp(-1j * theta)) ** 2
    return (scale[:, None, None] * base[None]).astype(complex) / (2 * np.pi)


def analytic_spectrum(spec: ModelSpec, theta, include_idio: bool = True) -> np.ndarray:
    """Population spectral density of X at ``theta``.

    Returns an (n, n) matrix for scalar ``theta`` and (N, n, n) otherwise.
    """
    scalar = np.ndim(theta) == 0
    B = transfer_matrix(spec, theta) * spec.shock_sd
    S = B @ np.conj(np.swapaxes(B, -1, -2)) / (2 * np.pi)
    if include_idio:
        S = S + idio_spectrum(spec, theta)
    return S[0] if scalar else S


def simulate_panel(spec: ModelSpec, T: int, seed: int, burn_in: int | None = None,
                   ma_trunc: int | None = None) -> TimeSeriesPanel:
    """Simulate ``X = chi + xi`` for ``T`` periods.

    The common component uses the one-sided MA expansion truncated at
    ``ma_trunc`` lags (default ``max(2000, 4T)``); the first ``burn_in``
    observations (default ``ma_trunc``) are discarded.
    """
    if T < 8:
        raise ValueError("T must be at least 8")
    if ma_trunc is None:
        ma_trunc = max(2000, 4 * T)
    if burn_in is None:
        burn_in = ma_trunc
    if ma_trunc < T:
        raise ValueError(f"ma_trunc={ma_trunc} < T={T} would distort in-sample dependence")
    n, q = spec.n, spec.q
    length = T + burn_in
    rng_u = make_rng(seed, FACTOR_STREAM)
    rng_e = make_rng(seed, IDIO_STREAM)

    u = spec.shock_sd * rng_u.standard_normal((q, length + ma_trunc))
    chi = np.zeros((n, length))
    if np.any(spec.c != 0):
        coefs = np.empty((n, q, ma_trunc + 1))
        cache: dict[tuple, np.ndarray] = {}
        for i in range(n):
            for l in range(q):
                key = (spec.d[i, l], spec.c[i, l], tuple(spec.ar[i, l]), tuple(spec.ma[i, l]))
                if key not in cache:
                    cache[key] = transfer_coeffs(spec.d[i, l], ma_trunc, c=spec.c[i, l],
                                                 ma=spec.ma[i, l], ar=spec.ar[i, l])
                coefs[i, l] = cache[key]
        nfft = 1 << int(np.ceil(np.log2(length + 2 * ma_trunc + 1)))
        U = np.fft.rfft(u, nfft, axis=-1)
        C = np.fft.rfft(coefs, nfft, axis=-1)
        full = np.fft.irfft(np.einsum("ilf,lf->if", C, U), nfft, axis=-1)
        chi = full[:, ma_trunc: ma_trunc + length]

    idio = spec.idio
    if isinstance(idio, WhiteNoise):
        xi = idio.sigma * rng_e.standard_normal((n, length))
    else:
        L = linalg.cholesky(idio.innovation_cov(n), lower=True)
        eps = L @ rng_e.standard_normal((n, length))
        xi0 = (L @ rng_e.standard_normal(n)) / np.sqrt(1 - idio.phi**2)
        zi = idio.phi * xi0[:, None]
        xi, _ = signal.lfilter([1.0], [1.0, -idio.phi], eps, axis=-1, zi=zi)

    chi = np.ascontiguousarray(chi[:, burn_in:])
    X = chi + xi[:, burn_in:]
    return TimeSeriesPanel(X=X, chi=chi, xi=X - chi)
