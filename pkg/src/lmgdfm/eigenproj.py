"""Hermitian eigendecompositions, leading eigenprojections and subspace utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import FrequencyGrid, SpectralField

__all__ = [
    "EigenSystem",
    "ProjectionField",
    "eigengap",
    "embedded_eigh",
    "hermitian_eig",
    "leading_projection",
    "leading_rows",
    "projection_field",
    "subspace_distance",
]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues sorted descending with matching eigenvector columns.

    Batched inputs carry leading axes: ``values`` (..., n), ``vectors`` (..., n, n).
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[-1]


def _symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))


def hermitian_eig(A) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix (or a stack of them)."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    w, V = np.linalg.eigh(_symmetrize(A))
    return EigenSystem(w[..., ::-1], V[..., ::-1])


def embedded_eigh(A) -> EigenSystem:
    """Eigensystem of a complex Hermitian matrix via its 2n x 2n real embedding.

    The embedding [[Re A, -Im A], [Im A, Re A]] has every eigenvalue of A
    twice; an embedded eigenvector (x, y) gives x + i y.  Pairs are
    de-duplicated by Gram-Schmidt within each eigenvalue cluster.
    """
    A = _symmetrize(np.asarray(A, dtype=complex))
    n = A.shape[-1]
    R = np.block([[A.real, -A.imag], [A.imag, A.real]])
    w, U = np.linalg.eigh(R)
    w, U = w[::-1], U[:, ::-1]
    cands = U[:n] + 1j * U[n:]
    vals, vecs = [], []
    for k in range(2 * n):
        v = cands[:, k].copy()
        for u in vecs:
            v -= (np.conj(u) @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            vecs.append(v / norm)
            vals.append(w[k])
        if len(vecs) == n:
            break
    return EigenSystem(np.array(vals), np.stack(vecs, axis=1))


def _check_q(q: int, n: int) -> None:
    if not 1 <= q <= n:
        raise ValueError(f"q={q} outside 1..{n}")


def leading_projection(E: EigenSystem, q: int) -> np.ndarray:
    """Orthogonal projection onto the span of the top-q eigenvectors."""
    _check_q(q, E.n)
    V = E.vectors[..., :q]
    return V @ np.conj(np.swapaxes(V, -1, -2))


def leading_rows(E: EigenSystem, q: int, rows) -> np.ndarray:
    """Rows of the filter transfer function ``sum_j conj(p_{j,i}) p_j``.

    These are rows of conj(P) = P^T, shape (..., len(rows), n).
    """
    _check_q(q, E.n)
    V = E.vectors[..., :q]
    return np.conj(V[..., rows, :]) @ np.swapaxes(V, -1, -2)


def eigengap(E: EigenSystem, q: int) -> np.ndarray | float:
    """lambda_q - lambda_{q+1} (1-based)."""
    if not 1 <= q < E.n:
        raise ValueError(f"eigengap needs 1 <= q < n, got q={q}, n={E.n}")
    gap = E.values[..., q - 1] - E.values[..., q]
    return float(gap) if np.ndim(gap) == 0 else gap


def subspace_distance(P1, P2, tol: float = 1e-6) -> float:
    """Operator-norm distance between two equal-rank orthogonal projections."""
    P1 = np.asarray(P1)
    P2 = np.asarray(P2)
    r1 = np.trace(P1).real
    r2 = np.trace(P2).real
    if abs(r1 - r2) > tol:
        raise ValueError(f"projection ranks differ ({r1:.3f} vs {r2:.3f})")
    diff = _symmetrize(P1 - P2)
    return float(min(1.0, np.max(np.abs(np.linalg.eigvalsh(diff)))))


def normalize_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its largest-modulus entry is real positive (for dumps)."""
    idx = np.argmax(np.abs(vectors), axis=-2)
    lead = np.take_along_axis(vectors, idx[..., None, :], axis=-2)
    return vectors * (np.conj(lead) / np.abs(lead))


@dataclass(frozen=True, eq=False)
class ProjectionField:
    """Common-component filter transfer function at every grid point.

    ``proj`` holds K(theta) = conj(P(theta)) = P(theta)^T, where P is the
    leading-q eigenprojection, so a filter sum_h K_h X_{t-h} with
    K_h = (1/2pi) int K(theta) e^{-ih theta} d theta responds with P(theta).
    K is itself a rank-q orthogonal projection.  Shape (N, n, n) in full
    mode, (N, len(rows), n) in row mode.  ``gaps`` holds the q-th eigengap
    relative to the top eigenvalue.
    """

    grid: FrequencyGrid
    proj: np.ndarray
    q: int
    rows: tuple[int, ...] | None = None
    gaps: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.proj.shape[-1]

    def gap_below(self, tol: float = 1e-10) -> np.ndarray:
        """Grid points whose q-th eigengap is (numerically) zero."""
        if self.gaps is None:
            return np.zeros(len(self.grid), dtype=bool)
        return self.gaps <= tol


def _mirror_plan(grid: FrequencyGrid, use_mirror: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Indices to decompose directly, and the mirror map if it applies."""
    N = len(grid)
    if use_mirror and grid.is_symmetric and N > 1:
        # theta >= 0 half
        return np.arange(N // 2, N), N - 1 - np.arange(N)
    return np.arange(N), None


def projection_field(field: SpectralField, q: int, rows=None, chunk: int = 256) -> ProjectionField:
    """Apply :func:`hermitian_eig` + leading projection at every grid point.

    When the field is conjugate-symmetric on a symmetric grid only the
    nonnegative half is decomposed and K(-theta) = conj(K(theta)) fills the
    rest.
    """
    mats = field.mats
    symmetric = field.grid.is_symmetric and np.allclose(
        mats[::-1], np.conj(mats), rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(mats)))))
    return projection_from(lambda idx: mats[idx], field.grid, field.n, q, rows, chunk,
                           conj_symmetric=symmetric)


def projection_from(mats_at, grid: FrequencyGrid, n: int, q: int, rows=None,
                    chunk: int = 256, conj_symmetric: bool = False) -> ProjectionField:
    """Projection field from a callable returning spectral matrices at grid indices.

    Set ``conj_symmetric`` when Sigma(-theta) = conj(Sigma(theta)) holds, as it
    does for spectra of real processes; half the decompositions are skipped.
    """
    _check_q(q, n)
    rows_t = None if rows is None else tuple(int(r) for r in np.atleast_1d(rows))
    if rows_t is not None and any(not 0 <= r < n for r in rows_t):
        raise ValueError("row index out of range")
    N = len(grid)
    width = n if rows_t is None else len(rows_t)
    out = np.empty((N, width, n), dtype=complex)
    gaps = np.empty(N)
    todo, mirror = _mirror_plan(grid, conj_symmetric)
    for s in range(0, todo.size, chunk):
        idx = todo[s: s + chunk]
        A = mats_at(idx)
        E = hermitian_eig(A)
        scale = np.maximum(np.abs(E.values[..., 0]), np.finfo(float).tiny)
        gaps[idx] = (E.values[..., q - 1] - E.values[..., q]) / scale if q < n else np.inf
        if rows_t is None:
            out[idx] = np.conj(leading_projection(E, q))
        else:
            out[idx] = leading_rows(E, q, list(rows_t))
    if mirror is not None:
        rest = np.setdiff1d(np.arange(N), todo)
        out[rest] = np.conj(out[mirror[rest]])
        gaps[rest] = gaps[mirror[rest]]
    return ProjectionField(grid, out, q, rows_t, gaps)
