"""Rank-r manifold machinery: truncated SVDs and tangent-space projection.

A rank-r matrix is carried as a compact SVD triple (U, sigma, V).  The
tangent space of the fixed-rank manifold at such a point consists of matrices
U N^H + M V^H; projecting onto it and re-truncating is the inner step of the
solver, and is available both densely and matrix-free (the latter touching
the full matrix only through operator products, which keeps the per-iteration
cost at the factor scale).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_ORTHO_TOL = 1e-10
_TRIM_REL = 1e-15


class RankTruncationError(RuntimeError):
    """Iterative factorization failed to stabilize within its iteration cap.

    Carries the best available residual estimate (last relative change of the
    leading singular values) in ``residual``.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class LowRankFactors:
    """Compact SVD triple: U (m, k) and V (p, k) orthonormal, sigma descending > 0.

    k can fall below the requested rank when trailing singular values vanish;
    reconstructions, not raw factors, are the comparable quantity (factors are
    unique only up to per-column phase).
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        k = self.sigma.shape[0] if self.sigma.ndim == 1 else -1
        if k < 0 or self.U.ndim != 2 or self.V.ndim != 2:
            raise ValueError("factors must be (U: 2-d, sigma: 1-d, V: 2-d)")
        if self.U.shape[1] != k or self.V.shape[1] != k:
            raise ValueError("factor column counts must match len(sigma)")
        if k:
            if np.any(self.sigma <= 0) or np.any(np.diff(self.sigma) > 0):
                raise ValueError("sigma must be positive and non-increasing")
            for Q in (self.U, self.V):
                gram = Q.conj().T @ Q
                if np.max(np.abs(gram - np.eye(k))) > _ORTHO_TOL:
                    raise ValueError("factor columns must be orthonormal")

    @property
    def rank(self) -> int:
        return len(self.sigma)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    def reconstruct(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(self.shape, dtype=complex)
        return (self.U * self.sigma[None, :]) @ self.V.conj().T

    def tangent(self) -> "TangentSpace":
        return TangentSpace(U=self.U, V=self.V)


@dataclass(frozen=True, eq=False)
class TangentSpace:
    """The (U, V) pair defining the fixed-rank tangent space at a point."""

    U: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class SubspaceControls:
    """Knobs for the randomized subspace iteration behind the operator SVD."""

    oversample: int = 8
    power_iters: int = 2
    max_iters: int = 64
    tol: float = 1e-8
    seed: int = 0


def _trim(U: np.ndarray, sigma: np.ndarray, V: np.ndarray, r: int) -> LowRankFactors:
    """Keep the top r factors, dropping (numerically) zero singular values."""
    r = min(r, len(sigma))
    cutoff = sigma[0] * _TRIM_REL if len(sigma) and sigma[0] > 0 else 0.0
    k = int(np.sum(sigma[:r] > cutoff))
    return LowRankFactors(U=U[:, :k], sigma=sigma[:k].astype(float), V=V[:, :k])


def truncate_rank(W: np.ndarray, r: int) -> LowRankFactors:
    """Best rank-r approximation factors of a dense matrix (truncated SVD)."""
    W = np.asarray(W)
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if r > min(W.shape):
        raise ValueError(f"rank {r} exceeds matrix shape {W.shape}")
    if not np.all(np.isfinite(W)):
        # LAPACK may not terminate on non-finite input
        raise np.linalg.LinAlgError("matrix contains non-finite entries")
    U, sigma, Vh = np.linalg.svd(W, full_matrices=False)
    return _trim(U, sigma, Vh.conj().T, r)


def project_tangent(W: np.ndarray, T: TangentSpace) -> np.ndarray:
    """Orthogonal projection U U^H W + W V V^H - U U^H W V V^H onto T."""
    W = np.asarray(W)
    if W.shape != (T.U.shape[0], T.V.shape[0]):
        raise ValueError(
            f"expected shape {(T.U.shape[0], T.V.shape[0])}, got {W.shape}"
        )
    if T.U.shape[1] == 0:
        return np.zeros_like(W, dtype=np.result_type(W.dtype, np.complex128))
    A = T.U.conj().T @ W  # (k, p)
    C = W @ T.V  # (m, k)
    return T.U @ A + (C - T.U @ (A @ T.V)) @ T.V.conj().T


def truncate_rank_operator(matvec: Callable[[np.ndarray], np.ndarray],
                           adjoint_matvec: Callable[[np.ndarray], np.ndarray],
                           shape: tuple[int, int], r: int,
                           controls: SubspaceControls | None = None) -> LowRankFactors:
    """Leading-r SVD factors of a matrix seen only through operator products.

    Runs seeded randomized subspace iteration (Gaussian sketch of width
    r + oversample, alternating orthonormalized products) until the leading
    singular values stabilize to the relative tolerance, then raises
    ``RankTruncationError`` if the cap is hit first.  matvec and
    adjoint_matvec must accept (dim, k) blocks.
    """
    controls = controls or SubspaceControls()
    m, p = shape
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if r > min(m, p):
        raise ValueError(f"rank {r} exceeds operator shape {shape}")
    k = min(r + controls.oversample, m, p)
    rng = np.random.default_rng(controls.seed)
    Omega = (rng.standard_normal((p, k)) + 1j * rng.standard_normal((p, k))) / np.sqrt(2.0)

    Q, _ = np.linalg.qr(matvec(Omega))
    sig_prev = None
    change = np.inf
    for sweep in range(controls.max_iters):
        Yh = adjoint_matvec(Q)  # (p, k) = M^H Q
        sig = np.linalg.svd(Yh, compute_uv=False)[:r]
        if sig_prev is not None and sweep >= controls.power_iters:
            scale = max(sig[0], np.finfo(float).tiny)
            change = float(np.max(np.abs(sig - sig_prev)) / scale)
            if change <= controls.tol:
                P, svals, Th = np.linalg.svd(Yh, full_matrices=False)
                # M ~ Q Q^H M = Q Yh^H, so left factors are Q rotated by Th^H.
                return _trim(Q @ Th.conj().T, svals, P, r)
        sig_prev = sig
        Qp, _ = np.linalg.qr(Yh)
        Q, _ = np.linalg.qr(matvec(Qp))
    raise RankTruncationError(
        f"singular values did not stabilize within {controls.max_iters} sweeps "
        f"(last relative change {change:.3e})", residual=change)


def project_tangent_truncate(matvec: Callable[[np.ndarray], np.ndarray],
                             adjoint_matvec: Callable[[np.ndarray], np.ndarray],
                             T: TangentSpace, r: int) -> LowRankFactors:
    """Best rank-r factors of P_T(M) with M touched only via operator products.

    P_T(M) = U A + B V^H with A = U^H M and B = (I - U U^H) M V, so it lives
    in the span of [U, orth(B)] x [V, orth(D)] with D = (I - V V^H) A^H; an
    SVD of the small 2k-by-2k core yields the truncation exactly.  Matches
    ``truncate_rank(project_tangent(M, T), r)`` up to roundoff at a cost of
    O(k) operator products plus factor-scale dense work.
    """
    U, V = T.U, T.V
    m, p = U.shape[0], V.shape[0]
    k = U.shape[1]
    if k == 0:
        return LowRankFactors(U=np.zeros((m, 0), dtype=complex),
                              sigma=np.zeros(0), V=np.zeros((p, 0), dtype=complex))
    if 2 * k > min(m, p):
        raise ValueError(f"tangent rank {k} too large for shape {(m, p)}")
    C = matvec(V)  # (m, k) = M V
    A = adjoint_matvec(U).conj().T  # (k, p) = U^H M
    AV = A @ V  # (k, k)
    B = C - U @ AV  # (m, k), orthogonal to U
    D = A.conj().T - V @ AV.conj().T  # (p, k), orthogonal to V
    # Orthonormal completions of U and V along B and D: Householder QR of the
    # stacked blocks stays orthonormal to machine precision even when B or D
    # are (nearly) rank-deficient, which plain qr(B) does not guarantee.
    Q1 = np.linalg.qr(np.hstack([U, B]))[0][:, k:]
    Q2 = np.linalg.qr(np.hstack([V, D]))[0][:, k:]
    R1 = Q1.conj().T @ B
    R2 = Q2.conj().T @ D
    core = np.block([[AV, R2.conj().T],
                     [R1, np.zeros((k, k), dtype=R1.dtype)]])
    if not np.all(np.isfinite(core)):
        raise np.linalg.LinAlgError("projected core contains non-finite entries")
    Uc, sigma, Vch = np.linalg.svd(core)
    Ufull = np.hstack([U, Q1]) @ Uc
    Vfull = np.hstack([V, Q2]) @ Vch.conj().T
    return _trim(Ufull, sigma, Vfull, r)
