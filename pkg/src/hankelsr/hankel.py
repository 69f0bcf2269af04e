"""Block-Hankel operator calculus.

An s-by-n signal matrix X with columns x_0, ..., x_{n-1} is lifted into the
block-Hankel matrix of shape (s*n1, n2), n1 + n2 = n + 1, whose block (i, j)
of height s equals column x_{i+j}.  Column i of X then occupies w_i positions
of the lifted matrix, where w_i counts the pairs (j, k) with j + k = i.

This module provides the lift, its adjoint, the anti-diagonal weight scaling,
the pseudoinverse de-lift (weighted anti-diagonal averaging), the isometric
variants, and FFT-based matrix-free products with the lifted matrix so the
large matrix never needs to be materialized on the fast execution path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_WEIGHT_POWERS = (-2, -1, 1, 2)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True, eq=False)
class HankelDims:
    """Shape bookkeeping for the block-Hankel lift of an s-by-n matrix.

    weights[i] is the number of lifted positions fed by column i, equal to
    min(i+1, n1, n2, n-i); the weights sum to n1*n2.
    """

    n: int
    s: int
    n1: int
    n2: int
    weights: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")
        if self.s < 1:
            raise ValueError(f"need s >= 1, got s={self.s}")
        if self.n1 < 1 or self.n2 < 1 or self.n1 + self.n2 != self.n + 1:
            raise ValueError(
                f"invalid split (n1, n2)=({self.n1}, {self.n2}) for n={self.n}"
            )
        if self.weights.shape != (self.n,) or int(self.weights.sum()) != self.n1 * self.n2:
            raise ValueError("weights inconsistent with the (n1, n2) split")

    @property
    def lifted_shape(self) -> tuple[int, int]:
        return (self.s * self.n1, self.n2)


def weight_vector(n: int, n1: int, n2: int) -> np.ndarray:
    """Closed-form anti-diagonal weights w_i = min(i+1, n1, n2, n-i)."""
    i = np.arange(n)
    return np.minimum.reduce([i + 1, np.full(n, n1), np.full(n, n2), n - i])


def choose_dims(n: int, s: int, n1: int | None = None) -> HankelDims:
    """Pick the block-Hankel split for an s-by-n signal.

    Defaults to the most-square split n1 = (n+1)//2, n2 = n+1-n1 (so
    n2 >= n1), which maximizes the feasible rank min(s*n1, n2) for s > 1.
    Pass n1 to override.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    if n1 is None:
        n1 = (n + 1) // 2
    if not 1 <= n1 <= n:
        raise ValueError(f"n1 must lie in [1, {n}], got {n1}")
    n2 = n + 1 - n1
    return HankelDims(n=n, s=s, n1=n1, n2=n2, weights=weight_vector(n, n1, n2))


def _check_signal(X: np.ndarray, dims: HankelDims) -> np.ndarray:
    X = np.asarray(X)
    if X.shape != (dims.s, dims.n):
        raise ValueError(f"expected signal of shape {(dims.s, dims.n)}, got {X.shape}")
    return X


def _check_lifted(Z: np.ndarray, dims: HankelDims) -> np.ndarray:
    Z = np.asarray(Z)
    if Z.shape != dims.lifted_shape:
        raise ValueError(f"expected lifted matrix of shape {dims.lifted_shape}, got {Z.shape}")
    return Z


def lift(X: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Block-Hankel lift: block (i, j) of the result is column i+j of X."""
    X = _check_signal(X, dims)
    idx = np.add.outer(np.arange(dims.n1), np.arange(dims.n2))
    cols = X[:, idx]  # (s, n1, n2)
    return cols.transpose(1, 0, 2).reshape(dims.s * dims.n1, dims.n2)


def adjoint_lift(Z: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Adjoint of the lift: column i of the result sums blocks with j+k = i."""
    Z = _check_lifted(Z, dims)
    Zb = Z.reshape(dims.n1, dims.s, dims.n2)
    out = np.zeros((dims.s, dims.n), dtype=np.result_type(Z.dtype, np.float64))
    for j in range(dims.n1):
        out[:, j:j + dims.n2] += Zb[j]
    return out


def apply_weights(X: np.ndarray, dims: HankelDims, power: int) -> np.ndarray:
    """Scale column i of X by w_i**(power/2); power in {-2, -1, 1, 2}."""
    X = _check_signal(X, dims)
    if power not in _WEIGHT_POWERS:
        raise ValueError(f"power must be one of {_WEIGHT_POWERS}, got {power}")
    w = dims.weights.astype(np.float64)
    scale = w ** (power / 2.0)
    return X * scale[None, :]


def pinv_lift(Z: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Pseudoinverse de-lift: weighted average over each anti-diagonal stack.

    Left inverse of ``lift``; equals the minimum-residual signal whose lift is
    closest to Z in Frobenius norm.
    """
    return apply_weights(adjoint_lift(Z, dims), dims, -2)


def lift_isometric(X: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Weight-compensated lift; a Frobenius isometry from signals to lifted matrices."""
    return lift(apply_weights(X, dims, -1), dims)


def adjoint_lift_isometric(Z: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Adjoint of the isometric lift; inverts it on its range."""
    return apply_weights(adjoint_lift(Z, dims), dims, -1)


# ---------------------------------------------------------------------------
# FFT-based matrix-free products with the lifted matrix
# ---------------------------------------------------------------------------


def lift_matvec(X: np.ndarray, v: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Compute lift(X) @ v without materializing the lifted matrix.

    Row block i of the product is sum_j x_{i+j} v[j], a cross-correlation of
    each of the s signal rows with v, evaluated with FFTs of length the next
    power of two >= n.  v may be a vector of length n2 or an (n2, k) block.
    """
    X = _check_signal(X, dims)
    v = np.asarray(v)
    single = v.ndim == 1
    vv = v[:, None] if single else v
    if vv.ndim != 2 or vv.shape[0] != dims.n2:
        raise ValueError(f"expected vector(s) of length {dims.n2}, got shape {v.shape}")
    L = _next_pow2(dims.n)
    Fx = np.fft.fft(X, L, axis=1)  # (s, L)
    Fv = np.fft.fft(vv[::-1, :], L, axis=0)  # (L, k)
    conv = np.fft.ifft(Fx[:, :, None] * Fv[None, :, :], axis=1)
    blocks = conv[:, dims.n2 - 1:dims.n2 - 1 + dims.n1, :]  # (s, n1, k)
    out = blocks.transpose(1, 0, 2).reshape(dims.s * dims.n1, -1)
    return out[:, 0] if single else out


def lift_rmatvec(X: np.ndarray, u: np.ndarray, dims: HankelDims) -> np.ndarray:
    """Compute lift(X)^H @ u matrix-free; adjoint companion of ``lift_matvec``.

    u may be a vector of length s*n1 or an (s*n1, k) block.
    """
    X = _check_signal(X, dims)
    u = np.asarray(u)
    single = u.ndim == 1
    uu = u[:, None] if single else u
    if uu.ndim != 2 or uu.shape[0] != dims.s * dims.n1:
        raise ValueError(f"expected vector(s) of length {dims.s * dims.n1}, got shape {u.shape}")
    k = uu.shape[1]
    W = np.conj(uu.reshape(dims.n1, dims.s, k)).transpose(1, 0, 2)  # (s, n1, k)
    L = _next_pow2(dims.n)
    Fx = np.fft.fft(X, L, axis=1)  # (s, L)
    Fw = np.fft.fft(W[:, ::-1, :], L, axis=1)  # (s, L, k)
    conv = np.fft.ifft(Fx[:, :, None] * Fw, axis=1)
    out = np.conj(conv[:, dims.n1 - 1:dims.n1 - 1 + dims.n2, :].sum(axis=0))  # (n2, k)
    return out[:, 0] if single else out


def adjoint_lift_lowrank(U: np.ndarray, sigma: np.ndarray, V: np.ndarray,
                         dims: HankelDims) -> np.ndarray:
    """Adjoint lift of a factored matrix U @ diag(sigma) @ V^H, via FFTs.

    Costs O(k s n log n) for k factors instead of O(s n1 n2).
    """
    k = len(sigma)
    if k == 0:
        return np.zeros((dims.s, dims.n), dtype=complex)
    if U.shape != (dims.s * dims.n1, k) or V.shape != (dims.n2, k):
        raise ValueError("factor shapes inconsistent with dims")
    Ub = U.reshape(dims.n1, dims.s, k)
    L = _next_pow2(dims.n)
    Fu = np.fft.fft(Ub, L, axis=0)  # (L, s, k)
    Fv = np.fft.fft(np.conj(V), L, axis=0)  # (L, k)
    prod = Fu * (Fv[:, None, :] * np.asarray(sigma)[None, None, :])
    conv = np.fft.ifft(prod, axis=0)[:dims.n]  # (n, s, k)
    return conv.sum(axis=2).T  # (s, n)


def pinv_lift_lowrank(U: np.ndarray, sigma: np.ndarray, V: np.ndarray,
                      dims: HankelDims) -> np.ndarray:
    """Pseudoinverse de-lift of a factored matrix, matrix-free."""
    return apply_weights(adjoint_lift_lowrank(U, sigma, V, dims), dims, -2)
