"""Measurable proxies for the recovery conditions.

These estimators quantify, on a concrete instance, the constants the solver's
convergence behavior depends on: boundedness of the sensing vectors (mu0),
spread of the lifted signal's singular subspaces over block rows and columns
(mu1), conditioning of the lifted signal (kappa), a power-iteration estimate
of how far the tangent-restricted measurement map is from an isometry, and
the spectral distance of the initialization from the lifted truth.  They are
advisory: the solver never gates on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hankel
from .hankel import HankelDims
from .lowrank import LowRankFactors, TangentSpace, project_tangent
from .model import PointSourceModel, adjoint_measure, build_signal, measure
from .solver import initialize


@dataclass(frozen=True)
class AssumptionReport:
    """Instance-level constants; all non-negative, kappa >= 1."""

    mu0: float
    mu1: float
    kappa: float
    sigma_r: float
    rip_norm_estimate: float
    init_spectral_distance: float

    def as_dict(self) -> dict[str, float]:
        return {
            "mu0": self.mu0,
            "mu1": self.mu1,
            "kappa": self.kappa,
            "sigma_r": self.sigma_r,
            "rip_norm_estimate": self.rip_norm_estimate,
            "init_spectral_distance": self.init_spectral_distance,
        }


def measure_mu0(B: np.ndarray) -> float:
    """Largest squared entry magnitude over all sensing vectors."""
    B = np.asarray(B)
    if B.size == 0:
        raise ValueError("B must be nonempty")
    return float(np.max(np.abs(B) ** 2))


def measure_mu1(factors: LowRankFactors, dims: HankelDims) -> float:
    """Incoherence of the lifted signal's singular subspaces.

    Scales the worst block-row energy of U (blocks of height s) and the worst
    row energy of V by n/r.
    """
    r = factors.rank
    if r == 0:
        raise ValueError("factors must have positive rank")
    Ub = factors.U.reshape(dims.n1, dims.s, r)
    u_max = float(np.max(np.sum(np.abs(Ub) ** 2, axis=(1, 2))))
    v_max = float(np.max(np.sum(np.abs(factors.V) ** 2, axis=1)))
    return dims.n / r * max(u_max, v_max)


def _seeded_start(T: TangentSpace, dims: HankelDims, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m, p = dims.lifted_shape
    Z = (rng.standard_normal((m, p)) + 1j * rng.standard_normal((m, p))) / np.sqrt(2.0)
    return project_tangent(Z, T)


def estimate_rip_norm(B: np.ndarray, dims: HankelDims, T: TangentSpace,
                      iters: int = 200, seed: int = 7,
                      aa_map: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Operator norm of the tangent-restricted measurement-isometry defect.

    Power iteration on the Hermitian map Z -> P_T (G (I - A*A) G*) P_T (Z),
    where G is the isometric lift and A*A the back-projected measurement map
    (overridable through ``aa_map``, e.g. with the identity the map vanishes).
    Values well below 1 indicate the measurements act nearly isometrically on
    the tangent space.
    """
    if iters < 1:
        raise ValueError(f"need iters >= 1, got {iters}")
    if aa_map is None:
        aa_map = lambda X: adjoint_measure(measure(X, B), B)

    def apply(Z):
        Zt = project_tangent(Z, T)
        Xg = hankel.adjoint_lift_isometric(Zt, dims)
        diff = Xg - aa_map(Xg)
        return project_tangent(hankel.lift_isometric(diff, dims), T)

    Z = _seeded_start(T, dims, seed)
    nz = np.linalg.norm(Z)
    if nz == 0:
        return 0.0
    Z /= nz
    est = 0.0
    for _ in range(iters):
        AZ = apply(Z)
        est = float(np.linalg.norm(AZ))
        if est < 1e-300:
            return 0.0
        Z = AZ / est
    return est


def spectral_distance(Z_a: np.ndarray, Z_b: np.ndarray, iters: int = 200,
                      seed: int = 11) -> float:
    """Largest singular value of Z_a - Z_b, by seeded power iteration."""
    Z_a = np.asarray(Z_a)
    Z_b = np.asarray(Z_b)
    if Z_a.shape != Z_b.shape:
        raise ValueError(f"shape mismatch: {Z_a.shape} vs {Z_b.shape}")
    D = Z_a - Z_b
    rng = np.random.default_rng(seed)
    v = (rng.standard_normal(D.shape[1]) + 1j * rng.standard_normal(D.shape[1]))
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = D @ v
        su = np.linalg.norm(u)
        if su < 1e-300:
            return 0.0
        v = D.conj().T @ (u / su)
        sigma = np.linalg.norm(v)
        if sigma < 1e-300:
            return 0.0
        v /= sigma
    return float(sigma)


def assumption_report(model: PointSourceModel, B: np.ndarray,
                      dims: HankelDims, rip_iters: int = 100,
                      seed: int = 7) -> AssumptionReport:
    """Aggregate all instance constants for a desk-scale ground-truth model.

    Uses a dense SVD of the lifted signal for kappa and sigma_r, and runs the
    initialization on the exact measurements to report its spectral distance
    from the lifted truth.
    """
    X_true = build_signal(model)
    Z_true = hankel.lift(X_true, dims)
    U, svals, Vh = np.linalg.svd(Z_true, full_matrices=False)
    sigma_r = float(svals[model.r - 1])
    kappa = float(svals[0] / sigma_r)
    factors = LowRankFactors(U=U[:, :model.r], sigma=svals[:model.r].astype(float),
                             V=Vh[:model.r].conj().T)
    mu1 = measure_mu1(factors, dims)
    rip = estimate_rip_norm(B, dims, factors.tangent(), iters=rip_iters, seed=seed)
    X0 = initialize(measure(X_true, B), B, dims, model.r)
    dist = spectral_distance(hankel.lift(X0, dims), Z_true)
    return AssumptionReport(mu0=measure_mu0(B), mu1=mu1, kappa=kappa,
                            sigma_r=sigma_r, rip_norm_estimate=rip,
                            init_spectral_distance=dist)
