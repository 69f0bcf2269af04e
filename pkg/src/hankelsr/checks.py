"""Self-contained invariant suite run by the ``check`` subcommand.

Each check builds its own small random instances, compares against an
independent oracle (brute-force enumeration, full SVD, dense reference path)
and reports pass/fail with a worst-case figure.  A named fault can be
injected to verify the suite actually discriminates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hankel, lowrank, model, solver

FAULTS = ("weights",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def brute_force_weights(n: int, n1: int) -> np.ndarray:
    """Count anti-diagonal index pairs directly: w_i = #{(j,k): j+k=i}."""
    n2 = n + 1 - n1
    w = np.zeros(n, dtype=int)
    for j in range(n1):
        for k in range(n2):
            w[j + k] += 1
    return w


def check_weights(fault: str | None = None, n_max: int = 24) -> CheckResult:
    worst = 0
    for n in range(2, n_max + 1):
        for n1 in range(1, n + 1):
            closed = hankel.weight_vector(n, n1, n + 1 - n1).copy()
            if fault == "weights":
                closed[n // 2] += 1
            worst = max(worst, int(np.max(np.abs(closed - brute_force_weights(n, n1)))))
    return CheckResult("weights_closed_form", worst == 0,
                       f"max deviation {worst} over n<={n_max}, all splits")


def check_measure_adjoint(seed: int = 0, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        s, n = int(rng.integers(1, 5)), int(rng.integers(4, 24))
        X = _crandn(rng, s, n)
        B = rng.standard_normal((s, n))
        y = _crandn(rng, n)
        lhs = np.vdot(model.measure(X, B), y)
        rhs = np.vdot(X, model.adjoint_measure(y, B))
        scale = np.linalg.norm(X) * np.linalg.norm(y) + 1e-300
        worst = max(worst, abs(lhs - rhs) / scale)
    return CheckResult("measurement_adjoint", worst < 1e-10, f"worst rel defect {worst:.2e}")


def check_lift_adjoint(seed: int = 1, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        s, n = int(rng.integers(1, 5)), int(rng.integers(4, 24))
        dims = hankel.choose_dims(n, s)
        X = _crandn(rng, s, n)
        Z = _crandn(rng, *dims.lifted_shape)
        lhs = np.vdot(hankel.lift(X, dims), Z)
        rhs = np.vdot(X, hankel.adjoint_lift(Z, dims))
        scale = np.linalg.norm(X) * np.linalg.norm(Z) + 1e-300
        worst = max(worst, abs(lhs - rhs) / scale)
    return CheckResult("lift_adjoint", worst < 1e-10, f"worst rel defect {worst:.2e}")


def check_pinv_identity(seed: int = 2, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        s, n = int(rng.integers(1, 5)), int(rng.integers(4, 24))
        dims = hankel.choose_dims(n, s)
        X = _crandn(rng, s, n)
        back = hankel.pinv_lift(hankel.lift(X, dims), dims)
        worst = max(worst, np.linalg.norm(back - X) / np.linalg.norm(X))
    return CheckResult("pinv_lift_identity", worst < 1e-13, f"worst rel error {worst:.2e}")


def check_isometric_identity(seed: int = 3, trials: int = 25) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_id = worst_iso = 0.0
    for _ in range(trials):
        s, n = int(rng.integers(1, 5)), int(rng.integers(4, 24))
        dims = hankel.choose_dims(n, s)
        X = _crandn(rng, s, n)
        Z = hankel.lift_isometric(X, dims)
        back = hankel.adjoint_lift_isometric(Z, dims)
        worst_id = max(worst_id, np.linalg.norm(back - X) / np.linalg.norm(X))
        worst_iso = max(worst_iso, abs(np.linalg.norm(Z) - np.linalg.norm(X)) / np.linalg.norm(X))
    ok = worst_id < 1e-13 and worst_iso < 1e-12
    return CheckResult("isometric_lift_identity", ok,
                       f"worst inverse {worst_id:.2e}, isometry defect {worst_iso:.2e}")


def check_eckart_young(seed: int = 4, trials: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m, p = int(rng.integers(4, 12)), int(rng.integers(4, 12))
        r = int(rng.integers(1, min(m, p) + 1))
        W = _crandn(rng, m, p)
        f = lowrank.truncate_rank(W, r)
        resid = np.linalg.norm(W - f.reconstruct())
        svals = np.linalg.svd(W, compute_uv=False)
        tail = np.sqrt(np.sum(svals[r:] ** 2))
        worst = max(worst, abs(resid - tail) / max(svals[0], 1e-300))
    return CheckResult("eckart_young", worst < 1e-10, f"worst residual defect {worst:.2e}")


def check_tangent_projection(seed: int = 5, trials: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        m, p = int(rng.integers(5, 12)), int(rng.integers(5, 12))
        r = int(rng.integers(1, min(m, p) // 2 + 1))
        T = lowrank.truncate_rank(_crandn(rng, m, p), r).tangent()
        W1, W2 = _crandn(rng, m, p), _crandn(rng, m, p)
        P1 = lowrank.project_tangent(W1, T)
        idem = np.linalg.norm(lowrank.project_tangent(P1, T) - P1) / max(np.linalg.norm(P1), 1e-300)
        lhs = np.vdot(P1, W2)
        rhs = np.vdot(W1, lowrank.project_tangent(W2, T))
        sa = abs(lhs - rhs) / (np.linalg.norm(W1) * np.linalg.norm(W2))
        worst = max(worst, idem, sa)
    return CheckResult("tangent_projection", worst < 1e-10,
                       f"worst idempotence/self-adjoint defect {worst:.2e}")


def check_fixed_point(seed: int = 6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for variant in solver.VARIANTS:
        m = model.synth_model(2, 32, 2, rng)
        dims = hankel.choose_dims(m.n, m.s)
        X_true = model.build_signal(m)
        B = model.sample_subspace(m.s, m.n, rng)
        y = model.measure(X_true, B)
        cfg = solver.SolverConfig(rank=m.r, variant=variant)
        X_next, _ = solver.iterate_once(X_true, y, B, dims, cfg)
        worst = max(worst, solver.relative_error(X_next, X_true))
    return CheckResult("solver_fixed_point", worst < 1e-10,
                       f"worst one-step movement {worst:.2e}")


def check_fast_dense_equivalence(seed: int = 8, iters: int = 12) -> CheckResult:
    rng = np.random.default_rng(seed)
    m = model.synth_model(2, 48, 2, rng)
    dims = hankel.choose_dims(m.n, m.s)
    X_true = model.build_signal(m)
    B = model.sample_subspace(m.s, m.n, rng)
    y = model.measure(X_true, B)
    worst = 0.0
    for variant in solver.VARIANTS:
        iterates = {}
        for mode in solver.MODES:
            cfg = solver.SolverConfig(rank=m.r, max_iters=iters, residual_tol=1e-300,
                                      mode=mode, variant=variant)
            _, trace = solver.solve(y, B, dims, cfg, ground_truth=X_true)
            iterates[mode] = trace.residuals
        worst = max(worst, float(np.max(np.abs(iterates["dense"] - iterates["fast"])
                                        / (np.abs(iterates["dense"]) + 1e-300))))
    return CheckResult("fast_dense_equivalence", worst < 1e-8,
                       f"worst residual-path rel gap {worst:.2e}")


def run_all(fault: str | None = None) -> list[CheckResult]:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")
    return [
        check_weights(fault=fault),
        check_measure_adjoint(),
        check_lift_adjoint(),
        check_pinv_identity(),
        check_isometric_identity(),
        check_eckart_young(),
        check_tangent_projection(),
        check_fixed_point(),
        check_fast_dense_equivalence(),
    ]
