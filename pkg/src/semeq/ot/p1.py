"""Joint estimation of a coupling and an affine map between two atoms.

Minimizes, over couplings ``gamma`` and affine maps ``T(x) = A x + b``::

    ||T(X) - diag(p)^-1 gamma B_r(Y)||_F^2 + alpha <gamma, D> + beta ||A - I||_F^2

by alternating an exact ridge solve for ``(A, b)`` with conditional-gradient
steps on ``gamma`` whose linear subproblems are exact transportation LPs.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ._backend import TransportSimplex
from .core import LinearMap, SampleSet, TransportPlan, ball_contract, cost_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class P1Config:
    """Hyper-parameters of the joint problem.

    ``alpha`` and ``beta`` default (``None``) to ``0.1 n N_X / max(D)`` and
    ``1e-8 N_X / n``.
    """

    alpha: float | None = None
    beta: float | None = None
    radius: float = 1.0
    max_outer_iters: int = 50
    max_fw_iters: int = 20
    tol: float = 1e-6

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.beta is not None and not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if not 0.0 <= self.radius <= 1.0:
            raise ValueError("radius must lie in [0, 1]")
        if self.max_outer_iters < 1 or self.max_fw_iters < 1:
            raise ValueError("iteration limits must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def default_alpha(D, n, n_x):
    dmax = float(np.max(D))
    return 0.1 * n * n_x / dmax if dmax > 0 else 1.0


def default_beta(n, n_x):
    return 1e-8 * n_x / n


@dataclass
class P1Result:
    map: LinearMap
    plan: TransportPlan
    trace: list = field(default_factory=list)
    alpha: float = 0.0
    beta: float = 0.0
    n_outer: int = 0
    fw_converged: bool = True

    @property
    def objectives(self) -> np.ndarray:
        return np.array([t["objective"] for t in self.trace])


def _augment(X):
    return np.concatenate([X, np.ones((X.shape[0], 1), dtype=np.complex128)], axis=1)


def fit_linear_map(X, Z, beta) -> LinearMap:
    """Closed-form minimizer of ``||X A^T + 1 b^T - Z||^2 + beta ||A - I||^2``.

    ``A`` is an unrestricted complex matrix; ``b`` is not penalized.
    """
    X = np.asarray(X, dtype=np.complex128)
    Z = np.asarray(Z, dtype=np.complex128)
    n = X.shape[1]
    Xa = _augment(X)
    if beta == 0:
        if np.linalg.matrix_rank(Xa) < n + 1:
            raise ValueError(
                "T-step is underdetermined: need n+1 affinely independent samples when beta=0")
        W = np.linalg.lstsq(Xa, Z, rcond=None)[0]
    else:
        s = np.sqrt(beta)
        pen = np.zeros((n, n + 1), dtype=np.complex128)
        pen[:, :n] = s * np.eye(n)
        M = np.concatenate([Xa, pen], axis=0)
        rhs = np.concatenate([Z, s * np.eye(n, dtype=np.complex128)], axis=0)
        W = np.linalg.lstsq(M, rhs, rcond=None)[0]
        # one refinement pass against the normal equations
        H = Xa.conj().T @ Xa
        H[:n, :n] += beta * np.eye(n)
        g = t_step_gradient(X, Z, W[:n].T, W[n], beta)
        W = W - np.linalg.solve(H, np.concatenate([g[0].T, g[1][None, :]], axis=0) / 2)
    return LinearMap(W[:n].T, W[n])


def t_step_objective(X, Z, A, b, beta) -> float:
    R = np.asarray(X) @ np.asarray(A).T + np.asarray(b) - np.asarray(Z)
    return float(np.sum(np.abs(R) ** 2) + beta * np.sum(np.abs(A - np.eye(A.shape[0])) ** 2))


def t_step_gradient(X, Z, A, b, beta):
    """Gradient ``(dA, db)`` of the T-step objective, as ``d/dRe + i d/dIm``."""
    X = np.asarray(X, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    R = X @ A.T + b - Z
    gA = 2.0 * (R.T @ X.conj() + beta * (A - np.eye(A.shape[0])))
    gb = 2.0 * R.sum(axis=0)
    return gA, gb


def _objective_parts(tx, Z, gamma, D, alpha, beta, tmap):
    fit = float(np.sum(np.abs(tx - Z) ** 2))
    transport = alpha * float(np.sum(gamma * D))
    reg = beta * float(np.sum(np.abs(tmap.A - np.eye(tmap.dim)) ** 2))
    return {"objective": fit + transport + reg, "fit": fit, "transport": transport,
            "regularizer": reg}


def _gamma_step(gamma, tx, Yr, D, alpha, inv_p, solver, max_iter, tol):
    converged = False
    for _ in range(max_iter):
        Z = inv_p[:, None] * (gamma @ Yr)
        R = tx - Z
        G = -2.0 * inv_p[:, None] * (R @ Yr.conj().T).real + alpha * D
        S = solver.solve(G)
        delta = S - gamma
        gap = -float(np.sum(G * delta))
        f = float(np.sum(np.abs(R) ** 2)) + alpha * float(np.sum(gamma * D))
        if gap <= tol * max(abs(f), 1e-300):
            converged = True
            break
        E = inv_p[:, None] * (delta @ Yr)
        curv = 2.0 * float(np.sum(np.abs(E) ** 2))
        t = 1.0 if curv <= 0 else min(1.0, gap / curv)
        gamma = gamma + t * delta
    return gamma, converged


def solve_p1(X: SampleSet, Y: SampleSet, cfg: P1Config | None = None) -> P1Result:
    """Fit the affine map carrying atom samples ``X`` into the ball ``B_r(Y)``."""
    cfg = cfg or P1Config()
    if X.dim != Y.dim:
        raise ValueError(f"dimension mismatch: {X.dim} vs {Y.dim}")
    n, n_x = X.dim, len(X)
    D = cost_matrix(X, Y)
    alpha = cfg.alpha if cfg.alpha is not None else default_alpha(D, n, n_x)
    beta = cfg.beta if cfg.beta is not None else default_beta(n, n_x)
    Yr = ball_contract(Y, cfg.radius).points
    Xp = X.points
    inv_p = 1.0 / X.weights

    solver = TransportSimplex(X.weights, Y.weights)
    gamma = solver.solve(D)
    tmap = LinearMap.identity(n)
    Z = inv_p[:, None] * (gamma @ Yr)
    parts = _objective_parts(tmap(Xp), Z, gamma, D, alpha, beta, tmap)
    trace = [dict(iteration=0, **parts)]
    fw_ok = True
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        tmap = fit_linear_map(Xp, Z, beta)
        tx = tmap(Xp)
        gamma, ok = _gamma_step(gamma, tx, Yr, D, alpha, inv_p, solver, cfg.max_fw_iters, cfg.tol)
        fw_ok = fw_ok and ok
        Z = inv_p[:, None] * (gamma @ Yr)
        parts = _objective_parts(tx, Z, gamma, D, alpha, beta, tmap)
        trace.append(dict(iteration=it, **parts))
        prev = trace[-2]["objective"]
        if (prev - parts["objective"]) <= cfg.tol * max(abs(prev), 1e-300):
            break
    if not fw_ok:
        log.debug("conditional-gradient inner loop hit max_fw_iters")
    plan = TransportPlan(gamma, X.weights, Y.weights)
    return P1Result(tmap, plan, trace, alpha, beta, it, fw_ok)


def write_trace_csv(trace, path):
    """Write an objective trace as ``iteration,objective,fit,transport,regularizer``."""
    cols = ["iteration", "objective", "fit", "transport", "regularizer"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in trace:
            w.writerow([row["iteration"]] + [repr(float(row[c])) for c in cols[1:]])
