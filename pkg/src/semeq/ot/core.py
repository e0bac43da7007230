"""Discrete optimal transport primitives over complex sample sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._backend import TransportSimplex

MASS_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""


@dataclass(frozen=True)
class SampleSet:
    """Weighted point cloud in C^n.

    Parameters
    ----------
    points : array-like, shape (N, n)
        Complex sample coordinates.
    weights : array-like, shape (N,), optional
        Probability masses; uniform when omitted.
    """

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a sample set needs at least one point of shape (N, n)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(self.weights, dtype=np.float64).ravel()
            if w.shape[0] != pts.shape[0]:
                raise ValueError("weights length does not match the number of points")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points


@dataclass(frozen=True)
class TransportPlan:
    """A coupling ``gamma`` together with the marginals it was solved for."""

    gamma: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def cost(self, D) -> float:
        return float(np.sum(self.gamma * np.asarray(D)))

    def marginal_error(self) -> float:
        """Largest l1 violation of the two marginal constraints."""
        r = np.abs(self.gamma.sum(axis=1) - self.row_marginal).sum()
        c = np.abs(self.gamma.sum(axis=0) - self.col_marginal).sum()
        return float(max(r, c))


@dataclass(frozen=True)
class LinearMap:
    """Affine map ``T(x) = A x + b`` on C^n."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128).ravel()
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape[0] != A.shape[0]:
            raise ValueError("A must be n x n and b of length n")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("linear map entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(np.eye(n, dtype=np.complex128), np.zeros(n, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __call__(self, x):
        """Apply to one symbol (n,) or a batch (N, n)."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected symbols of dimension {self.dim}, got {x.shape[-1]}")
        return x @ self.A.T + self.b


def _points(X):
    if isinstance(X, SampleSet):
        return X.points
    pts = np.asarray(X, dtype=np.complex128)
    return pts[:, None] if pts.ndim == 1 else pts


def cost_matrix(X, Y) -> np.ndarray:
    """Squared Euclidean distances ``D[k, l] = ||x_k - y_l||^2`` over C^n."""
    xp, yp = _points(X), _points(Y)
    if xp.shape[1] != yp.shape[1]:
        raise ValueError(f"dimension mismatch: {xp.shape[1]} vs {yp.shape[1]}")
    D = np.zeros((xp.shape[0], yp.shape[0]))
    for c in range(xp.shape[1]):
        dr = xp[:, c].real[:, None] - yp[:, c].real[None, :]
        di = xp[:, c].imag[:, None] - yp[:, c].imag[None, :]
        D += dr * dr + di * di
    return D


def _check_marginals(D, mu, nu):
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise ValueError("cost matrix must be two-dimensional")
    nx, ny = D.shape
    mu = np.full(nx, 1.0 / nx) if mu is None else np.asarray(mu, dtype=np.float64).ravel()
    nu = np.full(ny, 1.0 / ny) if nu is None else np.asarray(nu, dtype=np.float64).ravel()
    if mu.shape[0] != nx or nu.shape[0] != ny:
        raise ValueError("marginal lengths do not match the cost matrix")
    if np.any(mu < 0) or np.any(nu < 0):
        raise ValueError("marginals must be non-negative")
    if abs(mu.sum() - nu.sum()) > MASS_TOL:
        raise ValueError(f"infeasible marginals: mass {mu.sum()!r} vs {nu.sum()!r}")
    if not np.all(np.isfinite(D)):
        raise ValueError("cost matrix must be finite")
    return D, mu, nu


def solve_ot_exact(D, mu=None, nu=None) -> TransportPlan:
    """Exact Kantorovich plan by network simplex.

    Uniform marginals are used when ``mu`` / ``nu`` are omitted.
    """
    D, mu, nu = _check_marginals(D, mu, nu)
    # absorb any sub-tolerance mass difference into the last sink
    nu_fit = nu.copy()
    nu_fit[-1] += mu.sum() - nu.sum()
    solver = TransportSimplex(mu, nu_fit)
    gamma = solver.solve(D)
    return TransportPlan(gamma, mu, nu)


def _round_to_polytope(P, mu, nu):
    # Altschuler, Weed & Rigollet rounding onto the transport polytope
    r = P.sum(axis=1)
    x = np.where(r > 0, np.minimum(mu / np.where(r > 0, r, 1.0), 1.0), 0.0)
    P = P * x[:, None]
    c = P.sum(axis=0)
    y = np.where(c > 0, np.minimum(nu / np.where(c > 0, c, 1.0), 1.0), 0.0)
    P = P * y[None, :]
    err_r = mu - P.sum(axis=1)
    err_c = nu - P.sum(axis=0)
    mass = err_r.sum()
    if mass > 0:
        P = P + np.outer(err_r, err_c) / mass
    return P


def solve_ot_entropic(D, mu=None, nu=None, epsilon=1e-2, max_iter=10000, tol=1e-9) -> TransportPlan:
    """Entropic OT by log-domain Sinkhorn, rounded onto the exact polytope.

    Raises
    ------
    ConvergenceError
        If the marginal violation is still above ``tol`` after ``max_iter``
        sweeps.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    D, mu, nu = _check_marginals(D, mu, nu)
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
        log_nu = np.log(nu)
    f = np.zeros_like(mu)
    g = np.zeros_like(nu)
    M = -D / epsilon
    err = np.inf
    for _ in range(max_iter):
        f = epsilon * (log_mu - logsumexp(M + g[None, :] / epsilon, axis=1))
        g = epsilon * (log_nu - logsumexp(M + f[:, None] / epsilon, axis=0))
        P = np.exp(M + (f[:, None] + g[None, :]) / epsilon)
        err = np.abs(P.sum(axis=1) - mu).sum()
        if err < tol:
            break
    else:
        raise ConvergenceError(
            f"Sinkhorn did not converge in {max_iter} iterations (marginal error {err:.3e})")
    return TransportPlan(_round_to_polytope(P, mu, nu), mu, nu)


def ball_contract(Y: SampleSet, r: float) -> SampleSet:
    """Shrink ``Y`` toward its weighted mean: ``c + r (y - c)``."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("radius must lie in [0, 1]")
    c = Y.mean()
    return SampleSet(c + r * (Y.points - c), Y.weights)


def barycentric_map(plan, Y) -> np.ndarray:
    """Send each source sample to the plan-weighted mean of ``Y``.

    Row ``k`` is ``sum_l gamma[k, l] y_l / sum_l gamma[k, l]``.
    """
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    yp = _points(Y)
    if gamma.shape[1] != yp.shape[0]:
        raise ValueError("plan columns do not match the number of target samples")
    mass = gamma.sum(axis=1)
    if np.any(mass <= 0):
        raise ValueError("plan has a source row with zero mass")
    return (gamma @ yp) / mass[:, None]
