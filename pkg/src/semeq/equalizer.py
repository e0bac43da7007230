"""Risk-driven transformation selection and pre-/post-equalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import normalize_power
from .semlang import Language, atom_posterior, posterior_at

MODES = ("bayes", "fixed", "identity")


@dataclass(frozen=True)
class SelectionPolicy:
    """Deterministic rule choosing a codebook entry for each message.

    Parameters
    ----------
    mode : {'bayes', 'fixed', 'identity'}
    rho : ndarray, optional
        Information-transfer matrix ``rho[i, k]``. For ``'identity'`` it may
        instead be the column ``rho_i(I)`` so that risks can be evaluated.
    index : int, optional
        Codebook entry used by ``'fixed'``.
    """

    mode: str
    rho: np.ndarray | None = None
    index: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.rho is not None:
            rho = np.asarray(self.rho, dtype=np.float64)
            if rho.ndim == 1:
                rho = rho[:, None]
            if rho.ndim != 2 or np.any(rho < 0) or np.any(rho > 1):
                raise ValueError("rho must be a matrix with entries in [0, 1]")
            object.__setattr__(self, "rho", rho)
        if self.mode == "bayes":
            if self.rho is None or self.rho.shape[0] != self.rho.shape[1]:
                raise ValueError("bayes selection needs a square rho matrix")
        if self.mode == "fixed":
            if self.index is None or self.index < 0:
                raise ValueError("fixed policy needs a non-negative index")
            if self.rho is not None and self.index >= self.rho.shape[1]:
                raise ValueError("fixed index is outside the codebook")

    @classmethod
    def bayes(cls, rho):
        return cls("bayes", rho)

    @classmethod
    def fixed(cls, k, rho=None):
        return cls("fixed", rho, int(k))

    @classmethod
    def identity(cls, rho_identity=None):
        return cls("identity", rho_identity)

    def choose(self, u) -> int | None:
        """Codebook index for posterior ``u``; ``None`` means apply no map."""
        if self.mode == "bayes":
            return select_transformation(self.rho, u)
        if self.mode == "fixed":
            return self.index
        return None


def _check_u(u, n):
    u = np.asarray(u, dtype=np.float64).ravel()
    if u.shape[0] != n:
        raise ValueError(f"posterior has length {u.shape[0]}, expected {n}")
    return u


def select_transformation(rho, u) -> int:
    """``argmax_k sum_i rho[i, k] u_i``, lowest index on ties."""
    rho = np.asarray(rho, dtype=np.float64)
    u = _check_u(u, rho.shape[0])
    return int(np.argmax(u @ rho))


def risk(policy: SelectionPolicy, u) -> float:
    """A-priori misinterpretation risk ``1 - sum_i u_i rho[i, k]`` of the chosen map."""
    if policy.rho is None:
        raise ValueError("risk needs the policy's rho")
    u = _check_u(u, policy.rho.shape[0])
    k = policy.choose(u)
    col = policy.rho[:, 0] if k is None else policy.rho[:, k]
    return float(np.clip(1.0 - u @ col, 0.0, 1.0))


def _apply(cb, k, x):
    return x.copy() if k is None else cb.maps[k](x)


def pre_equalize(cb, policy: SelectionPolicy, source_lang: Language, m, x, normalize=True):
    """Apply the map selected from the message's atom posterior at the transmitter.

    Returns ``(y, k)``; ``k`` is ``None`` under the identity policy.
    """
    x = np.asarray(x, dtype=np.complex128)
    k = policy.choose(atom_posterior(source_lang, m))
    y = _apply(cb, k, x)
    if normalize and policy.mode != "identity":
        y = normalize_power(y)
    return y, k


def pre_equalize_batch(cb, policy: SelectionPolicy, source_lang: Language, labels, X,
                       normalize=True):
    """Vectorized :func:`pre_equalize` over a message stream.

    The posterior only depends on the class label, so selection runs once per
    distinct label. With ``normalize`` the whole transmitted batch is scaled to
    unit average power.
    """
    X = np.asarray(X, dtype=np.complex128)
    labels = np.asarray(labels)
    Y = X.copy()
    chosen = np.full(labels.shape[0], -1, dtype=np.int64)
    for lab in np.unique(labels):
        k = policy.choose(atom_posterior(source_lang, int(lab)))
        sel = labels == lab
        if k is not None:
            Y[sel] = cb.maps[k](X[sel])
            chosen[sel] = k
    if normalize and policy.mode != "identity":
        Y = normalize_power(Y)
    return Y, chosen


def post_equalize(cb, x_received, source_lang: Language, rho=None, policy=None):
    """Receiver-side equalization.

    The source-atom posterior is evaluated at the received symbol(s) and the
    map is chosen from it (Bayes rule on ``rho`` unless ``policy`` is given).
    """
    x = np.asarray(x_received, dtype=np.complex128)
    if policy is None:
        policy = SelectionPolicy.identity() if rho is None else SelectionPolicy.bayes(rho)
    if policy.mode == "identity":
        return x.copy()
    single = x.ndim == 1
    xb = x[None, :] if single else x
    U = posterior_at(source_lang, xb)
    out = np.empty_like(xb)
    ks = np.array([policy.choose(u) for u in U])
    for k in np.unique(ks):
        sel = ks == k
        out[sel] = cb.maps[int(k)](xb[sel])
    return out[0] if single else out
