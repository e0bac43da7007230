"""Comparison systems: classical bit-level links, unequalized semantic links and a
gradient-trained single-map equalizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channel import (ChannelConfig, ModemConfig, awgn, dequantize_features, normalize_power,
                      qam_demodulate, qam_modulate, quantize_features)
from .ot import LinearMap
from .rng import rng_stream
from .semlang import LabelMap, Language, interpret

log = logging.getLogger(__name__)

KINDS = ("classcom_a", "classcom_b", "semcom_noeq", "learned_linear_eq")


class TrainingDivergedError(RuntimeError):
    """Training loss exceeded ten times its initial value."""


@dataclass(frozen=True)
class BaselineSpec:
    """Which baseline to run, plus training settings for the learned equalizer.

    ``hidden_factor = 0`` trains one affine map; ``tau > 0`` trains a two-layer
    rectifier network ``tau`` times wider than the symbol space instead.
    """

    kind: str = "learned_linear_eq"
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    hidden_factor: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.hidden_factor < 0:
            raise ValueError("hidden_factor must be >= 0")


# ---------------------------------------------------------------- ClassCom


@dataclass(frozen=True)
class ObservationModel:
    """Source observations: class prototype plus isotropic Gaussian noise in R^d.

    The receiver's classifiers know the prototypes and the noise level.
    """

    prototypes: np.ndarray
    noise_std: float

    def __post_init__(self):
        P = np.asarray(self.prototypes, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] < 1:
            raise ValueError("prototypes must be a (classes, dim) array")
        if not self.noise_std > 0:
            raise ValueError("noise_std must be positive")
        object.__setattr__(self, "prototypes", P)

    @property
    def n_classes(self) -> int:
        return self.prototypes.shape[0]

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]

    def sample(self, labels, rng) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        return self.prototypes[labels] + self.noise_std * rng.standard_normal(
            (labels.shape[0], self.dim))

    def log_likelihood(self, F) -> np.ndarray:
        F = np.asarray(F, dtype=np.float64)
        d = ((F[:, None, :] - self.prototypes[None, :, :]) ** 2).sum(axis=2)
        return -d / (2 * self.noise_std**2)

    def classify(self, F) -> np.ndarray:
        """Maximum-likelihood class (nearest prototype)."""
        return np.argmax(self.log_likelihood(F), axis=1)

    def classify_grouped(self, F, kmap: LabelMap) -> np.ndarray:
        """Maximum-posterior group under ``kmap``, uniform class prior."""
        ll = self.log_likelihood(F)
        table = np.asarray(kmap.table)
        groups = np.unique(table)
        scores = np.stack([logsumexp(ll[:, table == g], axis=1) for g in groups], axis=1)
        return groups[np.argmax(scores, axis=1)]


def make_observation_model(n_classes=10, dim=8, noise_std=0.7, seed=0) -> ObservationModel:
    """Random unit-variance prototypes; ``noise_std`` controls classifier accuracy."""
    rng = rng_stream(seed, "observation-prototypes")
    return ObservationModel(rng.standard_normal((n_classes, dim)), noise_std)


class ConfusionClassifier:
    """Returns the true class with probability ``accuracy``, else a uniformly
    random wrong class."""

    def __init__(self, n_classes: int, accuracy: float):
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        self.n_classes = n_classes
        self.accuracy = accuracy

    def predict(self, labels, rng) -> np.ndarray:
        labels = np.asarray(labels, dtype=np.int64)
        keep = rng.random(labels.shape[0]) < self.accuracy
        shift = rng.integers(1, self.n_classes, labels.shape[0])
        return np.where(keep, labels, (labels + shift) % self.n_classes)


def classcom_transmit(features, channel_cfg: ChannelConfig, modem_cfg: ModemConfig, rng=None):
    """Quantize, QAM-modulate, pass through AWGN and recover the features."""
    F = np.asarray(features, dtype=np.float64)
    bits = quantize_features(F, modem_cfg)
    symbols, pad = qam_modulate(bits, modem_cfg.qam_order)
    received = awgn(symbols, channel_cfg, rng)
    bits_hat = qam_demodulate(received, modem_cfg.qam_order, pad)
    return dequantize_features(bits_hat, modem_cfg).reshape(F.shape)


@dataclass(frozen=True)
class ClassComReceiver:
    """Imperfect receiver classifiers for the bit-level baseline.

    Each decision is the maximum-likelihood class of the recovered features,
    kept with probability ``*_accuracy`` and otherwise replaced by a uniformly
    random wrong class. ``source_accuracy`` applies to the fine (source) task
    of variant A, ``target_accuracy`` to the coarse (target) task of variant B.
    """

    source_accuracy: float = 0.784
    target_accuracy: float = 0.944

    def __post_init__(self):
        for v in (self.source_accuracy, self.target_accuracy):
            if not 0.0 <= v <= 1.0:
                raise ValueError("classifier accuracies must lie in [0, 1]")


def run_classcom(variant, features, channel_cfg, modem_cfg, obs: ObservationModel,
                 kmap: LabelMap, rng=None, receiver: ClassComReceiver | None = None) -> np.ndarray:
    """Bit-level baseline; returns predicted target atom indices for a batch of features.

    Variant ``'A'`` classifies the source class and maps it through ``kmap``;
    ``'B'`` infers the target class directly. ``rng`` drives the channel noise
    and then the receiver's confusion draws.
    """
    variant = str(variant).upper()
    if variant not in ("A", "B"):
        raise ValueError("variant must be 'A' or 'B'")
    receiver = receiver or ClassComReceiver()
    if rng is None:
        rng = rng_stream(channel_cfg.seed, "classcom")
    F_hat = classcom_transmit(features, channel_cfg, modem_cfg, rng)
    if variant == "A":
        digits = obs.classify(F_hat)
        if receiver.source_accuracy < 1.0:
            digits = ConfusionClassifier(obs.n_classes, receiver.source_accuracy).predict(digits, rng)
        return kmap(digits)
    groups = obs.classify_grouped(F_hat, kmap)
    n_groups = max(kmap.table) + 1
    if receiver.target_accuracy < 1.0 and n_groups > 1:
        groups = ConfusionClassifier(n_groups, receiver.target_accuracy).predict(groups, rng)
    return groups


# ---------------------------------------------------------------- SemCom, no EQ


def run_semcom_noeq(symbols, channel_cfg: ChannelConfig, target_lang: Language, rng=None,
                    normalize=True) -> np.ndarray:
    """Send source symbols unchanged and interpret them in the target language."""
    x = normalize_power(symbols) if normalize else np.asarray(symbols, dtype=np.complex128)
    return interpret(target_lang, awgn(x, channel_cfg, rng))


# ---------------------------------------------------------------- learned EQ


def _logits(Y, C):
    d = np.zeros((Y.shape[0], C.shape[0]))
    for j in range(Y.shape[1]):
        diff = Y[:, j][:, None] - C[:, j][None, :]
        d += diff.real**2 + diff.imag**2
    return -d


def ce_loss(Y, targets, C) -> float:
    """Mean cross-entropy of ``softmax(-||y - c_j||^2)`` against target atom indices."""
    z = _logits(Y, C)
    return float(np.mean(logsumexp(z, axis=1) - z[np.arange(z.shape[0]), targets]))


def _output_grad(Y, targets, C):
    # d loss / d y as d/dRe + i d/dIm, per sample (mean loss)
    z = _logits(Y, C)
    P = np.exp(z - logsumexp(z, axis=1, keepdims=True))
    P[np.arange(P.shape[0]), targets] -= 1.0
    return 2.0 * (P @ C) / Y.shape[0]


def linear_eq_loss_and_grad(T: LinearMap, X, targets, C):
    """Cross-entropy of the target interpreter after ``T`` and its gradient ``(gA, gb)``.

    Gradients use the ``d/dRe + i d/dIm`` convention, so ``A - lr * gA`` is a
    steepest-descent step.
    """
    X = np.asarray(X, dtype=np.complex128)
    Y = T(X)
    g = _output_grad(Y, targets, C)
    return ce_loss(Y, targets, C), g.T @ X.conj(), g.sum(axis=0)


@dataclass
class MLPMap:
    """Two-layer rectifier network acting on the real coordinates of C^n."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @property
    def dim(self) -> int:
        return self.W2.shape[0] // 2

    @staticmethod
    def _real(X):
        return np.concatenate([X.real, X.imag], axis=1)

    def _forward(self, X):
        H = self._real(X) @ self.W1.T + self.b1
        R = np.maximum(H, 0.0)
        out = R @ self.W2.T + self.b2
        n = self.dim
        return H, R, out[:, :n] + 1j * out[:, n:]

    def __call__(self, x):
        x = np.asarray(x, dtype=np.complex128)
        single = x.ndim == 1
        Y = self._forward(x[None, :] if single else x)[2]
        return Y[0] if single else Y

    def loss_and_grad(self, X, targets, C):
        H, R, Y = self._forward(X)
        g = _output_grad(Y, targets, C)
        # real gradient w.r.t. (Re y, Im y)
        gr = np.concatenate([g.real, g.imag], axis=1)
        gW2 = gr.T @ R
        gb2 = gr.sum(axis=0)
        gH = (gr @ self.W2) * (H > 0)
        gW1 = gH.T @ self._real(X)
        gb1 = gH.sum(axis=0)
        return ce_loss(Y, targets, C), (gW1, gb1, gW2, gb2)


def _init_mlp(n, tau, rng):
    d, h = 2 * n, 2 * n * tau
    W1 = np.concatenate([np.eye(d)] * tau, axis=0) + 0.1 * rng.standard_normal((h, d))
    W2 = np.concatenate([np.eye(d)] * tau, axis=1) / tau + 0.1 * rng.standard_normal((d, h))
    return MLPMap(W1, np.full(h, 0.5), W2, -0.5 * W2.sum(axis=1))


@dataclass
class TrainingResult:
    map: object
    loss_trace: list = field(default_factory=list)

    def smoothed(self, window=10) -> np.ndarray:
        trace = np.asarray(self.loss_trace)
        w = min(window, trace.size)
        return np.convolve(trace, np.ones(w) / w, mode="valid")


def train_linear_eq(source_lang: Language, target_lang: Language, kmap: LabelMap, samples,
                    cfg: BaselineSpec | None = None) -> TrainingResult:
    """Train one map so the target interpreter reads ``kappa(i)`` from source atom ``i``.

    ``samples`` is ``(X, source_atom_indices)``. Plain mini-batch gradient
    descent on the cross-entropy of ``softmax(-||T(x) - c_j||^2)``.
    """
    cfg = cfg or BaselineSpec()
    kmap.check(source_lang, target_lang)
    X, atoms = samples
    X = np.asarray(X, dtype=np.complex128)
    atoms = np.asarray(atoms, dtype=np.int64)
    if X.shape[0] == 0 or X.shape[0] != atoms.shape[0]:
        raise ValueError("need a non-empty labelled sample set")
    missing = set(range(source_lang.n_atoms)) - set(np.unique(atoms).tolist())
    if missing:
        raise ValueError(f"no training samples for source atoms {sorted(missing)}")
    targets = kmap(atoms)
    C = target_lang.centroids
    n = source_lang.dimension
    rng = rng_stream(cfg.seed, "learned-eq")

    if cfg.hidden_factor:
        model = _init_mlp(n, cfg.hidden_factor, rng)
        params = [model.W1, model.b1, model.W2, model.b2]

        def full_loss():
            return ce_loss(model(X), targets, C)

        def step(idx):
            _, grads = model.loss_and_grad(X[idx], targets[idx], C)
            for p, g in zip(params, grads):
                p -= cfg.learning_rate * g

        result_map = lambda: model  # noqa: E731
    else:
        A = np.eye(n, dtype=np.complex128)
        b = np.zeros(n, dtype=np.complex128)

        def full_loss():
            return ce_loss(LinearMap(A, b)(X), targets, C)

        def step(idx):
            _, gA, gb = linear_eq_loss_and_grad(LinearMap(A, b), X[idx], targets[idx], C)
            A[...] -= cfg.learning_rate * gA
            b[...] -= cfg.learning_rate * gb

        result_map = lambda: LinearMap(A, b)  # noqa: E731

    initial = full_loss()
    trace = [initial]
    N = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(N)
        for start in range(0, N, cfg.batch_size):
            step(order[start:start + cfg.batch_size])
            loss = full_loss()
            if not np.isfinite(loss) or loss > 10.0 * max(initial, 1e-12):
                raise TrainingDivergedError(
                    f"loss {loss:.4g} exceeded 10x the initial {initial:.4g}")
            trace.append(loss)
    return TrainingResult(result_map(), trace)


def write_loss_trace(result: TrainingResult, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for k, v in enumerate(result.loss_trace):
            fh.write(f"{k},{float(v)!r}\n")
