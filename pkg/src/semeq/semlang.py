"""Semantic spaces and languages.

A language partitions C^n into atoms. Each atom is an isotropic Gaussian
cluster (centroid + per-real-coordinate spread); the generator draws from the
cluster of a message's class and the interpreter is nearest-centroid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import special_ortho_group

from .rng import rng_stream


@dataclass(frozen=True)
class Message:
    class_label: int
    feature: np.ndarray = field(default_factory=lambda: np.zeros(0))
    id: int = 0


@dataclass(frozen=True)
class AtomModel:
    label: int
    centroid: np.ndarray
    spread: float

    def __post_init__(self):
        c = np.asarray(self.centroid, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("atom centroid must be finite")
        # spread == 0 is a deterministic atom
        if not self.spread >= 0:
            raise ValueError("atom spread must be non-negative")
        object.__setattr__(self, "centroid", c)


@dataclass(frozen=True)
class Language:
    """Generator, interpreter and partition of C^n."""

    dimension: int
    atoms: tuple
    generator_noise_scale: float = 1.0
    label_names: tuple = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("a language needs at least one atom")
        labels = [a.label for a in atoms]
        if len(set(labels)) != len(labels):
            raise ValueError("atom labels must be distinct")
        for a in atoms:
            if a.centroid.shape[0] != self.dimension:
                raise ValueError("atom centroid dimension does not match the language")
        if self.generator_noise_scale < 0:
            raise ValueError("generator_noise_scale must be non-negative")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "label_names", tuple(self.label_names))

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def centroids(self) -> np.ndarray:
        return np.stack([a.centroid for a in self.atoms])

    @property
    def spreads(self) -> np.ndarray:
        return np.array([a.spread for a in self.atoms]) * self.generator_noise_scale

    @property
    def labels(self) -> np.ndarray:
        return np.array([a.label for a in self.atoms])

    def atom_index(self, label: int) -> int:
        for k, a in enumerate(self.atoms):
            if a.label == label:
                return k
        raise ValueError(f"label {label} is not an atom of this language")

    def mean_power(self) -> float:
        """Expected per-complex-coordinate power of generated symbols (uniform classes)."""
        c = self.centroids
        return float(np.mean(np.sum(np.abs(c) ** 2, axis=1) + 2 * self.dimension * self.spreads**2)
                     / self.dimension)


@dataclass(frozen=True)
class LabelMap:
    """Atom correspondence kappa: source atom index -> target atom index."""

    table: tuple

    def __post_init__(self):
        table = tuple(int(t) for t in self.table)
        if not table or min(table) < 0:
            raise ValueError("label map must be a non-empty table of non-negative indices")
        object.__setattr__(self, "table", table)

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def parity(cls, n):
        return cls(tuple(i % 2 for i in range(n)))

    def __call__(self, i):
        if isinstance(i, np.ndarray):
            return np.asarray(self.table)[i]
        return self.table[i]

    def __len__(self):
        return len(self.table)

    def check(self, source: Language, target: Language):
        if len(self.table) != source.n_atoms:
            raise ValueError("label map must cover every source atom")
        if max(self.table) >= target.n_atoms:
            raise ValueError("label map points outside the target atoms")


@dataclass(frozen=True)
class LanguageSpec:
    """Parameters of a synthetic language.

    ``layout='circle'`` puts the centroids evenly on a circle of ``radius`` in
    the first complex coordinate, starting at angle ``phase``; ``'explicit'``
    takes ``centroids`` (shape ``(atoms, n)``) as given. ``rotation='random'``
    applies a seeded real rotation of R^{2n} to the layout. ``unit_power``
    rescales centroids so generated symbols have unit average power.
    """

    n: int = 2
    atoms: int = 10
    layout: str = "circle"
    centroids: np.ndarray | None = None
    spread: float = 0.05
    radius: float = 1.0
    phase: float = 0.0
    generator_noise_scale: float = 1.0
    rotation: str = "none"
    unit_power: bool = False
    label_names: tuple = ()

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("centroids") is not None:
            d["centroids"] = _complex_array(d["centroids"])
        if "label_names" in d:
            d["label_names"] = tuple(d["label_names"])
        return cls(**d)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if self.centroids is not None:
            c = np.asarray(self.centroids, dtype=np.complex128)
            d["centroids"] = [[[float(z.real), float(z.imag)] for z in row] for row in c]
        d["label_names"] = list(self.label_names)
        return d


def _complex_array(rows):
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return np.asarray(rows, dtype=np.complex128)


def make_synthetic_language(spec: LanguageSpec, seed: int = 0) -> Language:
    if spec.atoms < 1:
        raise ValueError("atom count must be >= 1")
    if not spec.spread > 0:
        raise ValueError("spread must be positive")
    if spec.n < 1:
        raise ValueError("dimension must be >= 1")
    if spec.layout == "circle":
        ang = spec.phase + 2 * np.pi * np.arange(spec.atoms) / spec.atoms
        cent = np.zeros((spec.atoms, spec.n), dtype=np.complex128)
        cent[:, 0] = spec.radius * np.exp(1j * ang)
    elif spec.layout == "explicit":
        if spec.centroids is None:
            raise ValueError("explicit layout needs centroids")
        cent = np.asarray(spec.centroids, dtype=np.complex128)
        if cent.shape != (spec.atoms, spec.n):
            raise ValueError(f"centroids must have shape ({spec.atoms}, {spec.n})")
    else:
        raise ValueError(f"unknown layout {spec.layout!r}")

    if spec.rotation == "random":
        rng = rng_stream(seed, "language-rotation")
        R = special_ortho_group.rvs(2 * spec.n, random_state=rng)
        real = np.concatenate([cent.real, cent.imag], axis=1) @ R.T
        cent = real[:, : spec.n] + 1j * real[:, spec.n :]
    elif spec.rotation != "none":
        raise ValueError(f"unknown rotation {spec.rotation!r}")

    s = spec.spread * spec.generator_noise_scale
    if spec.unit_power:
        cpow = np.mean(np.sum(np.abs(cent) ** 2, axis=1))
        target = spec.n - 2 * spec.n * s**2
        if target <= 0 or cpow <= 0:
            raise ValueError("spread too large for a unit-power language")
        cent = cent * np.sqrt(target / cpow)

    atoms = tuple(AtomModel(k, cent[k], spec.spread) for k in range(spec.atoms))
    names = spec.label_names or tuple(str(k) for k in range(spec.atoms))
    return Language(spec.n, atoms, spec.generator_noise_scale, names)


def deterministic_language(centroids, label_names=()) -> Language:
    """Language whose generator emits exact centroids (zero spread)."""
    c = np.asarray(centroids, dtype=np.complex128)
    if c.ndim == 1:
        c = c[:, None]
    atoms = tuple(AtomModel(k, c[k], 0.0) for k in range(c.shape[0]))
    return Language(c.shape[1], atoms, 1.0, label_names)


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def generate(lang: Language, m, seed) -> np.ndarray:
    """Draw one symbol for message ``m``: centroid plus Gaussian perturbation.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    label = m.class_label if isinstance(m, Message) else int(m)
    k = lang.atom_index(label)
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(seed, "generate")
    a = lang.atoms[k]
    return a.centroid + lang.spreads[k] * _gaussian(rng, lang.dimension)


def sample_atom(lang: Language, label: int, count: int, rng) -> np.ndarray:
    """``count`` i.i.d. symbols from one atom, shape ``(count, n)``."""
    k = lang.atom_index(label)
    return lang.atoms[k].centroid + lang.spreads[k] * _gaussian(rng, (count, lang.dimension))


def generate_batch(lang: Language, labels, rng) -> np.ndarray:
    """One symbol per entry of ``labels``; draws in a single vectorized pass."""
    labels = np.asarray(labels, dtype=np.int64)
    lookup = {a.label: k for k, a in enumerate(lang.atoms)}
    try:
        k = np.array([lookup[int(l)] for l in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]} is not an atom of this language") from None
    noise = _gaussian(rng, (labels.shape[0], lang.dimension))
    return lang.centroids[k] + lang.spreads[k][:, None] * noise


def interpret(lang: Language, x) -> np.ndarray | int:
    """Nearest-centroid label; ties go to the lowest atom index.

    Accepts one symbol ``(n,)`` or a batch ``(N, n)``.
    """
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    c = lang.centroids
    d = np.zeros((xb.shape[0], c.shape[0]))
    for j in range(lang.dimension):
        diff = xb[:, j][:, None] - c[:, j][None, :]
        d += diff.real**2 + diff.imag**2
    lab = lang.labels[np.argmin(d, axis=1)]
    return int(lab[0]) if single else lab


def posterior_at(lang: Language, x) -> np.ndarray:
    """Gaussian-mixture posterior over atoms (uniform prior) at symbol(s) ``x``."""
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    c = lang.centroids
    s = lang.spreads
    d = np.zeros((xb.shape[0], c.shape[0]))
    for j in range(lang.dimension):
        diff = xb[:, j][:, None] - c[:, j][None, :]
        d += diff.real**2 + diff.imag**2
    u = np.zeros_like(d)
    det = s == 0
    if np.any(det):
        # deterministic atoms carry all the mass wherever they sit exactly
        hit = d[:, det] == 0
        any_hit = hit.any(axis=1)
        idx = np.flatnonzero(det)
        for r in np.flatnonzero(any_hit):
            first = idx[np.argmax(hit[r])]
            u[r, first] = 1.0
        rest = ~any_hit
    else:
        rest = np.ones(xb.shape[0], dtype=bool)
    if np.any(rest):
        live = ~det
        if not np.any(live):
            # no smooth atoms: fall back to the nearest deterministic one
            nearest = np.argmin(d[rest], axis=1)
            u[np.flatnonzero(rest), nearest] = 1.0
        else:
            two_n = 2 * lang.dimension
            logp = np.full((int(rest.sum()), c.shape[0]), -np.inf)
            sl = s[live]
            logp[:, live] = -d[rest][:, live] / (2 * sl**2) - two_n * np.log(sl)
            u[rest] = np.exp(logp - logsumexp(logp, axis=1, keepdims=True))
    return u[0] if single else u


def atom_posterior(lang: Language, m) -> np.ndarray:
    """Posterior over atoms at the generator's mean output for ``m``."""
    label = m.class_label if isinstance(m, Message) else int(m)
    return posterior_at(lang, lang.atoms[lang.atom_index(label)].centroid)


@dataclass
class EmbeddingSet:
    ids: np.ndarray
    labels: np.ndarray
    symbols: np.ndarray
    language: Language


def load_embeddings(path, expected_n: int, n_labels: int | None = None) -> EmbeddingSet:
    """Read an embedding CSV and fit an empirical language to it.

    The header is ``id,label,re_0,im_0,...,re_{n-1},im_{n-1}``. Each label's
    atom gets the sample mean as centroid and the pooled per-coordinate RMS
    deviation as spread.
    """
    want = ["id", "label"] + [f"{p}_{k}" for k in range(expected_n) for p in ("re", "im")]
    ids, labels, rows = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty embedding file")
        header = [h.strip() for h in header]
        if len(header) != len(want):
            raise ValueError(
                f"{path}: dimension mismatch, header has {(len(header) - 2) // 2} complex "
                f"coordinates, expected {expected_n}")
        if header != want:
            raise ValueError(f"{path}: malformed header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(want):
                raise ValueError(f"{path}:{lineno}: expected {len(want)} fields, got {len(row)}")
            try:
                ident = int(row[0])
                lab = int(row[1])
                vals = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
            if lab < 0 or (n_labels is not None and lab >= n_labels):
                raise ValueError(f"{path}:{lineno}: unknown label {lab}")
            ids.append(ident)
            labels.append(lab)
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no samples")
    arr = np.asarray(rows)
    symbols = arr[:, 0::2] + 1j * arr[:, 1::2]
    if not np.all(np.isfinite(symbols)):
        raise ValueError(f"{path}: non-finite coordinates")
    labels = np.asarray(labels)
    atoms = []
    for lab in sorted(set(labels.tolist())):
        pts = symbols[labels == lab]
        c = pts.mean(axis=0)
        dev = pts - c
        spread = float(np.sqrt(np.mean(dev.real**2 + dev.imag**2) / 2))
        atoms.append(AtomModel(lab, c, spread))
    lang = Language(expected_n, tuple(atoms), 1.0, tuple(str(a.label) for a in atoms))
    return EmbeddingSet(np.asarray(ids), labels, symbols, lang)


def write_embeddings(path, symbols, labels, ids=None):
    symbols = np.asarray(symbols, dtype=np.complex128)
    n = symbols.shape[1]
    ids = np.arange(len(symbols)) if ids is None else ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"] + [f"{p}_{k}" for k in range(n) for p in ("re", "im")])
        for i, lab, x in zip(ids, labels, symbols):
            vals = []
            for z in x:
                vals += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow([int(i), int(lab)] + vals)
