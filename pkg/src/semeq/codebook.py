"""Codebook of per-atom transformations and its information-transfer statistics."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ot import LinearMap, P1Config, SampleSet, solve_p1
from .rng import rng_stream
from .semlang import LabelMap, Language, interpret, sample_atom

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_RHO_SAMPLES = 10_000


class CodebookBuildError(RuntimeError):
    """Solving the joint problem failed for one (source, target) atom pair."""


@dataclass
class Codebook:
    """One affine map per source atom, plus the atom correspondence."""

    maps: list
    label_map: LabelMap
    dimension: int
    build_metadata: dict = field(default_factory=dict)
    rho: np.ndarray | None = None

    def __post_init__(self):
        if len(self.maps) != len(self.label_map):
            raise ValueError("codebook needs exactly one map per source atom")
        for T in self.maps:
            if T.dim != self.dimension:
                raise ValueError("map dimension does not match the codebook")

    def __len__(self):
        return len(self.maps)

    @classmethod
    def identity(cls, n, label_map: LabelMap):
        return cls([LinearMap.identity(n) for _ in range(len(label_map))], label_map, n)


def info_transfer(T, samples, target_lang: Language, target_atom: int) -> float:
    """Fraction of ``samples`` that ``T`` sends into target atom ``target_atom``."""
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("info_transfer needs a non-empty (N, n) sample array")
    labels = interpret(target_lang, T(samples))
    return float(np.mean(labels == target_lang.atoms[target_atom].label))


def language_mismatch(T, source_lang: Language, target_lang: Language, kmap: LabelMap,
                      samples) -> float:
    """Sum over source atoms of the transfer into their corresponding target atom.

    ``samples[i]`` holds symbols drawn from source atom ``i``.
    """
    kmap.check(source_lang, target_lang)
    if len(samples) != source_lang.n_atoms:
        raise ValueError("need one sample array per source atom")
    total = 0.0
    for i in range(source_lang.n_atoms):
        if len(samples[i]) == 0:
            raise ValueError(f"source atom {i} has no samples")
        total += info_transfer(T, samples[i], target_lang, kmap(i))
    return total


def training_samples(source_lang, target_lang, kmap, n_source, n_target, seed):
    """Per-atom training sets ``(X_i, Y_kappa(i))``, seeded per atom."""
    xs = [sample_atom(source_lang, source_lang.atoms[i].label, n_source,
                      rng_stream(seed, "train-source", i)) for i in range(source_lang.n_atoms)]
    ys = {j: sample_atom(target_lang, target_lang.atoms[j].label, n_target,
                         rng_stream(seed, "train-target", j)) for j in sorted(set(kmap.table))}
    return xs, ys


def heldout_samples(source_lang: Language, n_per_atom: int, seed) -> list:
    """Evaluation samples drawn from streams disjoint from the training streams."""
    return [sample_atom(source_lang, source_lang.atoms[i].label, n_per_atom,
                        rng_stream(seed, "heldout", i)) for i in range(source_lang.n_atoms)]


def _solve_pair(args):
    i, j, X, Y, cfg = args
    if len(X) < 2 or len(Y) < 2:
        raise CodebookBuildError(f"atom pair ({i}, {j}): fewer than 2 samples")
    try:
        res = solve_p1(SampleSet(X), SampleSet(Y), cfg)
    except Exception as exc:
        raise CodebookBuildError(f"atom pair ({i}, {j}): {exc}") from exc
    return res.map, {"n_outer": res.n_outer, "objective": float(res.objectives[-1]),
                     "fw_converged": res.fw_converged, "alpha": res.alpha, "beta": res.beta}


def build_codebook(source_lang: Language, target_lang: Language, kmap: LabelMap,
                   cfg: P1Config | None = None, n_source: int = 200, n_target: int = 1000,
                   seed: int = 0, workers: int = 1, samples=None) -> Codebook:
    """Solve the joint map problem for every pair ``(i, kappa(i))``.

    ``samples`` may supply ``(xs, ys)`` directly (lists/dicts of arrays);
    otherwise they are drawn from the languages.
    """
    cfg = cfg or P1Config()
    kmap.check(source_lang, target_lang)
    if source_lang.dimension != target_lang.dimension:
        raise ValueError("source and target languages live in different dimensions")
    n = source_lang.dimension
    if samples is None:
        if n_source < n + 1 or n_target < n + 1:
            raise ValueError(f"need at least n+1={n + 1} samples per atom")
        xs, ys = training_samples(source_lang, target_lang, kmap, n_source, n_target, seed)
    else:
        xs, ys = samples
    jobs = [(i, kmap(i), xs[i], ys[kmap(i)], cfg) for i in range(source_lang.n_atoms)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_pair, jobs))
    else:
        results = [_solve_pair(job) for job in jobs]
    meta = {
        "radius": cfg.radius,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "max_outer_iters": cfg.max_outer_iters,
        "max_fw_iters": cfg.max_fw_iters,
        "tol": cfg.tol,
        "n_source": int(len(xs[0])),
        "n_target": int(len(next(iter(ys.values())))),
        "seed": int(seed),
        "pairs": [info for _, info in results],
    }
    return Codebook([m for m, _ in results], kmap, n, meta)


def estimate_rho_matrix(cb: Codebook, source_lang: Language, target_lang: Language,
                        eval_samples=DEFAULT_RHO_SAMPLES, seed: int = 0) -> np.ndarray:
    """Monte-Carlo information-transfer matrix ``rho[i, k] = rho_i(T_k)``.

    ``eval_samples`` is either a per-atom count (fresh held-out draws) or a
    list of per-atom sample arrays.
    """
    if isinstance(eval_samples, (int, np.integer)):
        if eval_samples < 1:
            raise ValueError("eval_samples must be >= 1")
        eval_samples = heldout_samples(source_lang, int(eval_samples), seed)
    n_p = len(cb)
    rho = np.zeros((n_p, n_p))
    for i in range(n_p):
        xi = eval_samples[i]
        if len(xi) == 0:
            raise ValueError(f"source atom {i} has no evaluation samples")
        for k, T in enumerate(cb.maps):
            rho[i, k] = info_transfer(T, xi, target_lang, cb.label_map(i))
    return rho


def identity_transfer(source_lang, target_lang, kmap, eval_samples=DEFAULT_RHO_SAMPLES, seed=0):
    """``rho_i(I)`` for every source atom: the no-equalization column."""
    if isinstance(eval_samples, (int, np.integer)):
        eval_samples = heldout_samples(source_lang, int(eval_samples), seed)
    eye = LinearMap.identity(source_lang.dimension)
    return np.array([info_transfer(eye, eval_samples[i], target_lang, kmap(i))
                     for i in range(source_lang.n_atoms)])


def codebook_entropy(rho, base=None) -> float:
    """Mean binary entropy of the diagonal ``rho_i(T_i)``; natural log by default."""
    p = np.clip(np.diag(np.asarray(rho, dtype=np.float64)), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(p < 1, (1 - p) * np.log1p(-p), 0.0)
    H = float(np.mean(h))
    if base is not None:
        H /= np.log(base)
    return H


def _pairs(z):
    return [[float(v.real), float(v.imag)] for v in np.asarray(z).ravel()]


def save_codebook(cb: Codebook, path):
    doc = {
        "version": FORMAT_VERSION,
        "n": cb.dimension,
        "N_P": len(cb),
        "kmap": list(cb.label_map.table),
        "build_metadata": cb.build_metadata,
        "maps": [{"source_atom": i, "target_atom": cb.label_map(i), "A": _pairs(T.A),
                  "b": _pairs(T.b)} for i, T in enumerate(cb.maps)],
        "rho": None if cb.rho is None else np.asarray(cb.rho).tolist(),
    }
    # json writes floats with repr(), which round-trips float64 exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def _complex(pairs, count, what):
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.shape != (count, 2):
        raise ValueError(f"{what}: expected {count} [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def load_codebook(path, expected_n: int | None = None) -> Codebook:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed codebook file ({exc})") from None
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: malformed codebook file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported codebook version {doc.get('version')!r}")
    try:
        n, n_p, maps = int(doc["n"]), int(doc["N_P"]), doc["maps"]
        kmap = LabelMap(doc["kmap"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed codebook header ({exc})") from None
    if expected_n is not None and n != expected_n:
        raise ValueError(f"{path}: dimension mismatch, file has n={n}, expected {expected_n}")
    if len(maps) != n_p or len(kmap) != n_p:
        raise ValueError(f"{path}: header declares N_P={n_p} but file has {len(maps)} maps")
    out = []
    for k, entry in enumerate(maps):
        A = _complex(entry["A"], n * n, f"map {k} A").reshape(n, n)
        b = _complex(entry["b"], n, f"map {k} b")
        out.append(LinearMap(A, b))
    rho = doc.get("rho")
    if rho is not None:
        rho = np.asarray(rho, dtype=np.float64)
        if rho.shape != (n_p, n_p):
            raise ValueError(f"{path}: rho must be {n_p} x {n_p}")
    return Codebook(out, kmap, n, doc.get("build_metadata", {}), rho)


def write_rho_csv(rho, path):
    rho = np.asarray(rho)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source_atom," + ",".join(f"T_{k}" for k in range(rho.shape[1])) + "\n")
        for i, row in enumerate(rho):
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")
