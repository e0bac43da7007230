"""Seeded end-to-end sweeps over methods, SNRs and ball radii."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import (BaselineSpec, ClassComReceiver, make_observation_model, run_classcom,
                        run_semcom_noeq, train_linear_eq)
from .channel import ChannelConfig, ModemConfig, awgn, normalize_power, symbols_per_message
from .codebook import build_codebook, codebook_entropy, estimate_rho_matrix, identity_transfer
from .equalizer import SelectionPolicy, post_equalize, pre_equalize_batch, risk
from .fixtures import digit_parity_specs
from .ot import P1Config
from .rng import rng_stream
from .semlang import (LabelMap, Language, LanguageSpec, atom_posterior, generate_batch, interpret,
                      make_synthetic_language)

log = logging.getLogger(__name__)

METHODS = ("codebook_eq", "codebook_post_eq", "semcom_noeq", "learned_linear_eq",
           "learned_mlp_eq", "classcom_a", "classcom_b")
RADIUS_METHODS = ("codebook_eq", "codebook_post_eq")
CSV_COLUMNS = ("method", "snr_db", "radius", "accuracy", "avg_risk", "entropy",
               "symbols_per_message", "seed", "error")

# desk-scale iteration limits; the codebook quality saturates well before these
EXPERIMENT_P1 = P1Config(max_outer_iters=5, max_fw_iters=5)


def _snr(v):
    return ChannelConfig(v).snr_db


@dataclass
class ExperimentConfig:
    """Everything that defines a sweep; JSON files mirror it field for field.

    ``seed`` is the master seed; ``repeats`` runs seeds ``seed .. seed+repeats-1``.
    ``language_seed`` fixes the language geometry independently of the sweep seed.
    """

    source: LanguageSpec = field(default_factory=lambda: digit_parity_specs()[0])
    target: LanguageSpec = field(default_factory=lambda: digit_parity_specs()[1])
    kmap: tuple = tuple(LabelMap.parity(10).table)
    p1: P1Config = EXPERIMENT_P1
    snr_db: tuple = (math.inf,)
    radius: tuple = (1.0,)
    messages: int = 10_000
    methods: tuple = ("codebook_eq", "semcom_noeq")
    seed: int = 0
    repeats: int = 1
    out_dir: str = "results"
    n_source: int = 200
    n_target: int = 1000
    rho_samples: int = 10_000
    language_seed: int = 0
    power_normalize: bool = True
    workers: int = 1
    observation: dict = field(default_factory=lambda: {
        "dim": 8, "noise_std": 0.7, "source_accuracy": 0.784, "target_accuracy": 0.944})
    modem: ModemConfig = ModemConfig()
    learned_eq: BaselineSpec = BaselineSpec()

    def __post_init__(self):
        if isinstance(self.source, dict):
            self.source = LanguageSpec.from_dict(self.source)
        if isinstance(self.target, dict):
            self.target = LanguageSpec.from_dict(self.target)
        if isinstance(self.p1, dict):
            self.p1 = P1Config(**self.p1)
        if isinstance(self.modem, dict):
            m = dict(self.modem)
            if "clip" in m:
                m["clip"] = tuple(m["clip"])
            self.modem = ModemConfig(**m)
        if isinstance(self.learned_eq, dict):
            self.learned_eq = BaselineSpec(**self.learned_eq)
        if isinstance(self.kmap, str):
            if self.kmap == "parity":
                self.kmap = LabelMap.parity(self.source.atoms).table
            elif self.kmap == "identity":
                self.kmap = LabelMap.identity(self.source.atoms).table
            else:
                raise ValueError(f"unknown kmap shorthand {self.kmap!r}")
        self.kmap = tuple(int(k) for k in self.kmap)
        if isinstance(self.snr_db, (int, float, str)) or self.snr_db is None:
            self.snr_db = (self.snr_db,)
        self.snr_db = tuple(_snr(v) for v in self.snr_db)
        if isinstance(self.radius, (int, float)):
            self.radius = (self.radius,)
        self.radius = tuple(float(r) for r in self.radius)
        if isinstance(self.methods, str):
            self.methods = (self.methods,)
        methods = []
        for m in self.methods:
            methods.extend(METHODS if m == "all" else [m])
        self.methods = tuple(dict.fromkeys(methods))
        self.observation = dict(self.observation)

        if self.messages < 1:
            raise ValueError("messages must be >= 1")
        if not self.snr_db:
            raise ValueError("the SNR grid must not be empty")
        if not self.radius or any(not 0 <= r <= 1 for r in self.radius):
            raise ValueError("radius grid must be non-empty with values in [0, 1]")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; known: {', '.join(METHODS)}")
        if not self.methods:
            raise ValueError("no methods selected")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "kmap": list(self.kmap),
            "p1": dataclasses.asdict(self.p1),
            "snr_db": [v if math.isfinite(v) else "inf" for v in self.snr_db],
            "radius": list(self.radius),
            "messages": self.messages,
            "methods": list(self.methods),
            "seed": self.seed,
            "repeats": self.repeats,
            "out_dir": self.out_dir,
            "n_source": self.n_source,
            "n_target": self.n_target,
            "rho_samples": self.rho_samples,
            "language_seed": self.language_seed,
            "power_normalize": self.power_normalize,
            "workers": self.workers,
            "observation": dict(self.observation),
            "modem": {**dataclasses.asdict(self.modem), "clip": list(self.modem.clip)},
            "learned_eq": dataclasses.asdict(self.learned_eq),
        }

    def languages(self):
        src = make_synthetic_language(self.source, self.language_seed)
        tgt = make_synthetic_language(self.target, self.language_seed)
        kmap = LabelMap(self.kmap)
        kmap.check(src, tgt)
        return src, tgt, kmap


@dataclass
class ResultRow:
    method: str
    snr_db: float
    radius: float | None
    accuracy: float | None
    avg_risk: float | None
    entropy: float | None
    symbols_per_message: float | None
    seed: int
    error: str = ""

    def as_csv(self):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
            return str(v)

        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


def average_risk(policy: SelectionPolicy, messages, source_lang: Language) -> float:
    """Mean a-priori risk over a non-empty message stream."""
    labels = [getattr(m, "class_label", m) for m in messages]
    if not labels:
        raise ValueError("average_risk needs a non-empty message stream")
    cache = {}
    total = 0.0
    for lab in labels:
        lab = int(lab)
        if lab not in cache:
            cache[lab] = risk(policy, atom_posterior(source_lang, lab))
        total += cache[lab]
    return total / len(labels)


class _SeedContext:
    """Per-seed message stream plus lazily built codebooks and learned maps."""

    def __init__(self, cfg: ExperimentConfig, seed, langs):
        self.cfg = cfg
        self.seed = seed
        self.src, self.tgt, self.kmap = langs
        self.labels = rng_stream(seed, "messages").integers(0, self.src.n_atoms, cfg.messages)
        self.symbols = generate_batch(self.src, self.src.labels[self.labels],
                                      rng_stream(seed, "symbols"))
        tgt_idx = np.asarray(self.kmap.table)[self.labels]
        self.truth = self.tgt.labels[tgt_idx]
        self._lock = threading.Lock()
        self._cache = {}

    def _get(self, key, build):
        with self._lock:
            if key not in self._cache:
                try:
                    self._cache[key] = ("ok", build())
                except Exception as exc:  # recorded per grid point
                    self._cache[key] = ("error", f"{type(exc).__name__}: {exc}")
            status, val = self._cache[key]
        if status == "error":
            raise RuntimeError(val)
        return val

    def codebook(self, radius):
        def build():
            p1 = dataclasses.replace(self.cfg.p1, radius=radius)
            cb = build_codebook(self.src, self.tgt, self.kmap, p1, self.cfg.n_source,
                                self.cfg.n_target, seed=self.seed)
            cb.rho = estimate_rho_matrix(cb, self.src, self.tgt, self.cfg.rho_samples, self.seed)
            cb.build_metadata["rho_samples_per_atom"] = self.cfg.rho_samples
            return cb
        return self._get(("codebook", radius), build)

    def identity_rho(self):
        return self._get("identity-rho", lambda: identity_transfer(
            self.src, self.tgt, self.kmap, self.cfg.rho_samples, self.seed))

    def learned_map(self, hidden):
        def build():
            xs, atoms = [], []
            for i in range(self.src.n_atoms):
                x = generate_batch(self.src, np.full(self.cfg.n_source, self.src.atoms[i].label),
                                   rng_stream(self.seed, "train-source", i))
                xs.append(x)
                atoms.append(np.full(self.cfg.n_source, i))
            spec = dataclasses.replace(self.cfg.learned_eq, seed=self.seed, hidden_factor=hidden)
            return train_linear_eq(self.src, self.tgt, self.kmap,
                                   (np.concatenate(xs), np.concatenate(atoms)), spec).map
        return self._get(("learned", hidden), build)

    def features(self):
        def build():
            o = self.cfg.observation
            obs = make_observation_model(self.src.n_atoms, int(o.get("dim", 8)),
                                         float(o.get("noise_std", 0.7)),
                                         int(o.get("seed", self.cfg.language_seed)))
            return obs, obs.sample(self.labels, rng_stream(self.seed, "features"))
        return self._get("features", build)


def _transmit(ctx: _SeedContext, Y, snr):
    ch = ChannelConfig(snr, ctx.seed)
    return awgn(Y, ch, rng_stream(ctx.seed, "channel", snr))


def _evaluate(ctx: _SeedContext, method, snr, radius) -> ResultRow:
    cfg = ctx.cfg
    n = ctx.src.dimension
    acc = avg = ent = None
    spm = float(n)
    if method == "codebook_eq":
        cb = ctx.codebook(radius)
        policy = SelectionPolicy.bayes(cb.rho)
        Y, _ = pre_equalize_batch(cb, policy, ctx.src, ctx.src.labels[ctx.labels], ctx.symbols,
                                  cfg.power_normalize)
        pred = interpret(ctx.tgt, _transmit(ctx, Y, snr))
        avg = average_risk(policy, ctx.src.labels[ctx.labels], ctx.src)
        ent = codebook_entropy(cb.rho)
    elif method == "codebook_post_eq":
        cb = ctx.codebook(radius)
        rx = _transmit(ctx, normalize_power(ctx.symbols), snr)
        pred = interpret(ctx.tgt, post_equalize(cb, rx, ctx.src, cb.rho))
        ent = codebook_entropy(cb.rho)
    elif method == "semcom_noeq":
        pred = run_semcom_noeq(ctx.symbols, ChannelConfig(snr, ctx.seed), ctx.tgt,
                               rng_stream(ctx.seed, "channel", snr))
        rho_i = ctx.identity_rho()
        avg = average_risk(SelectionPolicy.identity(rho_i), ctx.src.labels[ctx.labels], ctx.src)
        ent = codebook_entropy(np.diag(rho_i))
    elif method in ("learned_linear_eq", "learned_mlp_eq"):
        hidden = 0 if method == "learned_linear_eq" else max(1, cfg.learned_eq.hidden_factor or 4)
        T = ctx.learned_map(hidden)
        Y = T(ctx.symbols)
        if cfg.power_normalize:
            Y = normalize_power(Y)
        pred = interpret(ctx.tgt, _transmit(ctx, Y, snr))
    elif method in ("classcom_a", "classcom_b"):
        obs, F = ctx.features()
        o = cfg.observation
        rx = ClassComReceiver(float(o.get("source_accuracy", 0.784)),
                              float(o.get("target_accuracy", 0.944)))
        pred = run_classcom(method[-1], F, ChannelConfig(snr, ctx.seed), cfg.modem, obs, ctx.kmap,
                            rng_stream(ctx.seed, "channel-qam", snr), rx)
        pred = ctx.tgt.labels[pred]
        spm = float(symbols_per_message(obs.dim, cfg.modem))
    else:  # guarded by ExperimentConfig
        raise ValueError(f"unknown method {method!r}")
    acc = float(np.mean(pred == ctx.truth))
    return ResultRow(method, snr, radius, acc, avg, ent, spm, ctx.seed)


def grid_points(cfg: ExperimentConfig):
    """Deterministic grid order: seed, SNR, method, radius."""
    for rep in range(cfg.repeats):
        seed = cfg.seed + rep
        for snr in cfg.snr_db:
            for method in cfg.methods:
                radii = cfg.radius if method in RADIUS_METHODS else (None,)
                for r in radii:
                    yield seed, method, snr, r


def run_experiment(cfg: ExperimentConfig, csv_path=None) -> list:
    """Run the full grid; rows are also streamed to ``csv_path`` when given.

    A failing grid point yields a row with the error message and empty metrics.
    """
    langs = cfg.languages()
    contexts = {}

    def ctx_for(seed):
        if seed not in contexts:
            contexts[seed] = _SeedContext(cfg, seed, langs)
        return contexts[seed]

    points = list(grid_points(cfg))
    for seed, *_ in points:
        ctx_for(seed)

    def run_point(pt):
        seed, method, snr, r = pt
        try:
            return _evaluate(contexts[seed], method, snr, r)
        except Exception as exc:
            log.warning("grid point %s failed: %s", pt, exc)
            return ResultRow(method, snr, r, None, None, None, None, seed,
                             str(exc).replace("\n", " "))

    rows = []
    fh = None
    writer = None
    if csv_path is not None:
        os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
        fh = open(csv_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    try:
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
                results = ex.map(run_point, points)
                # map yields in submission order, so the file order is fixed
                for row in results:
                    rows.append(row)
                    if writer:
                        writer.writerow(row.as_csv())
                        fh.flush()
        else:
            for pt in points:
                row = run_point(pt)
                rows.append(row)
                if writer:
                    writer.writerow(row.as_csv())
                    fh.flush()
    finally:
        if fh:
            fh.close()
    return rows


def read_results(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
