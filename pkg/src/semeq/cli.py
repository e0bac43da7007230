"""Command-line entry point: ``semeq <subcommand> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import re
import sys

import numpy as np

from .codebook import (build_codebook, codebook_entropy, estimate_rho_matrix, load_codebook,
                       save_codebook, write_rho_csv)
from .experiment import METHODS, ExperimentConfig, run_experiment
from .rng import rng_stream
from .semlang import sample_atom, write_embeddings

log = logging.getLogger("semeq")


def _csv_list(text, cast):
    return [cast(v) for v in text.split(",") if v.strip()]


def _load_config(args) -> ExperimentConfig:
    d = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            d = json.load(fh)
        if not isinstance(d, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
    cfg = ExperimentConfig.from_dict(d)
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "snr_db", None) is not None:
        over["snr_db"] = tuple(_csv_list(args.snr_db, str))
    if getattr(args, "radius", None) is not None:
        over["radius"] = tuple(_csv_list(args.radius, float))
    if getattr(args, "methods", None) is not None:
        over["methods"] = tuple(_csv_list(args.methods, str))
    if getattr(args, "messages", None) is not None:
        over["messages"] = args.messages
    if over:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **over})
    return cfg


def _cmd_gen_lang(args):
    cfg = _load_config(args)
    src, tgt, _ = cfg.languages()
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "languages.json"), "w", encoding="utf-8") as fh:
        json.dump({"source": cfg.source.to_dict(), "target": cfg.target.to_dict(),
                   "kmap": list(cfg.kmap), "language_seed": cfg.language_seed}, fh, indent=1)
    for name, lang, count in (("source", src, cfg.n_source), ("target", tgt, cfg.n_target)):
        xs = [sample_atom(lang, a.label, count, rng_stream(cfg.seed, "gen-lang", name, a.label))
              for a in lang.atoms]
        labels = np.repeat(lang.labels, count)
        write_embeddings(os.path.join(out, f"{name}_samples.csv"), np.concatenate(xs), labels)
    print(f"wrote languages.json, source_samples.csv, target_samples.csv to {out}")


def _build(cfg, radius):
    src, tgt, kmap = cfg.languages()
    p1 = dataclasses.replace(cfg.p1, radius=radius)
    cb = build_codebook(src, tgt, kmap, p1, cfg.n_source, cfg.n_target, seed=cfg.seed,
                        workers=cfg.workers)
    cb.rho = estimate_rho_matrix(cb, src, tgt, cfg.rho_samples, cfg.seed)
    cb.build_metadata["rho_samples_per_atom"] = cfg.rho_samples
    return cb


def _cmd_build_codebook(args):
    cfg = _load_config(args)
    radius = cfg.radius[0]
    cb = _build(cfg, radius)
    out = args.out or os.path.join(cfg.out_dir, "codebook.json")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    save_codebook(cb, out)
    rho_path = os.path.join(os.path.dirname(os.path.abspath(out)), "rho.csv")
    write_rho_csv(cb.rho, rho_path)
    print(f"codebook: {out}")
    print(f"rho: {rho_path}")
    print(f"entropy: {codebook_entropy(cb.rho)!r}")


def _cmd_eval(args):
    cfg = _load_config(args)
    d = cfg.to_dict()
    d.update(snr_db=d["snr_db"][:1], radius=d["radius"][:1], repeats=1)
    cfg = ExperimentConfig.from_dict(d)
    out = args.out or os.path.join(cfg.out_dir, "eval.csv")
    rows = run_experiment(cfg, out)
    for r in rows:
        acc = "error: " + r.error if r.error else f"accuracy {r.accuracy:.4f}"
        print(f"{r.method:18s} snr={r.snr_db} radius={r.radius} {acc}")
    return 1 if any(r.error for r in rows) else 0


def _cmd_sweep(args):
    cfg = _load_config(args)
    out = args.out or os.path.join(cfg.out_dir, "results.csv")
    rows = run_experiment(cfg, out)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {out}" + (f" ({failed} failed grid points)" if failed else ""))


def _cmd_inspect(args):
    cb = load_codebook(args.codebook)
    np.set_printoptions(precision=4, suppress=True, linewidth=160)
    print(f"n = {cb.dimension}, N_P = {len(cb)}, kmap = {list(cb.label_map.table)}")
    if cb.rho is None:
        print("no information-transfer matrix stored in this codebook")
        return
    print("rho[i, k] = transfer of source atom i under map k:")
    print(cb.rho)
    print(f"entropy: {codebook_entropy(cb.rho)!r}")
    for i in range(len(cb)):
        row = cb.rho[i]
        print(f"atom {i}: target {cb.label_map(i)}, own map {row[i]:.4f}, "
              f"best map {int(np.argmax(row))} ({row.max():.4f})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semeq", description="Semantic channel equalization tools.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=False):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", help="output path")
        if grid:
            sp.add_argument("--snr-db", help="comma-separated SNRs in dB ('inf' = noiseless)")
            sp.add_argument("--methods", help=f"comma-separated subset of {', '.join(METHODS)} or 'all'")
            sp.add_argument("--messages", type=int, help="messages per grid point")
        sp.add_argument("--radius", help="ball radius (comma-separated for sweeps)")

    common(sub.add_parser("gen-lang", help="write language specs and samples"))
    common(sub.add_parser("build-codebook", help="solve the codebook and estimate rho"))
    common(sub.add_parser("eval", help="evaluate one grid point"), grid=True)
    common(sub.add_parser("sweep", help="run the full grid to a results CSV"), grid=True)
    ins = sub.add_parser("inspect", help="print rho, entropy and per-atom diagnostics")
    ins.add_argument("codebook", help="codebook JSON file")
    return p


COMMANDS = {"gen-lang": _cmd_gen_lang, "build-codebook": _cmd_build_codebook, "eval": _cmd_eval,
            "sweep": _cmd_sweep, "inspect": _cmd_inspect}


def _join_negative_lists(argv):
    # argparse reads "-5,0,5" as an option; glue such values onto their flag
    out = []
    for a in argv:
        if out and out[-1] in ("--snr-db", "--radius") and re.fullmatch(r"-[\d.,\-inf]+", a):
            out[-1] = f"{out[-1]}={a}"
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_lists(sys.argv[1:] if argv is None else argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args) or 0
    except (OSError, ValueError, RuntimeError, KeyError, TypeError) as exc:
        print(f"semeq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
