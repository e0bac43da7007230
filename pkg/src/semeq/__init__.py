"""Semantic channel equalization with optimal-transport codebooks."""

from .channel import ChannelConfig, ModemConfig, awgn, normalize_power, qam_demodulate, qam_modulate
from .codebook import (Codebook, build_codebook, codebook_entropy, estimate_rho_matrix,
                       info_transfer, language_mismatch, load_codebook, save_codebook)
from .equalizer import SelectionPolicy, post_equalize, pre_equalize, risk, select_transformation
from .experiment import ExperimentConfig, ResultRow, average_risk, run_experiment
from .ot import (BACKEND, LinearMap, P1Config, SampleSet, TransportPlan, solve_ot_entropic,
                 solve_ot_exact, solve_p1)
from .semlang import (LabelMap, Language, LanguageSpec, Message, atom_posterior, generate,
                      interpret, load_embeddings, make_synthetic_language)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChannelConfig", "Codebook", "ExperimentConfig", "LabelMap", "Language",
    "LanguageSpec", "LinearMap", "Message", "ModemConfig", "P1Config", "ResultRow", "SampleSet",
    "SelectionPolicy", "TransportPlan", "atom_posterior", "average_risk", "awgn",
    "build_codebook", "codebook_entropy", "estimate_rho_matrix", "generate", "info_transfer",
    "interpret", "language_mismatch", "load_codebook", "load_embeddings",
    "make_synthetic_language", "normalize_power", "post_equalize", "pre_equalize",
    "qam_demodulate", "qam_modulate", "risk", "run_experiment", "save_codebook",
    "select_transformation", "solve_ot_entropic", "solve_ot_exact", "solve_p1",
]
