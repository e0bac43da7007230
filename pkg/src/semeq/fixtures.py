"""Ready-made languages for tests, examples and the default experiment."""

from __future__ import annotations

import numpy as np

from .semlang import LabelMap, LanguageSpec, make_synthetic_language
from .rng import rng_stream


def digit_parity_specs(source_spread=0.15, target_spread=0.45):
    """Ten digit atoms on a circle and two parity atoms on the same axis.

    The parity centroids sit at angles pi (even) and 0 (odd), so six of the ten
    digit atoms fall on the wrong side of the parity boundary and the parity
    labels alternate around the circle: no single affine map separates them.
    """
    src = LanguageSpec(n=2, atoms=10, layout="circle", spread=source_spread, unit_power=True,
                       label_names=tuple(str(d) for d in range(10)))
    tgt = LanguageSpec(n=2, atoms=2, layout="circle", spread=target_spread, phase=np.pi,
                       unit_power=True, label_names=("even", "odd"))
    return src, tgt


def digit_parity_fixture(source_spread=0.15, target_spread=0.45, seed=0):
    """``(source_lang, target_lang, kappa)`` for the digit to parity task."""
    s, t = digit_parity_specs(source_spread, target_spread)
    return make_synthetic_language(s, seed), make_synthetic_language(t, seed), LabelMap.parity(10)


def translation_fixture(n=2, count=60, shift=None, seed=0):
    """Point cloud ``X`` and its exact translate ``Y = X + v``."""
    rng = rng_stream(seed, "translation-fixture")
    X = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    v = (np.asarray(shift, dtype=np.complex128) if shift is not None
         else rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return X, X + v, v
