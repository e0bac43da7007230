"""Syntactic channel: power normalization, complex AWGN and a Gray-mapped QAM modem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .rng import rng_stream


def _parse_snr(v):
    if v is None:
        return math.inf
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "noiseless", "+inf"):
            return math.inf
        return float(v)
    return float(v)


@dataclass(frozen=True)
class ChannelConfig:
    """AWGN channel at ``snr_db``; ``inf`` (or ``None``) means noiseless.

    The SNR is per complex symbol at unit signal power, so the total complex
    noise variance is ``10 ** (-snr_db / 10)``.
    """

    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        snr = _parse_snr(self.snr_db)
        if math.isnan(snr) or snr == -math.inf:
            raise ValueError(f"invalid SNR {self.snr_db!r}")
        object.__setattr__(self, "snr_db", snr)

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db)

    @property
    def noise_variance(self) -> float:
        return 0.0 if self.noiseless else 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class ModemConfig:
    """Square QAM modem plus the fixed-point feature quantizer feeding it."""

    qam_order: int = 256
    bits_per_value: int = 8
    clip: tuple = (-4.0, 4.0)

    def __post_init__(self):
        m = self.qam_order
        k = int(round(math.log2(m))) if m > 0 else -1
        if m < 4 or 2 ** k != m or k % 2:
            raise ValueError("qam_order must be a power of 4 (4, 16, 64, 256, ...)")
        if not 1 <= self.bits_per_value <= 16:
            raise ValueError("bits_per_value must lie in [1, 16]")
        lo, hi = self.clip
        if not hi > lo:
            raise ValueError("clip range must satisfy lo < hi")
        object.__setattr__(self, "clip", (float(lo), float(hi)))

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.qam_order)))


def mean_power(symbols) -> float:
    z = np.asarray(symbols, dtype=np.complex128)
    return float(np.mean(z.real ** 2 + z.imag ** 2))


def normalize_power(symbols) -> np.ndarray:
    """Scale a batch so its mean power per complex entry is 1."""
    z = np.asarray(symbols, dtype=np.complex128)
    if z.size == 0:
        raise ValueError("cannot normalize an empty batch")
    p = mean_power(z)
    if p == 0:
        raise ValueError("cannot normalize an all-zero batch")
    return z / np.sqrt(p)


def awgn(x, cfg: ChannelConfig, rng=None) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of total variance ``cfg.noise_variance``.

    ``rng`` defaults to the stream keyed by ``cfg.seed``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if cfg.noiseless:
        return x.copy()
    if rng is None:
        rng = rng_stream(cfg.seed, "awgn")
    s = math.sqrt(cfg.noise_variance / 2.0)
    noise = rng.standard_normal(x.shape + (2,))
    return x + s * (noise[..., 0] + 1j * noise[..., 1])


def _gray(k):
    return k ^ (k >> 1)


@lru_cache(maxsize=None)
def _axis_tables(side):
    # gray_to_level[g] is the amplitude level whose Gray label is g
    levels = np.arange(side)
    gray_to_level = np.empty(side, dtype=np.int64)
    gray_to_level[_gray(levels)] = levels
    return gray_to_level, _gray(levels)


def qam_constellation(order: int = 256) -> np.ndarray:
    """Points indexed by their bit label (I bits high, Q bits low), unit average power."""
    ModemConfig(qam_order=order)
    side = math.isqrt(order)
    half = int(round(math.log2(side)))
    gray_to_level, _ = _axis_tables(side)
    labels = np.arange(order)
    li = gray_to_level[labels >> half]
    lq = gray_to_level[labels & (side - 1)]
    amp = 2.0 * np.arange(side) - (side - 1)
    scale = math.sqrt(3.0 / (2.0 * (order - 1)))
    return scale * (amp[li] + 1j * amp[lq])


def _bits_to_ints(bits, k):
    bits = bits.reshape(-1, k).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits @ weights


def _ints_to_bits(vals, k):
    shifts = np.arange(k - 1, -1, -1)
    return ((np.asarray(vals)[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def qam_modulate(bits, order: int = 256):
    """Map bits to QAM symbols, zero-padding to a whole symbol.

    Returns
    -------
    symbols : ndarray of complex
    pad : int
        Number of zero bits appended.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if np.any(bits > 1):
        raise ValueError("bits must be 0 or 1")
    k = int(round(math.log2(order)))
    pad = (-bits.size) % k
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    const = qam_constellation(order)
    return const[_bits_to_ints(bits, k)], pad


def qam_demodulate(symbols, order: int = 256, pad: int = 0) -> np.ndarray:
    """Minimum-distance demapping; drops ``pad`` trailing bits."""
    z = np.asarray(symbols, dtype=np.complex128).ravel()
    side = math.isqrt(order)
    half = int(round(math.log2(side)))
    scale = math.sqrt(3.0 / (2.0 * (order - 1)))
    _, level_to_gray = _axis_tables(side)

    # per-axis nearest level is the joint minimum-distance point on a square grid
    def level(v):
        return np.clip(np.rint((v / scale + (side - 1)) / 2.0), 0, side - 1).astype(np.int64)

    labels = (level_to_gray[level(z.real)] << half) | level_to_gray[level(z.imag)]
    bits = _ints_to_bits(labels, 2 * half)
    return bits[: bits.size - pad] if pad else bits


def quantize_features(values, cfg: ModemConfig) -> np.ndarray:
    """Uniform mid-rise quantization of clipped values to ``bits_per_value`` bits each."""
    v = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = cfg.clip
    L = 1 << cfg.bits_per_value
    step = (hi - lo) / L
    idx = np.clip(np.floor((np.clip(v, lo, hi) - lo) / step), 0, L - 1).astype(np.int64)
    return _ints_to_bits(idx, cfg.bits_per_value)


def dequantize_features(bits, cfg: ModemConfig) -> np.ndarray:
    """Inverse of :func:`quantize_features`: cell midpoints."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % cfg.bits_per_value:
        raise ValueError("bit count is not a multiple of bits_per_value")
    lo, hi = cfg.clip
    step = (hi - lo) / (1 << cfg.bits_per_value)
    return lo + (_bits_to_ints(bits, cfg.bits_per_value) + 0.5) * step


def symbols_per_message(n_values: int, cfg: ModemConfig) -> int:
    return -(-n_values * cfg.bits_per_value // cfg.bits_per_symbol)
