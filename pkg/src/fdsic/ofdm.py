"""QPSK mapping and OFDM framing.

Transmit: Gray-mapped unit-energy QPSK, unitary inverse transform, cyclic
prefix per OFDM symbol. Receive: prefix removal, unitary forward transform,
one-tap zero-forcing equalization with per-subcarrier noise variances for
soft demapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import FirChannel

__all__ = [
    "OfdmConfig",
    "Frame",
    "qpsk_map",
    "qpsk_llr",
    "qpsk_hard_bits",
    "ofdm_modulate",
    "ofdm_demodulate",
    "equalize",
    "assemble_frame",
]

DEEP_FADE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class OfdmConfig:
    num_subcarriers: int = 1024
    cp_len: int = 9
    bits_per_symbol: int = 2  # QPSK

    def __post_init__(self):
        n = self.num_subcarriers
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError("num_subcarriers must be a power of two >= 8")
        if self.cp_len < 0:
            raise ValueError("cp_len must be >= 0")
        if self.bits_per_symbol != 2:
            raise ValueError("only QPSK (2 bits/symbol) is supported")

    @property
    def samples_per_symbol(self) -> int:
        return self.num_subcarriers + self.cp_len


@dataclass(frozen=True)
class Frame:
    """One transmit frame: time-domain samples (each OFDM symbol carries its
    own cyclic prefix) plus the per-subcarrier payload that produced them."""

    time_samples: np.ndarray
    payload_symbols: np.ndarray
    kind: str  # "pilot" | "data"


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK: (b0, b1) -> ((1-2*b0) + 1j*(1-2*b1))/sqrt(2)."""
    bits = np.asarray(bits)
    if bits.size % 2 != 0:
        raise ValueError("bit count must be even")
    b = bits.reshape(-1, 2)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) / np.sqrt(2.0)


def qpsk_llr(symbols: np.ndarray, noise_variance) -> np.ndarray:
    """Per-bit LLRs for Gray QPSK under per-subcarrier AWGN.

    Positive LLR means bit 0 is more likely. ``noise_variance`` may be a
    scalar or an array matching ``symbols`` (the post-equalization variances).
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    var = np.asarray(noise_variance, dtype=np.float64)
    if np.any(var <= 0):
        raise ValueError("noise_variance must be positive")
    scale = 2.0 * np.sqrt(2.0) / var
    llrs = np.empty(symbols.size * 2)
    llrs[0::2] = scale * symbols.real
    llrs[1::2] = scale * symbols.imag
    return llrs


def qpsk_hard_bits(symbols: np.ndarray) -> np.ndarray:
    """Hard decisions inverting qpsk_map (sign-convention: nonneg -> bit 0)."""
    symbols = np.asarray(symbols)
    bits = np.empty(symbols.size * 2, dtype=np.uint8)
    bits[0::2] = symbols.real < 0
    bits[1::2] = symbols.imag < 0
    return bits


def ofdm_modulate(symbols: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Unitary inverse transform per block of num_subcarriers symbols, with
    the last cp_len samples of each body copied to its front."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    n = cfg.num_subcarriers
    if symbols.size == 0 or symbols.size % n != 0:
        raise ValueError("symbol count must be a nonzero multiple of num_subcarriers")
    blocks = symbols.reshape(-1, n)
    bodies = np.fft.ifft(blocks, norm="ortho", axis=1)
    if cfg.cp_len == 0:
        return bodies.reshape(-1)
    out = np.concatenate([bodies[:, n - cfg.cp_len :], bodies], axis=1)
    return out.reshape(-1)


def ofdm_demodulate(samples: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Strip the cyclic prefix of each OFDM symbol and apply the unitary
    forward transform."""
    samples = np.asarray(samples, dtype=np.complex128)
    sps = cfg.samples_per_symbol
    if samples.size == 0 or samples.size % sps != 0:
        raise ValueError(
            f"sample count {samples.size} does not match frame geometry "
            f"(multiple of {sps})"
        )
    blocks = samples.reshape(-1, sps)[:, cfg.cp_len :]
    return np.fft.fft(blocks, norm="ortho", axis=1).reshape(-1)


def equalize(
    rx_symbols: np.ndarray,
    channel: FirChannel,
    cfg: OfdmConfig,
    noise_variance: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One-tap zero-forcing per subcarrier.

    Returns (equalized symbols, post-equalization noise variances). The
    channel frequency response is its length-N discrete Fourier transform;
    subcarriers in a deep fade (|H_k| < 1e-12) are flagged by zeroing the
    symbol and setting the variance to +inf, which forces their LLRs to 0.
    """
    rx_symbols = np.asarray(rx_symbols, dtype=np.complex128)
    n = cfg.num_subcarriers
    if len(channel) > cfg.cp_len + 1:
        raise ValueError("channel length exceeds cp_len + 1")
    if rx_symbols.size % n != 0:
        raise ValueError("symbol count must be a multiple of num_subcarriers")
    h_freq = np.fft.fft(channel.taps, n)
    mag = np.abs(h_freq)
    faded = mag < DEEP_FADE_THRESHOLD
    h_safe = np.where(faded, 1.0, h_freq)
    num_blocks = rx_symbols.size // n
    blocks = rx_symbols.reshape(num_blocks, n)
    eq = np.where(faded[None, :], 0.0, blocks / h_safe[None, :])
    var = np.where(faded, np.inf, noise_variance / np.maximum(mag, 1e-300) ** 2)
    return eq.reshape(-1), np.tile(var, num_blocks)


def assemble_frame(
    payload_symbols: np.ndarray,
    cfg: OfdmConfig,
    kind: str,
    pad_symbols: np.ndarray | None = None,
) -> Frame:
    """Build a frame from payload subcarrier amplitudes, padding the last
    OFDM symbol with the supplied unit-power filler symbols."""
    payload_symbols = np.asarray(payload_symbols, dtype=np.complex128)
    n = cfg.num_subcarriers
    remainder = (-payload_symbols.size) % n
    if remainder:
        if pad_symbols is None or pad_symbols.size != remainder:
            raise ValueError(f"payload needs exactly {remainder} pad symbols")
        grid = np.concatenate([payload_symbols, pad_symbols])
    else:
        grid = payload_symbols
    return Frame(ofdm_modulate(grid, cfg), payload_symbols, kind)
