"""Discrete-time FIR baseband channels: Rayleigh draws, the Rician
loop-back self-interference model, SIR scaling, and signal composition.

Signals are plain 1-D complex ndarrays. Channels are immutable tap vectors
wrapped in :class:`FirChannel`. All randomness comes from an explicit
``numpy.random.Generator`` argument, so every operation is pure and safe to
call concurrently with independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FirChannel",
    "SiChannelSpec",
    "make_rayleigh_channel",
    "make_los_channel",
    "compose_si_channel",
    "scale_to_sir",
    "convolve",
    "add_awgn",
    "uplink_received",
    "downlink_received",
]


@dataclass(frozen=True)
class FirChannel:
    """Complex FIR tap vector. Taps are validated finite and frozen."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("channel needs at least one tap")
        if not np.all(np.isfinite(taps.real)) or not np.all(np.isfinite(taps.imag)):
            raise ValueError("channel taps must be finite")
        taps = taps.copy()
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return self.taps.size

    @property
    def power(self) -> float:
        """Total tap power sum(|h_k|^2)."""
        return float(np.sum(np.abs(self.taps) ** 2))


@dataclass(frozen=True)
class SiChannelSpec:
    """Parameters that fully determine self-interference channel draws."""

    kappa_db: float = 5.0
    num_taps: int = 10
    los_delay: float = 0.5
    sir_db: float = -60.0

    def __post_init__(self):
        if self.num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        if not np.isfinite(self.kappa_db):
            raise ValueError("kappa_db must be finite")
        if not np.isfinite(self.sir_db):
            raise ValueError("sir_db must be finite")


def make_rayleigh_channel(num_taps: int, rng: np.random.Generator) -> FirChannel:
    """Draw i.i.d. circular complex Gaussian taps with per-tap variance
    1/num_taps, so the expected total channel power is 1."""
    if num_taps < 1:
        raise ValueError("num_taps must be >= 1")
    scale = np.sqrt(0.5 / num_taps)
    taps = rng.normal(scale=scale, size=num_taps) + 1j * rng.normal(
        scale=scale, size=num_taps
    )
    return FirChannel(taps)


def make_los_channel(num_taps: int, los_delay: float = 0.5) -> FirChannel:
    """Deterministic line-of-sight pulse: tap k = sinc(k - los_delay),
    normalized to unit total power."""
    if num_taps < 1:
        raise ValueError("num_taps must be >= 1")
    taps = np.sinc(np.arange(num_taps) - los_delay).astype(np.complex128)
    taps /= np.sqrt(np.sum(np.abs(taps) ** 2))
    return FirChannel(taps)


def compose_si_channel(
    los: FirChannel, nlos: FirChannel, kappa_db: float
) -> FirChannel:
    """Rician mixture sqrt(k/(k+1))*los + sqrt(1/(k+1))*nlos with the
    factor k given in dB and converted to linear."""
    if len(los) != len(nlos):
        raise ValueError("los and nlos channels must have equal length")
    kappa = 10.0 ** (kappa_db / 10.0)
    taps = np.sqrt(kappa / (kappa + 1.0)) * los.taps + np.sqrt(
        1.0 / (kappa + 1.0)
    ) * nlos.taps
    return FirChannel(taps)


def scale_to_sir(
    h_si: FirChannel, sir_db: float, uplink_power: float = 1.0
) -> FirChannel:
    """Rescale taps so the interference channel power realizes the target
    signal-to-interference ratio exactly:

        ||g||^2 = uplink_power * 10^(-sir_db/10)

    Tap direction is unchanged.
    """
    if uplink_power <= 0:
        raise ValueError("uplink_power must be positive")
    current = h_si.power
    if current == 0.0:
        raise ValueError("cannot scale a zero-power channel")
    target = uplink_power * 10.0 ** (-sir_db / 10.0)
    return FirChannel(h_si.taps * np.sqrt(target / current))


def convolve(channel: FirChannel, signal: np.ndarray) -> np.ndarray:
    """Zero-prefix linear convolution truncated to the input length:
    out[m] = sum_k h_k * x[m-k]. Cyclic behavior within OFDM frames comes
    from the cyclic prefix, not from this operation."""
    signal = np.asarray(signal, dtype=np.complex128)
    if signal.size == 0:
        raise ValueError("signal must be nonempty")
    return np.convolve(signal, channel.taps)[: signal.size]


def add_awgn(
    signal: np.ndarray, noise_variance: float, rng: np.random.Generator
) -> np.ndarray:
    """Add circular complex Gaussian noise with total variance
    noise_variance per sample (variance/2 on each rail)."""
    if noise_variance < 0:
        raise ValueError("noise_variance must be >= 0")
    signal = np.asarray(signal, dtype=np.complex128)
    if noise_variance == 0:
        return signal.copy()
    scale = np.sqrt(noise_variance / 2.0)
    noise = rng.normal(scale=scale, size=signal.size) + 1j * rng.normal(
        scale=scale, size=signal.size
    )
    return signal + noise


def uplink_received(
    h_u: FirChannel,
    s_u: np.ndarray,
    h_si: FirChannel,
    s_d: np.ndarray,
    noise_variance: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Relay receive signal: uplink data through h_u plus loop-back
    self-interference through h_si plus AWGN."""
    s_u = np.asarray(s_u)
    s_d = np.asarray(s_d)
    if s_u.size != s_d.size:
        raise ValueError("uplink and downlink signals must have equal length")
    clean = convolve(h_u, s_u) + convolve(h_si, s_d)
    return add_awgn(clean, noise_variance, rng)


def downlink_received(
    h_d: FirChannel,
    s_d: np.ndarray,
    noise_variance: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Downlink user receive signal: interference-free by construction."""
    return add_awgn(convolve(h_d, s_d), noise_variance, rng)
