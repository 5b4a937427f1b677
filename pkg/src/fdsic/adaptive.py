"""Self-interference channel estimation by Wiener-surface steepest descent
and by stochastic LMS.

The filter output is w^H u, the standard adaptive-filtering convention, so
the weight vector converges to the conjugate of the taps that act on the
signal by plain convolution. :func:`train` conjugates the final weights and
hands back the physical tap vector, ready for time-domain cancellation.

Both adaptation modes share the step-size rule mu = alpha / sigma_max with
sigma_max the largest eigenvalue of the regressor correlation matrix;
adaptation is stable iff 0 < mu < 2 / sigma_max.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .channels import FirChannel

__all__ = [
    "AdaptiveState",
    "CorrelationEstimate",
    "TrainingTrace",
    "DivergenceError",
    "regressor_windows",
    "estimate_correlations",
    "largest_eigenvalue",
    "step_size",
    "steepest_descent_step",
    "lms_step",
    "mse_cost",
    "gradient",
    "train",
    "flops_per_update",
]

HERMITIAN_TOL = 1e-12
DIVERGENCE_FACTOR = 1e12


class DivergenceError(RuntimeError):
    """Adaptation left the stable region (non-finite weights or runaway cost)."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"adaptation diverged at iteration {iteration}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AdaptiveState:
    """Weight vector, step size, iteration counter, and an instrumented
    count of complex multiply-accumulate operations spent in LMS updates."""

    w: np.ndarray
    mu: float
    iteration: int = 0
    macs: int = 0

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(self.w))

    @classmethod
    def initial(cls, filter_len: int, mu: float) -> "AdaptiveState":
        return cls(w=np.zeros(filter_len, dtype=np.complex128), mu=mu)


@dataclass(frozen=True)
class CorrelationEstimate:
    """Sample second-order statistics of (regressor, desired) pairs."""

    R: np.ndarray
    p: np.ndarray
    sigma_d_sq: float
    num_samples: int

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.complex128)
        p = np.asarray(self.p, dtype=np.complex128)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("R must be square")
        if p.shape != (R.shape[0],):
            raise ValueError("p length must match R")
        scale = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
        if np.max(np.abs(R - R.conj().T)) > HERMITIAN_TOL * scale:
            raise ValueError("R must be Hermitian")
        object.__setattr__(self, "R", _readonly(R))
        object.__setattr__(self, "p", _readonly(p))

    @property
    def filter_len(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class TrainingTrace:
    """Per-iteration diagnostics: MSE cost (steepest mode) or squared
    estimation-error magnitude (LMS mode), plus the final weight vector."""

    values: np.ndarray
    kind: str  # "cost" | "error_power"
    final_weights: np.ndarray

    def __len__(self):
        return self.values.size


def regressor_windows(signal: np.ndarray, filter_len: int) -> np.ndarray:
    """Stack the sliding regressors u(l) = [u(l), u(l-1), ..., u(l-L+1)]
    as rows; history before the first sample is zero."""
    signal = np.asarray(signal, dtype=np.complex128)
    if filter_len < 1:
        raise ValueError("filter_len must be >= 1")
    if signal.size < filter_len:
        raise ValueError("signal shorter than filter length")
    padded = np.concatenate([np.zeros(filter_len - 1, dtype=np.complex128), signal])
    windows = np.lib.stride_tricks.sliding_window_view(padded, filter_len)
    return windows[:, ::-1]


def estimate_correlations(
    pilot: np.ndarray, desired: np.ndarray, filter_len: int
) -> CorrelationEstimate:
    """Sample averages R = (1/M) sum u u^H, p = (1/M) sum u d*, and the
    desired-signal variance. R is forced exactly Hermitian."""
    pilot = np.asarray(pilot, dtype=np.complex128)
    desired = np.asarray(desired, dtype=np.complex128)
    if pilot.size != desired.size:
        raise ValueError("pilot and desired must have equal length")
    if pilot.size < filter_len:
        raise ValueError("signals shorter than filter length")
    windows = regressor_windows(pilot, filter_len)
    m = pilot.size
    R = windows.T @ windows.conj() / m
    R = (R + R.conj().T) / 2.0
    p = windows.T @ desired.conj() / m
    sigma_d_sq = float(np.mean(np.abs(desired) ** 2))
    return CorrelationEstimate(R=R, p=p, sigma_d_sq=sigma_d_sq, num_samples=m)


def largest_eigenvalue(
    R: np.ndarray, rel_tol: float = 1e-10, max_iters: int = 10_000
) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix by power iteration."""
    R = np.asarray(R, dtype=np.complex128)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("R must be square")
    scale = max(1.0, float(np.max(np.abs(R))))
    if np.max(np.abs(R - R.conj().T)) > 1e-10 * scale:
        raise ValueError("R must be Hermitian")
    n = R.shape[0]
    # Deterministic start with a ramp so it is not orthogonal to the top
    # eigenvector of the structured matrices seen in practice.
    v = 1.0 + np.arange(n) / max(n, 1)
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        y = R @ v
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam_new = float(np.real(np.vdot(v, y)))
        v = y / norm
        if abs(lam_new - lam) <= rel_tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam


def step_size(alpha: float, sigma_max: float) -> float:
    """mu = alpha / sigma_max. Warns when alpha is outside (0, 2), where
    the convergence condition 0 < mu < 2/sigma_max no longer holds."""
    if sigma_max <= 0:
        raise ValueError("sigma_max must be positive")
    if not 0.0 < alpha < 2.0:
        warnings.warn(
            f"alpha={alpha} outside (0, 2): step size violates the stability bound",
            stacklevel=2,
        )
    return alpha / sigma_max


def steepest_descent_step(
    state: AdaptiveState, corr: CorrelationEstimate
) -> AdaptiveState:
    """One whole-gradient update w <- w + mu (p - R w)."""
    if state.w.shape[0] != corr.filter_len:
        raise ValueError("state and correlation dimensions disagree")
    w = state.w + state.mu * (corr.p - corr.R @ state.w)
    return replace(state, w=w, iteration=state.iteration + 1)


def lms_step(
    state: AdaptiveState, u_window: np.ndarray, d: complex
) -> tuple[AdaptiveState, complex]:
    """One stochastic update from a single regressor/desired pair:

        e = d - w^H u,   w <- w + mu u e*

    Costs exactly 2L + 2 complex multiply-accumulates, tallied on the
    returned state: L for the filter output, 1 for the error, 1 for the
    step scaling, L for the tap update.
    """
    u_window = np.asarray(u_window, dtype=np.complex128)
    L = state.w.shape[0]
    if u_window.shape != (L,):
        raise ValueError("window length must equal the filter length")
    y = np.vdot(state.w, u_window)  # L MACs
    e = d - y  # 1
    g = state.mu * np.conj(e)  # 1
    w = state.w + g * u_window  # L MACs
    macs = state.macs + (L + 1 + 1 + L)
    return replace(state, w=w, iteration=state.iteration + 1, macs=macs), complex(e)


def mse_cost(w: np.ndarray, corr: CorrelationEstimate) -> float:
    """Quadratic MSE surface J = sigma_d^2 - w^H p - p^H w + w^H R w.

    The value is checked real to 1e-12 (relative); the imaginary residue is
    then discarded.
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.shape[0] != corr.filter_len:
        raise ValueError("weight and correlation dimensions disagree")
    cross = np.vdot(w, corr.p)
    quad = np.vdot(w, corr.R @ w)
    j = corr.sigma_d_sq - cross - np.conj(cross) + quad
    if abs(j.imag) > 1e-12 * max(1.0, abs(j)):
        raise ValueError("cost has a non-negligible imaginary part; R not Hermitian?")
    return float(j.real)


def gradient(w: np.ndarray, corr: CorrelationEstimate) -> np.ndarray:
    """Gradient of the MSE surface: -2p + 2Rw."""
    w = np.asarray(w, dtype=np.complex128)
    if w.shape[0] != corr.filter_len:
        raise ValueError("weight and correlation dimensions disagree")
    return -2.0 * corr.p + 2.0 * corr.R @ w


def flops_per_update(filter_len: int, algorithm: str) -> int:
    """Per-update complex-MAC cost: 2L+2 for LMS/steepest updates. The L^2
    figure for recursive least squares is kept as a comparison constant;
    RLS itself is not implemented."""
    if filter_len < 1:
        raise ValueError("filter_len must be >= 1")
    if algorithm == "lms":
        return 2 * filter_len + 2
    if algorithm == "rls":
        return filter_len**2
    raise ValueError(f"unknown algorithm {algorithm!r}")


def train(
    pilot: np.ndarray,
    received: np.ndarray,
    filter_len: int,
    alpha: float = 0.125,
    iterations: int = 100,
    mode: str = "steepest",
) -> tuple[FirChannel, TrainingTrace]:
    """Estimate the channel between ``pilot`` and ``received``.

    steepest mode: estimate (R, p) once from the whole frame, then run
    ``iterations`` whole-gradient updates from w(0) = 0, tracing the MSE
    cost. lms mode: run sample-by-sample updates, cycling the frame until
    ``iterations * len(pilot)`` updates have been made, tracing |e|^2.

    Returns the physical tap vector (the conjugate of the converged weight
    vector, see the module docstring) and the trace. Raises
    :class:`DivergenceError` when a weight goes non-finite or the traced
    value exceeds 1e12 times its starting level.
    """
    if mode not in ("steepest", "lms"):
        raise ValueError(f"unknown training mode {mode!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    corr = estimate_correlations(pilot, received, filter_len)
    sigma_max = largest_eigenvalue(corr.R)
    mu = step_size(alpha, sigma_max)
    state = AdaptiveState.initial(filter_len, mu)
    ceiling = DIVERGENCE_FACTOR * max(1.0, corr.sigma_d_sq)

    if mode == "steepest":
        trace = np.empty(iterations)
        for i in range(iterations):
            state = steepest_descent_step(state, corr)
            if not np.all(np.isfinite(state.w)):
                raise DivergenceError(i + 1, "weights went non-finite")
            cost = mse_cost(state.w, corr)
            trace[i] = cost
            if cost > ceiling:
                raise DivergenceError(i + 1, f"cost exceeded {ceiling:.3e}")
        kind = "cost"
    else:
        windows = regressor_windows(pilot, filter_len)
        desired = np.asarray(received, dtype=np.complex128)
        m = desired.size
        total = iterations * m
        trace = np.empty(total)
        for i in range(total):
            state, e = lms_step(state, windows[i % m], desired[i % m])
            if not np.all(np.isfinite(state.w)):
                raise DivergenceError(i + 1, "weights went non-finite")
            err_power = abs(e) ** 2
            trace[i] = err_power
            if err_power > ceiling:
                raise DivergenceError(i + 1, f"error power exceeded {ceiling:.3e}")
        kind = "error_power"

    weights = state.w.copy()
    return FirChannel(np.conj(weights)), TrainingTrace(
        values=trace, kind=kind, final_weights=weights
    )
