"""Mexican-hat continuous wavelet transform evaluated as a direct Riemann sum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_NORM = 2.0 / (math.sqrt(3.0) * math.pi ** 0.25)

# dyadic scales from one sample period (0.1 ms) to 12.8 ms, i.e. half-widths 0.5-64 ms at 5p
DEFAULT_SCALES_S = tuple(1e-4 * 2 ** k for k in range(8))


def mexican_hat(t, p: float, q: float = 0.0):
    """Scaled and shifted Mexican-hat wavelet.

    ``2 / (sqrt(3p) pi^(1/4)) * (1 - u^2) * exp(-u^2 / 2)`` with ``u = (t - q) / p``.
    The wavelet is real, so it is its own conjugate.
    """
    if not p > 0:
        raise ValueError(f"scale p must be positive, got {p}")
    u2 = ((np.asarray(t, dtype=float) - q) / p) ** 2
    out = _NORM / math.sqrt(p) * (1.0 - u2) * np.exp(-0.5 * u2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WaveletParams:
    """Scales are in seconds; ``support_halfwidth`` is in units of the scale."""

    scale_set: tuple[float, ...] = DEFAULT_SCALES_S
    shift_stride_samples: int = 8
    support_halfwidth: float = 8.0

    def __post_init__(self):
        scales = tuple(float(p) for p in self.scale_set)
        object.__setattr__(self, "scale_set", scales)
        if not scales:
            raise ValueError("scale_set must not be empty")
        if any(p <= 0 for p in scales):
            raise ValueError("all scales must be positive")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scale_set must be strictly increasing")
        if int(self.shift_stride_samples) != self.shift_stride_samples or self.shift_stride_samples < 1:
            raise ValueError("shift_stride_samples must be an integer >= 1")
        if self.support_halfwidth <= 0:
            raise ValueError("support_halfwidth must be positive")

    def half_support_samples(self, p: float, sampling_rate_hz: float) -> int:
        return int(math.floor(self.support_halfwidth * p * sampling_rate_hz + 1e-9))


@dataclass
class CwtResult:
    coefficients: np.ndarray  # (n_scales, n_shifts)
    shift_index: np.ndarray  # sample index of each shift q
    truncated: np.ndarray  # (n_scales, n_shifts) True where the support left the signal
    scales: tuple[float, ...]


def wavelet_kernel(p: float, sampling_rate_hz: float, params: WaveletParams) -> np.ndarray:
    half = params.half_support_samples(p, sampling_rate_hz)
    k = np.arange(-half, half + 1)
    return mexican_hat(k / sampling_rate_hz, p, 0.0)


def discrete_mean(p: float, sampling_rate_hz: float, params: WaveletParams) -> float:
    """Riemann sum of the truncated, sampled wavelet; ~0 for an admissible sampling."""
    return float(wavelet_kernel(p, sampling_rate_hz, params).sum() / sampling_rate_hz)


def cwt(
    y,
    params: WaveletParams,
    sampling_rate_hz: float,
    shifts=None,
) -> CwtResult:
    """Coefficients ``sum_n y[n] psi(t_n, p, q) dt`` for every scale and shift.

    ``shifts`` are sample indices (default: every ``shift_stride_samples``-th
    sample).  Near the ends only the available samples enter the sum; such
    columns are marked in ``truncated``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("cwt needs a non-empty 1-D signal")
    if shifts is None:
        shifts = np.arange(0, y.size, params.shift_stride_samples)
    shifts = np.asarray(shifts, dtype=int)
    if shifts.size and (shifts.min() < 0 or shifts.max() >= y.size):
        raise ValueError("shift index outside the signal")

    dt = 1.0 / sampling_rate_hz
    coeffs = np.empty((len(params.scale_set), shifts.size))
    truncated = np.empty_like(coeffs, dtype=bool)
    for i, p in enumerate(params.scale_set):
        kernel = wavelet_kernel(p, sampling_rate_hz, params)
        half = kernel.size // 2
        padded = np.concatenate([np.zeros(half), y, np.zeros(half)])
        windows = sliding_window_view(padded, kernel.size)[shifts]
        coeffs[i] = windows @ kernel * dt
        truncated[i] = (shifts - half < 0) | (shifts + half >= y.size)
    return CwtResult(coeffs, shifts, truncated, params.scale_set)
