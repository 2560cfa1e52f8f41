"""Per-phase feature catalog computed on the post-inception analysis window."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..scenario import PHASES
from ..synth import Waveform
from .wavelet import WaveletParams, cwt

CATALOG_VERSION = "1"
N_HARMONICS = 10
HIST_BINS = 32
APEN_M = 2
APEN_R = 0.2


class InvalidWindowError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    spec_id: int
    values: dict[str, float]
    label: str | None = None

    def __post_init__(self):
        bad = [k for k, v in self.values.items() if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite features for spec {self.spec_id}: {bad[:5]}")


def _scale_tag(p: float) -> str:
    return f"p{int(round(p * 1e6))}us"


def phase_feature_names(params: WaveletParams) -> list[str]:
    names = [
        "min", "max", "mean", "median", "std", "rms", "skewness", "kurtosis",
        "autocorr_lag1", "autocorr_halfcycle", "autocorr_cycle",
    ]
    names += [f"fft_h{h}" for h in range(1, N_HARMONICS + 1)]
    names += ["hist_entropy", "approx_entropy"]
    for p in params.scale_set:
        names += [f"cwt_max_{_scale_tag(p)}", f"cwt_energy_{_scale_tag(p)}"]
    return names


def feature_names(params: WaveletParams) -> list[str]:
    """Full schema, ordered phase-major: ``a__min``, ``a__max``, ..., ``c__cwt_energy_*``."""
    return [f"{ph}__{name}" for ph in PHASES for name in phase_feature_names(params)]


def autocorrelation(x: np.ndarray, lag: int) -> float:
    n = x.size
    if lag >= n:
        return 0.0
    var = x.var()
    if var == 0:
        return 0.0
    d = x - x.mean()
    return float(np.dot(d[: n - lag], d[lag:]) / ((n - lag) * var))


def harmonic_magnitudes(x: np.ndarray, fundamental_hz: float, sampling_rate_hz: float, n: int) -> np.ndarray:
    """Single-sided DFT magnitudes evaluated exactly at the first ``n`` harmonics.

    Harmonic frequencies need not fall on FFT bins of the window, so the DFT is
    evaluated directly at ``h * fundamental``.
    """
    k = np.arange(x.size)
    h = np.arange(1, n + 1)[:, None]
    basis = np.exp(-2j * np.pi * h * fundamental_hz * k / sampling_rate_hz)
    return np.abs(basis @ x) * 2.0 / x.size


def histogram_entropy(x: np.ndarray, bins: int = HIST_BINS) -> float:
    counts, _ = np.histogram(x, bins=bins)
    p = counts[counts > 0] / x.size
    return float(-(p * np.log(p)).sum())


def approximate_entropy(x: np.ndarray, m: int = APEN_M, r_frac: float = APEN_R) -> float:
    """Pincus approximate entropy with tolerance ``r_frac * std(x)`` (self-matches counted)."""
    n = x.size
    if n <= m + 1:
        return 0.0
    r = r_frac * x.std()

    def phi(mm: int) -> float:
        emb = np.lib.stride_tricks.sliding_window_view(x, mm)
        dist = np.abs(emb[:, None, :] - emb[None, :, :]).max(axis=2)
        c = (dist <= r).mean(axis=1)
        return float(np.log(c).mean())

    return phi(m) - phi(m + 1)


def _moments(x: np.ndarray) -> tuple[float, float]:
    if x.std() == 0:
        return 0.0, 0.0
    return float(stats.skew(x)), float(stats.kurtosis(x))


def analysis_window(w: Waveform, system_frequency_hz: float, cycles: float = 2.0) -> slice:
    length = int(round(cycles * w.sampling_rate_hz / system_frequency_hz))
    start, stop = w.fault_start_index, w.fault_start_index + length
    if stop > w.n_samples:
        raise InvalidWindowError(
            f"window [{start}, {stop}) exceeds record of {w.n_samples} samples (spec {w.spec_id})"
        )
    return slice(start, stop)


def phase_features(
    y: np.ndarray,
    window: slice,
    params: WaveletParams,
    sampling_rate_hz: float,
    system_frequency_hz: float,
) -> list[float]:
    x = y[window]
    skew, kurt = _moments(x)
    cycle = sampling_rate_hz / system_frequency_hz
    out = [
        x.min(), x.max(), x.mean(), np.median(x), x.std(), math.sqrt(np.mean(x * x)), skew, kurt,
        autocorrelation(x, 1),
        autocorrelation(x, int(round(cycle / 2))),
        autocorrelation(x, int(round(cycle))),
    ]
    out += list(harmonic_magnitudes(x, system_frequency_hz, sampling_rate_hz, N_HARMONICS))
    out += [histogram_entropy(x), approximate_entropy(x)]

    # shifts sweep the window; the wavelet support may reach into the rest of the record
    shifts = np.arange(window.start, window.stop, params.shift_stride_samples)
    res = cwt(y, params, sampling_rate_hz, shifts)
    for row, flagged in zip(res.coefficients, res.truncated):
        kept = row[~flagged]
        if kept.size:
            out += [float(np.abs(kept).max()), float(np.dot(kept, kept))]
        else:
            out += [0.0, 0.0]
    return [float(v) for v in out]


def extract_features(
    w: Waveform,
    params: WaveletParams | None = None,
    label: str | None = None,
    system_frequency_hz: float = 60.0,
) -> FeatureVector:
    """Feature vector over the two cycles that follow fault inception."""
    params = params or WaveletParams()
    window = analysis_window(w, system_frequency_hz)
    values: list[float] = []
    for k in range(3):
        values += phase_features(w.samples[k], window, params, w.sampling_rate_hz, system_frequency_hz)
    return FeatureVector(w.spec_id, dict(zip(feature_names(params), values)), label)
