"""Three-phase differential-current synthesis for the protected line.

The network behind the relay is reduced to a per-mode Thevenin equivalent.
Type-1 internal faults inject a DC-offset fault current straight into the
differential; HIFs use the anti-parallel DC-source arc model; external faults
push a through-current into two CTs with different burdens and keep only what
their unequal saturation leaves behind.

All currents are primary amperes.  A waveform is a pure function of
``(spec, cfg, model params)``: randomness comes from generators seeded by
``spec.rng_seed``, with measurement noise on its own stream so the noise-free
part can be inspected separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import EventType, FaultType, Mode, PHASES, ScenarioSpec


class ContractViolation(ValueError):
    """A synthesizer was handed a scenario of the wrong event type."""


@dataclass(frozen=True)
class SynthConfig:
    system_frequency_hz: float = 60.0
    sampling_rate_hz: float = 10_000.0
    record_length_s: float = 0.5
    fault_start_s: float = 0.2
    nominal_current_a: float = 1178.0  # peak; 0.833 kA rms
    noise_rel_std: float = 0.01
    nominal_voltage_ll_v: float = 20_000.0
    source_impedance_ohm: float = 2.0  # grid-connected Thevenin magnitude at the fault point
    islanded_impedance_factor: float = 5.0
    tau_grid_s: float = 0.030
    tau_islanded_s: float = 0.015
    load_current_frac: float = 0.5
    load_power_factor: float = 0.9
    external_extra_impedance_ohm: float = 1.0  # line section between relay zone and external fault

    def __post_init__(self):
        if self.sampling_rate_hz < 40 * self.system_frequency_hz:
            raise ValueError("sampling rate must be at least 40x the system frequency")
        if not 0 < self.fault_start_s < self.record_length_s:
            raise ValueError("fault_start_s must lie strictly inside the record")
        if self.noise_rel_std < 0:
            raise ValueError("noise_rel_std must be >= 0")

    @property
    def n_samples(self) -> int:
        return int(round(self.record_length_s * self.sampling_rate_hz))

    @property
    def fault_start_index(self) -> int:
        return int(round(self.fault_start_s * self.sampling_rate_hz))

    @property
    def fault_time_s(self) -> float:
        """Fault instant snapped to the sample grid."""
        return self.fault_start_index / self.sampling_rate_hz

    @property
    def omega(self) -> float:
        return 2 * math.pi * self.system_frequency_hz

    @property
    def phase_peak_voltage(self) -> float:
        return self.nominal_voltage_ll_v * math.sqrt(2.0 / 3.0)

    @property
    def noise_std(self) -> float:
        return self.noise_rel_std * self.nominal_current_a

    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sampling_rate_hz

    def tau(self, mode: Mode) -> float:
        return self.tau_grid_s if mode is Mode.GRID_CONNECTED else self.tau_islanded_s

    def source_impedance(self, mode: Mode) -> complex:
        """Thevenin impedance with X/R set by the mode's decay time constant."""
        mag = self.source_impedance_ohm
        if mode is Mode.ISLANDED:
            mag *= self.islanded_impedance_factor
        return mag * np.exp(1j * math.atan(self.omega * self.tau(mode)))


@dataclass(frozen=True)
class HifModelParams:
    """Arc model: two DC sources behind diodes and randomly varying resistors.

    ``Vp``/``Vn`` left as ``None`` are drawn per scenario as a fraction
    ``source_range_frac`` of the nominal phase peak voltage.
    """

    Vp: float | None = None
    Vn: float | None = None
    Rp_range_ohm: tuple[float, float] = (50.0, 300.0)
    Rn_range_ohm: tuple[float, float] = (50.0, 300.0)
    resistance_update_interval_s: float = 0.0002
    source_jitter_rel: float = 0.10
    source_range_frac: tuple[float, float] = (0.2, 0.5)
    min_asymmetry_frac: float = 0.05

    def __post_init__(self):
        if self.Vp is not None and self.Vp <= 0:
            raise ValueError("Vp must be positive")
        if self.Vn is not None and self.Vn >= 0:
            raise ValueError("Vn must be negative")
        for lo, hi in (self.Rp_range_ohm, self.Rn_range_ohm):
            if not 0 < lo <= hi:
                raise ValueError("resistance ranges must be positive and ordered")
        if not 0 <= self.source_jitter_rel < 1:
            raise ValueError("source_jitter_rel must lie in [0, 1)")


@dataclass(frozen=True)
class CtParams:
    turns_ratio: float = 240.0
    burden_ohm: tuple[float, float] = (0.5, 8.0)
    saturation_flux_vs: float = 0.3
    remanence_frac: float = 0.0

    def __post_init__(self):
        if self.turns_ratio <= 0:
            raise ValueError("turns_ratio must be positive")
        if len(self.burden_ohm) != 2 or min(self.burden_ohm) <= 0:
            raise ValueError("burden_ohm needs two positive values")
        if self.saturation_flux_vs <= 0:
            raise ValueError("saturation_flux_vs must be positive")
        if not 0 <= self.remanence_frac < 1:
            raise ValueError("remanence_frac must lie in [0, 1)")


@dataclass
class Waveform:
    samples: np.ndarray  # (3, N) differential current per phase, amperes
    sampling_rate_hz: float
    fault_start_index: int
    spec_id: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] != 3:
            raise ValueError(f"expected a (3, N) array, got {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")
        if not 0 <= self.fault_start_index < self.samples.shape[1]:
            raise ValueError("fault_start_index outside the record")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sampling_rate_hz


@dataclass
class HifTrace:
    """Noise-free internals of one HIF run, for inspection and tests."""

    current: np.ndarray
    voltage: np.ndarray
    Vp: np.ndarray
    Vn: np.ndarray
    Rp: np.ndarray
    Rn: np.ndarray
    phase_index: int
    fault_start_index: int
    update_samples: int


@dataclass
class CtTrace:
    primary: np.ndarray  # (3, N) through current
    secondary: tuple[np.ndarray, np.ndarray]  # per end, primary-referred
    flux: tuple[np.ndarray, np.ndarray]
    differential: np.ndarray = field(init=False)

    def __post_init__(self):
        self.differential = self.secondary[0] - self.secondary[1]


def _streams(spec: ScenarioSpec) -> tuple[np.random.Generator, np.random.Generator]:
    """(model, noise) generators; independent so noise never perturbs the model draw."""
    model_ss, noise_ss = np.random.SeedSequence(spec.rng_seed).spawn(2)
    return np.random.default_rng(model_ss), np.random.default_rng(noise_ss)


def _require(spec: ScenarioSpec, event: EventType) -> None:
    if spec.event_type is not event:
        raise ContractViolation(
            f"scenario {spec.id} is {spec.event_type.value}, expected {event.value}"
        )


def _phase_index(phase: str) -> int:
    return PHASES.index(phase)


def _sinusoid(phasor: complex, cfg: SynthConfig, t: np.ndarray) -> np.ndarray:
    """|X| sin(w (t - t_fault) + arg X); angles are referenced to the fault instant."""
    return abs(phasor) * np.sin(cfg.omega * (t - cfg.fault_time_s) + np.angle(phasor))


def prefault_phasors(spec: ScenarioSpec, cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Source-side load currents and the resulting phase voltages at the fault point.

    Phasors use the sine reference of :func:`_sinusoid`; phase a's voltage sits at
    the inception angle.
    """
    cond = spec.condition
    theta = math.radians(spec.inception_angle_deg)
    shifts = np.array([0.0, -2 * math.pi / 3, 2 * math.pi / 3])
    e = cfg.phase_peak_voltage * cond.voltage_pu * np.exp(1j * (theta + shifts))
    i_load_mag = cfg.load_current_frac * cfg.nominal_current_a * np.asarray(cond.load_factors)
    i_load = i_load_mag * np.exp(1j * (np.angle(e) - math.acos(cfg.load_power_factor)))
    v = e - cfg.source_impedance(cond.mode) * i_load
    return i_load, v


def fault_phasors(spec: ScenarioSpec, v: np.ndarray, z_branch: complex) -> np.ndarray:
    """Steady-state fault current per phase.

    Each faulted phase reaches the fault node through ``z_branch``; grounded
    faults pin the node at zero, ungrounded ones float it so the currents sum
    to zero.
    """
    faulted = [_phase_index(p) for p in spec.faulted_phases]
    grounded = spec.fault_type in (FaultType.LG, FaultType.LLG, FaultType.LLLG)
    v_node = 0.0 if grounded else v[faulted].mean()
    i = np.zeros(3, dtype=complex)
    i[faulted] = (v[faulted] - v_node) / z_branch
    return i


def _offset_fault_current(phasors: np.ndarray, cfg: SynthConfig, tau: float) -> np.ndarray:
    """Fault current starting from zero at the fault instant, with decaying DC offset."""
    t = cfg.time()
    n0 = cfg.fault_start_index
    tp = t[n0:] - cfg.fault_time_s
    out = np.zeros((3, t.size))
    for k, ph in enumerate(phasors):
        if ph == 0:
            continue
        ang = np.angle(ph)
        out[k, n0:] = abs(ph) * (np.sin(cfg.omega * tp + ang) - math.sin(ang) * np.exp(-tp / tau))
    return out


def _noise(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    return rng.normal(0.0, cfg.noise_std, size=(3, cfg.n_samples))


# ---------------------------------------------------------------------------
# type-1 internal faults
# ---------------------------------------------------------------------------


def internal_fault_current(spec: ScenarioSpec, cfg: SynthConfig) -> np.ndarray:
    """Noise-free differential current of a low-impedance internal fault."""
    mode = spec.condition.mode
    _, v = prefault_phasors(spec, cfg)
    z = cfg.source_impedance(mode) + spec.fault_resistance_ohm
    return _offset_fault_current(fault_phasors(spec, v, z), cfg, cfg.tau(mode))


def synthesize_internal(spec: ScenarioSpec, cfg: SynthConfig) -> Waveform:
    _require(spec, EventType.TYPE1_INTERNAL)
    _, noise_rng = _streams(spec)
    samples = internal_fault_current(spec, cfg) + _noise(noise_rng, cfg)
    return Waveform(samples, cfg.sampling_rate_hz, cfg.fault_start_index, spec.id)


# ---------------------------------------------------------------------------
# high-impedance faults
# ---------------------------------------------------------------------------


def hif_current(v_ph, Vp, Vn, Rp, Rn):
    """Arc-model branch current for phase voltage ``v_ph``.

    Conducts through the positive branch above ``Vp``, through the negative
    branch below ``Vn`` and is exactly zero in between.  Works elementwise on
    arrays.
    """
    Rp_arr, Rn_arr = np.asarray(Rp, dtype=float), np.asarray(Rn, dtype=float)
    if np.any(Rp_arr <= 0) or np.any(Rn_arr <= 0):
        raise ValueError("arc resistances must be positive")
    if np.any(np.asarray(Vn) >= np.asarray(Vp)):
        raise ValueError("need Vn < Vp")
    v = np.asarray(v_ph, dtype=float)
    i = np.where(v > Vp, (v - Vp) / Rp_arr, np.where(v < Vn, (v - Vn) / Rn_arr, 0.0))
    return float(i) if i.ndim == 0 else i


def _draw_sources(rng: np.random.Generator, hif: HifModelParams, v_base: float) -> tuple[float, float]:
    lo, hi = hif.source_range_frac
    vp, vn = hif.Vp, hif.Vn
    while True:
        vp_draw = vp if vp is not None else rng.uniform(lo, hi) * v_base
        vn_draw = vn if vn is not None else -rng.uniform(lo, hi) * v_base
        fixed = vp is not None and vn is not None
        if fixed or abs(vp_draw + vn_draw) >= hif.min_asymmetry_frac * v_base:
            return vp_draw, vn_draw


def hif_trace(spec: ScenarioSpec, cfg: SynthConfig, hif: HifModelParams) -> HifTrace:
    """Run the arc model on the faulted phase without measurement noise."""
    _require(spec, EventType.TYPE2_HIF)
    rng, _ = _streams(spec)
    update = hif.resistance_update_interval_s * cfg.sampling_rate_hz
    update_samples = int(round(update))
    if update_samples < 1 or abs(update - update_samples) > 1e-9:
        raise ValueError("resistance update interval must be a whole number of samples")

    t = cfg.time()
    n0, n = cfg.fault_start_index, cfg.n_samples
    k = _phase_index(spec.faulted_phases[0])
    _, v = prefault_phasors(spec, cfg)
    voltage = _sinusoid(v[k], cfg, t)

    vp0, vn0 = _draw_sources(rng, hif, cfg.phase_peak_voltage)

    # jitter per half-cycle of the faulted phase voltage
    half = np.floor((cfg.omega * (t[n0:] - cfg.fault_time_s) + np.angle(v[k]) % (2 * np.pi)) / np.pi).astype(int)
    n_half = half[-1] + 1
    j = hif.source_jitter_rel
    jit_p = rng.uniform(1 - j, 1 + j, n_half)
    jit_n = rng.uniform(1 - j, 1 + j, n_half)

    n_seg = -(-(n - n0) // update_samples)
    seg = np.arange(n - n0) // update_samples
    rp_seg = rng.uniform(*hif.Rp_range_ohm, n_seg)
    rn_seg = rng.uniform(*hif.Rn_range_ohm, n_seg)

    Vp, Vn, Rp, Rn = (np.full(n, np.nan) for _ in range(4))
    Vp[n0:], Vn[n0:] = vp0 * jit_p[half], vn0 * jit_n[half]
    Rp[n0:], Rn[n0:] = rp_seg[seg], rn_seg[seg]

    current = np.zeros(n)
    current[n0:] = hif_current(voltage[n0:], Vp[n0:], Vn[n0:], Rp[n0:], Rn[n0:])
    return HifTrace(current, voltage, Vp, Vn, Rp, Rn, k, n0, update_samples)


def synthesize_hif(spec: ScenarioSpec, cfg: SynthConfig, hif: HifModelParams) -> Waveform:
    trace = hif_trace(spec, cfg, hif)
    _, noise_rng = _streams(spec)
    samples = _noise(noise_rng, cfg)
    samples[trace.phase_index] += trace.current
    return Waveform(samples, cfg.sampling_rate_hz, cfg.fault_start_index, spec.id)


# ---------------------------------------------------------------------------
# external faults seen through saturating CTs
# ---------------------------------------------------------------------------


def ct_secondary(
    primary: np.ndarray,
    burden_ohm: float,
    ct: CtParams,
    dt: float,
    initial_flux: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Hard-clamp CT: returns (primary-referred secondary current, core flux).

    Flux integrates burden voltage.  Whatever part of a step would drive the
    flux past the clamp is diverted to the magnetizing branch, so the
    secondary collapses while saturated and recovers once the ideal current
    reverses.
    """
    ideal = primary / ct.turns_ratio
    lam_sat = ct.saturation_flux_vs
    gain = burden_ohm * dt
    out = np.empty_like(ideal)
    flux = np.empty_like(ideal)
    lam = initial_flux
    for n, i_ideal in enumerate(ideal.tolist()):
        target = lam + gain * i_ideal
        if -lam_sat <= target <= lam_sat:
            out[n] = i_ideal
        else:
            target = lam_sat if target > 0 else -lam_sat
            out[n] = (target - lam) / gain
        lam = target
        flux[n] = lam
    return out * ct.turns_ratio, flux


def through_current(spec: ScenarioSpec, cfg: SynthConfig) -> np.ndarray:
    """Load plus external-fault current carried through the protected line."""
    mode = spec.condition.mode
    i_load, v = prefault_phasors(spec, cfg)
    t = cfg.time()
    load = np.stack([_sinusoid(ph, cfg, t) for ph in i_load])
    z = cfg.source_impedance(mode) * (1 + cfg.external_extra_impedance_ohm / cfg.source_impedance_ohm)
    fault = _offset_fault_current(fault_phasors(spec, v, z + spec.fault_resistance_ohm), cfg, cfg.tau(mode))
    return load + fault


def external_trace(spec: ScenarioSpec, cfg: SynthConfig, ct: CtParams) -> CtTrace:
    _require(spec, EventType.EXTERNAL_CT_SAT)
    primary = through_current(spec, cfg)
    i_load, _ = prefault_phasors(spec, cfg)
    dt = 1.0 / cfg.sampling_rate_hz
    t0 = -cfg.fault_time_s
    secondaries, fluxes = [], []
    for burden in ct.burden_ohm:
        sec = np.empty_like(primary)
        flx = np.empty_like(primary)
        for k in range(3):
            # start on the steady-state flux orbit of the load current, offset by remanence
            ac = -burden * abs(i_load[k]) / (ct.turns_ratio * cfg.omega)
            remanence = ct.remanence_frac * ct.saturation_flux_vs if ct.remanence_frac else 0.0
            lam0 = remanence + ac * math.cos(
                cfg.omega * t0 + np.angle(i_load[k])
            )
            lam0 = min(max(lam0, -ct.saturation_flux_vs), ct.saturation_flux_vs)
            sec[k], flx[k] = ct_secondary(primary[k], burden, ct, dt, lam0)
        secondaries.append(sec)
        fluxes.append(flx)
    return CtTrace(primary, tuple(secondaries), tuple(fluxes))


def synthesize_external(spec: ScenarioSpec, cfg: SynthConfig, ct: CtParams) -> Waveform:
    trace = external_trace(spec, cfg, ct)
    _, noise_rng = _streams(spec)
    samples = trace.differential + _noise(noise_rng, cfg)
    return Waveform(samples, cfg.sampling_rate_hz, cfg.fault_start_index, spec.id)


def synthesize(
    spec: ScenarioSpec,
    cfg: SynthConfig | None = None,
    hif: HifModelParams | None = None,
    ct: CtParams | None = None,
) -> Waveform:
    """Dispatch on event type with default model parameters where none are given."""
    cfg = cfg or SynthConfig()
    if spec.event_type is EventType.TYPE1_INTERNAL:
        return synthesize_internal(spec, cfg)
    if spec.event_type is EventType.TYPE2_HIF:
        return synthesize_hif(spec, cfg, hif or HifModelParams())
    return synthesize_external(spec, cfg, ct or CtParams())
