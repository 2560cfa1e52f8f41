import dataclasses
import math

import numpy as np
import pytest

from hifdiff.scenario import (
    EventType,
    FaultType,
    Loading,
    Mode,
    OperatingCondition,
    ScenarioSpec,
    enumerate_all,
    enumerate_external,
    enumerate_hif,
    enumerate_internal_type1,
)
from hifdiff.synth import (
    ContractViolation,
    CtParams,
    HifModelParams,
    SynthConfig,
    external_trace,
    hif_current,
    hif_trace,
    internal_fault_current,
    synthesize,
    synthesize_external,
    synthesize_hif,
    synthesize_internal,
)

CFG = SynthConfig()


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def internal_spec(fault_type=FaultType.LLLG, r=0.01, angle=0.0, phases=("a", "b", "c"), mode=Mode.GRID_CONNECTED):
    return ScenarioSpec(
        id=1, class_label="internal", event_type=EventType.TYPE1_INTERNAL, fault_type=fault_type,
        fault_resistance_ohm=r, inception_angle_deg=angle, faulted_phases=phases,
        condition=OperatingCondition(mode, Loading.BALANCED), rng_seed=123,
    )


# --- arc model ------------------------------------------------------------


def test_hif_current_examples():
    assert hif_current(0.5 * (3000 - 5000), 3000, -5000, 50, 80) == 0.0
    assert hif_current(3000, 3000, -5000, 50, 80) == 0.0
    assert hif_current(3100, 3000, -5000, 50, 80) == pytest.approx(2.0, abs=1e-15)
    assert hif_current(-5080, 3000, -5000, 50, 80) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("rp, rn, vn", [(0, 50, -1), (50, -1, -1), (50, 50, 5000)])
def test_hif_current_rejects_bad_parameters(rp, rn, vn):
    with pytest.raises(ValueError):
        hif_current(100.0, 3000, vn, rp, rn)


def test_hif_current_is_continuous_at_thresholds():
    eps = 1e-9
    assert abs(hif_current(3000 + eps, 3000, -5000, 50, 80)) < 1e-10
    assert abs(hif_current(-5000 - eps, 3000, -5000, 50, 80)) < 1e-10


HIF_SPECS = enumerate_hif(42)[::31]


@pytest.mark.parametrize("spec", HIF_SPECS, ids=lambda s: f"id{s.id}")
def test_hif_dead_band_is_exact(spec):
    tr = hif_trace(spec, CFG, HifModelParams())
    n0 = tr.fault_start_index
    v, i = tr.voltage[n0:], tr.current[n0:]
    band = (v > tr.Vn[n0:]) & (v < tr.Vp[n0:])
    assert band.any()
    assert np.all(i[band] == 0.0)
    assert np.all(tr.current[:n0] == 0.0)


@pytest.mark.parametrize("spec", HIF_SPECS, ids=lambda s: f"id{s.id}")
def test_hif_resistances_resampled_every_two_samples(spec):
    tr = hif_trace(spec, CFG, HifModelParams())
    assert tr.update_samples == 2
    n0 = tr.fault_start_index
    for r in (tr.Rp[n0:], tr.Rn[n0:]):
        assert np.all((r >= 50) & (r <= 300))
        change = np.flatnonzero(np.diff(r) != 0) + 1
        lengths = np.diff(np.concatenate([[0], change, [r.size]]))
        assert np.all(lengths == 2)
    assert np.all(np.isnan(tr.Rp[:n0]))


def test_hif_asymmetry_matches_closed_form():
    # fixed resistances and no jitter so half-cycle peaks have a closed form
    hif = HifModelParams(Vp=3000.0, Vn=-5000.0, Rp_range_ohm=(100.0, 100.0), Rn_range_ohm=(100.0, 100.0),
                         source_jitter_rel=0.0)
    spec = enumerate_hif(0)[0]
    tr = hif_trace(spec, CFG, hif)
    vpk = float(np.abs(tr.voltage).max())
    i = tr.current[tr.fault_start_index:]
    assert i.max() == pytest.approx((vpk - 3000.0) / 100.0, rel=1e-3)
    assert -i.min() == pytest.approx((vpk - 5000.0) / 100.0, rel=1e-3)
    assert i.max() - (-i.min()) == pytest.approx(20.0, rel=1e-2)


@pytest.mark.parametrize("spec", HIF_SPECS, ids=lambda s: f"id{s.id}")
def test_hif_half_cycle_peaks_differ(spec):
    tr = hif_trace(spec, CFG, HifModelParams())
    n0 = tr.fault_start_index
    assert abs(tr.Vp[n0] + tr.Vn[n0]) > 0
    i = tr.current[n0:]
    assert i.max() > 0 > i.min()
    assert not math.isclose(i.max(), -i.min(), rel_tol=1e-6)


def test_hif_unfaulted_phases_only_noise():
    for spec in HIF_SPECS:
        w = synthesize_hif(spec, CFG, HifModelParams())
        k = "abc".index(spec.faulted_phases[0])
        for j in range(3):
            if j != k:
                assert rms(w.samples[j]) < 3 * CFG.noise_std


def test_hif_determinism():
    spec = enumerate_hif(7)[5]
    a = synthesize(spec)
    b = synthesize(spec)
    assert np.array_equal(a.samples, b.samples)


def test_hif_scales_with_voltage_pu():
    specs = [s for s in enumerate_hif(42) if s.condition.loading is Loading.LOW_VOLTAGE]
    tr = hif_trace(specs[0], CFG, HifModelParams())
    vpk = np.abs(tr.voltage).max()
    assert vpk < CFG.phase_peak_voltage * specs[0].condition.voltage_pu * 1.001


# --- type-1 internal --------------------------------------------------------


def test_lllg_bolted_fault_dwarfs_prefault():
    w = synthesize_internal(internal_spec(), CFG)
    n0 = w.fault_start_index
    for k in range(3):
        assert rms(w.samples[k, n0:]) >= 20 * rms(w.samples[k, :n0])


def test_lg_leaves_other_phases_at_noise_level():
    w = synthesize_internal(internal_spec(FaultType.LG, phases=("a",)), CFG)
    clean = internal_fault_current(internal_spec(FaultType.LG, phases=("a",)), CFG)
    assert np.all(clean[1:] == 0.0)
    for k in (1, 2):
        assert rms(w.samples[k]) < 3 * CFG.noise_std


@pytest.mark.parametrize("mode", [Mode.GRID_CONNECTED, Mode.ISLANDED])
def test_inception_angle_changes_offset_not_steady_state(mode):
    a = internal_fault_current(internal_spec(FaultType.LG, 1.0, 0.0, ("a",), mode), CFG)[0]
    b = internal_fault_current(internal_spec(FaultType.LG, 1.0, 90.0, ("a",), mode), CFG)[0]
    tail = slice(CFG.n_samples - 1000, CFG.n_samples)  # last six cycles, offset long gone
    assert rms(a[tail]) == pytest.approx(rms(b[tail]), rel=0.02)
    first = slice(CFG.fault_start_index, CFG.fault_start_index + 167)
    env_a = np.abs(a[first]).max()
    env_b = np.abs(b[first]).max()
    assert abs(env_a - env_b) > 0.05 * max(env_a, env_b)


def test_islanded_fault_level_is_lower():
    g = internal_fault_current(internal_spec(mode=Mode.GRID_CONNECTED), CFG)
    i = internal_fault_current(internal_spec(mode=Mode.ISLANDED), CFG)
    assert rms(i[0, -1000:]) < rms(g[0, -1000:])


def test_fault_current_starts_from_zero():
    i = internal_fault_current(internal_spec(angle=137.0), CFG)
    n0 = CFG.fault_start_index
    assert np.all(i[:, :n0] == 0)
    assert np.all(np.abs(i[:, n0]) < 1e-6 * np.abs(i).max())


# --- external faults --------------------------------------------------------


EXTERNAL_SPECS = enumerate_external(42)[::97]


@pytest.mark.parametrize("spec", EXTERNAL_SPECS, ids=lambda s: f"id{s.id}")
def test_equal_burdens_cancel_exactly(spec):
    tr = external_trace(spec, CFG, CtParams(burden_ohm=(4.0, 4.0)))
    assert np.all(tr.differential == 0.0)
    w = synthesize_external(spec, CFG, CtParams(burden_ohm=(4.0, 4.0)))
    assert rms(w.samples) < 3 * CFG.noise_std


@pytest.mark.parametrize("spec", EXTERNAL_SPECS, ids=lambda s: f"id{s.id}")
def test_unequal_burdens_onset_after_inception(spec):
    tr = external_trace(spec, CFG, CtParams())
    nz = np.flatnonzero(np.any(tr.differential != 0.0, axis=0))
    if nz.size:
        assert nz[0] > CFG.fault_start_index


@pytest.mark.parametrize("spec", EXTERNAL_SPECS, ids=lambda s: f"id{s.id}")
def test_infinite_clamp_is_noise_only(spec):
    w = synthesize_external(spec, CFG, CtParams(saturation_flux_vs=math.inf))
    eq = synthesize_external(spec, CFG, CtParams(burden_ohm=(2.0, 2.0)))
    assert np.array_equal(w.samples, eq.samples)


def test_heavy_external_fault_produces_differential():
    heavy = [s for s in enumerate_external(42)
             if s.fault_type is FaultType.LLLG and s.fault_resistance_ohm == 0.01
             and s.condition.mode is Mode.GRID_CONNECTED]
    tr = external_trace(heavy[0], CFG, CtParams())
    assert np.abs(tr.differential).max() > 10 * CFG.noise_std


def test_secondary_tracks_primary_until_saturation():
    spec = EXTERNAL_SPECS[0]
    tr = external_trace(spec, CFG, CtParams())
    for sec, flux in zip(tr.secondary, tr.flux):
        unsat = np.abs(flux) < CtParams().saturation_flux_vs
        assert np.allclose(sec[unsat], tr.primary[unsat], rtol=1e-12, atol=1e-9)


# --- contracts and dataset-wide properties ---------------------------------------


def test_contract_violations():
    ext, hif, t1 = enumerate_external(0)[0], enumerate_hif(0)[0], enumerate_internal_type1(0)[0]
    with pytest.raises(ContractViolation):
        synthesize_hif(ext, CFG, HifModelParams())
    with pytest.raises(ContractViolation):
        synthesize_internal(hif, CFG)
    with pytest.raises(ContractViolation):
        synthesize_external(t1, CFG, CtParams())


def test_config_invariants():
    with pytest.raises(ValueError):
        SynthConfig(sampling_rate_hz=2000.0)
    with pytest.raises(ValueError):
        SynthConfig(fault_start_s=0.6)
    with pytest.raises(ValueError):
        SynthConfig(noise_rel_std=-0.1)
    assert SynthConfig().n_samples == 5000


def test_every_scenario_quiet_before_fault():
    n0 = CFG.fault_start_index
    for spec in enumerate_all(42):
        w = synthesize(spec, CFG)
        assert w.samples.shape == (3, CFG.n_samples)
        assert rms(w.samples[:, :n0]) < 3 * CFG.noise_std, spec.id


def test_class_separability_ordering():
    n0 = CFG.fault_start_index
    post = lambda specs: np.mean([rms(synthesize(s, CFG).samples[:, n0:]) for s in specs])
    t1 = post(enumerate_internal_type1(42)[::25])
    ext = post(enumerate_external(42)[::25])
    hif = post(enumerate_hif(42)[::10])
    assert t1 > ext
    assert hif < t1


def test_hif_fundamental_below_type1_at_equal_conditions():
    for spec in enumerate_hif(42)[::30]:
        t1 = dataclasses.replace(
            spec, event_type=EventType.TYPE1_INTERNAL, fault_type=FaultType.LG, fault_resistance_ohm=20.0
        )
        h = hif_trace(spec, CFG, HifModelParams()).current
        f = internal_fault_current(t1, CFG)[ "abc".index(spec.faulted_phases[0]) ]
        tail = slice(CFG.n_samples - 1000, CFG.n_samples)
        assert rms(h[tail]) < rms(f[tail])
