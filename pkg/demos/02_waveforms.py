"""
Synthesizing differential currents
==================================

One scenario of each kind is pushed through the synthesizer.  Internal
faults produce a large offset fault current, HIFs a small clipped arc current,
and external faults only what unequal CT saturation leaves behind.
"""

# %%
import numpy as np

from hifdiff.scenario import EventType, FaultType, enumerate_all
from hifdiff.synth import CtParams, HifModelParams, SynthConfig, external_trace, hif_trace, synthesize

cfg = SynthConfig()
specs = enumerate_all(42)
n0 = cfg.fault_start_index


def rms(x):
    return float(np.sqrt(np.mean(x ** 2)))


# %%
# Pre- and post-fault RMS per class (amperes, worst phase).
for event in EventType:
    spec = next(s for s in specs if s.event_type is event and s.fault_type in (FaultType.LG, FaultType.HIF_LG))
    w = synthesize(spec, cfg)
    pre = max(rms(row[:n0]) for row in w.samples)
    post = max(rms(row[n0:]) for row in w.samples)
    print(f"{event.value:16s} pre {pre:8.1f} A   post {post:8.1f} A")

# %%
# The arc model conducts only outside the dead band between Vn and Vp.
spec = next(s for s in specs if s.event_type is EventType.TYPE2_HIF)
tr = hif_trace(spec, cfg, HifModelParams())
v, i = tr.voltage[n0:], tr.current[n0:]
band = (v > tr.Vn[n0:]) & (v < tr.Vp[n0:])
print(f"Vp={tr.Vp[n0]:.0f} V  Vn={tr.Vn[n0]:.0f} V  dead band share {band.mean():.2f}")
print(f"largest |i| in dead band: {np.abs(i[band]).max()}")
print(f"positive peak {i.max():.1f} A, negative peak {-i.min():.1f} A")

# %%
# The differential from an external fault stays at zero until one CT saturates.
spec = next(s for s in specs if s.event_type is EventType.EXTERNAL_CT_SAT and s.fault_resistance_ohm == 0.01)
tr = external_trace(spec, cfg, CtParams())
onset = np.flatnonzero(np.any(tr.differential != 0, axis=0))[0]
print(f"through-fault peak {np.abs(tr.primary).max():.0f} A; differential starts "
      f"{onset - n0} samples ({(onset - n0) / cfg.sampling_rate_hz * 1e3:.1f} ms) after inception")
