"""
Enumerating the event population
================================

Every waveform in the dataset starts life as a ``ScenarioSpec``: a frozen
record of fault type, resistance, inception angle, operating condition and
the seed that drives its random draws.
"""

# %%
from collections import Counter

from hifdiff.scenario import EventType, Mode, enumerate_all, stratified_subset

specs = enumerate_all(global_seed=42)
print(len(specs), "scenarios")

# %%
# Counts by event type and by operating mode.
by_type = Counter(s.event_type.value for s in specs)
by_mode = Counter((s.event_type.value, s.condition.mode.value) for s in specs)
for event, n in sorted(by_type.items()):
    print(f"{event:16s} {n:5d}")
for (event, mode), n in sorted(by_mode.items()):
    print(f"  {event:16s} {mode:15s} {n:5d}")

# %%
# A single spec; ``rng_seed`` is derived from (id, global seed) only.
hif = next(s for s in specs if s.event_type is EventType.TYPE2_HIF and s.condition.mode is Mode.ISLANDED)
print(hif)

# %%
# Smoke runs draw a subset that keeps the event-type proportions.
small = stratified_subset(specs, 20, seed=42)
print(Counter(s.event_type.value for s in small))
