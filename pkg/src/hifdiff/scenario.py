"""Event matrix for the protected line: external faults, type-1 internal faults and HIFs.

Each ``enumerate_*`` function expands one parameter table into the full Cartesian
product of fault type, resistance (or HIF phase), inception angle and operating
condition.  Everything random (phase choice, low-voltage level) is drawn from a
per-scenario generator whose seed depends only on ``(id, global_seed)``.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class FaultType(str, Enum):
    LG = "LG"
    LLG = "LLG"
    LL = "LL"
    LLLG = "LLLG"
    LLL = "LLL"
    HIF_LG = "HIF_LG"


SHUNT_FAULT_TYPES = (FaultType.LG, FaultType.LLG, FaultType.LL, FaultType.LLLG, FaultType.LLL)


class EventType(str, Enum):
    TYPE1_INTERNAL = "type1_internal"
    TYPE2_HIF = "type2_hif"
    EXTERNAL_CT_SAT = "external_ct_sat"


class Mode(str, Enum):
    GRID_CONNECTED = "grid_connected"
    ISLANDED = "islanded"


class Loading(str, Enum):
    BALANCED = "balanced"
    UNBALANCED = "unbalanced"
    LOW_VOLTAGE = "low_voltage"


LOADINGS_BY_MODE = {
    Mode.GRID_CONNECTED: (Loading.BALANCED, Loading.UNBALANCED),
    Mode.ISLANDED: (Loading.BALANCED, Loading.UNBALANCED, Loading.LOW_VOLTAGE),
}

# per-phase (a, b, c) load multipliers
UNBALANCED_LOAD_FACTORS = (1.0, 0.8, 1.2)
LOW_VOLTAGE_GRID_PU = tuple(round(0.90 + 0.01 * k, 2) for k in range(10))

EXTERNAL_RESISTANCES_OHM = (0.01, 0.1, 1.0, 10.0)
INTERNAL_RESISTANCES_OHM = (0.01, 0.1, 1.0, 10.0, 20.0)
N_EXTERNAL_ANGLES = 10
N_INTERNAL_ANGLES = 7
N_HIF_FAULT_TIMES = 20
PHASES = ("a", "b", "c")

# id blocks keep ids unique across the three tables
ID_OFFSET = {
    EventType.TYPE1_INTERNAL: 0,
    EventType.TYPE2_HIF: 875,
    EventType.EXTERNAL_CT_SAT: 1175,
}


@dataclass(frozen=True)
class OperatingCondition:
    mode: Mode
    loading: Loading
    voltage_pu: float = 1.0

    def __post_init__(self):
        mode, loading = Mode(self.mode), Loading(self.loading)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "loading", loading)
        if loading not in LOADINGS_BY_MODE[mode]:
            raise ValueError(f"loading {loading.value} not admitted in {mode.value} mode")
        if not 0.9 <= self.voltage_pu <= 1.0:
            raise ValueError(f"voltage_pu must lie in [0.9, 1.0], got {self.voltage_pu}")
        if loading is Loading.LOW_VOLTAGE and not self.voltage_pu < 1.0:
            raise ValueError("low_voltage condition needs voltage_pu < 1.0")

    @property
    def load_factors(self) -> tuple[float, float, float]:
        if self.loading is Loading.UNBALANCED:
            return UNBALANCED_LOAD_FACTORS
        return (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    class_label: str
    event_type: EventType
    fault_type: FaultType
    fault_resistance_ohm: float
    inception_angle_deg: float
    faulted_phases: tuple[str, ...]
    condition: OperatingCondition
    rng_seed: int

    def __post_init__(self):
        event = EventType(self.event_type)
        ftype = FaultType(self.fault_type)
        object.__setattr__(self, "event_type", event)
        object.__setattr__(self, "fault_type", ftype)
        object.__setattr__(self, "faulted_phases", tuple(self.faulted_phases))
        expected = "external" if event is EventType.EXTERNAL_CT_SAT else "internal"
        if self.class_label != expected:
            raise ValueError(f"{event.value} events are {expected}, got {self.class_label!r}")
        if (event is EventType.TYPE2_HIF) != (ftype is FaultType.HIF_LG):
            raise ValueError(f"fault type {ftype.value} not permitted for {event.value}")
        if self.fault_resistance_ohm < 0:
            raise ValueError("fault resistance must be >= 0")
        if not 0 <= self.inception_angle_deg < 360:
            raise ValueError("inception angle must lie in [0, 360)")
        if not set(self.faulted_phases) <= set(PHASES) or not self.faulted_phases:
            raise ValueError(f"bad faulted phases {self.faulted_phases!r}")
        if len(self.faulted_phases) != _PHASE_COUNT[ftype]:
            raise ValueError(f"{ftype.value} needs {_PHASE_COUNT[ftype]} faulted phase(s)")


_PHASE_COUNT = {
    FaultType.LG: 1, FaultType.HIF_LG: 1,
    FaultType.LL: 2, FaultType.LLG: 2,
    FaultType.LLL: 3, FaultType.LLLG: 3,
}

_PHASE_PAIRS = (("a", "b"), ("b", "c"), ("c", "a"))


def scenario_seed(spec_id: int, global_seed: int) -> int:
    """32-bit seed derived from ``(id, global_seed)`` only."""
    return int(np.random.SeedSequence([int(global_seed), int(spec_id)]).generate_state(1)[0])


def evenly_spaced_angles(n: int) -> list[float]:
    return [360.0 * k / n for k in range(n)]


def _conditions() -> list[tuple[Mode, Loading]]:
    return [(mode, loading) for mode in Mode for loading in LOADINGS_BY_MODE[mode]]


def _condition_for(mode: Mode, loading: Loading, rng: np.random.Generator) -> OperatingCondition:
    voltage = 1.0
    if loading is Loading.LOW_VOLTAGE:
        voltage = LOW_VOLTAGE_GRID_PU[rng.integers(len(LOW_VOLTAGE_GRID_PU))]
    return OperatingCondition(mode, loading, voltage)


def _phases_for(ftype: FaultType, rng: np.random.Generator) -> tuple[str, ...]:
    n = _PHASE_COUNT[ftype]
    if n == 3:
        return PHASES
    if n == 2:
        return _PHASE_PAIRS[rng.integers(3)]
    return (PHASES[rng.integers(3)],)


def _shunt_fault_table(
    event: EventType, resistances: Sequence[float], n_angles: int, global_seed: int
) -> list[ScenarioSpec]:
    label = "external" if event is EventType.EXTERNAL_CT_SAT else "internal"
    specs = []
    grid = itertools.product(_conditions(), SHUNT_FAULT_TYPES, resistances, evenly_spaced_angles(n_angles))
    for k, ((mode, loading), ftype, r_f, angle) in enumerate(grid):
        spec_id = ID_OFFSET[event] + k
        seed = scenario_seed(spec_id, global_seed)
        rng = np.random.default_rng(seed)
        condition = _condition_for(mode, loading, rng)
        specs.append(
            ScenarioSpec(
                id=spec_id,
                class_label=label,
                event_type=event,
                fault_type=ftype,
                fault_resistance_ohm=float(r_f),
                inception_angle_deg=angle,
                faulted_phases=_phases_for(ftype, rng),
                condition=condition,
                rng_seed=seed,
            )
        )
    return specs


def enumerate_external(global_seed: int) -> list[ScenarioSpec]:
    """External faults: 5 types x 4 resistances x 10 angles x (2 + 3) conditions = 1000."""
    return _shunt_fault_table(
        EventType.EXTERNAL_CT_SAT, EXTERNAL_RESISTANCES_OHM, N_EXTERNAL_ANGLES, global_seed
    )


def enumerate_internal_type1(global_seed: int) -> list[ScenarioSpec]:
    """Low-impedance internal faults: 5 x 5 x 7 x (2 + 3) = 875."""
    return _shunt_fault_table(
        EventType.TYPE1_INTERNAL, INTERNAL_RESISTANCES_OHM, N_INTERNAL_ANGLES, global_seed
    )


def enumerate_hif(global_seed: int) -> list[ScenarioSpec]:
    """High-impedance LG faults: 3 phases x 20 fault instants x (2 + 3) = 300.

    The 20 fault instants are spread evenly over one fundamental cycle, so
    instant ``k`` starts the fault at a voltage angle of ``18 * k`` degrees.
    The stored fault resistance is 0; the arc model draws its own.
    """
    specs = []
    grid = itertools.product(_conditions(), PHASES, evenly_spaced_angles(N_HIF_FAULT_TIMES))
    for k, ((mode, loading), phase, angle) in enumerate(grid):
        spec_id = ID_OFFSET[EventType.TYPE2_HIF] + k
        seed = scenario_seed(spec_id, global_seed)
        rng = np.random.default_rng(seed)
        specs.append(
            ScenarioSpec(
                id=spec_id,
                class_label="internal",
                event_type=EventType.TYPE2_HIF,
                fault_type=FaultType.HIF_LG,
                fault_resistance_ohm=0.0,
                inception_angle_deg=angle,
                faulted_phases=(phase,),
                condition=_condition_for(mode, loading, rng),
                rng_seed=seed,
            )
        )
    return specs


def enumerate_all(global_seed: int) -> list[ScenarioSpec]:
    return (
        enumerate_internal_type1(global_seed)
        + enumerate_hif(global_seed)
        + enumerate_external(global_seed)
    )


def stratified_subset(specs: Sequence[ScenarioSpec], limit: int, seed: int) -> list[ScenarioSpec]:
    """Pick ``limit`` specs with event-type proportions kept (largest-remainder rounding)."""
    if limit >= len(specs):
        return list(specs)
    if limit < 1:
        raise ValueError("limit must be >= 1")
    groups: dict[EventType, list[ScenarioSpec]] = {}
    for s in specs:
        groups.setdefault(s.event_type, []).append(s)
    total = len(specs)
    quotas = {e: limit * len(g) / total for e, g in groups.items()}
    take = {e: int(np.floor(q)) for e, q in quotas.items()}
    short = limit - sum(take.values())
    for e in sorted(groups, key=lambda e: (-(quotas[e] - take[e]), e.value))[:short]:
        take[e] += 1
    rng = np.random.default_rng(seed)
    chosen = []
    for e in sorted(groups, key=lambda e: e.value):
        g = groups[e]
        idx = np.sort(rng.choice(len(g), size=take[e], replace=False))
        chosen.extend(g[i] for i in idx)
    return sorted(chosen, key=lambda s: s.id)


# ---------------------------------------------------------------------------
# manifest CSV
# ---------------------------------------------------------------------------

MANIFEST_COLUMNS = (
    "id", "class_label", "event_type", "fault_type", "fault_resistance_ohm",
    "inception_angle_deg", "faulted_phases", "mode", "loading", "voltage_pu", "rng_seed",
)


def spec_to_row(spec: ScenarioSpec) -> dict[str, str]:
    return {
        "id": str(spec.id),
        "class_label": spec.class_label,
        "event_type": spec.event_type.value,
        "fault_type": spec.fault_type.value,
        "fault_resistance_ohm": repr(spec.fault_resistance_ohm),
        "inception_angle_deg": repr(spec.inception_angle_deg),
        "faulted_phases": "".join(spec.faulted_phases),
        "mode": spec.condition.mode.value,
        "loading": spec.condition.loading.value,
        "voltage_pu": repr(spec.condition.voltage_pu),
        "rng_seed": str(spec.rng_seed),
    }


def spec_from_row(row: dict[str, str]) -> ScenarioSpec:
    return ScenarioSpec(
        id=int(row["id"]),
        class_label=row["class_label"],
        event_type=EventType(row["event_type"]),
        fault_type=FaultType(row["fault_type"]),
        fault_resistance_ohm=float(row["fault_resistance_ohm"]),
        inception_angle_deg=float(row["inception_angle_deg"]),
        faulted_phases=tuple(row["faulted_phases"]),
        condition=OperatingCondition(
            Mode(row["mode"]), Loading(row["loading"]), float(row["voltage_pu"])
        ),
        rng_seed=int(row["rng_seed"]),
    )


def manifest_csv(specs: Iterable[ScenarioSpec]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for spec in specs:
        writer.writerow(spec_to_row(spec))
    return buf.getvalue()


def write_manifest(specs: Iterable[ScenarioSpec], path: str | Path) -> None:
    Path(path).write_text(manifest_csv(specs))


def read_manifest(path: str | Path) -> list[ScenarioSpec]:
    with open(path, newline="") as fh:
        return [spec_from_row(row) for row in csv.DictReader(fh)]

