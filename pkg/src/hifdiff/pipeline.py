"""Three-stage pipeline with file handoffs inside one run directory.

    <run>/config.json                       snapshot written by ``generate``
    <run>/dataset/manifest.csv              one row per scenario
    <run>/dataset/<class>/<id>.npy          columns t, ia, ib, ic
    <run>/dataset/<class>/<id>.json         scenario fields + sampling metadata
    <run>/features/features.csv             spec_id, features..., label
    <run>/features/ranking.csv              feature_name, gain
    <run>/features/selected.json            top-k names
    <run>/reports/reports.json              one EvalReport per classifier
    <run>/reports/table.csv                 classifier, balanced accuracy, dependability, security
    <run>/reports/models/<kind>.pkl         model refit on all rows at the chosen point

Every stage directory also receives the config snapshot it ran with.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .features import (
    CATALOG_VERSION,
    FeatureTable,
    WaveletParams,
    entropy_bits,
    extract_features,
    rank_features,
)
from .learn import ClassifierKind, StratificationError, fit, grid_search, load_grid, save_model
from .metrics import EvalReport, TABLE_COLUMNS, dependability, ConfusionCounts, summary_rows
from .scenario import (
    EventType,
    ScenarioSpec,
    enumerate_all,
    read_manifest,
    stratified_subset,
    write_manifest,
)
from .synth import CtParams, HifModelParams, SynthConfig, Waveform, synthesize

log = logging.getLogger(__name__)


class WaveformFileError(RuntimeError):
    """A waveform file is missing or unreadable; the message names the file."""


@dataclass
class PipelineConfig:
    global_seed: int = 42
    out_dir: str = "run"
    limit: int | None = None
    folds: int = 5
    top_k: int = 24
    grid_file: str | None = None
    max_estimators: int = 1000
    cv_seed: int = 0
    jobs: int = 1
    synth: SynthConfig = field(default_factory=SynthConfig)
    hif: HifModelParams = field(default_factory=HifModelParams)
    ct: CtParams = field(default_factory=CtParams)
    wavelet: WaveletParams = field(default_factory=WaveletParams)

    _nested = {"synth": SynthConfig, "hif": HifModelParams, "ct": CtParams, "wavelet": WaveletParams}

    def to_dict(self) -> dict[str, Any]:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        for name in self._nested:
            d[name] = dataclasses.asdict(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        for name, typ in cls._nested.items():
            if name in kwargs and isinstance(kwargs[name], dict):
                kwargs[name] = _build(typ, kwargs[name])
        return cls(**kwargs)

    @property
    def run_dir(self) -> Path:
        return Path(self.out_dir)


def _build(typ, values: dict[str, Any]):
    names = {f.name for f in dataclasses.fields(typ)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown {typ.__name__} keys: {sorted(unknown)}")
    # JSON turns tuples into lists
    return typ(**{k: tuple(v) if isinstance(v, list) else v for k, v in values.items()})


def load_config(path: str | Path) -> PipelineConfig:
    """Plain config JSON, or a run snapshot written by any stage."""
    d = json.loads(Path(path).read_text())
    if d.get("tool") == "hifdiff" and "config" in d:
        d = d["config"]
    return PipelineConfig.from_dict(d)


def _snapshot(cfg: PipelineConfig, directory: Path, stage: str) -> None:
    payload = {"tool": "hifdiff", "version": __version__, "stage": stage, "config": cfg.to_dict()}
    (directory / "config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# waveform archive
# ---------------------------------------------------------------------------


def waveform_paths(dataset_dir: Path, spec: ScenarioSpec) -> tuple[Path, Path]:
    base = dataset_dir / spec.class_label / str(spec.id)
    return base.with_suffix(".npy"), base.with_suffix(".json")


def write_waveform(dataset_dir: Path, spec: ScenarioSpec, w: Waveform) -> None:
    npy, sidecar = waveform_paths(dataset_dir, spec)
    npy.parent.mkdir(parents=True, exist_ok=True)
    np.save(npy, np.vstack([w.time, w.samples]).T)
    meta = {
        "id": spec.id,
        "class_label": spec.class_label,
        "event_type": spec.event_type.value,
        "fault_type": spec.fault_type.value,
        "fault_resistance_ohm": spec.fault_resistance_ohm,
        "inception_angle_deg": spec.inception_angle_deg,
        "faulted_phases": list(spec.faulted_phases),
        "mode": spec.condition.mode.value,
        "loading": spec.condition.loading.value,
        "voltage_pu": spec.condition.voltage_pu,
        "rng_seed": spec.rng_seed,

        "sampling_rate_hz": w.sampling_rate_hz,
        "fault_start_index": w.fault_start_index,
        "columns": ["t", "ia", "ib", "ic"],
    }
    sidecar.write_text(json.dumps(meta, indent=1) + "\n")


def read_waveform(dataset_dir: Path, spec: ScenarioSpec) -> Waveform:
    npy, sidecar = waveform_paths(dataset_dir, spec)
    try:
        meta = json.loads(sidecar.read_text())
        data = np.load(npy)
        return Waveform(data[:, 1:].T, float(meta["sampling_rate_hz"]), int(meta["fault_start_index"]), spec.id)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise WaveformFileError(f"{npy}: {exc}") from exc


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def _synth_one(spec: ScenarioSpec, cfg: PipelineConfig) -> Waveform:
    return synthesize(spec, cfg.synth, cfg.hif, cfg.ct)


def cmd_generate(cfg: PipelineConfig) -> Path:
    """Synthesize every scenario into ``<run>/dataset``; a failed run leaves no dataset behind."""
    run = cfg.run_dir
    run.mkdir(parents=True, exist_ok=True)
    dataset = run / "dataset"
    staging = run / "dataset.partial"
    shutil.rmtree(staging, ignore_errors=True)
    staging.mkdir()
    try:
        specs = enumerate_all(cfg.global_seed)
        if cfg.limit is not None:
            specs = stratified_subset(specs, cfg.limit, cfg.global_seed)
        waves = Parallel(n_jobs=cfg.jobs)(delayed(_synth_one)(s, cfg) for s in specs)
        for spec, w in zip(specs, waves):
            write_waveform(staging, spec, w)
        write_manifest(specs, staging / "manifest.csv")
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    shutil.rmtree(dataset, ignore_errors=True)
    staging.rename(dataset)
    _snapshot(cfg, run, "generate")
    log.info("generated %d scenarios into %s", len(specs), dataset)
    return dataset


def _features_one(dataset: Path, spec: ScenarioSpec, cfg: PipelineConfig):
    w = read_waveform(dataset, spec)
    return extract_features(w, cfg.wavelet, spec.class_label, cfg.synth.system_frequency_hz)


def write_feature_csv(table: FeatureTable, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["spec_id", *table.names, "label"])
        for sid, row, label in zip(table.spec_ids, table.values, table.labels):
            writer.writerow([int(sid), *(repr(float(v)) for v in row), label])


def read_feature_csv(path: Path) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "spec_id" or header[-1] != "label":
            raise ValueError(f"{path}: unexpected header")
        rows = list(reader)
    return FeatureTable(
        np.array([int(r[0]) for r in rows]),
        header[1:-1],
        np.array([[float(v) for v in r[1:-1]] for r in rows]).reshape(len(rows), len(header) - 2),
        np.array([r[-1] for r in rows], dtype=object),
    )


def cmd_features(cfg: PipelineConfig) -> Path:
    run = cfg.run_dir
    dataset = run / "dataset"
    manifest = dataset / "manifest.csv"
    if not manifest.exists():
        raise FileNotFoundError(f"{manifest} not found; run generate first")
    specs = read_manifest(manifest)
    vectors = Parallel(n_jobs=cfg.jobs)(delayed(_features_one)(dataset, s, cfg) for s in specs)
    table = FeatureTable.from_vectors(vectors)

    out = run / "features"
    out.mkdir(exist_ok=True)
    write_feature_csv(table, out / "features.csv")
    ranking = rank_features(table)
    with open(out / "ranking.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature_name", "gain"])
        for name, gain in ranking:
            writer.writerow([name, repr(gain)])
    k = cfg.top_k
    if not 1 <= k <= len(table.names):
        raise ValueError(f"top_k must lie in [1, {len(table.names)}]")
    selected = {
        "catalog_version": CATALOG_VERSION,
        "label_entropy_bits": entropy_bits(table.labels),
        "top_k": k,
        "features": ranking.names[:k],
    }
    (out / "selected.json").write_text(json.dumps(selected, indent=2) + "\n")
    _snapshot(cfg, out, "features")
    log.info("extracted %d features for %d scenarios", len(table.names), len(specs))
    return out


def _hif_dependability(predictions, specs_by_id, spec_ids) -> float | None:
    rows = [i for i, sid in enumerate(spec_ids) if specs_by_id[sid].event_type is EventType.TYPE2_HIF]
    if not rows:
        return None
    c = ConfusionCounts.from_predictions(["internal"] * len(rows), [predictions[i] for i in rows])
    return dependability(c)


def cmd_train_eval(cfg: PipelineConfig) -> list[EvalReport]:
    run = cfg.run_dir
    feats_dir = run / "features"
    table = read_feature_csv(feats_dir / "features.csv")
    selected = json.loads((feats_dir / "selected.json").read_text())["features"][: cfg.top_k]
    data = table.subset(selected)
    specs_by_id = {s.id: s for s in read_manifest(run / "dataset" / "manifest.csv")}
    grids = load_grid(cfg.grid_file, cfg.max_estimators)

    out = run / "reports"
    (out / "models").mkdir(parents=True, exist_ok=True)
    reports, failures, timings = [], [], {}
    for kind in ClassifierKind:
        t0 = time.perf_counter()
        try:
            gs = grid_search(kind, grids[kind.value], data, cfg.folds, cfg.cv_seed)
        except StratificationError as exc:
            failures.append({"classifier": kind.value, "error": "StratificationError", "message": str(exc)})
            log.error("%s: %s", kind.value, exc)
            continue
        cv = gs.best_cv
        report = EvalReport(
            kind=kind.value,
            hyperparameters=gs.best_hyperparameters,
            counts=cv.pooled,
            cv_score=gs.best_score,
            hif_dependability=_hif_dependability(cv.predictions, specs_by_id, data.spec_ids),
            extras={"grid_points": len(gs.scores), "folds": cfg.folds},
        )
        reports.append(report)
        save_model(fit(kind, gs.best_hyperparameters, data, cfg.cv_seed), out / "models" / f"{kind.value}.pkl")
        timings[kind.value] = time.perf_counter() - t0
        log.info("%s: balanced accuracy %.4f (%s)", kind.value, report.balanced_accuracy, gs.best_hyperparameters)

    payload = {
        "schema": "hifdiff.eval-report/1",
        "selected_features": selected,
        "reports": [r.to_dict() for r in reports],
        "failures": failures,
    }
    (out / "reports.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out / "table.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in summary_rows(reports):
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    # wall-clock numbers stay out of reports.json so reruns compare byte-for-byte
    (out / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
    _snapshot(cfg, out, "train-eval")
    if failures:
        raise StratificationError(json.dumps(failures))
    return reports


def read_reports(run_dir: str | Path) -> list[EvalReport]:
    payload = json.loads((Path(run_dir) / "reports" / "reports.json").read_text())
    return [EvalReport.from_dict(d) for d in payload["reports"]]
