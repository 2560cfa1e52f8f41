"""Confusion-matrix accounting and the protection metrics.

The positive class is always ``internal``: dependability is the trip rate on
internal faults (HIFs included) and security is the no-trip rate on external
faults.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

INTERNAL = "internal"
EXTERNAL = "external"
LABELS = (INTERNAL, EXTERNAL)


class UndefinedMetricError(ValueError):
    """Raised when a metric's denominator class has no samples."""


@dataclass(frozen=True)
class ConfusionCounts:
    TP: int
    FN: int
    TN: int
    FP: int

    def __post_init__(self):
        for name in ("TP", "FN", "TN", "FP"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def n_internal(self) -> int:
        return self.TP + self.FN

    @property
    def n_external(self) -> int:
        return self.TN + self.FP

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.TP + other.TP, self.FN + other.FN, self.TN + other.TN, self.FP + other.FP
        )

    @classmethod
    def from_predictions(cls, y_true: Iterable[str], y_pred: Iterable[str]) -> "ConfusionCounts":
        """Count (truth, prediction) pairs; labels are ``internal``/``external``."""
        tp = fn = tn = fp = 0
        for truth, pred in zip(y_true, y_pred, strict=True):
            if truth not in LABELS or pred not in LABELS:
                raise ValueError(f"unknown label pair ({truth!r}, {pred!r})")
            if truth == INTERNAL:
                if pred == INTERNAL:
                    tp += 1
                else:
                    fn += 1
            elif pred == EXTERNAL:
                tn += 1
            else:
                fp += 1
        return cls(tp, fn, tn, fp)


def dependability(c: ConfusionCounts) -> float:
    """TP / (TP + FN)."""
    if c.TP + c.FN == 0:
        raise UndefinedMetricError("dependability undefined: no internal samples")
    return c.TP / (c.TP + c.FN)


def security(c: ConfusionCounts) -> float:
    """TN / (TN + FP)."""
    if c.TN + c.FP == 0:
        raise UndefinedMetricError("security undefined: no external samples")
    return c.TN / (c.TN + c.FP)


def balanced_accuracy(c: ConfusionCounts) -> float:
    """Mean of dependability and security."""
    return 0.5 * (dependability(c) + security(c))


@dataclass
class EvalReport:
    """Metrics for one classifier; ``balanced_accuracy`` is derived, never stored independently."""

    kind: str
    hyperparameters: dict[str, Any]
    counts: ConfusionCounts
    cv_score: float | None = None
    hif_dependability: float | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def dependability(self) -> float:
        return dependability(self.counts)

    @property
    def security(self) -> float:
        return security(self.counts)

    @property
    def balanced_accuracy(self) -> float:
        return (self.dependability + self.security) / 2

    def to_dict(self) -> dict[str, Any]:
        return {
            "classifier": self.kind,
            "hyperparameters": self.hyperparameters,
            "counts": asdict(self.counts),
            "balanced_accuracy": self.balanced_accuracy,
            "dependability": self.dependability,
            "security": self.security,
            "hif_dependability": self.hif_dependability,
            "cv_score": self.cv_score,
            **self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvalReport":
        known = {
            "classifier", "hyperparameters", "counts", "balanced_accuracy",
            "dependability", "security", "hif_dependability", "cv_score",
        }
        return cls(
            kind=d["classifier"],
            hyperparameters=dict(d["hyperparameters"]),
            counts=ConfusionCounts(**d["counts"]),
            cv_score=d.get("cv_score"),
            hif_dependability=d.get("hif_dependability"),
            extras={k: v for k, v in d.items() if k not in known},
        )


TABLE_COLUMNS = ("classifier", "balanced_accuracy", "dependability", "security")


def summary_rows(reports: Iterable[EvalReport]) -> list[dict[str, Any]]:
    """Rows shaped like the usual model-performance table (fractions, not percent)."""
    return [
        {
            "classifier": r.kind,
            "balanced_accuracy": r.balanced_accuracy,
            "dependability": r.dependability,
            "security": r.security,
        }
        for r in reports
    ]
