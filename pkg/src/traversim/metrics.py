"""Confusion matrices and classification scores for failure events.

The positive class is always *failure*. Scores with a zero denominator
are undefined and reported as None rather than coerced to 0. The
"overall" score across the three events is micro-pooled: the three
matrices are summed element-wise before computing rates.

Report rendering follows the table convention for events with no actual
positives (tp + fn = 0): recall, precision, and F1 are all printed as
dashes, since single-class evaluation is vacuous.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

EVENTS = ("step", "obstacle", "tilt")


class LengthMismatch(ValueError):
    """Prediction and label sequences differ in length."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts with failure as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp, fp=self.fp + other.fp,
            tn=self.tn + other.tn, fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class EventScores:
    """Accuracy / recall / precision / F1; None where undefined."""

    accuracy: float | None
    recall: float | None
    precision: float | None
    f1: float | None


def confusion(preds, labels) -> ConfusionMatrix:
    """Count one event's confusion matrix from boolean sequences.

    ``preds`` and ``labels`` are elementwise predicted/actual failure
    flags of equal length.
    """
    preds = np.asarray(preds, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    if preds.shape != labels.shape:
        raise LengthMismatch(f"preds shape {preds.shape} != labels shape {labels.shape}")
    tp = int(np.sum(preds & labels))
    fp = int(np.sum(preds & ~labels))
    fn = int(np.sum(~preds & labels))
    tn = int(np.sum(~preds & ~labels))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def scores(cm: ConfusionMatrix) -> EventScores:
    """Rates from one confusion matrix; zero-denominator rates are None."""
    if cm.total <= 0:
        raise ValueError("scores need at least one sample")
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    if recall is None or precision is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return EventScores(accuracy=accuracy, recall=recall, precision=precision, f1=f1)


def overall(cms) -> EventScores:
    """Micro-pooled scores: sum the matrices, then score the sum."""
    cms = list(cms)
    if not cms:
        raise ValueError("overall needs at least one matrix")
    pooled = cms[0]
    for cm in cms[1:]:
        pooled = pooled + cm
    return scores(pooled)


# -- prediction CSV and reports ----------------------------------------------

PREDICTION_HEADER = ["map_id", "traj_id", "p_step", "p_obstacle", "p_tilt"]
DEFAULT_THRESHOLD = 0.5


class KeyMismatch(ValueError):
    """Prediction and label files cover different (map_id, traj_id) sets."""


def read_predictions_csv(path):
    """Read {(map_id, traj_id): (p_step, p_obstacle, p_tilt)} from CSV."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != PREDICTION_HEADER:
            raise ValueError(f"unexpected prediction header {header!r}")
        for row in reader:
            probs = tuple(float(v) for v in row[2:5])
            for p in probs:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"probability {p} outside [0, 1] in {path}")
            out[(int(row[0]), int(row[1]))] = probs
    return out


def evaluate_predictions(predictions: dict, labels: dict,
                         threshold: float = DEFAULT_THRESHOLD):
    """Score per-event confusion matrices of predictions against labels.

    ``predictions`` maps (map_id, traj_id) to three probabilities;
    ``labels`` maps the same keys to (step, obstacle, tilt, valid)
    booleans. Invalid samples are dropped from labels before matching.
    The remaining key sets must coincide. Returns (cms, per_event_scores,
    overall_scores) with events ordered step, obstacle, tilt.
    """
    labels = {k: v for k, v in labels.items() if v[3]}
    missing = sorted(set(labels) - set(predictions))
    extra = sorted(set(predictions) - set(labels))
    if missing or extra:
        raise KeyMismatch(
            f"{len(missing)} labeled samples lack predictions, "
            f"{len(extra)} predictions lack labels"
        )
    keys = sorted(labels)
    cms = []
    for i in range(3):
        preds = [predictions[k][i] > threshold for k in keys]
        actual = [labels[k][i] for k in keys]
        cms.append(confusion(preds, actual))
    return cms, [scores(cm) for cm in cms], overall(cms)


def _fmt(value: float | None, dashed: bool) -> str:
    if dashed or value is None:
        return "-"
    return f"{value:.3f}"


def _row_cells(name: str, cm: ConfusionMatrix, sc: EventScores) -> list[str]:
    vacuous = (cm.tp + cm.fn) == 0  # no actual positives: rates are meaningless
    return [
        name,
        _fmt(sc.accuracy, False),
        _fmt(sc.recall, vacuous),
        _fmt(sc.precision, vacuous),
        _fmt(sc.f1, vacuous),
    ]


def render_report(cms, per_event, pooled) -> str:
    """Human-readable metrics table (events + micro-pooled overall)."""
    lines = ["event      accuracy  recall  precision  f1"]
    for name, cm, sc in zip(EVENTS, cms, per_event):
        cells = _row_cells(name, cm, sc)
        lines.append(f"{cells[0]:<10} {cells[1]:>8}  {cells[2]:>6}  {cells[3]:>9}  {cells[4]:>4}")
    total = cms[0] + cms[1] + cms[2]
    cells = _row_cells("overall", total, pooled)
    lines.append(f"{cells[0]:<10} {cells[1]:>8}  {cells[2]:>6}  {cells[3]:>9}  {cells[4]:>4}")
    lines.append("")
    lines.append("confusion  tp        fp        tn        fn")
    for name, cm in zip(EVENTS, cms):
        lines.append(f"{name:<10} {cm.tp:<9} {cm.fp:<9} {cm.tn:<9} {cm.fn}")
    return "\n".join(lines) + "\n"


def write_report_csv(path, cms, per_event, pooled) -> None:
    """Machine-readable report: one row per event plus the overall row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "tp", "fp", "tn", "fn",
                         "accuracy", "recall", "precision", "f1"])
        total = cms[0] + cms[1] + cms[2]
        for name, cm, sc in zip([*EVENTS, "overall"], [*cms, total], [*per_event, pooled]):
            cells = _row_cells(name, cm, sc)
            writer.writerow([name, cm.tp, cm.fp, cm.tn, cm.fn, *cells[1:]])
