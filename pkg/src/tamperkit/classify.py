"""Decision layer: threshold stumps, binary evaluation, and keypoint scoring.

A stump is a single (metric, threshold, polarity) rule over the per-pair
dissimilarity vector.  Training is an exhaustive search over every metric,
both polarities, and all midpoint thresholds, maximising training accuracy
with deterministic tie-breaking.  Parcel verdicts aggregate side verdicts
by logical OR.  Keypoint quality uses a Gaussian scale-normalised score
(OKS) and greedy-matching average precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateTrainingError, InvalidInputError
from .geometry import Keypoints8
from .similarity import SimilarityVector

GREATER_IS_TAMPERED = "greater-is-tampered"
LESS_IS_TAMPERED = "less-is-tampered"
POLARITIES = (GREATER_IS_TAMPERED, LESS_IS_TAMPERED)

#: Per-keypoint falloff constants; slot 5 (the self-occluded corner) is
#: loosest because its position is never directly observable.
DEFAULT_KAPPA = (0.05, 0.05, 0.05, 0.05, 0.05, 0.1, 0.05, 0.05)

AP_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class Stump:
    """Depth-1 decision rule: flag a pair when its dissimilarity crosses
    ``threshold`` in the direction given by ``polarity``."""

    metric: str
    threshold: float
    polarity: str

    def __post_init__(self) -> None:
        if self.polarity not in POLARITIES:
            raise InvalidInputError(
                f"polarity must be one of {POLARITIES}, got {self.polarity!r}"
            )


@dataclass(frozen=True)
class TypeRecall:
    tamper_type: str
    difficulty: str
    n_samples: int
    recall: float


@dataclass(frozen=True)
class EvalReport:
    """Confusion-matrix metrics plus rank-based ROC-AUC and an optional
    recall breakdown per (tampering type, difficulty)."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    tp: int
    fp: int
    tn: int
    fn: int
    per_type: tuple[TypeRecall, ...] = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "per_type": [
                {
                    "type": t.tamper_type,
                    "difficulty": t.difficulty,
                    "n_samples": t.n_samples,
                    "recall": t.recall,
                }
                for t in self.per_type
            ],
        }


@dataclass(frozen=True)
class OksParams:
    kappa: tuple[float, ...] = DEFAULT_KAPPA

    def __post_init__(self) -> None:
        if len(self.kappa) != 8 or any(k <= 0 for k in self.kappa):
            raise InvalidInputError("kappa must hold 8 positive constants")


@dataclass(frozen=True)
class ScoredKeypoints:
    """A keypoint detection with its confidence score."""

    points: Keypoints8
    confidence: float


@dataclass(frozen=True)
class KeypointTarget:
    """A ground-truth keypoint set with the object's pixel area."""

    points: Keypoints8
    area: float


@dataclass(frozen=True)
class ApReport:
    thresholds: tuple[float, ...]
    ap: tuple[float, ...]

    @property
    def mean_ap(self) -> float:
        return float(np.mean(self.ap))


def _dissimilarity_matrix(
    vectors: Sequence[SimilarityVector],
) -> tuple[np.ndarray, tuple[str, ...]]:
    metrics = tuple(s.metric for s in vectors[0].scores)
    rows = []
    for v in vectors:
        got = tuple(s.metric for s in v.scores)
        if got != metrics:
            raise InvalidInputError(
                f"inconsistent metric sets across vectors: {got} vs {metrics}"
            )
        rows.append([s.dissimilarity for s in v.scores])
    return np.asarray(rows, dtype=np.float64), metrics


def train_stump(
    vectors: Sequence[SimilarityVector], labels: Sequence[bool]
) -> Stump:
    """Exhaustive accuracy-maximising search over (metric, threshold, polarity).

    Candidate thresholds are the midpoints between consecutive distinct
    dissimilarity values plus -inf/+inf sentinels.  Ties are broken towards
    the lower metric index, then the lower threshold, then the
    greater-is-tampered polarity, so training is fully deterministic.
    """
    if len(vectors) != len(labels):
        raise InvalidInputError(
            f"{len(vectors)} vectors vs {len(labels)} labels"
        )
    y = np.asarray(labels, dtype=bool)
    if len(y) < 2 or y.all() or not y.any():
        raise DegenerateTrainingError(
            "training requires at least 2 samples with both classes present"
        )
    table, metrics = _dissimilarity_matrix(vectors)

    best: tuple[float, Stump] | None = None
    for j, metric in enumerate(metrics):
        values = table[:, j]
        distinct = np.unique(values)
        candidates = np.concatenate(
            ([-np.inf], (distinct[:-1] + distinct[1:]) / 2.0, [np.inf])
        )
        flags_greater = values[None, :] > candidates[:, None]
        acc_greater = (flags_greater == y[None, :]).mean(axis=1)
        acc_less = ((values[None, :] < candidates[:, None]) == y[None, :]).mean(
            axis=1
        )
        for i, t in enumerate(candidates):
            for acc, polarity in (
                (acc_greater[i], GREATER_IS_TAMPERED),
                (acc_less[i], LESS_IS_TAMPERED),
            ):
                if best is None or acc > best[0]:
                    best = (float(acc), Stump(metric, float(t), polarity))
    assert best is not None
    return best[1]


def predict(stump: Stump, vector: SimilarityVector) -> bool:
    """Apply the stump; a value exactly at the threshold is NOT tampered."""
    d = vector.dissimilarity(stump.metric)
    if stump.polarity == GREATER_IS_TAMPERED:
        return bool(d > stump.threshold)
    return bool(d < stump.threshold)


def stump_score(stump: Stump, vector: SimilarityVector) -> float:
    """Continuous tamper score oriented so that higher means more suspect."""
    d = vector.dissimilarity(stump.metric)
    return d if stump.polarity == GREATER_IS_TAMPERED else -d


def training_accuracy(
    stump: Stump, vectors: Sequence[SimilarityVector], labels: Sequence[bool]
) -> float:
    hits = sum(
        predict(stump, v) == bool(lab) for v, lab in zip(vectors, labels)
    )
    return hits / len(labels)


def aggregate_parcel(side_verdicts: Sequence[bool]) -> bool:
    """A parcel is tampered when any of its sides is."""
    if len(side_verdicts) == 0:
        raise InvalidInputError("no side verdicts to aggregate")
    return any(side_verdicts)


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Rank-statistic AUC with ties counted 0.5; 0.5 when a class is empty."""
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != y.shape:
        raise InvalidInputError(f"{len(s)} scores vs {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_binary(
    predictions: Sequence[bool],
    labels: Sequence[bool],
    scores: Sequence[float] | None = None,
    tamper_kinds: Sequence[tuple[str, str] | None] | None = None,
) -> EvalReport:
    """Confusion metrics over binary verdicts.

    ROC-AUC is computed from ``scores`` (continuous, higher = more suspect)
    when given, otherwise from the binarised predictions.  ``tamper_kinds``
    optionally tags each sample with its (type, difficulty) to produce the
    per-type recall table; untampered samples carry None.
    """
    pred = np.asarray(predictions, dtype=bool)
    y = np.asarray(labels, dtype=bool)
    if pred.shape != y.shape or len(y) == 0:
        raise InvalidInputError(
            f"{len(pred)} predictions vs {len(y)} labels (need equal, >=1)"
        )
    tp = int((pred & y).sum())
    fp = int((pred & ~y).sum())
    tn = int((~pred & ~y).sum())
    fn = int((~pred & y).sum())
    accuracy = (tp + tn) / len(y)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    auc = roc_auc(
        scores if scores is not None else pred.astype(np.float64), y
    )

    per_type: list[TypeRecall] = []
    if tamper_kinds is not None:
        if len(tamper_kinds) != len(y):
            raise InvalidInputError(
                f"{len(tamper_kinds)} kind tags vs {len(y)} labels"
            )
        groups: dict[tuple[str, str], list[int]] = {}
        for i, kind in enumerate(tamper_kinds):
            if kind is not None:
                groups.setdefault((str(kind[0]), str(kind[1])), []).append(i)
        for key in sorted(groups):
            idx = groups[key]
            hit = sum(1 for i in idx if pred[i] and y[i])
            pos = sum(1 for i in idx if y[i])
            per_type.append(
                TypeRecall(key[0], key[1], len(idx), hit / pos if pos else 0.0)
            )
    return EvalReport(
        accuracy, precision, recall, f1, auc, tp, fp, tn, fn, tuple(per_type)
    )


def oks(
    pred: Keypoints8,
    gt: Keypoints8,
    area: float,
    params: OksParams | None = None,
    labeled: Sequence[bool] | None = None,
) -> float:
    """Object-keypoint similarity: Gaussian falloff of the pixel distances,
    scale-normalised by the object area, averaged over labeled keypoints.

    All 8 corners are labeled by default — the self-occluded corner is
    annotated even though it is invisible.
    """
    if area <= 0:
        raise InvalidInputError(f"object area must be positive, got {area}")
    p = params if params is not None else OksParams()
    mask = (
        np.ones(8, dtype=bool)
        if labeled is None
        else np.asarray(labeled, dtype=bool)
    )
    if mask.shape != (8,):
        raise InvalidInputError("labeled mask must hold 8 flags")
    if not mask.any():
        raise InvalidInputError("at least one keypoint must be labeled")
    d2 = ((pred.points - gt.points) ** 2).sum(axis=1)
    kappa = np.asarray(p.kappa, dtype=np.float64)
    sims = np.exp(-d2 / (2.0 * area * kappa**2))
    return float(sims[mask].mean())


def _ap_at_threshold(
    order: np.ndarray,
    oks_table: np.ndarray,
    threshold: float,
    n_gt: int,
) -> float:
    if n_gt == 0 or len(order) == 0:
        return 0.0
    matched = np.zeros(oks_table.shape[1], dtype=bool)
    tp_flags = np.zeros(len(order), dtype=bool)
    for rank, det in enumerate(order):
        sims = np.where(matched, -1.0, oks_table[det])
        best = int(np.argmax(sims))
        if sims[best] >= threshold:
            matched[best] = True
            tp_flags[rank] = True
    cum_tp = np.cumsum(tp_flags)
    precision = cum_tp / np.arange(1, len(order) + 1)
    recall = cum_tp / n_gt
    # all-point interpolation: running max of precision from the right
    p_interp = np.maximum.accumulate(precision[::-1])[::-1]
    prev = np.concatenate(([0.0], recall[:-1]))
    return float(((recall - prev) * p_interp).sum())


def keypoint_ap(
    detections: Sequence[ScoredKeypoints],
    ground_truths: Sequence[KeypointTarget],
    params: OksParams | None = None,
) -> ApReport:
    """Average precision of keypoint detections at 10 OKS thresholds.

    Detections are matched greedily in descending confidence order, each to
    the unmatched ground truth with the highest OKS at or above the
    threshold.  AP is the all-point-interpolated area under the
    precision-recall curve, reported in percent.
    """
    n_det, n_gt = len(detections), len(ground_truths)
    if n_det == 0 or n_gt == 0:
        return ApReport(AP_THRESHOLDS, (0.0,) * len(AP_THRESHOLDS))
    conf = np.asarray([d.confidence for d in detections], dtype=np.float64)
    order = np.argsort(-conf, kind="stable")
    table = np.empty((n_det, n_gt))
    for i, det in enumerate(detections):
        for j, tgt in enumerate(ground_truths):
            table[i, j] = oks(det.points, tgt.points, tgt.area, params)
    aps = tuple(
        100.0 * _ap_at_threshold(order, table, t, n_gt) for t in AP_THRESHOLDS
    )
    return ApReport(AP_THRESHOLDS, aps)


# ------------------------------------------------------------------ storage

def stump_to_dict(stump: Stump, method: str) -> dict:
    return {
        "metric": stump.metric,
        "threshold": stump.threshold,
        "polarity": stump.polarity,
        "method": method,
    }


def save_stumps(stumps: Mapping[str, Stump], path: str | Path) -> None:
    """Write one JSON document per homogenization method, sorted by method."""
    docs = [stump_to_dict(stumps[m], m) for m in sorted(stumps)]
    Path(path).write_text(json.dumps(docs, indent=2) + "\n")


def load_stumps(path: str | Path) -> dict[str, Stump]:
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"stump file not found: {path}")
    docs = json.loads(path.read_text())
    out: dict[str, Stump] = {}
    for doc in docs:
        out[doc["method"]] = Stump(
            str(doc["metric"]), float(doc["threshold"]), str(doc["polarity"])
        )
    return out
