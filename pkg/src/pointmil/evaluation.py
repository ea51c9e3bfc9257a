"""Detection protocol and localization metrics.

Per test video the classifier scores every proposal and the top-k are
kept; detections are pooled over videos, ranked by score, and greedily
matched one-to-one against same-class ground-truth tubes at an IoU
threshold. Average precision, ROC AUC, best-overlap (ABO/MABO), and
recall curves are computed from the ranked detections or, for the
geometry-only metrics, from the proposals directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .classifier import LinearModel, score_many
from .geometry import Tube, VideoRecord, tube_iou

if TYPE_CHECKING:  # pragma: no cover
    from .pipeline import FeatureStore

__all__ = [
    "Detection",
    "EvalReport",
    "rank_and_match",
    "average_precision",
    "auc_roc",
    "abo",
    "mabo",
    "recall_curve",
    "best_overlaps",
    "build_report",
    "DEFAULT_THRESHOLDS",
]

DEFAULT_THRESHOLDS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@dataclass(frozen=True)
class Detection:
    """One scored proposal after matching against the ground truth."""

    video_id: str
    proposal_id: int
    score: float
    matched_gt: int | None
    iou: float

    @property
    def positive(self) -> bool:
        return self.matched_gt is not None


def _ranked(detections: Sequence[Detection]) -> list[Detection]:
    return sorted(detections, key=lambda d: (-d.score, d.video_id, d.proposal_id))


def rank_and_match(test_videos: Sequence[VideoRecord], store: "FeatureStore",
                   model: LinearModel, action: int, threshold: float,
                   top_k: int | None = 10) -> list[Detection]:
    """Score, pool, rank, and greedily match detections for one action.

    Every video contributes its ``top_k`` highest-scoring proposals. In
    score order, each detection claims the unclaimed ground-truth tube of
    the action's class with which it overlaps most, and is positive iff
    that overlap reaches ``threshold``. ``top_k=None`` keeps all proposals.
    """
    if not (0.0 <= threshold < 1.0):
        raise ValueError(f"threshold must be in [0, 1), got {threshold}")
    if top_k is not None and top_k < 1:
        raise ValueError("top_k must be >= 1")

    pooled: list[tuple[float, str, int]] = []
    for v in test_videos:
        n = len(v.proposals)
        if n == 0:
            continue
        s = score_many(model, store.rows(v.id, np.arange(n)))
        keep = n if top_k is None else min(top_k, n)
        order = np.lexsort((np.arange(n), -s))[:keep]
        pooled.extend((float(s[pid]), v.id, int(pid)) for pid in order)
    pooled.sort(key=lambda r: (-r[0], r[1], r[2]))

    by_id = {v.id: v for v in test_videos}
    claimed: dict[str, set[int]] = {v.id: set() for v in test_videos}
    out: list[Detection] = []
    for s, vid, pid in pooled:
        v = by_id[vid]
        matched = None
        best_iou = 0.0
        if v.label == action:
            best_g = -1
            for g, gt in enumerate(v.gt_tubes):
                if g in claimed[vid]:
                    continue
                overlap = tube_iou(v.proposals[pid], gt)
                if overlap > best_iou:
                    best_iou, best_g = overlap, g
            if best_g >= 0 and best_iou >= threshold:
                claimed[vid].add(best_g)
                matched = best_g
        out.append(Detection(vid, pid, s, matched, best_iou))
    return out


def average_precision(detections: Sequence[Detection], n_gt: int,
                      interpolated: bool = False) -> float:
    """AP of a ranked detection list against ``n_gt`` ground truths.

    Raw AP sums precision at each positive rank and divides by ``n_gt``,
    so unmatched ground truths count as misses. The interpolated variant
    replaces each precision with the running maximum over lower ranks.
    """
    if n_gt < 1:
        raise ValueError("n_gt must be >= 1")
    ranked = _ranked(detections)
    precisions = []
    tp = 0
    for rank, d in enumerate(ranked, start=1):
        if d.positive:
            tp += 1
            precisions.append(tp / rank)
    if not precisions:
        return 0.0
    if interpolated:
        precisions = list(np.maximum.accumulate(precisions[::-1])[::-1])
    return float(sum(precisions) / n_gt)


def auc_roc(detections: Sequence[Detection]) -> float:
    """Area under the ROC curve of detection scores.

    Equals the Mann-Whitney statistic: the probability that a random
    positive outscores a random negative, ties counted half.
    """
    labels = np.array([d.positive for d in detections], dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative detection")
    scores = np.array([d.score for d in detections], dtype=np.float64)
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def abo(gt_tubes: Sequence[Tube], proposals: Sequence[Tube]) -> float:
    """Average best overlap: mean over ground truths of the best proposal IoU."""
    if not gt_tubes:
        raise ValueError("abo needs at least one ground-truth tube")
    best = [max((tube_iou(p, g) for p in proposals), default=0.0) for g in gt_tubes]
    return float(np.mean(best))


def mabo(per_class_abo: Mapping[int, float] | Iterable[float]) -> float:
    """Unweighted mean of per-class ABO values."""
    values = (list(per_class_abo.values()) if isinstance(per_class_abo, Mapping)
              else list(per_class_abo))
    if not values:
        raise ValueError("mabo needs at least one class")
    return float(np.mean(values))


def recall_curve(gt_tubes: Sequence[Tube], proposals: Sequence[Tube],
                 thresholds: Sequence[float]) -> list[tuple[float, float]]:
    """Fraction of ground truths whose best proposal IoU reaches each threshold."""
    ts = list(thresholds)
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("thresholds must be sorted ascending")
    best = np.array([max((tube_iou(p, g) for p in proposals), default=0.0)
                     for g in gt_tubes])
    return [(float(t), float(np.mean(best >= t))) for t in ts]


def best_overlaps(videos: Sequence[VideoRecord], action: int) -> np.ndarray:
    """Best proposal IoU for every ground-truth tube of one class.

    Each ground truth is matched only against proposals of its own video.
    """
    best = []
    for v in videos:
        if v.label != action:
            continue
        for g in v.gt_tubes:
            best.append(max((tube_iou(p, g) for p in v.proposals), default=0.0))
    return np.array(best, dtype=np.float64)


@dataclass
class EvalReport:
    """All metrics of one experiment.

    AP and recall are per (class, threshold); AUC is computed per class
    and averaged over classes per threshold (entries may be NaN when a
    class yields single-class detections); ABO is per class.
    """

    classes: tuple[int, ...]
    thresholds: tuple[float, ...]
    ap: dict[tuple[int, float], float]
    auc_per_class: dict[tuple[int, float], float]
    abo_per_class: dict[int, float]
    recall: dict[tuple[int, float], float]

    def mean_ap(self, threshold: float) -> float:
        return float(np.mean([self.ap[(c, threshold)] for c in self.classes]))

    def mean_auc(self, threshold: float) -> float:
        vals = [self.auc_per_class[(c, threshold)] for c in self.classes]
        vals = [v for v in vals if not math.isnan(v)]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def mabo(self) -> float:
        return mabo(self.abo_per_class)

    def to_rows(self) -> list[tuple[str, str, str, float]]:
        """Flat (class, threshold, metric, value) rows for CSV export."""
        rows: list[tuple[str, str, str, float]] = []
        for c in self.classes:
            for t in self.thresholds:
                rows.append((str(c), f"{t:g}", "ap", self.ap[(c, t)]))
                rows.append((str(c), f"{t:g}", "auc", self.auc_per_class[(c, t)]))
                rows.append((str(c), f"{t:g}", "recall", self.recall[(c, t)]))
            rows.append((str(c), "", "abo", self.abo_per_class[c]))
        for t in self.thresholds:
            rows.append(("mean", f"{t:g}", "map", self.mean_ap(t)))
            rows.append(("mean", f"{t:g}", "auc", self.mean_auc(t)))
        rows.append(("mean", "", "mabo", self.mabo))
        return rows

    def format_table(self) -> str:
        """Human-readable summary table."""
        lines = []
        head = "class " + " ".join(f"ap@{t:g}".rjust(8) for t in self.thresholds) + "    abo"
        lines.append(head)
        lines.append("-" * len(head))
        for c in self.classes:
            cells = " ".join(f"{self.ap[(c, t)]:8.3f}" for t in self.thresholds)
            lines.append(f"{c:<5d} {cells} {self.abo_per_class[c]:6.3f}")
        cells = " ".join(f"{self.mean_ap(t):8.3f}" for t in self.thresholds)
        lines.append(f"mAP   {cells} {self.mabo:6.3f}  (last column: ABO/MABO)")
        cells = " ".join(f"{self.mean_auc(t):8.3f}" for t in self.thresholds)
        lines.append(f"AUC   {cells}")
        return "\n".join(lines)


def build_report(test_videos: Sequence[VideoRecord], store: "FeatureStore",
                 models: Mapping[int, LinearModel],
                 thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                 top_k: int | None = 10, interpolated_ap: bool = False) -> EvalReport:
    """Evaluate one model per class over a threshold sweep."""
    classes = tuple(sorted(models))
    ap: dict[tuple[int, float], float] = {}
    auc: dict[tuple[int, float], float] = {}
    recall: dict[tuple[int, float], float] = {}
    abo_per_class: dict[int, float] = {}
    for c in classes:
        n_gt = sum(len(v.gt_tubes) for v in test_videos if v.label == c)
        best = best_overlaps(test_videos, c)
        abo_per_class[c] = float(best.mean()) if len(best) else 0.0
        for t in thresholds:
            dets = rank_and_match(test_videos, store, models[c], c, t, top_k)
            ap[(c, t)] = average_precision(dets, n_gt, interpolated_ap) if n_gt else 0.0
            try:
                auc[(c, t)] = auc_roc(dets)
            except ValueError:
                auc[(c, t)] = float("nan")
            recall[(c, t)] = float(np.mean(best >= t)) if len(best) else 0.0
    return EvalReport(classes=classes, thresholds=tuple(float(t) for t in thresholds),
                      ap=ap, auc_per_class=auc, abo_per_class=abo_per_class, recall=recall)
