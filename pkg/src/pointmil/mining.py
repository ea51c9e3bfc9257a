"""Instance mining: alternate between selecting one training proposal per
positive video and refitting the classifier on the selections.

The optimization is block coordinate descent on a non-convex objective.
With the classifier fixed, each positive video selects the candidate with
the highest product of classifier score and overlap prior; with the
selections fixed, a hinge-loss classifier is retrained. Re-selection runs
fold-wise: the training videos are split once into folds and each fold is
re-localized with a model trained on the other folds only, so a video's
own (possibly wrong) selection cannot vote for itself.

Supported supervision regimes:

- POINTS: candidates are pre-filtered to proposals touching an annotated
  point; selection uses the score-times-prior product.
- LABEL_ONLY: no points; all proposals are candidates, selection uses the
  raw classifier score, and the initial selection is random.
- BEST_IOU_ORACLE: selection fixed to the proposal with the highest
  ground-truth overlap (upper bound for proposal-based training).
- GT_ORACLE: trains directly on the ground-truth tubes' features.

The two oracle regimes skip the alternating loop entirely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .classifier import LinearModel, score, score_many, train
from .geometry import VideoRecord, tube_iou
from .overlap import OverlapScore, best_center_bias, overlap_measure
from .rng import derive_int, stream

if TYPE_CHECKING:  # pragma: no cover
    from .pipeline import FeatureStore

__all__ = [
    "SupervisionMode",
    "TrainConfig",
    "MiningState",
    "gt_row_id",
    "map_score",
    "initial_selection",
    "sample_negatives",
    "relocalize_fold",
    "run_mil",
]

log = logging.getLogger(__name__)


class SupervisionMode(Enum):
    POINTS = "points"
    LABEL_ONLY = "label_only"
    BEST_IOU_ORACLE = "best_iou_oracle"
    GT_ORACLE = "gt_oracle"


@dataclass
class TrainConfig:
    """Knobs for one mining run (shared by every action class)."""

    max_iterations: int = 10
    n_folds: int = 3
    negatives_per_video: int = 100
    lam: float = 100.0
    seed: int = 0
    supervision: SupervisionMode = SupervisionMode.POINTS
    prior_floor: float = 1e-6
    sgd_epochs: int = 50

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if self.negatives_per_video < 1:
            raise ValueError("negatives_per_video must be >= 1")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.prior_floor > 0:
            raise ValueError("prior_floor must be positive")
        if self.sgd_epochs < 1:
            raise ValueError("sgd_epochs must be >= 1")
        if not isinstance(self.supervision, SupervisionMode):
            self.supervision = SupervisionMode(self.supervision)


@dataclass
class MiningState:
    """Current selections and model while the alternating loop runs."""

    selected: dict[str, int] = field(default_factory=dict)
    model: LinearModel | None = None
    iteration: int = 0


def gt_row_id(k: int) -> int:
    """Feature-store row id for the k-th ground-truth tube of a video.

    Ground-truth features share the proposal feature store under negative
    ids so the oracle regimes can train on them.
    """
    return -(k + 1)


def map_score(m: LinearModel, z: np.ndarray, o: OverlapScore | float,
              prior_floor: float = 1e-6) -> float:
    """Classifier score times the overlap prior, floored to stay positive.

    The floor keeps the product sign-safe: a negative prior times a
    negative classifier score must not rank a bad proposal first.
    """
    prior = o.o if isinstance(o, OverlapScore) else float(o)
    return score(m, z) * max(prior, prior_floor)


@dataclass
class _Candidates:
    """Per-video candidate ids with their prior values, ids ascending."""

    ids: np.ndarray
    prior: np.ndarray


def _candidate_table(videos: Sequence[VideoRecord],
                     cfg: TrainConfig) -> dict[str, _Candidates]:
    """Candidate proposals per positive video under the active supervision."""
    table: dict[str, _Candidates] = {}
    for v in videos:
        n = len(v.proposals)
        if cfg.supervision is SupervisionMode.POINTS:
            ids: list[int] = []
            prior: list[float] = []
            tracks = [t for t in v.points if len(t) > 0]
            if tracks:
                for pid, p in enumerate(v.proposals):
                    if best_center_bias(p, tracks) > 0.0:
                        ids.append(pid)
                        prior.append(overlap_measure(p, tracks, v).o)
            table[v.id] = _Candidates(np.array(ids, dtype=np.int64),
                                      np.array(prior, dtype=np.float64))
        else:
            table[v.id] = _Candidates(np.arange(n, dtype=np.int64),
                                      np.ones(n, dtype=np.float64))
    return table


def _best_iou_id(v: VideoRecord) -> int:
    ious = np.array([max(tube_iou(p, g) for g in v.gt_tubes) for p in v.proposals])
    return int(np.argmax(ious))  # argmax takes the first max: lowest id wins


def initial_selection(videos: Sequence[VideoRecord], cfg: TrainConfig,
                      candidates: Mapping[str, _Candidates] | None = None) -> dict[str, int]:
    """Iteration-0 proposal choice per positive video.

    POINTS picks the candidate with the highest prior (the product rule
    with an uninformative classifier); LABEL_ONLY picks uniformly at
    random among all proposals, seeded per video. The oracle regimes pick
    the best-overlap proposal or the ground-truth row. Videos left with no
    candidate are dropped with a warning.
    """
    if candidates is None:
        candidates = _candidate_table(videos, cfg)
    selected: dict[str, int] = {}
    for v in videos:
        if cfg.supervision is SupervisionMode.GT_ORACLE:
            if not v.gt_tubes:
                log.warning("video %s has no ground truth; dropped", v.id)
                continue
            selected[v.id] = gt_row_id(0)
            continue
        if cfg.supervision is SupervisionMode.BEST_IOU_ORACLE:
            if not v.proposals or not v.gt_tubes:
                log.warning("video %s has no proposals or ground truth; dropped", v.id)
                continue
            selected[v.id] = _best_iou_id(v)
            continue
        cand = candidates[v.id]
        if len(cand.ids) == 0:
            log.warning("video %s has no candidate proposals; dropped from training", v.id)
            continue
        if cfg.supervision is SupervisionMode.POINTS:
            selected[v.id] = int(cand.ids[np.argmax(cand.prior)])
        else:
            rng = stream(cfg.seed, "init-selection", v.id)
            selected[v.id] = int(cand.ids[rng.integers(len(cand.ids))])
    return selected


def sample_negatives(action: int, videos: Sequence[VideoRecord], cfg: TrainConfig,
                     store: "FeatureStore") -> np.ndarray:
    """Negative feature matrix for one action.

    From every video of a different class, draws up to
    ``cfg.negatives_per_video`` proposals uniformly without replacement
    (all of them when fewer exist), seeded per video.
    """
    blocks = []
    for v in videos:
        if v.label == action or not v.proposals:
            continue
        n = len(v.proposals)
        if n <= cfg.negatives_per_video:
            ids = np.arange(n)
        else:
            rng = stream(cfg.seed, "negatives", action, v.id)
            ids = np.sort(rng.choice(n, size=cfg.negatives_per_video, replace=False))
        blocks.append(store.rows(v.id, ids))
    if not blocks:
        raise ValueError(f"no videos outside class {action} to sample negatives from")
    return np.vstack(blocks)


def _argmax_selection(ids: np.ndarray, primary: np.ndarray,
                      secondary: np.ndarray) -> int:
    # lexsort: last key is the primary sort key; ids ascending breaks final ties
    order = np.lexsort((ids, -secondary, -primary))
    return int(ids[order[0]])


def relocalize_fold(model: LinearModel, fold_videos: Sequence[VideoRecord],
                    cfg: TrainConfig, store: "FeatureStore",
                    candidates: Mapping[str, _Candidates]) -> dict[str, int]:
    """Re-select the best candidate in each fold video under a fixed model.

    POINTS ranks by classifier score times floored prior, ties broken by
    higher prior then lower id (so an uninformative model reduces to the
    prior-only choice); LABEL_ONLY ranks by raw score, ties to lower id.
    """
    updates: dict[str, int] = {}
    for v in fold_videos:
        cand = candidates.get(v.id)
        if cand is None or len(cand.ids) == 0:
            continue
        s = score_many(model, store.rows(v.id, cand.ids))
        if cfg.supervision is SupervisionMode.POINTS:
            product = s * np.maximum(cand.prior, cfg.prior_floor)
            updates[v.id] = _argmax_selection(cand.ids, product, cand.prior)
        else:
            updates[v.id] = _argmax_selection(cand.ids, s, np.zeros_like(s))
    return updates


def _fold_assignment(video_ids: Sequence[str], cfg: TrainConfig,
                     action: int) -> list[list[str]]:
    """Split positive videos into folds once per run (fixed across rounds)."""
    ids = sorted(video_ids)
    perm = stream(cfg.seed, "folds", action).permutation(len(ids))
    folds: list[list[str]] = [[] for _ in range(cfg.n_folds)]
    for pos, idx in enumerate(perm):
        folds[pos % cfg.n_folds].append(ids[idx])
    return folds


def run_mil(videos: Sequence[VideoRecord], action: int, cfg: TrainConfig,
            store: "FeatureStore") -> tuple[LinearModel, dict[str, int]]:
    """Mine one training proposal per positive video and fit the detector.

    Runs the initial selection, then ``cfg.max_iterations`` rounds of
    fold-wise retrain-and-relocalize, then trains one final model on the
    last selections plus the sampled negatives. Deterministic given
    ``cfg.seed``. Returns the final model and the selections.
    """
    positives = [v for v in videos if v.label == action]
    if not positives:
        raise ValueError(f"no videos of class {action}")

    candidates = _candidate_table(positives, cfg)
    state = MiningState(selected=initial_selection(positives, cfg, candidates))
    if not state.selected:
        raise ValueError(f"class {action}: every positive video lost its candidates")
    negatives = sample_negatives(action, videos, cfg, store)
    by_id = {v.id: v for v in positives}

    def _rows(selection: Mapping[str, int]) -> np.ndarray:
        return np.vstack([store.rows(vid, [pid]) for vid, pid in sorted(selection.items())])

    if cfg.supervision in (SupervisionMode.POINTS, SupervisionMode.LABEL_ONLY):
        folds = _fold_assignment(list(state.selected), cfg, action)
        for iteration in range(1, cfg.max_iterations + 1):
            state.iteration = iteration
            for k, fold in enumerate(folds):
                train_ids = [vid for other in folds if other is not fold for vid in other
                             if vid in state.selected]
                if not train_ids or not fold:
                    continue
                pos_rows = _rows({vid: state.selected[vid] for vid in train_ids})
                state.model = train(pos_rows, negatives, lam=cfg.lam,
                                    seed=derive_int(cfg.seed, "sgd", action, iteration, k),
                                    epochs=cfg.sgd_epochs)
                fold_videos = [by_id[vid] for vid in fold]
                state.selected.update(
                    relocalize_fold(state.model, fold_videos, cfg, store, candidates))

    state.model = train(_rows(state.selected), negatives, lam=cfg.lam,
                        seed=derive_int(cfg.seed, "sgd-final", action),
                        epochs=cfg.sgd_epochs)
    return state.model, dict(state.selected)
