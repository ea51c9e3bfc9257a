"""Deterministic synthetic benchmark with planted ground truth.

Each video carries one planted action tube. Proposal pools mix perturbed
copies of the planted tube (jittered, rescaled, temporally cropped, with a
per-proposal corruption level so the pool spans the whole overlap range)
with distractor tubes placed independently. Features are discriminative in
proportion to a proposal's overlap with the planted tube, which makes
"the classifier prefers well-fitting proposals" a falsifiable property of
the world rather than an assumption. Point annotations are simulated at a
configurable frame-rate from the planted boxes' centers, and an annotation
cost model converts frame-rates into time budgets.

All generation flows from ``WorldConfig.seed`` through independent named
streams, so e.g. regenerating points at another frame-rate leaves tubes
and features bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import Point, PointTrack, Tube, VideoRecord, tube_iou
from .mining import gt_row_id
from .rng import stream

__all__ = [
    "WorldConfig",
    "CostModel",
    "AnnotationScheme",
    "WorldData",
    "generate_gt_tube",
    "generate_proposals",
    "synthesize_feature",
    "simulate_points",
    "annotation_cost",
    "generate_world",
]


@dataclass(frozen=True)
class WorldConfig:
    """Shape and difficulty of a synthetic dataset."""

    n_classes: int = 10
    train_videos_per_class: int = 30
    test_videos_per_class: int = 20
    n_frames_range: tuple[int, int] = (120, 200)
    frame_w: float = 320.0
    frame_h: float = 240.0
    proposals_per_video: int = 100
    spatial_jitter: float = 0.5
    scale_jitter: float = 0.4
    temporal_crop: float = 0.7
    distractor_fraction: float = 0.8
    feature_dim: int = 64
    feature_noise: float = 0.2
    point_jitter: float = 0.0
    annotation_rate: int = 1
    seed: int = 0
    gt_size_range: tuple[float, float] = (0.15, 0.45)
    gt_drift: float = 0.01
    gt_scale_drift: float = 0.004
    clamp_points: bool = True

    def __post_init__(self) -> None:
        counts = (self.n_classes, self.train_videos_per_class, self.test_videos_per_class,
                  self.proposals_per_video, self.feature_dim)
        if any(c < 1 for c in counts):
            raise ValueError("all counts must be >= 1")
        if self.annotation_rate < 1:
            raise ValueError("annotation_rate must be >= 1")
        sigmas = (self.spatial_jitter, self.scale_jitter, self.temporal_crop,
                  self.feature_noise, self.point_jitter, self.gt_drift, self.gt_scale_drift)
        if any(s < 0 for s in sigmas):
            raise ValueError("jitter and noise parameters must be >= 0")
        if not 0.0 <= self.distractor_fraction <= 1.0:
            raise ValueError("distractor_fraction must be in [0, 1]")
        if self.n_frames_range[0] < 2 or self.n_frames_range[1] < self.n_frames_range[0]:
            raise ValueError("n_frames_range must be an increasing pair with min >= 2")


@dataclass(frozen=True)
class CostModel:
    """Seconds spent per annotation act.

    Defaults keep a point roughly an order of magnitude cheaper per frame
    than a box; all three values are configurable.
    """

    box_seconds_per_frame: float = 3.0
    point_seconds_per_frame: float = 0.25
    label_seconds_per_video: float = 5.0

    def __post_init__(self) -> None:
        if min(self.box_seconds_per_frame, self.point_seconds_per_frame,
               self.label_seconds_per_video) <= 0:
            raise ValueError("all costs must be positive")
        if self.box_seconds_per_frame <= self.point_seconds_per_frame:
            raise ValueError("a box must cost more than a point")


class AnnotationScheme(Enum):
    BOX = "box"
    POINT = "point"


def generate_gt_tube(cfg: WorldConfig, rng: np.random.Generator, n_frames: int) -> Tube:
    """A bounded-random-walk box track over a random sub-interval.

    Zero drift parameters give a constant box; boxes are always clamped to
    the frame.
    """
    lo = max(4, int(round(0.4 * n_frames)))
    hi = max(lo, int(round(0.85 * n_frames)))
    length = int(rng.integers(lo, hi + 1))
    start = int(rng.integers(1, n_frames - length + 2))

    w0 = rng.uniform(*cfg.gt_size_range) * cfg.frame_w
    h0 = rng.uniform(*cfg.gt_size_range) * cfg.frame_h
    cx = rng.uniform(w0 / 2.0, cfg.frame_w - w0 / 2.0)
    cy = rng.uniform(h0 / 2.0, cfg.frame_h - h0 / 2.0)

    steps = rng.normal(0.0, cfg.gt_drift, size=(length, 2))
    steps[0] = 0.0
    centers = np.cumsum(steps * [cfg.frame_w, cfg.frame_h], axis=0) + [cx, cy]
    log_scale = rng.normal(0.0, cfg.gt_scale_drift, size=length)
    log_scale[0] = 0.0
    scale = np.exp(np.cumsum(log_scale))

    return Tube(start, _boxes_from_centers(centers, w0 * scale, h0 * scale, cfg))


def _boxes_from_centers(centers: np.ndarray, w: np.ndarray, h: np.ndarray,
                        cfg: WorldConfig) -> np.ndarray:
    w = np.minimum(np.asarray(w, dtype=np.float64), cfg.frame_w)
    h = np.minimum(np.asarray(h, dtype=np.float64), cfg.frame_h)
    x = np.clip(centers[:, 0] - w / 2.0, 0.0, cfg.frame_w - w)
    y = np.clip(centers[:, 1] - h / 2.0, 0.0, cfg.frame_h - h)
    return np.stack([x, y, w, h], axis=1)


def _perturbed_copy(gt: Tube, cfg: WorldConfig, rng: np.random.Generator,
                    u: float | None = None) -> Tube:
    """A degraded copy of the planted tube.

    One corruption level u scales the temporal crop, the center offset,
    and the size rescaling together, so low-u copies fit well and high-u
    copies fit poorly in every respect. By default u is skewed toward
    heavy corruption: the pool contains a few well-fitting copies, but a
    uniformly random pick is a poor one.
    """
    if u is None:
        u = rng.uniform() ** (1.0 / 3.0)
    length = gt.n_frames

    n_crop = min(length - 1, int(round(u * cfg.temporal_crop * length)))
    front = int(rng.integers(0, n_crop + 1))
    boxes = gt.boxes[front: length - (n_crop - front)]

    offset = rng.normal(0.0, u * cfg.spatial_jitter, size=2)
    wobble = rng.normal(0.0, 0.2 * u * cfg.spatial_jitter, size=(len(boxes), 2))
    scale = math.exp(rng.normal(0.0, u * cfg.scale_jitter))

    bw, bh = boxes[:, 2], boxes[:, 3]
    centers = np.stack([
        boxes[:, 0] + bw / 2.0 + (offset[0] + wobble[:, 0]) * bw,
        boxes[:, 1] + bh / 2.0 + (offset[1] + wobble[:, 1]) * bh,
    ], axis=1)
    return Tube(gt.start_frame + front,
                _boxes_from_centers(centers, bw * scale, bh * scale, cfg))


def generate_proposals(gt: Tube, cfg: WorldConfig, rng: np.random.Generator,
                       n_frames: int) -> list[Tube]:
    """Proposal pool for one video, shuffled so ids carry no information.

    Mixes perturbed copies of the planted tube with independently placed
    distractors. Unless the pool is all distractors, generation retries
    until at least one proposal overlaps the planted tube with IoU >= 0.5.
    """
    n_total = cfg.proposals_per_video
    n_distract = int(round(cfg.distractor_fraction * n_total))
    n_copies = n_total - n_distract

    for attempt in range(50):
        tubes = []
        if n_copies > 0:
            # one barely corrupted copy per pool anchors the IoU >= 0.5 guarantee
            tubes.append(_perturbed_copy(gt, cfg, rng, u=rng.uniform(0.0, 0.1)))
            tubes += [_perturbed_copy(gt, cfg, rng) for _ in range(n_copies - 1)]
        tubes += [generate_gt_tube(cfg, rng, n_frames) for _ in range(n_distract)]
        if n_copies == 0 or any(tube_iou(t, gt) >= 0.5 for t in tubes[:n_copies]):
            break
    else:
        raise RuntimeError("failed to generate a proposal with IoU >= 0.5 in 50 attempts")
    order = rng.permutation(len(tubes))
    return [tubes[i] for i in order]


def synthesize_feature(p: Tube, gt: Tube, class_prototype: np.ndarray,
                       cfg: WorldConfig, rng: np.random.Generator) -> np.ndarray:
    """Feature embedding whose class evidence grows with ground-truth overlap.

    With q = tube overlap of the proposal against the planted tube, the
    feature is ``q * prototype + (1 - q) * noise``.
    """
    q = tube_iou(p, gt)
    noise = rng.normal(0.0, cfg.feature_noise, size=cfg.feature_dim)
    return q * np.asarray(class_prototype, dtype=np.float64) + (1.0 - q) * noise


def simulate_points(gt: Tube, rate: int, jitter: float, rng: np.random.Generator,
                    clamp: bool = True) -> PointTrack:
    """Simulated annotator clicks at every ``rate``-th frame of the tube.

    Each point is the box center plus Gaussian jitter scaled by ``jitter``
    times half the box diagonal; with ``clamp`` the point is kept inside
    the box, mimicking annotators who stay on the action.
    """
    if rate < 1:
        raise ValueError("rate must be >= 1")
    points = []
    for off in range(0, gt.n_frames, rate):
        bx, by, bw, bh = gt.boxes[off]
        px = bx + bw / 2.0
        py = by + bh / 2.0
        if jitter > 0:
            dx, dy = rng.normal(0.0, jitter * math.hypot(bw, bh) / 2.0, size=2)
            px, py = px + dx, py + dy
            if clamp:
                px = min(max(px, bx), bx + bw)
                py = min(max(py, by), by + bh)
        points.append(Point(frame=gt.start_frame + off, x=float(px), y=float(py)))
    return PointTrack(points)


def annotation_cost(n_frames: int, rate: int, cost: CostModel,
                    scheme: AnnotationScheme) -> tuple[float, float]:
    """Annotation seconds for one video and the speedup over boxing every frame.

    Time is one per-frame act on every ``rate``-th frame plus a constant
    per-video labelling cost; the speedup baseline is BOX at rate 1.
    """
    if rate < 1:
        raise ValueError("rate must be >= 1")
    per_frame = (cost.box_seconds_per_frame if scheme is AnnotationScheme.BOX
                 else cost.point_seconds_per_frame)
    seconds = math.ceil(n_frames / rate) * per_frame + cost.label_seconds_per_video
    baseline = n_frames * cost.box_seconds_per_frame + cost.label_seconds_per_video
    return seconds, baseline / seconds


@dataclass
class WorldData:
    """A generated dataset before serialization; feature rows are float32."""

    config: WorldConfig
    train_videos: list[VideoRecord]
    test_videos: list[VideoRecord]
    train_rows: dict[tuple[str, int], np.ndarray]
    test_rows: dict[tuple[str, int], np.ndarray]
    prototypes: np.ndarray


def _make_video(cfg: WorldConfig, split: str, c: int, i: int,
                prototype: np.ndarray, with_points: bool) -> tuple[VideoRecord, dict]:
    vid = f"{split}_c{c:02d}_v{i:03d}"
    vrng = stream(cfg.seed, "video", split, c, i)
    n_frames = int(vrng.integers(cfg.n_frames_range[0], cfg.n_frames_range[1] + 1))
    gt = generate_gt_tube(cfg, vrng, n_frames)
    proposals = generate_proposals(gt, cfg, vrng, n_frames)

    points: list[PointTrack] = []
    if with_points:
        prng = stream(cfg.seed, "points", split, c, i)
        points = [simulate_points(gt, cfg.annotation_rate, cfg.point_jitter,
                                  prng, cfg.clamp_points)]

    frng = stream(cfg.seed, "features", split, c, i)
    rows: dict[tuple[str, int], np.ndarray] = {}
    rows[(vid, gt_row_id(0))] = synthesize_feature(gt, gt, prototype, cfg, frng).astype(np.float32)
    for pid, p in enumerate(proposals):
        rows[(vid, pid)] = synthesize_feature(p, gt, prototype, cfg, frng).astype(np.float32)

    video = VideoRecord(id=vid, n_frames=n_frames, frame_w=cfg.frame_w,
                        frame_h=cfg.frame_h, label=c, gt_tubes=[gt],
                        proposals=proposals, points=points)
    return video, rows


def generate_world(cfg: WorldConfig) -> WorldData:
    """Generate the full train/test dataset for a configuration.

    Bitwise reproducible from the config (including its seed); videos are
    generated from per-video derived streams.
    """
    proto_rng = stream(cfg.seed, "prototypes")
    prototypes = proto_rng.normal(0.0, 1.0, size=(cfg.n_classes, cfg.feature_dim))
    prototypes /= np.linalg.norm(prototypes, axis=1, keepdims=True)

    splits = {"train": (cfg.train_videos_per_class, True),
              "test": (cfg.test_videos_per_class, False)}
    videos: dict[str, list[VideoRecord]] = {"train": [], "test": []}
    rows: dict[str, dict[tuple[str, int], np.ndarray]] = {"train": {}, "test": {}}
    for split, (count, with_points) in splits.items():
        for c in range(cfg.n_classes):
            for i in range(count):
                video, vrows = _make_video(cfg, split, c, i, prototypes[c], with_points)
                videos[split].append(video)
                rows[split].update(vrows)
    return WorldData(config=cfg, train_videos=videos["train"], test_videos=videos["test"],
                     train_rows=rows["train"], test_rows=rows["test"], prototypes=prototypes)
