"""Boxes, tubes, point annotations, and their spatio-temporal overlap.

Conventions used throughout the package:

- boxes are ``(x, y, w, h)`` with real-valued coordinates and ``w, h > 0``;
  area is continuous (``w * h``), not a pixel count
- frames are 1-based; a tube spans ``start_frame .. end_frame`` inclusive
- containment tests are boundary-inclusive
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundingBox",
    "Tube",
    "Point",
    "PointTrack",
    "VideoRecord",
    "box_center",
    "max_center_to_edge",
    "point_in_box",
    "frame_iou",
    "frame_iou_arrays",
    "tube_iou",
]

# Tolerance for "inside the frame" checks; clamped boxes sit exactly on edges.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with top-left corner (x, y) and positive size."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def clamped(cls, x: float, y: float, w: float, h: float,
                frame_w: float, frame_h: float) -> "BoundingBox":
        """Construct a box clipped to lie inside a frame of the given size."""
        w = min(float(w), float(frame_w))
        h = min(float(h), float(frame_h))
        x = min(max(float(x), 0.0), frame_w - w)
        y = min(max(float(y), 0.0), frame_h - h)
        return cls(x, y, w, h)

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)


@dataclass(eq=False)
class Tube:
    """A temporally contiguous track of per-frame boxes.

    ``boxes`` is an (L, 4) float array with one ``(x, y, w, h)`` row per
    frame, covering frames ``start_frame .. start_frame + L - 1``.
    """

    start_frame: int
    boxes: np.ndarray

    def __post_init__(self) -> None:
        boxes = np.ascontiguousarray(np.asarray(self.boxes, dtype=np.float64))
        if boxes.ndim != 2 or boxes.shape[1] != 4 or boxes.shape[0] == 0:
            raise ValueError(f"boxes must be a non-empty (L, 4) array, got shape {boxes.shape}")
        if int(self.start_frame) < 1:
            raise ValueError(f"start_frame must be >= 1, got {self.start_frame}")
        if np.any(boxes[:, 2] <= 0) or np.any(boxes[:, 3] <= 0):
            raise ValueError("all box sizes must be positive")
        boxes.setflags(write=False)
        self.boxes = boxes
        self.start_frame = int(self.start_frame)

    @classmethod
    def from_boxes(cls, start_frame: int, boxes: "list[BoundingBox]") -> "Tube":
        return cls(start_frame, np.array([b.as_array() for b in boxes]))

    @property
    def end_frame(self) -> int:
        return self.start_frame + len(self.boxes) - 1

    @property
    def n_frames(self) -> int:
        return len(self.boxes)

    def covers(self, frame: int) -> bool:
        return self.start_frame <= frame <= self.end_frame

    def box_at(self, frame: int) -> BoundingBox:
        if not self.covers(frame):
            raise KeyError(f"frame {frame} outside tube extent "
                           f"[{self.start_frame}, {self.end_frame}]")
        x, y, w, h = self.boxes[frame - self.start_frame]
        return BoundingBox(float(x), float(y), float(w), float(h))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tube):
            return NotImplemented
        return self.start_frame == other.start_frame and np.array_equal(self.boxes, other.boxes)


@dataclass(frozen=True)
class Point:
    """A single annotated point on a 1-based frame."""

    frame: int
    x: float
    y: float


class PointTrack:
    """Sparse per-frame point annotations for one action instance.

    Frames must be strictly increasing (at most one point per frame).
    """

    def __init__(self, points) -> None:
        pts = tuple(points)
        frames = np.array([p.frame for p in pts], dtype=np.int64)
        if len(frames) > 1 and np.any(np.diff(frames) <= 0):
            raise ValueError("point frames must be strictly increasing")
        xy = np.array([[p.x, p.y] for p in pts], dtype=np.float64).reshape(len(pts), 2)
        frames.setflags(write=False)
        xy.setflags(write=False)
        self.points = pts
        self._frames = frames
        self._xy = xy

    def __repr__(self) -> str:
        return f"PointTrack(points={self.points!r})"

    @property
    def frames(self) -> np.ndarray:
        return self._frames

    @property
    def coords(self) -> np.ndarray:
        return self._xy

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointTrack):
            return NotImplemented
        return self.points == other.points


@dataclass(eq=False)
class VideoRecord:
    """One video: ground-truth tubes, proposal tubes, and point annotations.

    Validates that every tube and point lies inside the video, both
    temporally (frames in ``[1, n_frames]``) and spatially.
    """

    id: str
    n_frames: int
    frame_w: float
    frame_h: float
    label: int
    gt_tubes: list[Tube]
    proposals: list[Tube]
    points: list[PointTrack]

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError(f"video {self.id}: n_frames must be >= 1")
        for kind, tubes in (("gt", self.gt_tubes), ("proposal", self.proposals)):
            for t in tubes:
                if t.start_frame < 1 or t.end_frame > self.n_frames:
                    raise ValueError(
                        f"video {self.id}: {kind} tube spans [{t.start_frame}, {t.end_frame}] "
                        f"outside [1, {self.n_frames}]")
                x, y, w, h = t.boxes.T
                if (np.any(x < -_EDGE_EPS) or np.any(y < -_EDGE_EPS)
                        or np.any(x + w > self.frame_w + _EDGE_EPS)
                        or np.any(y + h > self.frame_h + _EDGE_EPS)):
                    raise ValueError(f"video {self.id}: {kind} tube leaves the frame")
        for track in self.points:
            if len(track) == 0:
                continue
            if track.frames[0] < 1 or track.frames[-1] > self.n_frames:
                raise ValueError(f"video {self.id}: point outside [1, {self.n_frames}]")
            xy = track.coords
            if (np.any(xy[:, 0] < -_EDGE_EPS) or np.any(xy[:, 0] > self.frame_w + _EDGE_EPS)
                    or np.any(xy[:, 1] < -_EDGE_EPS) or np.any(xy[:, 1] > self.frame_h + _EDGE_EPS)):
                raise ValueError(f"video {self.id}: point outside the frame")

    @property
    def frame_area(self) -> float:
        return self.frame_w * self.frame_h

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VideoRecord):
            return NotImplemented
        return (self.id == other.id and self.n_frames == other.n_frames
                and self.frame_w == other.frame_w and self.frame_h == other.frame_h
                and self.label == other.label and self.gt_tubes == other.gt_tubes
                and self.proposals == other.proposals and self.points == other.points)


def box_center(b: BoundingBox) -> tuple[float, float]:
    """Center of a box."""
    return (b.x + b.w / 2.0, b.y + b.h / 2.0)


def max_center_to_edge(b: BoundingBox) -> float:
    """Largest distance from the box center to its boundary (a corner)."""
    return math.hypot(b.w / 2.0, b.h / 2.0)


def point_in_box(p: Point, b: BoundingBox) -> bool:
    """Boundary-inclusive containment test."""
    return (b.x <= p.x <= b.x + b.w) and (b.y <= p.y <= b.y + b.h)


def frame_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint.

    Areas are derived from the same rounded corner coordinates as the
    intersection, so identical boxes give exactly 1.0 and the ratio never
    exceeds 1 in floating point.
    """
    ax2, ay2 = a.x + a.w, a.y + a.h
    bx2, by2 = b.x + b.w, b.y + b.h
    ix = min(ax2, bx2) - max(a.x, b.x)
    iy = min(ay2, by2) - max(a.y, b.y)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter
    return inter / union


def frame_iou_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise box IoU over two broadcastable (..., 4) arrays.

    Arithmetically identical to :func:`frame_iou` applied elementwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ax2, ay2 = a[..., 0] + a[..., 2], a[..., 1] + a[..., 3]
    bx2, by2 = b[..., 0] + b[..., 2], b[..., 1] + b[..., 3]
    ix = np.minimum(ax2, bx2) - np.maximum(a[..., 0], b[..., 0])
    iy = np.minimum(ay2, by2) - np.maximum(a[..., 1], b[..., 1])
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    union = (ax2 - a[..., 0]) * (ay2 - a[..., 1]) + (bx2 - b[..., 0]) * (by2 - b[..., 1]) - inter
    return np.where(inter > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)


def tube_iou(a: Tube, b: Tube) -> float:
    """Spatio-temporal overlap of two tubes.

    Mean per-frame box IoU over all frames where at least one tube is
    present; a frame covered by only one tube contributes 0. The sum is
    correctly rounded (fsum), so it is independent of how zero-contribution
    frames are enumerated.
    """
    n_union = a.n_frames + b.n_frames
    lo = max(a.start_frame, b.start_frame)
    hi = min(a.end_frame, b.end_frame)
    if hi < lo:
        return 0.0
    n_common = hi - lo + 1
    n_union -= n_common
    boxes_a = a.boxes[lo - a.start_frame: hi - a.start_frame + 1]
    boxes_b = b.boxes[lo - b.start_frame: hi - b.start_frame + 1]
    return math.fsum(frame_iou_arrays(boxes_a, boxes_b)) / n_union
