"""Affinity prior between point annotations and tube proposals.

A proposal is scored by how close its box centers are to the annotated
points (``center_bias``), discounted by how much of the video it covers
(``size_regularizer``). The difference of the two is the overlap measure
used to rank and filter training candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import PointTrack, Tube, VideoRecord

__all__ = [
    "OverlapScore",
    "center_bias",
    "best_center_bias",
    "size_regularizer",
    "overlap_measure",
    "filter_candidates",
]


@dataclass(frozen=True)
class OverlapScore:
    """Center-bias score m, size penalty s, and their difference o = m - s."""

    m: float
    s: float
    o: float

    def __post_init__(self) -> None:
        if self.o != self.m - self.s:
            raise ValueError("inconsistent overlap score: o must equal m - s")


def _as_tracks(c) -> "list[PointTrack]":
    if isinstance(c, PointTrack):
        return [c]
    tracks = list(c)
    if not tracks:
        raise ValueError("no supervision: at least one point track required")
    return tracks


def center_bias(a: Tube, c: PointTrack) -> float:
    """Mean per-point closeness of the annotated points to the proposal's
    box centers, in [0, 1].

    Each point contributes ``1 - dist(point, center) / corner_dist`` of the
    box on its frame, where ``corner_dist`` is the largest center-to-boundary
    distance. A point outside that box, or on a frame the tube does not
    cover, contributes 0.
    """
    if len(c) == 0:
        raise ValueError("no supervision: point track is empty")
    frames = c.frames
    in_extent = (frames >= a.start_frame) & (frames <= a.end_frame)
    if not in_extent.any():
        return 0.0
    boxes = a.boxes[frames[in_extent] - a.start_frame]
    px = c.coords[in_extent, 0]
    py = c.coords[in_extent, 1]
    bx, by, bw, bh = boxes.T
    inside = (px >= bx) & (px <= bx + bw) & (py >= by) & (py <= by + bh)
    cx = bx + bw / 2.0
    cy = by + bh / 2.0
    dist = np.hypot(px - cx, py - cy)
    corner = np.hypot(bw / 2.0, bh / 2.0)
    per_point = np.where(inside, np.maximum(0.0, 1.0 - dist / corner), 0.0)
    return float(per_point.sum() / len(c))


def best_center_bias(a: Tube, c) -> float:
    """Center bias against one track, or the max over several.

    Multi-instance videos carry one track per instance; a proposal is
    credited for the single instance it matches best, not the union.
    """
    return max(center_bias(a, track) for track in _as_tracks(c))


def size_regularizer(a: Tube, v: VideoRecord) -> float:
    """Squared ratio of total proposal box area to total video frame area."""
    if v.n_frames < 1:
        raise ValueError("video must have at least one frame")
    areas = a.boxes[:, 2] * a.boxes[:, 3]
    ratio = float(areas.sum()) / (v.n_frames * v.frame_area)
    return ratio * ratio


def overlap_measure(a: Tube, c, v: VideoRecord) -> OverlapScore:
    """Combined prior o = center_bias - size_regularizer (may be negative)."""
    m = best_center_bias(a, c)
    s = size_regularizer(a, v)
    return OverlapScore(m=m, s=s, o=m - s)


def filter_candidates(proposals: Sequence[Tube], c) -> list[int]:
    """Ids (list positions) of proposals with strictly positive center bias.

    Keeps exactly the proposals for which at least one annotated point lies
    inside one of their boxes, not exactly on a corner. Returns an empty
    list if nothing survives; callers decide how to handle that.
    """
    return [i for i, p in enumerate(proposals) if best_center_bias(p, c) > 0.0]
