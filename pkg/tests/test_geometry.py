import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointmil.geometry import (BoundingBox, Point, PointTrack, Tube, VideoRecord,
                               box_center, frame_iou, max_center_to_edge,
                               point_in_box, tube_iou)
from oracles import iou_rasterized, max_center_to_edge_sampled, tube_iou_enumerated

# coarse grid keeps "identical vs nearly identical" unambiguous in floats
coord = st.floats(-50, 50).map(lambda v: round(v, 3))
size = st.floats(0.1, 100).map(lambda v: round(v, 3) or 0.1)
boxes = st.builds(BoundingBox, x=coord, y=coord, w=size, h=size)


def random_tube(rng, n_frames=30, max_len=12):
    length = int(rng.integers(1, max_len + 1))
    start = int(rng.integers(1, n_frames - length + 2))
    b = rng.uniform(1, 20, size=(length, 4))
    b[:, :2] = rng.uniform(0, 60, size=(length, 2))
    return Tube(start, b)


class TestBoundingBox:
    def test_rejects_non_positive_size(self):
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 0, 10)
        with pytest.raises(ValueError):
            BoundingBox(0, 0, 10, -1)

    def test_clamped_stays_inside_frame(self):
        b = BoundingBox.clamped(-10, 90, 50, 30, frame_w=100, frame_h=100)
        assert b.x == 0 and b.y == 70
        assert b.x + b.w <= 100 and b.y + b.h <= 100

    def test_clamped_shrinks_oversized_box(self):
        b = BoundingBox.clamped(0, 0, 500, 500, frame_w=100, frame_h=80)
        assert (b.w, b.h) == (100, 80)


class TestBoxCenter:
    @pytest.mark.parametrize("box,expected", [
        ((0, 0, 100, 100), (50, 50)),
        ((10, 20, 40, 60), (30, 50)),
        ((0, 0, 1, 1), (0.5, 0.5)),
    ])
    def test_examples(self, box, expected):
        assert box_center(BoundingBox(*box)) == expected


class TestMaxCenterToEdge:
    def test_square(self):
        assert max_center_to_edge(BoundingBox(0, 0, 100, 100)) == pytest.approx(70.7107, abs=1e-4)

    def test_3_4_5_triangle(self):
        assert max_center_to_edge(BoundingBox(0, 0, 6, 8)) == 5.0

    def test_degenerate_height_limit(self):
        assert max_center_to_edge(BoundingBox(0, 0, 2, 0.0001)) == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("box", [(0, 0, 100, 100), (0, 0, 6, 8), (3, -7, 11.5, 2.25)])
    def test_matches_boundary_sampling(self, box):
        b = BoundingBox(*box)
        assert max_center_to_edge(b) == pytest.approx(max_center_to_edge_sampled(b), abs=1e-4)

    @given(boxes)
    def test_dominates_half_sides_and_equals_corner_distance(self, b):
        d = max_center_to_edge(b)
        assert d >= max(b.w, b.h) / 2
        assert d == math.hypot(b.w / 2, b.h / 2)


class TestPointInBox:
    def test_inside(self):
        assert point_in_box(Point(1, 50, 50), BoundingBox(0, 0, 100, 100))

    def test_boundary_inclusive(self):
        assert point_in_box(Point(1, 100, 50), BoundingBox(0, 0, 100, 100))

    def test_outside(self):
        assert not point_in_box(Point(1, 101, 50), BoundingBox(0, 0, 100, 100))


class TestFrameIou:
    def test_identical(self):
        assert frame_iou(BoundingBox(3, 4, 10, 12), BoundingBox(3, 4, 10, 12)) == 1.0

    def test_disjoint(self):
        assert frame_iou(BoundingBox(0, 0, 10, 10), BoundingBox(20, 20, 5, 5)) == 0.0

    def test_half_shift(self):
        got = frame_iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 10, 10))
        assert got == pytest.approx(50 / 150, abs=1e-9)

    def test_matches_rasterization_on_integer_boxes(self):
        rng = np.random.default_rng(1234)
        for _ in range(300):
            a = BoundingBox(*rng.integers(0, 15, size=2), *rng.integers(1, 20, size=2))
            b = BoundingBox(*rng.integers(0, 15, size=2), *rng.integers(1, 20, size=2))
            assert frame_iou(a, b) == pytest.approx(iou_rasterized(a, b), abs=1e-9)

    @given(boxes, boxes)
    def test_symmetric_and_bounded(self, a, b):
        v = frame_iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == frame_iou(b, a)

    @given(boxes, boxes)
    def test_equals_one_iff_identical(self, a, b):
        if frame_iou(a, b) == 1.0:
            assert (a.x, a.y, a.w, a.h) == (b.x, b.y, b.w, b.h)


class TestTubeIou:
    def test_identical(self):
        rng = np.random.default_rng(0)
        t = random_tube(rng)
        assert tube_iou(t, t) == 1.0

    def test_temporally_disjoint(self):
        a = Tube(1, np.tile([0.0, 0.0, 5.0, 5.0], (4, 1)))
        b = Tube(10, np.tile([0.0, 0.0, 5.0, 5.0], (4, 1)))
        assert tube_iou(a, b) == 0.0

    def test_partial_temporal_overlap(self):
        boxes = np.tile([2.0, 3.0, 8.0, 6.0], (4, 1))
        p = Tube(1, boxes)
        b = Tube(1, boxes[:2])
        assert tube_iou(p, b) == pytest.approx(0.5)

    def test_matches_enumeration_exactly(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            a, b = random_tube(rng), random_tube(rng)
            assert tube_iou(a, b) == tube_iou_enumerated(a, b)

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b = random_tube(rng), random_tube(rng)
            assert tube_iou(a, b) == tube_iou(b, a)
            s = float(rng.uniform(0.2, 8.0))
            a2 = Tube(a.start_frame, a.boxes * s)
            b2 = Tube(b.start_frame, b.boxes * s)
            assert tube_iou(a2, b2) == pytest.approx(tube_iou(a, b), abs=1e-12)


class TestTube:
    def test_end_frame_and_box_lookup(self):
        t = Tube(5, np.array([[0.0, 0.0, 2.0, 2.0], [1.0, 1.0, 2.0, 2.0]]))
        assert t.end_frame == 6
        assert t.box_at(6) == BoundingBox(1, 1, 2, 2)
        with pytest.raises(KeyError):
            t.box_at(7)

    def test_rejects_empty_or_bad_boxes(self):
        with pytest.raises(ValueError):
            Tube(1, np.zeros((0, 4)))
        with pytest.raises(ValueError):
            Tube(0, np.ones((2, 4)))
        with pytest.raises(ValueError):
            Tube(1, np.array([[0.0, 0.0, 0.0, 1.0]]))

    def test_boxes_read_only(self):
        t = Tube(1, np.ones((2, 4)))
        with pytest.raises(ValueError):
            t.boxes[0, 0] = 5.0


class TestPointTrack:
    def test_requires_increasing_frames(self):
        with pytest.raises(ValueError):
            PointTrack([Point(3, 0, 0), Point(3, 1, 1)])
        with pytest.raises(ValueError):
            PointTrack([Point(5, 0, 0), Point(2, 1, 1)])

    def test_arrays(self):
        tr = PointTrack([Point(2, 1.5, 2.5), Point(9, 3.0, 4.0)])
        assert tr.frames.tolist() == [2, 9]
        assert tr.coords.tolist() == [[1.5, 2.5], [3.0, 4.0]]


class TestVideoRecord:
    def _video(self, **kw):
        args = dict(id="v0", n_frames=10, frame_w=100.0, frame_h=80.0, label=0,
                    gt_tubes=[Tube(1, np.tile([10.0, 10.0, 20.0, 20.0], (5, 1)))],
                    proposals=[], points=[])
        args.update(kw)
        return VideoRecord(**args)

    def test_valid(self):
        v = self._video()
        assert v.frame_area == 8000.0

    def test_rejects_tube_outside_video(self):
        with pytest.raises(ValueError):
            self._video(gt_tubes=[Tube(8, np.tile([0.0, 0.0, 5.0, 5.0], (5, 1)))])

    def test_rejects_box_outside_frame(self):
        with pytest.raises(ValueError):
            self._video(gt_tubes=[Tube(1, np.tile([90.0, 0.0, 20.0, 5.0], (2, 1)))])

    def test_rejects_point_outside_frame(self):
        with pytest.raises(ValueError):
            self._video(points=[PointTrack([Point(1, 200.0, 5.0)])])
