import numpy as np
import pytest

from pointmil.classifier import LinearModel
from pointmil.evaluation import (Detection, abo, auc_roc, average_precision, best_overlaps,
                                 build_report, mabo, rank_and_match, recall_curve)
from pointmil.geometry import Tube, VideoRecord
from pointmil.pipeline import FeatureStore
from oracles import ap_brute, auc_brute


def det(score, positive, vid="v0", pid=0):
    return Detection(vid, pid, score, 0 if positive else None, 1.0 if positive else 0.0)


def constant_tube(start, length, box):
    return Tube(start, np.tile(np.asarray(box, dtype=float), (length, 1)))


def make_video(vid, label, gt_boxes, proposal_boxes, n_frames=10):
    gt = [constant_tube(1, n_frames, b) for b in gt_boxes]
    props = [constant_tube(1, n_frames, b) for b in proposal_boxes]
    return VideoRecord(id=vid, n_frames=n_frames, frame_w=100.0, frame_h=100.0,
                       label=label, gt_tubes=gt, proposals=props, points=[])


def identity_store(videos, dim=2):
    """Feature equal to (score_seed, 1) so a fixed model ranks by construction."""
    rows = {}
    for v in videos:
        for pid in range(len(v.proposals)):
            rows[(v.id, pid)] = np.array([float(pid), 1.0], dtype=np.float32)
    return FeatureStore.from_rows(rows)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision([det(2, True), det(1, True)], n_gt=2) == 1.0

    def test_interleaved(self):
        dets = [det(3, True, pid=0), det(2, False, pid=1), det(1, True, pid=2)]
        assert average_precision(dets, n_gt=2) == pytest.approx((1.0 + 2 / 3) / 2)

    def test_all_misses(self):
        assert average_precision([det(2, False), det(1, False, pid=1)], n_gt=1) == 0.0

    def test_unmatched_gt_counts_as_miss(self):
        assert average_precision([det(1, True)], n_gt=4) == pytest.approx(0.25)

    def test_requires_gt(self):
        with pytest.raises(ValueError):
            average_precision([det(1, True)], n_gt=0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(21)
        for _ in range(300):
            n = int(rng.integers(1, 30))
            scores = rng.permutation(n).astype(float)  # distinct scores
            flags = rng.uniform(size=n) < 0.4
            n_gt = int(flags.sum() + rng.integers(1, 4))
            dets = [det(float(s), bool(f), pid=i) for i, (s, f) in enumerate(zip(scores, flags))]
            order = np.argsort(-scores)
            assert average_precision(dets, n_gt) == pytest.approx(
                ap_brute([bool(flags[i]) for i in order], n_gt), abs=1e-12)

    def test_invariant_under_monotone_score_transform(self):
        rng = np.random.default_rng(22)
        scores = rng.normal(size=20)
        flags = rng.uniform(size=20) < 0.5
        flags[0] = True
        dets = [det(float(s), bool(f), pid=i) for i, (s, f) in enumerate(zip(scores, flags))]
        dets2 = [det(float(np.exp(3 * s)), bool(f), pid=i)
                 for i, (s, f) in enumerate(zip(scores, flags))]
        assert average_precision(dets, 12) == pytest.approx(average_precision(dets2, 12))

    def test_interpolated_at_least_raw(self):
        rng = np.random.default_rng(23)
        scores = rng.normal(size=25)
        flags = rng.uniform(size=25) < 0.5
        flags[0] = True
        dets = [det(float(s), bool(f), pid=i) for i, (s, f) in enumerate(zip(scores, flags))]
        assert average_precision(dets, 15, interpolated=True) >= average_precision(dets, 15)


class TestAucRoc:
    def test_separated(self):
        dets = [det(3, True), det(2, True, pid=1), det(1, False, pid=2)]
        assert auc_roc(dets) == 1.0

    def test_all_tied_is_half(self):
        dets = [det(1, True), det(1, False, pid=1), det(1, True, pid=2), det(1, False, pid=3)]
        assert auc_roc(dets) == 0.5

    def test_pairwise_example(self):
        # pairs: (3 vs 2) wins, (1 vs 2) loses -> (1 + 0) / 2
        dets = [det(3, True), det(1, True, pid=1), det(2, False, pid=2)]
        expected = auc_brute([3.0, 1.0], [2.0])
        assert expected == 0.5
        assert auc_roc(dets) == pytest.approx(expected, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc_roc([det(1, True), det(2, True, pid=1)])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(24)
        for _ in range(200):
            n_pos = int(rng.integers(1, 12))
            n_neg = int(rng.integers(1, 12))
            # quantized scores so ties occur
            sp = np.round(rng.normal(size=n_pos), 1)
            sn = np.round(rng.normal(size=n_neg), 1)
            dets = ([det(float(s), True, pid=i) for i, s in enumerate(sp)]
                    + [det(float(s), False, pid=100 + i) for i, s in enumerate(sn)])
            assert auc_roc(dets) == pytest.approx(auc_brute(sp, sn), abs=1e-12)

    def test_invariant_under_monotone_score_transform(self):
        rng = np.random.default_rng(25)
        sp = rng.normal(size=8)
        sn = rng.normal(size=9)
        d1 = ([det(float(s), True, pid=i) for i, s in enumerate(sp)]
              + [det(float(s), False, pid=50 + i) for i, s in enumerate(sn)])
        d2 = ([det(float(np.tanh(s) * 7), True, pid=i) for i, s in enumerate(sp)]
              + [det(float(np.tanh(s) * 7), False, pid=50 + i) for i, s in enumerate(sn)])
        assert auc_roc(d1) == pytest.approx(auc_roc(d2), abs=1e-12)


class TestAboMabo:
    def test_exact_proposals(self):
        gts = [constant_tube(1, 5, [10, 10, 20, 20]), constant_tube(2, 6, [40, 40, 10, 10])]
        assert abo(gts, list(gts)) == 1.0

    def test_single_value(self):
        gt = constant_tube(1, 5, [10, 10, 20, 20])
        prop = constant_tube(1, 5, [12, 10, 20, 20])
        assert abo([gt], [prop]) == pytest.approx(18 / 22)

    def test_mabo_mean(self):
        assert mabo({0: 0.4, 1: 0.6}) == pytest.approx(0.5)
        assert mabo([0.4, 0.6]) == pytest.approx(0.5)

    def test_needs_gt(self):
        with pytest.raises(ValueError):
            abo([], [constant_tube(1, 2, [0, 0, 5, 5])])


class TestRecallCurve:
    def test_simple_split(self):
        gt1 = constant_tube(1, 10, [10, 10, 30, 30])
        gt2 = constant_tube(1, 10, [60, 60, 30, 30])
        p1 = constant_tube(1, 3, [10, 10, 30, 30])   # IoU 0.3 (temporal crop)
        p2 = constant_tube(1, 7, [60, 60, 30, 30])   # IoU 0.7
        curve = dict(recall_curve([gt1, gt2], [p1, p2], [0.5]))
        assert curve[0.5] == pytest.approx(0.5)

    def test_threshold_zero_matches_all(self):
        gt = constant_tube(1, 4, [0, 0, 10, 10])
        far = constant_tube(1, 4, [80, 80, 10, 10])
        assert recall_curve([gt], [far], [0.0])[0][1] == 1.0

    def test_monotone_non_increasing(self):
        rng = np.random.default_rng(26)
        for _ in range(30):
            gts = [constant_tube(1, int(rng.integers(2, 8)),
                                 [rng.uniform(0, 50), rng.uniform(0, 50), 20, 20])
                   for _ in range(4)]
            props = [constant_tube(int(rng.integers(1, 4)), int(rng.integers(2, 6)),
                                   [rng.uniform(0, 50), rng.uniform(0, 50), 20, 20])
                     for _ in range(6)]
            ts = np.linspace(0.0, 0.9, 10)
            rec = [r for _, r in recall_curve(gts, props, ts)]
            assert all(a >= b for a, b in zip(rec, rec[1:]))

    def test_requires_sorted_thresholds(self):
        gt = constant_tube(1, 4, [0, 0, 10, 10])
        with pytest.raises(ValueError):
            recall_curve([gt], [gt], [0.5, 0.2])


class TestRankAndMatch:
    def _model(self):
        # score = proposal id (features are (pid, 1)); bias separates nothing
        return LinearModel(np.array([1.0, 0.0]), 0.0, 1.0)

    def test_exact_proposal_is_positive(self):
        v = make_video("v0", 0, [[10, 10, 20, 20]], [[10, 10, 20, 20]])
        dets = rank_and_match([v], identity_store([v]), self._model(), 0, 0.5, 10)
        assert len(dets) == 1 and dets[0].positive and dets[0].iou == 1.0

    def test_greedy_claims_gt_once(self):
        v = make_video("v0", 0, [[10, 10, 20, 20]],
                       [[11, 10, 20, 20], [10, 10, 20, 20]])
        dets = rank_and_match([v], identity_store([v]), self._model(), 0, 0.5, 10)
        # pid 1 scores higher, claims the gt; pid 0 overlaps but the gt is taken
        assert dets[0].proposal_id == 1 and dets[0].positive
        assert not dets[1].positive and dets[1].iou == 0.0

    def test_threshold_is_inclusive_lower_bound(self):
        v = make_video("v0", 0, [[10, 10, 20, 20]], [[10, 10, 20, 20]])
        store = identity_store([v])
        up = rank_and_match([v], store, self._model(), 0, 0.999, 10)
        assert up[0].positive  # IoU 1.0 >= t
        with pytest.raises(ValueError):
            rank_and_match([v], store, self._model(), 0, 1.0, 10)

    def test_below_threshold_is_negative(self):
        v = make_video("v0", 0, [[10, 10, 20, 20]], [[20, 10, 20, 20]])  # IoU ~ 1/3
        dets = rank_and_match([v], identity_store([v]), self._model(), 0, 0.4, 10)
        assert len(dets) == 1 and not dets[0].positive
        assert dets[0].iou == pytest.approx(1 / 3, abs=1e-9)

    def test_other_class_videos_are_negatives(self):
        v0 = make_video("v0", 0, [[10, 10, 20, 20]], [[10, 10, 20, 20]])
        v1 = make_video("v1", 1, [[10, 10, 20, 20]], [[10, 10, 20, 20]])
        dets = rank_and_match([v0, v1], identity_store([v0, v1]), self._model(), 0, 0.5, 10)
        flags = {d.video_id: d.positive for d in dets}
        assert flags == {"v0": True, "v1": False}

    def test_top_k_limits_per_video(self):
        v = make_video("v0", 0, [[10, 10, 20, 20]],
                       [[10, 10, 20, 20] for _ in range(7)])
        dets = rank_and_match([v], identity_store([v]), self._model(), 0, 0.5, 3)
        assert len(dets) == 3
        assert [d.proposal_id for d in dets] == [6, 5, 4]

    def test_unbounded_top_k_matches_every_gt_at_zero_threshold(self):
        v = make_video("v0", 0, [[10, 10, 20, 20], [60, 60, 20, 20]],
                       [[10, 10, 20, 20], [60, 60, 20, 20], [0, 0, 5, 5]])
        dets = rank_and_match([v], identity_store([v]), self._model(), 0, 0.0, None)
        assert sum(d.positive for d in dets) == 2


class TestBuildReport:
    def test_report_structure_and_bounds(self):
        videos = [make_video(f"v{i}", i % 2, [[10, 10, 20, 20]],
                             [[10, 10, 20, 20], [50, 50, 10, 10]]) for i in range(6)]
        store = identity_store(videos)
        models = {0: LinearModel(np.array([1.0, 0.0]), 0.0, 1.0),
                  1: LinearModel(np.array([-1.0, 0.0]), 0.0, 1.0)}
        report = build_report(videos, store, models, (0.2, 0.5), top_k=2)
        assert report.classes == (0, 1)
        for (c, t), v in report.ap.items():
            assert 0.0 <= v <= 1.0
        assert 0.0 <= report.mabo <= 1.0
        rows = report.to_rows()
        assert ("mean", "0.2", "map", report.mean_ap(0.2)) in rows
        table = report.format_table()
        assert "ap@0.2" in table and "mAP" in table

    def test_ap_never_exceeds_achievable_recall(self):
        videos = [make_video(f"v{i}", 0, [[10, 10, 20, 20]],
                             [[10 + 4 * i, 10, 20, 20], [70, 70, 10, 10]])
                  for i in range(5)]
        store = identity_store(videos)
        model = LinearModel(np.array([1.0, 0.0]), 0.0, 1.0)
        for t in (0.2, 0.5):
            dets = rank_and_match(videos, store, model, 0, t, 10)
            n_gt = 5
            matched = sum(d.positive for d in dets)
            assert average_precision(dets, n_gt) <= matched / n_gt + 1e-12

    def test_best_overlaps_stays_within_video(self):
        v0 = make_video("v0", 0, [[10, 10, 20, 20]], [[70, 70, 10, 10]])
        v1 = make_video("v1", 0, [[70, 70, 10, 10]], [[70, 70, 10, 10]])
        best = best_overlaps([v0, v1], 0)
        assert best.tolist() == [0.0, 1.0]
