"""The evaluation protocol: ranked detections, AP, AUC, ABO, and recall.

Trains one detector per class on a small synthetic world (using point
supervision), evaluates it on the held-out split across IoU thresholds,
and prints the report table plus the proposal-quality metrics that do not
depend on any model.

Run:  python demos/03_detection_metrics.py   (about a minute)
"""

from pointmil import (DEFAULT_THRESHOLDS, SupervisionMode, TrainConfig, WorldConfig,
                      best_overlaps, build_report, bundles_from_world, generate_world,
                      rank_and_match, recall_curve)
from pointmil.pipeline import mine_all_classes


def main():
    world = generate_world(WorldConfig(n_classes=3, train_videos_per_class=10,
                                       test_videos_per_class=6,
                                       proposals_per_video=50, seed=5))
    train_b, test_b = bundles_from_world(world)
    cfg = TrainConfig(seed=5, supervision=SupervisionMode.POINTS)
    models, _ = mine_all_classes(train_b.videos, train_b.features, cfg)

    report = build_report(test_b.videos, test_b.features, models,
                          thresholds=DEFAULT_THRESHOLDS, top_k=10)
    print(report.format_table())

    # the top of the pooled ranking for class 0 at the headline threshold
    dets = rank_and_match(test_b.videos, test_b.features, models[0], 0,
                          threshold=0.2, top_k=10)
    print("\ntop 5 detections for class 0 at IoU 0.2:")
    for d in dets[:5]:
        flag = "positive" if d.positive else "negative"
        print(f"  {d.video_id} proposal {d.proposal_id:>3d} "
              f"score {d.score:>7.2f} IoU {d.iou:.2f} {flag}")

    # proposal quality alone, no classifier involved
    best = best_overlaps(test_b.videos, 0)
    gts = [g for v in test_b.videos if v.label == 0 for g in v.gt_tubes]
    props = [p for v in test_b.videos if v.label == 0 for p in v.proposals]
    curve = recall_curve(gts, props, [0.2, 0.5])
    print(f"\nclass 0 proposal quality: ABO {best.mean():.3f}, "
          + ", ".join(f"recall@{t:g} {r:.2f}" for t, r in curve))


if __name__ == "__main__":
    main()
