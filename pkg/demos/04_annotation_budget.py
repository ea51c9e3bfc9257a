"""The annotation-cost trade-off: points vs boxes, dense vs sparse.

First prints the cost model's raw numbers (seconds per video and speedup
over boxing every frame), then runs the frame-rate sweep on a small
synthetic world to show that sparse point annotation retains localization
quality while cutting annotation time by more than an order of magnitude.

Run:  python demos/04_annotation_budget.py   (a few minutes)
"""

from pointmil import (AnnotationScheme, CostModel, SupervisionMode, TrainConfig,
                      WorldConfig, annotation_cost, sweep_framerates)


def main():
    cost = CostModel()  # box 3.0 s/frame, point 0.25 s/frame, label 5 s/video
    n_frames = 160

    print(f"annotating one {n_frames}-frame video:")
    print(f"{'scheme':<8} {'rate':>4} {'seconds':>9} {'speedup':>9}")
    for scheme in (AnnotationScheme.BOX, AnnotationScheme.POINT):
        for rate in (1, 10):
            seconds, speedup = annotation_cost(n_frames, rate, cost, scheme)
            print(f"{scheme.value:<8} {rate:>4} {seconds:>9.1f} {speedup:>8.1f}x")

    print("\nframe-rate sweep on a synthetic world (point supervision):")
    world_cfg = WorldConfig(n_classes=3, train_videos_per_class=10,
                            test_videos_per_class=6, proposals_per_video=50, seed=13)
    cfg = TrainConfig(seed=13, supervision=SupervisionMode.POINTS)
    rows = sweep_framerates(world_cfg, cfg, rates=(1, 5, 10, 25), cost=cost)
    print(f"{'rate':>4} {'speedup':>9} {'mAP@0.2':>9} {'mAP@0.5':>9}")
    for rate, speedup, m02, m05 in rows:
        print(f"{rate:>4} {speedup:>8.1f}x {m02:>9.3f} {m05:>9.3f}")


if __name__ == "__main__":
    main()
