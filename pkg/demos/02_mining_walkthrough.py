"""Mining one training proposal per video, under four supervision regimes.

Generates a small synthetic world and runs the alternating
select-then-retrain loop for one action class with:

- ground-truth features (upper bound),
- the best-overlap proposal per video (oracle selection),
- point annotations driving the prior (the interesting case),
- the video label alone (classic MIL baseline).

Prints how well the final selections overlap the planted action tracks.

Run:  python demos/02_mining_walkthrough.py   (about a minute)
"""

import numpy as np

from pointmil import (SupervisionMode, TrainConfig, WorldConfig, bundles_from_world,
                      generate_world, run_mil, tube_iou)


def selection_quality(videos, selections):
    by_id = {v.id: v for v in videos}
    got, best = [], []
    for vid, pid in selections.items():
        v = by_id[vid]
        tube = v.proposals[pid] if pid >= 0 else v.gt_tubes[-pid - 1]
        got.append(max(tube_iou(tube, g) for g in v.gt_tubes))
        best.append(max(max(tube_iou(p, g) for g in v.gt_tubes) for p in v.proposals))
    return float(np.mean(got)), float(np.mean(best))


def main():
    world_cfg = WorldConfig(n_classes=4, train_videos_per_class=12,
                            test_videos_per_class=4, proposals_per_video=60, seed=9)
    world = generate_world(world_cfg)
    train_b, _ = bundles_from_world(world)
    action = 0

    print("supervision        mean IoU of selections   best available")
    for mode in SupervisionMode:
        cfg = TrainConfig(seed=9, supervision=mode)
        _, selections = run_mil(train_b.videos, action, cfg, train_b.features)
        got, best = selection_quality(train_b.videos, selections)
        print(f"{mode.value:<18} {got:>23.3f} {best:>16.3f}")

    print("\nPoint supervision pins the selections to well-fitting tubes; the")
    print("label-only baseline has nothing to anchor its random start and")
    print("typically drifts to arbitrary proposals.")


if __name__ == "__main__":
    main()
