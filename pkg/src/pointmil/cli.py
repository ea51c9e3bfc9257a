"""Command-line entry points.

Verbs:

- ``synth``  generate a synthetic dataset (train/ and test/ splits)
- ``mine``   run the mining loop per class on the train split
- ``eval``   score saved models on the test split
- ``run``    full experiment: mine + evaluate + export
- ``sweep``  frame-rate sweep with regenerated point annotations
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .evaluation import DEFAULT_THRESHOLDS, build_report
from .mining import SupervisionMode, TrainConfig
from .pipeline import (ExperimentSpec, load_dataset, load_model, mine_all_classes,
                       run_experiment, save_model, save_world, sweep_framerates,
                       write_report_csv, write_selection_log)
from .synthworld import CostModel, WorldConfig, generate_world


def _add_world_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("world")
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--train-videos", type=int, default=30, metavar="N",
                   help="train videos per class")
    g.add_argument("--test-videos", type=int, default=20, metavar="N",
                   help="test videos per class")
    g.add_argument("--frames", type=int, nargs=2, default=(120, 200),
                   metavar=("MIN", "MAX"))
    g.add_argument("--frame-size", type=float, nargs=2, default=(320.0, 240.0),
                   metavar=("W", "H"))
    g.add_argument("--proposals", type=int, default=100, help="proposals per video")
    g.add_argument("--spatial-jitter", type=float, default=0.35)
    g.add_argument("--scale-jitter", type=float, default=0.30)
    g.add_argument("--temporal-crop", type=float, default=0.6)
    g.add_argument("--distractor-fraction", type=float, default=0.4)
    g.add_argument("--feature-dim", type=int, default=64)
    g.add_argument("--feature-noise", type=float, default=0.1)
    g.add_argument("--point-jitter", type=float, default=0.0)
    g.add_argument("--rate", type=int, default=1, help="annotation frame-rate")


def _world_config(args: argparse.Namespace) -> WorldConfig:
    return WorldConfig(
        n_classes=args.classes,
        train_videos_per_class=args.train_videos,
        test_videos_per_class=args.test_videos,
        n_frames_range=tuple(args.frames),
        frame_w=args.frame_size[0],
        frame_h=args.frame_size[1],
        proposals_per_video=args.proposals,
        spatial_jitter=args.spatial_jitter,
        scale_jitter=args.scale_jitter,
        temporal_crop=args.temporal_crop,
        distractor_fraction=args.distractor_fraction,
        feature_dim=args.feature_dim,
        feature_noise=args.feature_noise,
        point_jitter=args.point_jitter,
        annotation_rate=args.rate,
        seed=args.seed,
    )


def _add_train_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--mode", choices=[m.value for m in SupervisionMode],
                   default=SupervisionMode.POINTS.value)
    g.add_argument("--iterations", type=int, default=10)
    g.add_argument("--folds", type=int, default=3)
    g.add_argument("--negatives", type=int, default=100,
                   help="negatives sampled per other-class video")
    g.add_argument("--lam", type=float, default=100.0, help="hinge loss weight")
    g.add_argument("--epochs", type=int, default=50, help="SGD epochs per fit")


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        max_iterations=args.iterations,
        n_folds=args.folds,
        negatives_per_video=args.negatives,
        lam=args.lam,
        seed=args.seed,
        supervision=SupervisionMode(args.mode),
        sgd_epochs=args.epochs,
    )


def _add_eval_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("evaluation")
    g.add_argument("--thresholds", type=float, nargs="+", default=list(DEFAULT_THRESHOLDS))
    g.add_argument("--top-k", type=int, default=10)
    g.add_argument("--interpolated-ap", action="store_true",
                   help="use the interpolated precision envelope")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointmil",
                                     description="point-supervised action proposal mining")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_world_args(p)

    p = sub.add_parser("mine", help="mine proposals and train per-class models")
    p.add_argument("--data", type=Path, required=True, help="dataset root (train/ inside)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_train_args(p)

    p = sub.add_parser("eval", help="evaluate saved models on the test split")
    p.add_argument("--data", type=Path, required=True, help="dataset root (test/ inside)")
    p.add_argument("--models", type=Path, required=True, help="directory of .model files")
    p.add_argument("--out", type=Path, required=True)
    _add_eval_args(p)

    p = sub.add_parser("run", help="full experiment: mine + evaluate + export")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    _add_train_args(p)
    _add_eval_args(p)

    p = sub.add_parser("sweep", help="annotation frame-rate sweep on a synthetic world")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rates", type=int, nargs="+", default=[1, 2, 5, 10, 25])
    p.add_argument("--box-seconds", type=float, default=3.0)
    p.add_argument("--point-seconds", type=float, default=0.25)
    p.add_argument("--label-seconds", type=float, default=5.0)
    _add_world_args(p)
    _add_train_args(p)
    _add_eval_args(p)
    return parser


def _cmd_synth(args: argparse.Namespace) -> int:
    world = generate_world(_world_config(args))
    save_world(world, args.out)
    print(f"wrote {len(world.train_videos)} train / {len(world.test_videos)} test videos "
          f"to {args.out}")
    return 0


def _cmd_mine(args: argparse.Namespace) -> int:
    bundle = load_dataset(args.data / "train")
    models, selection_rows = mine_all_classes(bundle.videos, bundle.features,
                                              _train_config(args))
    out = args.out
    (out / "models").mkdir(parents=True, exist_ok=True)
    for c, model in models.items():
        save_model(model, out / "models" / f"class_{c:03d}.model")
    write_selection_log(selection_rows, out / "selections.tsv")
    print(f"mined {len(models)} classes; models and selections.tsv in {out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    bundle = load_dataset(args.data / "test")
    models = {}
    for path in sorted(args.models.glob("*.model")):
        c = int(path.stem.removeprefix("class_"))
        models[c] = load_model(path)
    if not models:
        raise FileNotFoundError(f"no .model files in {args.models}")
    report = build_report(bundle.videos, bundle.features, models,
                          tuple(args.thresholds), args.top_k, args.interpolated_ap)
    args.out.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, args.out / "report.csv")
    print(report.format_table())
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    spec = ExperimentSpec(dataset=args.data, cfg=_train_config(args), out_dir=args.out,
                          thresholds=tuple(args.thresholds), top_k=args.top_k,
                          interpolated_ap=args.interpolated_ap)
    run_experiment(spec)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cost = CostModel(box_seconds_per_frame=args.box_seconds,
                     point_seconds_per_frame=args.point_seconds,
                     label_seconds_per_video=args.label_seconds)
    rows = sweep_framerates(_world_config(args), _train_config(args), args.rates,
                            out_dir=args.out, thresholds=tuple(args.thresholds),
                            top_k=args.top_k, cost=cost)
    for rate, speedup, m02, m05 in rows:
        print(f"rate={rate:<3d} speedup={speedup:7.2f} mAP@0.2={m02:.3f} mAP@0.5={m05:.3f}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "mine": _cmd_mine,
    "eval": _cmd_eval,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.verb](args)
    except Exception as e:  # CLI boundary: fail with a diagnostic, not a traceback
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
