"""Dataset serialization, experiment orchestration, and result export.

On-disk layout of one dataset split:

- ``manifest.txt``    key = value lines (dataset id, split, config hash,
                      video/row counts, feature dimension)
- ``videos.jsonl``    one JSON object per video: id, label, n_frames,
                      frame dims, gt tubes / proposals as
                      ``{"id": int, "f": start, "boxes": [[x,y,w,h], ...]}``,
                      point tracks as ``[[frame, x, y], ...]``
- ``features.bin``    little-endian float32, row-major, rows sorted by
                      (video id, proposal id); ground-truth rows use
                      negative ids
- ``features.idx``    text index mapping (video id, proposal id) -> row

Model files carry one text header line (dimension and regularization)
followed by bias and weights in the same float32 convention.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifier import LinearModel
from .evaluation import DEFAULT_THRESHOLDS, EvalReport, build_report
from .geometry import Point, PointTrack, Tube, VideoRecord, tube_iou
from .mining import TrainConfig, run_mil
from .overlap import overlap_measure
from .synthworld import (AnnotationScheme, CostModel, WorldConfig, WorldData,
                         annotation_cost, generate_world)

__all__ = [
    "DatasetFormatError",
    "FeatureStore",
    "DatasetBundle",
    "ExperimentSpec",
    "save_dataset",
    "load_dataset",
    "bundles_from_world",
    "save_world",
    "save_model",
    "load_model",
    "mine_all_classes",
    "run_experiment",
    "sweep_framerates",
    "write_report_csv",
    "write_selection_log",
]

log = logging.getLogger(__name__)

_MODEL_MAGIC = "pointmil-linear-model"


class DatasetFormatError(ValueError):
    """A dataset or model file violates the expected schema."""


class FeatureStore:
    """Feature matrix indexed by (video id, proposal id).

    Rows are float32 at rest; lookups return float64 copies for numerics.
    """

    def __init__(self, keys: Sequence[tuple[str, int]], matrix: np.ndarray):
        matrix = np.ascontiguousarray(np.asarray(matrix, dtype=np.float32))
        if matrix.ndim != 2:
            raise DatasetFormatError(f"feature matrix must be 2-D, got shape {matrix.shape}")
        if len(keys) != len(matrix):
            raise DatasetFormatError(
                f"index has {len(keys)} keys but matrix has {len(matrix)} rows")
        self._keys = [(str(v), int(p)) for v, p in keys]
        if self._keys != sorted(self._keys):
            raise DatasetFormatError("feature rows must be sorted by (video id, proposal id)")
        self._matrix = matrix
        self._matrix.setflags(write=False)
        self._row_of = {k: r for r, k in enumerate(self._keys)}
        if len(self._row_of) != len(self._keys):
            raise DatasetFormatError("duplicate (video id, proposal id) in feature index")

    @classmethod
    def from_rows(cls, rows: Mapping[tuple[str, int], np.ndarray]) -> "FeatureStore":
        keys = sorted(rows)
        if not keys:
            return cls([], np.zeros((0, 0), dtype=np.float32))
        matrix = np.stack([np.asarray(rows[k], dtype=np.float32) for k in keys])
        return cls(keys, matrix)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def keys(self) -> list[tuple[str, int]]:
        return list(self._keys)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: tuple[str, int]) -> bool:
        return (str(key[0]), int(key[1])) in self._row_of

    def row(self, video_id: str, proposal_id: int) -> np.ndarray:
        return self.rows(video_id, [proposal_id])[0]

    def rows(self, video_id: str, proposal_ids: Iterable[int]) -> np.ndarray:
        try:
            idx = [self._row_of[(video_id, int(p))] for p in proposal_ids]
        except KeyError as e:
            raise KeyError(f"no feature row for video {video_id!r}, proposal {e.args[0][1]}")
        return self._matrix[idx].astype(np.float64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureStore):
            return NotImplemented
        return self._keys == other._keys and np.array_equal(self._matrix, other._matrix)


@dataclass(eq=False)
class DatasetBundle:
    """One dataset split: manifest, videos, and their feature store."""

    manifest: dict[str, str]
    videos: list[VideoRecord]
    features: FeatureStore

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetBundle):
            return NotImplemented
        return (self.manifest == other.manifest and self.videos == other.videos
                and self.features == other.features)


def config_hash(cfg: WorldConfig) -> str:
    return hashlib.sha256(repr(cfg).encode("utf-8")).hexdigest()[:16]


def _video_to_obj(v: VideoRecord) -> dict:
    return {
        "id": v.id,
        "label": int(v.label),
        "n_frames": int(v.n_frames),
        "frame_w": float(v.frame_w),
        "frame_h": float(v.frame_h),
        "gt_tubes": [{"f": t.start_frame, "boxes": t.boxes.tolist()} for t in v.gt_tubes],
        "proposals": [{"id": i, "f": t.start_frame, "boxes": t.boxes.tolist()}
                      for i, t in enumerate(v.proposals)],
        "points": [[[int(p.frame), float(p.x), float(p.y)] for p in track]
                   for track in v.points],
    }


def _video_from_obj(obj: dict, where: str) -> VideoRecord:
    try:
        proposals = []
        for slot, item in enumerate(obj["proposals"]):
            if int(item["id"]) != slot:
                raise DatasetFormatError(
                    f"{where}: proposal ids must be consecutive from 0, got {item['id']}")
            proposals.append(Tube(int(item["f"]), np.array(item["boxes"], dtype=np.float64)))
        gt = [Tube(int(item["f"]), np.array(item["boxes"], dtype=np.float64))
              for item in obj["gt_tubes"]]
        points = [PointTrack([Point(int(f), float(x), float(y)) for f, x, y in track])
                  for track in obj["points"]]
        return VideoRecord(id=str(obj["id"]), n_frames=int(obj["n_frames"]),
                           frame_w=float(obj["frame_w"]), frame_h=float(obj["frame_h"]),
                           label=int(obj["label"]), gt_tubes=gt, proposals=proposals,
                           points=points)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DatasetFormatError):
            raise
        raise DatasetFormatError(f"{where}: malformed video record: {e}") from e


def save_dataset(bundle: DatasetBundle, directory: str | Path) -> None:
    """Write a split to a directory; see the module docstring for the layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "manifest.txt", "w", newline="\n") as fh:
        for key in sorted(bundle.manifest):
            fh.write(f"{key} = {bundle.manifest[key]}\n")
    with open(directory / "videos.jsonl", "w", newline="\n") as fh:
        for v in bundle.videos:
            fh.write(json.dumps(_video_to_obj(v), separators=(",", ":")) + "\n")
    with open(directory / "features.idx", "w", newline="\n") as fh:
        for row, (vid, pid) in enumerate(bundle.features.keys):
            fh.write(f"{vid}\t{pid}\t{row}\n")
    with open(directory / "features.bin", "wb") as fh:
        fh.write(np.ascontiguousarray(bundle.features.matrix, dtype="<f4").tobytes())


def load_dataset(directory: str | Path) -> DatasetBundle:
    """Read a split back; raises :class:`DatasetFormatError` on schema violations."""
    directory = Path(directory)

    manifest: dict[str, str] = {}
    manifest_path = directory / "manifest.txt"
    for lineno, line in enumerate(manifest_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise DatasetFormatError(f"{manifest_path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        manifest[key.strip()] = value.strip()

    videos: list[VideoRecord] = []
    videos_path = directory / "videos.jsonl"
    with open(videos_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{videos_path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"{where}: invalid JSON at column {e.colno}") from e
            videos.append(_video_from_obj(obj, where))

    idx_path = directory / "features.idx"
    keys: list[tuple[str, int]] = []
    for lineno, line in enumerate(idx_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DatasetFormatError(f"{idx_path}:{lineno}: expected 3 tab-separated fields")
        vid, pid, row = parts
        if int(row) != len(keys):
            raise DatasetFormatError(f"{idx_path}:{lineno}: rows must be consecutive from 0")
        keys.append((vid, int(pid)))

    dim = int(manifest.get("feature_dim", "0"))
    bin_path = directory / "features.bin"
    blob = bin_path.read_bytes()
    expected = len(keys) * dim * 4
    if len(blob) != expected:
        raise DatasetFormatError(
            f"{bin_path}: expected {expected} bytes for {len(keys)} rows x {dim} floats, "
            f"found {len(blob)}")
    matrix = np.frombuffer(blob, dtype="<f4").reshape(len(keys), dim)
    if "n_videos" in manifest and int(manifest["n_videos"]) != len(videos):
        raise DatasetFormatError(
            f"{videos_path}: manifest declares {manifest['n_videos']} videos, "
            f"found {len(videos)}")
    return DatasetBundle(manifest=manifest, videos=videos,
                         features=FeatureStore(keys, matrix))


def bundles_from_world(world: WorldData) -> tuple[DatasetBundle, DatasetBundle]:
    """Wrap generated world data into train/test bundles."""
    chash = config_hash(world.config)
    out = []
    for split, videos, rows in (("train", world.train_videos, world.train_rows),
                                ("test", world.test_videos, world.test_rows)):
        store = FeatureStore.from_rows(rows)
        manifest = {
            "dataset_id": f"synth-{world.config.seed}",
            "split": split,
            "config_hash": chash,
            "n_videos": str(len(videos)),
            "feature_dim": str(world.config.feature_dim),
            "n_rows": str(len(store)),
        }
        out.append(DatasetBundle(manifest=manifest, videos=videos, features=store))
    return out[0], out[1]


def save_world(world: WorldData, root: str | Path) -> None:
    """Write both splits of a generated world under one root directory."""
    train_b, test_b = bundles_from_world(world)
    save_dataset(train_b, Path(root) / "train")
    save_dataset(test_b, Path(root) / "test")


def save_model(model: LinearModel, path: str | Path) -> None:
    header = f"{_MODEL_MAGIC} dim={model.dim} lambda={model.lam!r}\n"
    payload = np.concatenate([[model.bias], model.weights]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes())


def load_model(path: str | Path) -> LinearModel:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").strip()
        blob = fh.read()
    parts = header.split()
    if len(parts) != 3 or parts[0] != _MODEL_MAGIC:
        raise DatasetFormatError(f"{path}: not a linear model file")
    try:
        dim = int(parts[1].removeprefix("dim="))
        lam = float(parts[2].removeprefix("lambda="))
    except ValueError as e:
        raise DatasetFormatError(f"{path}: malformed model header: {header!r}") from e
    if len(blob) != (dim + 1) * 4:
        raise DatasetFormatError(
            f"{path}: expected {(dim + 1) * 4} payload bytes for dim={dim}, found {len(blob)}")
    values = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    return LinearModel(weights=values[1:], bias=float(values[0]), lam=lam)


@dataclass
class ExperimentSpec:
    """Everything one experiment needs: data, training knobs, evaluation knobs."""

    dataset: Path
    cfg: TrainConfig
    out_dir: Path
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    top_k: int | None = 10
    interpolated_ap: bool = False

    def __post_init__(self) -> None:
        self.dataset = Path(self.dataset)
        self.out_dir = Path(self.out_dir)
        if not (self.dataset / "train").is_dir() or not (self.dataset / "test").is_dir():
            raise FileNotFoundError(f"{self.dataset} must contain train/ and test/ splits")
        if any(not (0.0 < t < 1.0) for t in self.thresholds):
            raise ValueError("thresholds must lie strictly inside (0, 1)")

    @property
    def supervision(self):
        return self.cfg.supervision


def _format_value(v: float) -> str:
    return repr(float(v))


def _selection_log_rows(train_videos: Sequence[VideoRecord], action: int,
                        selections: Mapping[str, int]) -> list[tuple]:
    by_id = {v.id: v for v in train_videos}
    rows = []
    for vid in sorted(selections):
        v = by_id[vid]
        pid = selections[vid]
        tube = v.proposals[pid] if pid >= 0 else v.gt_tubes[-pid - 1]
        m = s = o = float("nan")
        tracks = [t for t in v.points if len(t) > 0]
        if tracks:
            ov = overlap_measure(tube, tracks, v)
            m, s, o = ov.m, ov.s, ov.o
        iou = max((tube_iou(tube, g) for g in v.gt_tubes), default=float("nan"))
        rows.append((action, vid, pid, m, s, o, iou))
    return rows


def mine_all_classes(train_videos: Sequence[VideoRecord], store: FeatureStore,
                     cfg: TrainConfig) -> tuple[dict[int, LinearModel], list[tuple]]:
    """Run the mining loop for every class present in the training split."""
    classes = sorted({v.label for v in train_videos})
    models: dict[int, LinearModel] = {}
    selection_rows: list[tuple] = []
    for c in classes:
        log.info("mining class %d (%s)", c, cfg.supervision.value)
        model, selections = run_mil(train_videos, c, cfg, store)
        models[c] = model
        selection_rows.extend(_selection_log_rows(train_videos, c, selections))
    return models, selection_rows


def write_report_csv(report: EvalReport, path: Path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("class,threshold,metric,value\n")
        for cls, t, metric, value in report.to_rows():
            fh.write(f"{cls},{t},{metric},{_format_value(value)}\n")


def write_selection_log(rows: Sequence[tuple], path: Path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("class\tvideo_id\tproposal_id\tm\ts\to\tiou_gt\n")
        for action, vid, pid, m, s, o, iou in rows:
            fh.write(f"{action}\t{vid}\t{pid}\t{_format_value(m)}\t{_format_value(s)}"
                     f"\t{_format_value(o)}\t{_format_value(iou)}\n")


def run_experiment(spec: ExperimentSpec) -> EvalReport:
    """Mine every class on the train split, evaluate on the test split.

    Writes ``report.csv``, ``selections.tsv``, and one model file per class
    under ``spec.out_dir``; prints the report table. Deterministic: the same
    spec and seed produce byte-identical outputs.
    """
    train_b = load_dataset(spec.dataset / "train")
    test_b = load_dataset(spec.dataset / "test")
    report = _run_on_bundles(train_b, test_b, spec.cfg, spec.thresholds, spec.top_k,
                             spec.interpolated_ap, spec.out_dir)
    print(report.format_table())
    return report


def _run_on_bundles(train_b: DatasetBundle, test_b: DatasetBundle, cfg: TrainConfig,
                    thresholds: Sequence[float], top_k: int | None,
                    interpolated_ap: bool, out_dir: Path | None) -> EvalReport:
    models, selection_rows = mine_all_classes(train_b.videos, train_b.features, cfg)
    report = build_report(test_b.videos, test_b.features, models, thresholds,
                          top_k, interpolated_ap)
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "models").mkdir(parents=True, exist_ok=True)
        for c, model in models.items():
            save_model(model, out_dir / "models" / f"class_{c:03d}.model")
        write_selection_log(selection_rows, out_dir / "selections.tsv")
        write_report_csv(report, out_dir / "report.csv")
    return report


def sweep_framerates(world_cfg: WorldConfig, cfg: TrainConfig, rates: Sequence[int],
                     out_dir: Path | None = None, thresholds: Sequence[float] = (0.2, 0.5),
                     top_k: int | None = 10,
                     cost: CostModel = CostModel()) -> list[tuple[int, float, float, float]]:
    """One experiment per annotation frame-rate, with regenerated points.

    Returns (rate, mean annotation speedup, mAP@0.2, mAP@0.5) rows sorted
    by rate ascending and optionally writes them to ``curve.csv``. The
    speedup is for point annotation at the given rate, averaged over train
    videos, against boxing every frame.
    """
    if 0.2 not in thresholds or 0.5 not in thresholds:
        thresholds = tuple(sorted(set(thresholds) | {0.2, 0.5}))
    rows = []
    for rate in sorted(set(int(r) for r in rates)):
        world = generate_world(replace(world_cfg, annotation_rate=rate))
        train_b, test_b = bundles_from_world(world)
        report = _run_on_bundles(train_b, test_b, cfg, thresholds, top_k, False, None)
        speedup = float(np.mean([
            annotation_cost(v.n_frames, rate, cost, AnnotationScheme.POINT)[1]
            for v in world.train_videos]))
        rows.append((rate, speedup, report.mean_ap(0.2), report.mean_ap(0.5)))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "curve.csv", "w", newline="\n") as fh:
            fh.write("rate,speedup,map@0.2,map@0.5\n")
            for rate, speedup, m02, m05 in rows:
                fh.write(f"{rate},{_format_value(speedup)},{_format_value(m02)},"
                         f"{_format_value(m05)}\n")
    return rows
