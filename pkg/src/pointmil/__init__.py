"""Point-supervised mining of spatio-temporal action proposals.

A library for training action localization classifiers from cheap point
annotations instead of per-frame boxes: an overlap prior scores tube
proposals against annotated points, a multiple-instance learning loop
alternates proposal selection with hinge-loss SGD training, and the
detection metrics (AP, AUC, ABO/MABO, recall) evaluate the result. A
deterministic synthetic-world generator makes the whole chain testable
without video data.
"""

from .classifier import LinearModel, hinge_gradient, hinge_objective, score, score_many, train
from .evaluation import (DEFAULT_THRESHOLDS, Detection, EvalReport, abo, auc_roc,
                         average_precision, best_overlaps, build_report, mabo,
                         rank_and_match, recall_curve)
from .geometry import (BoundingBox, Point, PointTrack, Tube, VideoRecord, box_center,
                       frame_iou, max_center_to_edge, point_in_box, tube_iou)
from .mining import (MiningState, SupervisionMode, TrainConfig, gt_row_id, initial_selection,
                     map_score, relocalize_fold, run_mil, sample_negatives)
from .overlap import (OverlapScore, best_center_bias, center_bias, filter_candidates,
                      overlap_measure, size_regularizer)
from .pipeline import (DatasetBundle, DatasetFormatError, ExperimentSpec, FeatureStore,
                       bundles_from_world, load_dataset, load_model, run_experiment,
                       save_dataset, save_model, save_world, sweep_framerates)
from .synthworld import (AnnotationScheme, CostModel, WorldConfig, WorldData,
                         annotation_cost, generate_gt_tube, generate_proposals,
                         generate_world, simulate_points, synthesize_feature)

__version__ = "0.1.0"

__all__ = [
    "AnnotationScheme", "BoundingBox", "CostModel", "DatasetBundle", "DatasetFormatError",
    "DEFAULT_THRESHOLDS", "Detection", "EvalReport", "ExperimentSpec", "FeatureStore",
    "LinearModel", "MiningState", "OverlapScore", "Point", "PointTrack", "SupervisionMode",
    "TrainConfig", "Tube", "VideoRecord", "WorldConfig", "WorldData", "abo",
    "annotation_cost", "auc_roc", "average_precision", "best_center_bias", "best_overlaps",
    "box_center", "build_report", "bundles_from_world", "center_bias", "filter_candidates",
    "frame_iou", "generate_gt_tube", "generate_proposals", "generate_world", "gt_row_id",
    "hinge_gradient", "hinge_objective", "initial_selection", "load_dataset", "load_model",
    "mabo", "map_score", "max_center_to_edge", "overlap_measure", "point_in_box",
    "rank_and_match", "recall_curve", "relocalize_fold", "run_experiment", "run_mil",
    "sample_negatives", "save_dataset", "save_model", "save_world", "score", "score_many",
    "simulate_points", "size_regularizer", "sweep_framerates", "synthesize_feature",
    "train", "tube_iou",
]
