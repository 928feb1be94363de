"""Detection-agnostic reading of pulse-oximeter displays.

Converts per-digit detections from a display photo into a validated
oxygen-saturation / pulse-rate pair: rank the four quarter turns by median
digit confidence, cluster digit positions into number groups, assign groups
to vitals by glyph size or symbol proximity, and gate the result on
physiological ranges. Ships a deterministic synthetic scene generator and
mock detector in place of a GPU model, plus the full evaluation stack.
"""

from .detections import (
    DEFAULT_NOISE,
    Detection,
    DetectionSet,
    DetectorBackend,
    GlyphClass,
    MockDetector,
    NoiseModel,
    ReplayBackend,
    ZERO_NOISE,
    derive_seed,
    mock_detect,
)
from .errors import BackendError, OxireadError, ParseError, UndefinedMetricError, ValidationError
from .geometry import BBox, ImageDims, Point, QUARTER_TURNS, centroid, iou, rotate_box, rotate_point
from .grouping import DigitCluster, KMeansResult, assemble_clusters, choose_k, cluster_digits, kmeans
from .metrics import (
    EvalReport,
    FoldSummary,
    MatchOutcome,
    PRCurve,
    aggregate_folds,
    average_precision,
    digit_set_accuracy,
    evaluate_detections,
    map50,
    match_detections,
    vitals_accuracy,
)
from .orientation import RotationCandidate, median_confidence, rank_rotations
from .synthgen import (
    DisplayKind,
    GlyphRole,
    GroundTruthScene,
    LayoutKind,
    SceneGlyph,
    classify_group,
    generate_scene,
)
from .vitals import (
    AssignmentRule,
    CandidateDiagnostic,
    FailureReason,
    ReadFailure,
    VitalsReading,
    assign_vitals,
    prune_outliers,
    read_numbers,
    read_vitals,
    validate_ranges,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentRule",
    "BBox",
    "BackendError",
    "DEFAULT_NOISE",
    "Detection",
    "DetectionSet",
    "DetectorBackend",
    "DigitCluster",
    "DisplayKind",
    "EvalReport",
    "CandidateDiagnostic",
    "FailureReason",
    "FoldSummary",
    "GlyphClass",
    "GlyphRole",
    "GroundTruthScene",
    "ImageDims",
    "KMeansResult",
    "LayoutKind",
    "MatchOutcome",
    "MockDetector",
    "NoiseModel",
    "OxireadError",
    "PRCurve",
    "ParseError",
    "Point",
    "QUARTER_TURNS",
    "ReadFailure",
    "ReplayBackend",
    "RotationCandidate",
    "SceneGlyph",
    "UndefinedMetricError",
    "ValidationError",
    "VitalsReading",
    "ZERO_NOISE",
    "aggregate_folds",
    "assemble_clusters",
    "assign_vitals",
    "average_precision",
    "centroid",
    "choose_k",
    "classify_group",
    "cluster_digits",
    "derive_seed",
    "digit_set_accuracy",
    "evaluate_detections",
    "generate_scene",
    "iou",
    "kmeans",
    "map50",
    "match_detections",
    "median_confidence",
    "mock_detect",
    "prune_outliers",
    "rank_rotations",
    "read_numbers",
    "read_vitals",
    "rotate_box",
    "rotate_point",
    "validate_ranges",
    "vitals_accuracy",
]
