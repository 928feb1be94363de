"""Detection and end-to-end evaluation metrics.

Covers box-level scoring (greedy IoU matching, per-class average precision,
mAP at a fixed IoU threshold) and the reading-level accuracy definitions
used by the experiment scripts: grouped-number multiset equality and the
stricter both-vitals-correct rule, aggregated over cross-validation folds.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from statistics import fmean, stdev

from .detections import DetectionSet, GlyphClass
from .errors import UndefinedMetricError, ValidationError
from .geometry import BBox, iou
from .vitals import VitalsReading

GroundTruthBoxes = list[tuple[GlyphClass, BBox]]


@dataclass(frozen=True)
class MatchOutcome:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[int, int, float], ...]  # (pred idx, gt idx, iou)


@dataclass(frozen=True)
class PRCurve:
    points: tuple[tuple[float, float], ...]  # (recall, precision) per rank


@dataclass(frozen=True)
class FoldSummary:
    mean: float
    sd: float

    def __str__(self) -> str:
        return f"{self.mean:.1f} ± {self.sd:.1f}"


@dataclass(frozen=True)
class EvalReport:
    per_class_ap: dict[GlyphClass, float]
    map50: float
    n_images: int
    accuracies: dict[str, FoldSummary] = field(default_factory=dict)


def match_detections(preds: DetectionSet, gt: GroundTruthBoxes, iou_threshold: float = 0.5) -> MatchOutcome:
    """Greedy matching in descending confidence. A prediction is a true
    positive iff its class matches and IoU strictly exceeds the threshold
    against a ground-truth box nobody claimed yet."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValidationError(f"iou threshold must be in (0,1), got {iou_threshold}")
    order = sorted(range(len(preds.detections)), key=lambda i: (-preds.detections[i].confidence, i))
    taken: set[int] = set()
    pairs = []
    for i in order:
        det = preds.detections[i]
        best_gt, best_iou = -1, iou_threshold
        for g, (cls, box) in enumerate(gt):
            if g in taken or cls is not det.glyph:
                continue
            overlap = iou(det.box, box)
            if overlap > best_iou:
                best_gt, best_iou = g, overlap
        if best_gt >= 0:
            taken.add(best_gt)
            pairs.append((i, best_gt, best_iou))
    tp = len(pairs)
    return MatchOutcome(tp=tp, fp=len(preds.detections) - tp, fn=len(gt) - tp, pairs=tuple(pairs))


def pr_curve(flags: list[bool], n_gt: int) -> PRCurve:
    """Precision/recall after each prediction in ranked order."""
    if n_gt < 1:
        raise UndefinedMetricError("precision-recall curve needs at least one ground-truth instance")
    tp = 0
    points = []
    for rank, flag in enumerate(flags, start=1):
        tp += flag
        points.append((tp / n_gt, tp / rank))
    return PRCurve(points=tuple(points))


def average_precision(flags: list[bool], n_gt: int) -> float:
    """Area under the precision-recall curve, all ranked points.

    The precision envelope is made non-increasing as recall grows (each
    recall step is scored with the lowest precision seen up to that rank),
    then integrated exactly.
    """
    if n_gt < 1:
        raise UndefinedMetricError("average precision undefined with zero ground-truth instances")
    tp = 0
    area = 0.0
    prev_recall = 0.0
    envelope = 1.0
    for rank, flag in enumerate(flags, start=1):
        tp += flag
        envelope = min(envelope, tp / rank)
        recall = tp / n_gt
        area += (recall - prev_recall) * envelope
        prev_recall = recall
    return area


def evaluate_detections(
    preds_per_image: list[DetectionSet],
    gt_per_image: list[GroundTruthBoxes],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Per-class AP and mAP over a corpus.

    Predictions are pooled across images and ranked per class by
    confidence; classes absent from the ground truth are excluded from the
    mean rather than scored zero.
    """
    if len(preds_per_image) != len(gt_per_image):
        raise ValidationError(
            f"{len(preds_per_image)} prediction sets for {len(gt_per_image)} ground-truth images"
        )
    gt_counts: Counter[GlyphClass] = Counter(cls for gt in gt_per_image for cls, _ in gt)
    if not gt_counts:
        raise UndefinedMetricError("no ground-truth boxes in the corpus")

    per_class_ap = {}
    for cls, n_gt in sorted(gt_counts.items(), key=lambda kv: kv[0].value):
        ranked = sorted(
            (
                (det.confidence, img, j, det.box)
                for img, preds in enumerate(preds_per_image)
                for j, det in enumerate(preds.detections)
                if det.glyph is cls
            ),
            key=lambda t: (-t[0], t[1], t[2]),
        )
        taken: set[tuple[int, int]] = set()
        flags = []
        for _, img, _, box in ranked:
            best_g, best_iou = -1, iou_threshold
            for g, (gt_cls, gt_box) in enumerate(gt_per_image[img]):
                if gt_cls is not cls or (img, g) in taken:
                    continue
                overlap = iou(box, gt_box)
                if overlap > best_iou:
                    best_g, best_iou = g, overlap
            if best_g >= 0:
                taken.add((img, best_g))
                flags.append(True)
            else:
                flags.append(False)
        per_class_ap[cls] = average_precision(flags, n_gt)

    return EvalReport(
        per_class_ap=per_class_ap,
        map50=fmean(per_class_ap.values()),
        n_images=len(gt_per_image),
    )


def map50(preds_per_image: list[DetectionSet], gt_per_image: list[GroundTruthBoxes]) -> float:
    return evaluate_detections(preds_per_image, gt_per_image, iou_threshold=0.5).map50


def digit_set_accuracy(pred_sets: list, gt_sets: list) -> float:
    """Percent of images whose grouped numbers match the ground truth as a
    multiset (duplicate values must appear the right number of times). A
    None prediction counts as a miss."""
    if len(pred_sets) != len(gt_sets):
        raise ValidationError(f"{len(pred_sets)} predictions for {len(gt_sets)} images")
    if not gt_sets:
        raise ValidationError("accuracy undefined over zero images")
    correct = sum(
        1
        for pred, gt in zip(pred_sets, gt_sets)
        if pred is not None and Counter(pred) == Counter(gt)
    )
    return correct / len(gt_sets) * 100.0


def vitals_accuracy(results: list, scenes: list) -> float:
    """Percent of images where both assigned vitals equal the truth.

    Failures score zero; so do readings with either vital wrong.
    """
    if len(results) != len(scenes):
        raise ValidationError(f"{len(results)} results for {len(scenes)} scenes")
    if not scenes:
        raise ValidationError("accuracy undefined over zero images")
    correct = sum(
        1
        for r, s in zip(results, scenes)
        if isinstance(r, VitalsReading) and r.spo2 == s.spo2_true and r.pr == s.pr_true
    )
    return correct / len(scenes) * 100.0


def aggregate_folds(values: list[float]) -> FoldSummary:
    """Mean and sample standard deviation across folds."""
    if len(values) < 2:
        raise UndefinedMetricError("fold spread needs at least two folds")
    return FoldSummary(mean=fmean(values), sd=stdev(values))
