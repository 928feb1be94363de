"""Shared experiment harness: runs a detector backend over a corpus and
scores it three ways, per cross-validation fold.

  fixed     grouped numbers from the unrotated view only
  oriented  grouped numbers from the best-ranked rotation
  vitals    the full validated reading, both vitals must match

The first two use multiset equality over every number on the display
(including any auxiliary third group); the last compares the assigned
saturation/pulse pair against the scene truth. Backends are supplied by a
per-image factory so the same scoring drives both the mock detector and
replayed real detections.
"""

from __future__ import annotations

from typing import Callable

from .dataset import AnnotatedImage, SplitPlan
from .detections import DetectionSet, DetectorBackend, MockDetector, NoiseModel, ZERO_NOISE, derive_seed
from .metrics import (
    EvalReport,
    FoldSummary,
    aggregate_folds,
    digit_set_accuracy,
    evaluate_detections,
    vitals_accuracy,
)
from .vitals import read_numbers, read_vitals

EXPERIMENT_NAMES = ("fixed", "oriented", "vitals")

BackendFactory = Callable[[AnnotatedImage], DetectorBackend]


def mock_factory(noise: NoiseModel = ZERO_NOISE, seed: int = 0) -> BackendFactory:
    """One mock detector per image, sub-seeded so results are independent of
    corpus order."""
    return lambda image: MockDetector(noise=noise, seed=derive_seed(seed, image.image_id))


def true_number_multiset(image: AnnotatedImage) -> tuple[int, ...]:
    return tuple(sorted(image.scene.group_values().values()))


def experiment_outcomes(images: list[AnnotatedImage], factory: BackendFactory) -> dict[str, list]:
    """Per-image raw outcomes for all three experiments, input order."""
    fixed, oriented, vitals = [], [], []
    for img in images:
        backend = factory(img)
        fixed.append(read_numbers(backend, img, auto_orient=False))
        oriented.append(read_numbers(backend, img, auto_orient=True))
        vitals.append(read_vitals(backend, img))
    return {"fixed": fixed, "oriented": oriented, "vitals": vitals}


def corpus_accuracies(images: list[AnnotatedImage], factory: BackendFactory) -> dict[str, float]:
    outcomes = experiment_outcomes(images, factory)
    truths = [true_number_multiset(img) for img in images]
    return {
        "fixed": digit_set_accuracy(outcomes["fixed"], truths),
        "oriented": digit_set_accuracy(outcomes["oriented"], truths),
        "vitals": vitals_accuracy(outcomes["vitals"], images),
    }


def fold_accuracies(images: list[AnnotatedImage], plan: SplitPlan, factory: BackendFactory) -> dict[str, list[float]]:
    """Accuracy of each experiment on each fold's validation images."""
    by_id = {img.image_id: img for img in images}
    per_experiment: dict[str, list[float]] = {name: [] for name in EXPERIMENT_NAMES}
    for fold in range(plan.folds):
        subset = [by_id[i] for i in plan.validation_ids(fold)]
        for name, acc in corpus_accuracies(subset, factory).items():
            per_experiment[name].append(acc)
    return per_experiment


def fold_summaries(images: list[AnnotatedImage], plan: SplitPlan, factory: BackendFactory) -> dict[str, FoldSummary]:
    return {name: aggregate_folds(accs) for name, accs in fold_accuracies(images, plan, factory).items()}


def detection_report(images: list[AnnotatedImage], factory: BackendFactory, iou_threshold: float = 0.5) -> EvalReport:
    """Box-level evaluation of a backend's unrotated view against truth."""
    preds = []
    for img in images:
        backend = factory(img)
        digits = backend.detect(img, 0)
        symbols = backend.detect_symbols(img, 0)
        preds.append(DetectionSet(digits.detections + symbols.detections, digits.dims, 0))
    return evaluate_detections(preds, [img.gt_boxes() for img in images], iou_threshold=iou_threshold)
