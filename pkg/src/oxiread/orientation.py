"""Rotation ranking for captured display images.

A display photographed sideways or upside down still yields detections, but
the detector is far less confident about digits it sees rotated. Trying all
four quarter turns and ranking them by the median digit confidence reliably
puts the upright view first.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .detections import DetectionSet, DetectorBackend
from .geometry import QUARTER_TURNS


@dataclass(frozen=True)
class RotationCandidate:
    rotation: int
    median_confidence: float
    digits: DetectionSet
    symbols: DetectionSet


def median_confidence(detections: DetectionSet) -> float:
    """Median confidence over digit detections; 0.0 when there are none.

    Symbols are excluded: some displays have none, and their confidences
    would otherwise skew the comparison across rotations.
    """
    scores = [d.confidence for d in detections.digits()]
    if not scores:
        return 0.0
    return statistics.median(scores)


def rank_rotations(backend: DetectorBackend, image) -> tuple[RotationCandidate, ...]:
    """Detect under all four quarter turns, best median confidence first.

    Ties keep the quarter-turn order (0, 90, 180, 270), so an all-empty
    image ranks the unrotated view first. Backend exceptions propagate.
    """
    candidates = []
    for rotation in QUARTER_TURNS:
        digits = backend.detect(image, rotation)
        symbols = backend.detect_symbols(image, rotation)
        candidates.append(
            RotationCandidate(
                rotation=rotation,
                median_confidence=median_confidence(digits),
                digits=digits,
                symbols=symbols,
            )
        )
    return tuple(sorted(candidates, key=lambda c: c.median_confidence, reverse=True))
