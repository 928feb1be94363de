"""Turning digit clusters into a validated oxygen-saturation / pulse-rate pair.

The driver (`read_vitals`) walks rotation candidates best-first. For each it
clusters the digits, decides which cluster is the saturation (bigger glyphs,
or proximity to a %/s/p symbol when one is detected), checks physiological
ranges, and on a violation prunes height outliers and re-checks once before
falling through to the next rotation. The first valid reading wins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from statistics import median

from .detections import DetectionSet, DetectorBackend
from .errors import BackendError, ValidationError
from .geometry import Point, centroid
from .grouping import DigitCluster, cluster_digits, cluster_from_members
from .orientation import RotationCandidate, rank_rotations

SPO2_RANGE = (70, 100)
PR_RANGE = (40, 300)
# Height pruning: a member is an outlier when its box height deviates from
# the cluster median height by more than this fraction of that median.
HEIGHT_OUTLIER_FRACTION = 0.4


class AssignmentRule(enum.Enum):
    RELATIVE_AREA = "relative_area"
    SYMBOL_DISTANCE = "symbol_distance"


class FailureReason(enum.Enum):
    NO_VALID_ROTATION = "no_valid_rotation"
    TOO_FEW_DIGITS = "too_few_digits"
    RANGE_VIOLATION_ALL_ROTATIONS = "range_violation_all_rotations"
    BACKEND_ERROR = "backend_error"


@dataclass(frozen=True)
class VitalsReading:
    spo2: int
    pr: int
    rotation_used: int
    median_conf: float
    assignment_rule: AssignmentRule
    pruned: bool

    def __post_init__(self):
        if not validate_ranges(self.spo2, self.pr):
            raise ValidationError(f"reading ({self.spo2}, {self.pr}) violates vital ranges")


@dataclass(frozen=True)
class CandidateDiagnostic:
    rotation: int
    median_conf: float
    n_digits: int
    note: str


@dataclass(frozen=True)
class ReadFailure:
    reason: FailureReason
    diagnostics: tuple[CandidateDiagnostic, ...] = ()


def validate_ranges(spo2: int, pr: int) -> bool:
    """Physiological plausibility gate, both endpoints inclusive."""
    return SPO2_RANGE[0] <= spo2 <= SPO2_RANGE[1] and PR_RANGE[0] <= pr <= PR_RANGE[1]


def _nearest_symbol_sq_dist(point: Point, symbols: DetectionSet) -> float:
    return min(
        (centroid(s.box).x - point.x) ** 2 + (centroid(s.box).y - point.y) ** 2
        for s in symbols
    )


def _pick_pr(rest: list[DigitCluster]) -> DigitCluster:
    # k=2 leaves one candidate. With k=3 the pulse rate is the in-range
    # cluster; if that does not single one out, the larger glyphs win
    # (the third number is auxiliary and small on real displays).
    if len(rest) == 1:
        return rest[0]
    in_range = [c for c in rest if PR_RANGE[0] <= c.value <= PR_RANGE[1]]
    pool = in_range if len(in_range) == 1 else (in_range or rest)
    return max(pool, key=lambda c: c.mean_glyph_area)


def assign_vitals(clusters: tuple[DigitCluster, ...], symbols: DetectionSet) -> tuple[DigitCluster, DigitCluster]:
    """Decide which cluster is the saturation and which the pulse rate.

    Without symbols the saturation group has the visibly larger glyphs;
    with a %/s/p detection it is the group whose leftmost digit sits
    nearest a symbol.
    """
    if len(clusters) < 2:
        raise ValidationError(f"need at least 2 clusters to assign vitals, got {len(clusters)}")
    if len(symbols) == 0:
        spo2_cluster = max(clusters, key=lambda c: c.mean_glyph_area)
    else:
        spo2_cluster = min(
            clusters, key=lambda c: _nearest_symbol_sq_dist(c.leftmost_centroid, symbols)
        )
    rest = [c for c in clusters if c is not spo2_cluster]
    return spo2_cluster, _pick_pr(rest)


def prune_outliers(cluster: DigitCluster) -> DigitCluster:
    """Drop members whose height is far from the cluster median; keep at
    least one (the best-fitting) member. The value is re-read from what
    remains."""
    med = median(m.box.height for m in cluster.members)
    kept = [m for m in cluster.members if abs(m.box.height - med) <= HEIGHT_OUTLIER_FRACTION * med]
    if not kept:
        kept = [min(cluster.members, key=lambda m: abs(m.box.height - med))]
    if len(kept) == len(cluster.members):
        return cluster
    return cluster_from_members(kept)


def _try_candidate(candidate: RotationCandidate) -> VitalsReading | str:
    """One rotation attempt. Returns a reading or a short failure note."""
    clusters = cluster_digits(candidate.digits)
    if clusters is None:
        return "too few digits"
    if len(clusters) < 2:
        return "degenerate clustering"
    rule = AssignmentRule.SYMBOL_DISTANCE if len(candidate.symbols) else AssignmentRule.RELATIVE_AREA

    spo2_c, pr_c = assign_vitals(clusters, candidate.symbols)
    if validate_ranges(spo2_c.value, pr_c.value):
        return VitalsReading(
            spo2=spo2_c.value,
            pr=pr_c.value,
            rotation_used=candidate.rotation,
            median_conf=candidate.median_confidence,
            assignment_rule=rule,
            pruned=False,
        )

    # One retry: prune height outliers in every cluster, re-run assignment
    # on the pruned clusters (membership is kept, k-means is not re-run).
    pruned = tuple(prune_outliers(c) for c in clusters)
    spo2_c, pr_c = assign_vitals(pruned, candidate.symbols)
    if validate_ranges(spo2_c.value, pr_c.value):
        return VitalsReading(
            spo2=spo2_c.value,
            pr=pr_c.value,
            rotation_used=candidate.rotation,
            median_conf=candidate.median_confidence,
            assignment_rule=rule,
            pruned=True,
        )
    return "range violation"


def read_vitals(backend: DetectorBackend, image, auto_orient: bool = True) -> VitalsReading | ReadFailure:
    """Read both vitals from one captured image, trying rotations best-first.

    With auto_orient off, only the unrotated view is attempted. Backend
    faults surface as a BACKEND_ERROR failure rather than an exception so
    that batch callers keep going.
    """
    try:
        candidates = rank_rotations(backend, image)
    except BackendError as exc:
        return ReadFailure(
            reason=FailureReason.BACKEND_ERROR,
            diagnostics=(CandidateDiagnostic(rotation=-1, median_conf=0.0, n_digits=0, note=str(exc)),),
        )
    if not auto_orient:
        candidates = tuple(c for c in candidates if c.rotation == 0)

    diagnostics = []
    for candidate in candidates:
        outcome = _try_candidate(candidate)
        if isinstance(outcome, VitalsReading):
            return outcome
        diagnostics.append(
            CandidateDiagnostic(
                rotation=candidate.rotation,
                median_conf=candidate.median_confidence,
                n_digits=len(candidate.digits),
                note=outcome,
            )
        )

    notes = {d.note for d in diagnostics}
    if notes <= {"too few digits", "degenerate clustering"}:
        reason = FailureReason.TOO_FEW_DIGITS
    elif notes == {"range violation"}:
        reason = FailureReason.RANGE_VIOLATION_ALL_ROTATIONS
    else:
        reason = FailureReason.NO_VALID_ROTATION
    return ReadFailure(reason=reason, diagnostics=tuple(diagnostics))


def read_numbers(backend: DetectorBackend, image, auto_orient: bool = True) -> tuple[int, ...] | None:
    """Grouped numbers from the single best (or unrotated) view, unvalidated.

    This measures detector + grouping quality in isolation: no range gate,
    no fallback to other rotations, values for every cluster on screen.
    None when too few digits were detected to group.
    """
    candidates = rank_rotations(backend, image)
    candidate = candidates[0]
    if not auto_orient:
        candidate = next(c for c in candidates if c.rotation == 0)
    clusters = cluster_digits(candidate.digits)
    if clusters is None:
        return None
    return tuple(sorted(c.value for c in clusters))
