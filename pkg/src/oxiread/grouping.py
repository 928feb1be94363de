"""Spatial grouping of digit detections into multi-digit numbers.

A display shows each vital as a tight run of digits, with clear space
between runs. Clustering digit-box centroids therefore recovers the number
groups: k is fixed by how many digits were detected, and a small
deterministic k-means does the rest. Everything here is pure geometry; no
randomness and no learned state.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .detections import Detection, DetectionSet
from .errors import ValidationError
from .geometry import Point, centroid


@dataclass(frozen=True)
class KMeansResult:
    k: int
    labels: tuple[int, ...]
    centroids: tuple[Point, ...]
    inertia: float


@dataclass(frozen=True)
class DigitCluster:
    """One spatial group of digit detections, read as a number.

    `value` is the left-to-right concatenation; `digit_count` preserves
    leading zeros that the integer cannot.
    """

    members: tuple[Detection, ...]
    value: int
    digit_count: int
    mean_glyph_area: float
    leftmost_centroid: Point

    def __post_init__(self):
        if not self.members:
            raise ValidationError("cluster must have at least one member")


def choose_k(n_digits: int) -> int | None:
    """Cluster count from the digit count; None means skip this rotation.

    Five detected digits imply a 3+2 or 2+3 split, six or more imply a
    third number on screen. Four digits can only be two 2-digit vitals.
    Three or fewer cannot cover both vitals at all.
    """
    if n_digits < 0:
        raise ValidationError(f"digit count cannot be negative: {n_digits}")
    if n_digits <= 3:
        return None
    if n_digits <= 5:
        return 2
    return 3


def _sq_dist(a: Point, b: Point) -> float:
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2


def farthest_point_seeds(points: list[Point], k: int) -> list[Point]:
    """Deterministic k-means init: the mutually farthest pair, then (for
    k=3) the point farthest from its nearest seed. Ties resolve to the
    lowest point index, so the result is reproducible across runs."""
    if k not in (2, 3):
        raise ValidationError(f"seeding defined for k in (2, 3), got {k}")
    if len(points) < k:
        raise ValidationError(f"need at least {k} points, got {len(points)}")
    best = (0, 1)
    best_d = -1.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = _sq_dist(points[i], points[j])
            if d > best_d:
                best_d = d
                best = (i, j)
    seeds = [points[best[0]], points[best[1]]]
    if k == 3:
        third = max(
            range(len(points)),
            key=lambda i: (min(_sq_dist(points[i], s) for s in seeds), -i),
        )
        seeds.append(points[third])
    return seeds


def _assign(points: list[Point], centroids: list[Point]) -> list[int]:
    # Ties go to the lowest centroid index.
    return [
        min(range(len(centroids)), key=lambda c: (_sq_dist(p, centroids[c]), c))
        for p in points
    ]


def kmeans(points: list[Point], k: int, init: list[Point] | None = None, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm, deterministic given init (farthest-point seeding
    by default). Empty clusters are reseeded once per iteration at the
    point farthest from its assigned centroid; a cluster that stays empty
    (possible only when points coincide) is left empty and callers drop it.
    """
    if len(points) < k:
        raise ValidationError(f"cannot split {len(points)} points into {k} clusters")
    centroids = list(init) if init is not None else farthest_point_seeds(points, k)
    if len(centroids) != k:
        raise ValidationError(f"init must supply {k} centroids, got {len(centroids)}")

    labels = None
    for _ in range(max_iter):
        prev = labels
        labels = _assign(points, centroids)
        for empty in [c for c in range(k) if c not in labels]:
            worst = max(range(len(points)), key=lambda i: (_sq_dist(points[i], centroids[labels[i]]), -i))
            centroids[empty] = points[worst]
            labels = _assign(points, centroids)
        if labels == prev:
            break
        for c in range(k):
            member_pts = [p for p, lab in zip(points, labels) if lab == c]
            if member_pts:
                centroids[c] = Point(fmean(p.x for p in member_pts), fmean(p.y for p in member_pts))

    inertia = sum(_sq_dist(p, centroids[lab]) for p, lab in zip(points, labels))
    return KMeansResult(k=k, labels=tuple(labels), centroids=tuple(centroids), inertia=inertia)


def cluster_from_members(members: list[Detection]) -> DigitCluster:
    """Order digits left to right (ties top to bottom) and read the number."""
    ordered = sorted(members, key=lambda d: (centroid(d.box).x, centroid(d.box).y))
    tokens = "".join(d.glyph.token for d in ordered)
    leftmost = centroid(ordered[0].box)
    return DigitCluster(
        members=tuple(ordered),
        value=int(tokens),
        digit_count=len(tokens),
        mean_glyph_area=fmean(d.box.area for d in ordered),
        leftmost_centroid=leftmost,
    )


def assemble_clusters(detections: DetectionSet, result: KMeansResult) -> tuple[DigitCluster, ...]:
    """Group digit detections by cluster label, in label order, dropping
    labels that ended up empty."""
    digits = detections.digits()
    if len(digits) != len(result.labels):
        raise ValidationError(
            f"{len(result.labels)} labels for {len(digits)} digit detections"
        )
    clusters = []
    for c in range(result.k):
        members = [d for d, lab in zip(digits, result.labels) if lab == c]
        if members:
            clusters.append(cluster_from_members(members))
    return tuple(clusters)


def cluster_digits(detections: DetectionSet) -> tuple[DigitCluster, ...] | None:
    """Full grouping step for one rotation: pick k, cluster normalized digit
    centroids, assemble numbers. None when there are too few digits."""
    digits = detections.digits()
    k = choose_k(len(digits))
    if k is None:
        return None
    dims = detections.dims
    features = [
        Point(centroid(d.box).x / dims.width, centroid(d.box).y / dims.height)
        for d in digits
    ]
    result = kmeans(features, k)
    return assemble_clusters(detections, result)
