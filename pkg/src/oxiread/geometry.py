"""Axis-aligned box arithmetic and quarter-turn image rotations.

Coordinates are continuous pixels: x grows rightward, y grows downward.
Rotation convention (used everywhere in this package): angles are
counter-clockwise multiples of 90 degrees, and a 90 degree rotation of a
W x H image maps a point (x, y) to (y, W - x) in the new H x W image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

QUARTER_TURNS = (0, 90, 180, 270)


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class ImageDims:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValidationError(f"image dims must be positive, got {self.width}x{self.height}")

    def rotated(self, angle: int) -> "ImageDims":
        """Dims of this image after a counter-clockwise quarter-turn rotation."""
        _check_angle(angle)
        if angle in (90, 270):
            return ImageDims(self.height, self.width)
        return self


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise ValidationError(f"box coordinates must be finite: {self}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"degenerate box: need x_min < x_max and y_min < y_max, got "
                f"({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def within(self, dims: ImageDims) -> bool:
        return 0 <= self.x_min and 0 <= self.y_min and self.x_max <= dims.width and self.y_max <= dims.height


def centroid(b: BBox) -> Point:
    return Point((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, using continuous areas.

    Boxes that only share an edge have intersection area 0 and IoU 0.
    """
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def _check_angle(angle: int) -> None:
    if angle not in QUARTER_TURNS:
        raise ValidationError(f"rotation angle must be one of {QUARTER_TURNS}, got {angle}")


def rotate_point(p: Point, angle: int, dims: ImageDims) -> Point:
    """Map a point through a counter-clockwise rotation of the whole image."""
    _check_angle(angle)
    if angle == 0:
        return p
    if angle == 90:
        return Point(p.y, dims.width - p.x)
    if angle == 180:
        return Point(dims.width - p.x, dims.height - p.y)
    return Point(dims.height - p.y, p.x)  # 270


def rotate_box(b: BBox, angle: int, dims: ImageDims) -> BBox:
    """Box occupied by the same glyph after the image is rotated.

    The box must lie within `dims`. Composing the four 90-degree rotations
    returns the original box exactly for integer (or exactly representable)
    coordinates.
    """
    _check_angle(angle)
    if not b.within(dims):
        raise ValidationError(f"box {b} outside image dims {dims.width}x{dims.height}")
    if angle == 0:
        return b
    if angle == 90:
        return BBox(b.y_min, dims.width - b.x_max, b.y_max, dims.width - b.x_min)
    if angle == 180:
        return BBox(dims.width - b.x_max, dims.height - b.y_max, dims.width - b.x_min, dims.height - b.y_min)
    return BBox(dims.height - b.y_max, b.x_min, dims.height - b.y_min, b.x_max)  # 270
