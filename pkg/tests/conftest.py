"""Shared builders for the test suite."""

from __future__ import annotations

import pytest

from oxiread import (
    BBox,
    Detection,
    DetectionSet,
    GlyphClass,
    ImageDims,
    ReplayBackend,
)

DIMS = ImageDims(640, 640)


def det(token: str, x0: float, y0: float, x1: float, y1: float, conf: float = 0.9) -> Detection:
    return Detection(GlyphClass.from_token(token), BBox(x0, y0, x1, y1), conf)


def dset(dets, rotation: int = 0, dims: ImageDims = DIMS) -> DetectionSet:
    return DetectionSet(tuple(dets), dims, rotation)


def replay(sets_by_rotation: dict[int, DetectionSet], dims: ImageDims = DIMS) -> ReplayBackend:
    return ReplayBackend(sets=sets_by_rotation, dims=dims)


@pytest.fixture
def runner():
    from click.testing import CliRunner

    return CliRunner()
