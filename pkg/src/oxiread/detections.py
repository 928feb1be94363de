"""Glyph detection data model and the detector abstraction.

The reading pipeline never talks to a neural network directly: it talks to a
`DetectorBackend`, which reports digit and symbol glyphs for an image at a
requested quarter-turn rotation. Two backends ship with the package:

* `MockDetector` - a deterministic, noise-parameterized stand-in driven by
  ground-truth scenes (see `synthgen`), used for all desk-scale testing.
* `ReplayBackend` - serves detection sets produced offline by any real
  inference stack and loaded from the interchange format (see `formats`).
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from .errors import ValidationError
from .geometry import QUARTER_TURNS, BBox, ImageDims, rotate_box

SUPPORTED_RESOLUTIONS = (640, 1280)


class GlyphClass(enum.Enum):
    """The 13 glyph classes: digits 0-9 plus the symbols %, s, p."""

    D0 = "0"
    D1 = "1"
    D2 = "2"
    D3 = "3"
    D4 = "4"
    D5 = "5"
    D6 = "6"
    D7 = "7"
    D8 = "8"
    D9 = "9"
    PERCENT = "%"
    LETTER_S = "s"
    LETTER_P = "p"

    @property
    def token(self) -> str:
        return self.value

    @property
    def is_digit(self) -> bool:
        return self.value.isdigit()

    @property
    def digit_value(self) -> int:
        if not self.is_digit:
            raise ValidationError(f"glyph {self.value!r} is not a digit")
        return int(self.value)

    @classmethod
    def from_token(cls, token: str) -> "GlyphClass":
        try:
            return cls(token)
        except ValueError:
            raise ValidationError(f"unknown glyph token {token!r}") from None

    @classmethod
    def from_digit(cls, d: int) -> "GlyphClass":
        return cls(str(d))


SYMBOL_CLASSES = (GlyphClass.PERCENT, GlyphClass.LETTER_S, GlyphClass.LETTER_P)

# Stable integer ids for the normalized-box annotation format: 0..9 then %, s, p.
CLASS_IDS = {g: i for i, g in enumerate(GlyphClass)}
CLASS_FROM_ID = {i: g for g, i in CLASS_IDS.items()}


@dataclass(frozen=True)
class Detection:
    glyph: GlyphClass
    box: BBox
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence must be in [0,1], got {self.confidence}")


@dataclass(frozen=True)
class DetectionSet:
    """Detections for one image at one applied rotation.

    Boxes live in the rotated image's coordinate frame, whose size is `dims`.
    """

    detections: tuple[Detection, ...]
    dims: ImageDims
    rotation_applied: int = 0

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        if self.rotation_applied not in QUARTER_TURNS:
            raise ValidationError(f"rotation_applied must be one of {QUARTER_TURNS}")
        for d in self.detections:
            if not d.box.within(self.dims):
                raise ValidationError(f"detection box {d.box} outside dims {self.dims}")

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    def digits(self) -> tuple[Detection, ...]:
        return tuple(d for d in self.detections if d.glyph.is_digit)

    def symbols(self) -> tuple[Detection, ...]:
        return tuple(d for d in self.detections if d.glyph in SYMBOL_CLASSES)

    def confidences(self) -> tuple[float, ...]:
        return tuple(d.confidence for d in self.detections)


@runtime_checkable
class DetectorBackend(Protocol):
    """Anything that can report glyphs for a scene handle at a rotation.

    Implementations must be deterministic: identical inputs (and seed, where
    one is part of the backend's configuration) produce identical output.
    `detect` returns digit classes only, `detect_symbols` symbol classes only;
    an empty result is valid and distinct from a `BackendError`.
    """

    supported_resolutions: tuple[int, ...]

    def detect(self, scene_ref, rotation: int) -> DetectionSet: ...

    def detect_symbols(self, scene_ref, rotation: int) -> DetectionSet: ...


@dataclass(frozen=True)
class NoiseModel:
    """Detection noise for the mock detector.

    Confidences are drawn from an orientation-conditional band: `high_band`
    when the requested rotation matches the scene's true orientation,
    `low_band` otherwise. `conf_spread` scales the band around its midpoint
    (0 collapses every draw to the midpoint). `dropout` silently removes
    glyphs, `jitter` shifts box centers by a fraction of the glyph height,
    and `confusion_180` models seven-segment reading at an exactly
    upside-down rotation: with that probability a 6 is read as 9 (and vice
    versa), the self-symmetric digits 0,1,2,5,8 are kept, and the remaining
    digits are dropped.
    """

    dropout: float = 0.0
    jitter: float = 0.0
    confusion_180: float = 0.0
    conf_spread: float = 0.0
    high_band: tuple[float, float] = (0.70, 0.95)
    low_band: tuple[float, float] = (0.10, 0.50)

    def __post_init__(self):
        for name in ("dropout", "jitter", "confusion_180", "conf_spread"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must be in [0,1], got {v}")
        for band in (self.high_band, self.low_band):
            lo, hi = band
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValidationError(f"confidence band {band} must satisfy 0 <= lo <= hi <= 1")
        if self.low_band[1] >= self.high_band[0]:
            raise ValidationError(
                f"low band {self.low_band} must lie strictly below high band {self.high_band}"
            )

    def band(self, correct_orientation: bool) -> tuple[float, float]:
        return self.high_band if correct_orientation else self.low_band


ZERO_NOISE = NoiseModel()
DEFAULT_NOISE = NoiseModel(dropout=0.1, jitter=0.05, conf_spread=1.0)

# Seven-segment appearance of a digit rotated by 180 degrees.
UPSIDE_DOWN_DIGIT = {0: 0, 1: 1, 2: 2, 5: 5, 8: 8, 6: 9, 9: 6}


def derive_seed(*parts) -> int:
    """Stable sub-seed derivation (unlike hash(), identical across runs)."""
    key = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def _draw_confidence(rng: random.Random, band: tuple[float, float], spread: float) -> float:
    lo, hi = band
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * spread
    return rng.uniform(mid - half, mid + half) if half > 0 else mid


def _jitter_box(rng: random.Random, box: BBox, jitter: float, dims: ImageDims) -> BBox:
    dx = rng.uniform(-jitter, jitter) * box.height
    dy = rng.uniform(-jitter, jitter) * box.height
    # Clamp the shift so the box stays inside the image.
    dx = max(-box.x_min, min(dx, dims.width - box.x_max))
    dy = max(-box.y_min, min(dy, dims.height - box.y_max))
    return BBox(box.x_min + dx, box.y_min + dy, box.x_max + dx, box.y_max + dy)


def mock_detect(scene, rotation: int, noise: NoiseModel = ZERO_NOISE, seed: int = 0) -> DetectionSet:
    """Deterministic detections for a ground-truth scene at a rotation.

    Emits every scene glyph (digits and symbols) transformed by `rotate_box`,
    with confidence from the orientation-conditional band. Determinism: fixed
    (scene, rotation, noise, seed) always yields the same set. Per-glyph draws
    happen in scene order with a fixed draw count, so dropping one glyph never
    shifts the noise applied to the others.
    """
    if rotation not in QUARTER_TURNS:
        raise ValidationError(f"rotation must be one of {QUARTER_TURNS}, got {rotation}")
    out_dims = scene.dims.rotated(rotation)
    correct = rotation == scene.true_orientation
    upside_down = (rotation - scene.true_orientation) % 360 == 180
    band = noise.band(correct)

    rng = random.Random(derive_seed("mock", seed, rotation))
    emitted = []
    for glyph in scene.glyphs:
        dropped = rng.random() < noise.dropout
        conf = _draw_confidence(rng, band, noise.conf_spread)
        confused = rng.random() < noise.confusion_180
        box = rotate_box(glyph.box, rotation, scene.dims)
        if noise.jitter > 0:
            box = _jitter_box(rng, box, noise.jitter, out_dims)
        if dropped:
            continue
        cls = glyph.glyph
        if upside_down and confused and cls.is_digit:
            flipped = UPSIDE_DOWN_DIGIT.get(cls.digit_value)
            if flipped is None:
                continue  # 3, 4, 7 have no seven-segment reading upside down
            cls = GlyphClass.from_digit(flipped)
        emitted.append(Detection(cls, box, conf))
    return DetectionSet(tuple(emitted), out_dims, rotation)


def _only(ds: DetectionSet, digits: bool) -> DetectionSet:
    kept = ds.digits() if digits else ds.symbols()
    return DetectionSet(kept, ds.dims, ds.rotation_applied)


def _as_scene(scene_ref):
    return scene_ref.scene if hasattr(scene_ref, "scene") else scene_ref


@dataclass(frozen=True)
class MockDetector:
    """Detector backend driven by ground-truth scenes (no pixels, no GPU)."""

    noise: NoiseModel = ZERO_NOISE
    seed: int = 0
    supported_resolutions: tuple[int, ...] = SUPPORTED_RESOLUTIONS

    def detect(self, scene_ref, rotation: int) -> DetectionSet:
        return _only(mock_detect(_as_scene(scene_ref), rotation, self.noise, self.seed), digits=True)

    def detect_symbols(self, scene_ref, rotation: int) -> DetectionSet:
        return _only(mock_detect(_as_scene(scene_ref), rotation, self.noise, self.seed), digits=False)

    def with_seed(self, seed: int) -> "MockDetector":
        return MockDetector(self.noise, seed, self.supported_resolutions)


@dataclass(frozen=True)
class ReplayBackend:
    """Serves pre-computed detection sets, e.g. real detector output.

    `sets` maps an applied rotation to its detection set. A rotation with no
    stored set yields an empty DetectionSet (which the orientation ranker
    places last), so partial captures - a single already-oriented pass, say -
    still flow through the full pipeline.
    """

    sets: dict[int, DetectionSet] = field(default_factory=dict)
    dims: ImageDims = ImageDims(640, 640)
    supported_resolutions: tuple[int, ...] = SUPPORTED_RESOLUTIONS

    def _at(self, rotation: int) -> DetectionSet:
        if rotation not in QUARTER_TURNS:
            raise ValidationError(f"rotation must be one of {QUARTER_TURNS}, got {rotation}")
        ds = self.sets.get(rotation)
        if ds is None:
            return DetectionSet((), self.dims.rotated(rotation), rotation)
        return ds

    def detect(self, scene_ref, rotation: int) -> DetectionSet:
        return _only(self._at(rotation), digits=True)

    def detect_symbols(self, scene_ref, rotation: int) -> DetectionSet:
        return _only(self._at(rotation), digits=False)
