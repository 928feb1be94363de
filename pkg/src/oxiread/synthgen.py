"""Deterministic generator of ground-truth pulse-oximeter display scenes.

Scenes are geometric, not rendered: each is a set of labeled glyph boxes on a
virtual canvas, which is exactly what the mock detector consumes. Glyphs are
laid out in an upright frame (reading order preserved in the glyph list) and
then rotated into the captured frame, so that applying `true_orientation` to
the captured image recovers the upright display.

Two layout families are covered: displays where the oxygen-saturation digits
are distinctly larger than the pulse-rate digits, and displays with equal
digit sizes plus an identifying symbol (%, s or p) next to the saturation
group. Scenes may carry a third small digit group (a value like perfusion
index, outside both vital ranges) to exercise three-cluster grouping.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

from .detections import GlyphClass, derive_seed
from .errors import ValidationError
from .geometry import QUARTER_TURNS, BBox, ImageDims, centroid, rotate_box

SPO2_RANGE = (70, 100)
PR_RANGE = (40, 300)
# A third on-display number must be readable as "neither vital": outside both ranges.
EXTRA_VALUE_RANGE = (0, 39)


class LayoutKind(enum.Enum):
    LARGER_SPO2 = "larger_spo2"
    EQUAL_WITH_SYMBOL = "equal_with_symbol"


class DisplayKind(enum.Enum):
    SSD = "SSD"  # seven-segment
    DMD = "DMD"  # dot-matrix


class GlyphRole(enum.Enum):
    SPO2 = "spo2"
    PR = "pr"
    EXTRA = "extra"
    SYMBOL = "symbol"


@dataclass(frozen=True)
class SceneGlyph:
    glyph: GlyphClass
    box: BBox
    role: GlyphRole


@dataclass(frozen=True)
class GroundTruthScene:
    dims: ImageDims
    layout: LayoutKind
    display: DisplayKind
    spo2_true: int
    pr_true: int
    glyphs: tuple[SceneGlyph, ...]
    true_orientation: int

    def __post_init__(self):
        object.__setattr__(self, "glyphs", tuple(self.glyphs))
        if not SPO2_RANGE[0] <= self.spo2_true <= SPO2_RANGE[1]:
            raise ValidationError(f"spo2 {self.spo2_true} outside {SPO2_RANGE}")
        if not PR_RANGE[0] <= self.pr_true <= PR_RANGE[1]:
            raise ValidationError(f"pr {self.pr_true} outside {PR_RANGE}")
        if self.true_orientation not in QUARTER_TURNS:
            raise ValidationError(f"orientation must be one of {QUARTER_TURNS}")
        for g in self.glyphs:
            if not g.box.within(self.dims):
                raise ValidationError(f"glyph box {g.box} outside dims {self.dims}")
        values = self.group_values()
        if values.get(GlyphRole.SPO2) != self.spo2_true or values.get(GlyphRole.PR) != self.pr_true:
            raise ValidationError(
                f"digit glyphs spell {values}, expected spo2={self.spo2_true} pr={self.pr_true}"
            )

    def digit_glyphs(self) -> tuple[SceneGlyph, ...]:
        return tuple(g for g in self.glyphs if g.glyph.is_digit)

    def symbol_glyphs(self) -> tuple[SceneGlyph, ...]:
        return tuple(g for g in self.glyphs if not g.glyph.is_digit)

    def group_values(self) -> dict[GlyphRole, int]:
        """Value spelled by each digit group, in stored (upright reading) order."""
        spelled: dict[GlyphRole, str] = {}
        for g in self.digit_glyphs():
            spelled[g.role] = spelled.get(g.role, "") + g.glyph.token
        return {role: int(s) for role, s in spelled.items()}

    def digit_partition(self) -> set[frozenset[int]]:
        """Partition of digit-glyph indices by group, the clustering oracle."""
        by_role: dict[GlyphRole, set[int]] = {}
        for i, g in enumerate(self.digit_glyphs()):
            by_role.setdefault(g.role, set()).add(i)
        return {frozenset(v) for v in by_role.values()}


def classify_group(scene: GroundTruthScene) -> str:
    """Dataset group tag: display kind x saturation level, cut off at 95%."""
    level = "N" if scene.spo2_true >= 95 else "L"
    return f"{scene.display.value}-{level}"

GROUP_TAGS = ("SSD-N", "SSD-L", "DMD-N", "DMD-L")


def _digit_row(value: int, x0: float, baseline: float, h: float, w: float, role: GlyphRole) -> list[SceneGlyph]:
    glyphs = []
    x = x0
    for ch in str(value):
        glyphs.append(SceneGlyph(GlyphClass.from_token(ch), BBox(x, baseline - h, x + w, baseline), role))
        x += 1.2 * w  # 0.2 w gap between digits
    return glyphs


def _row_span(n_digits: int, w: float) -> float:
    return w * (1.2 * (n_digits - 1) + 1)


def _row_diameter(n_digits: int, w: float) -> float:
    """Distance between the extreme digit centroids of one row."""
    return 1.2 * w * (n_digits - 1)


def generate_scene(
    layout: LayoutKind,
    display: DisplayKind,
    spo2: int,
    pr: int,
    orientation: int,
    seed: int,
    extra_group: bool = False,
    scale: float = 1.0,
) -> GroundTruthScene:
    """Build one scene. All placement draws are pure in `seed`.

    `scale` multiplies the whole canvas (1.0 -> 640 px, 2.0 -> 1280 px).
    Stacked rows are spaced by at least 1.25x the widest row's diameter,
    which makes the group partition the unambiguous k-means optimum: every
    digit is strictly closer to all of its own row than to any other row.
    """
    if not SPO2_RANGE[0] <= spo2 <= SPO2_RANGE[1]:
        raise ValidationError(f"spo2 {spo2} outside {SPO2_RANGE}")
    if not PR_RANGE[0] <= pr <= PR_RANGE[1]:
        raise ValidationError(f"pr {pr} outside {PR_RANGE}")
    if orientation not in QUARTER_TURNS:
        raise ValidationError(f"orientation must be one of {QUARTER_TURNS}")

    rng = random.Random(derive_seed("scene", seed))
    side = 640.0
    dims = ImageDims(side, side)
    aspect = rng.uniform(0.45, 0.65)
    n_rows = 3 if extra_group else 2

    if layout is LayoutKind.LARGER_SPO2:
        arrangement = "row" if not extra_group and rng.random() < 0.5 else "stack"
        if arrangement == "row":
            h_s = rng.uniform(80.0, 95.0)
        else:
            h_s = rng.uniform(85.0, 105.0) if n_rows == 2 else rng.uniform(55.0, 70.0)
        h_p = h_s / rng.uniform(1.35, 1.8)
    else:
        arrangement = "stack"
        h_s = h_p = rng.uniform(55.0, 80.0) if n_rows == 2 else rng.uniform(55.0, 70.0)
    w_s, w_p = aspect * h_s, aspect * h_p

    extra_digits = 0
    if extra_group:
        base_digits = len(str(spo2)) + len(str(pr))
        extra_digits = 2 if base_digits == 4 else rng.choice((1, 2))
        lo = EXTRA_VALUE_RANGE[0] if extra_digits == 1 else 10
        hi = 9 if extra_digits == 1 else EXTRA_VALUE_RANGE[1]
        extra_val = rng.randint(lo, hi)
    h_e = 0.45 * h_p
    w_e = aspect * h_e

    mx = rng.uniform(25.0, 45.0)
    my = rng.uniform(25.0, 45.0)
    glyphs: list[SceneGlyph] = []

    if arrangement == "row":
        baseline = my + h_s
        spo2_x0 = mx
        pr_x0 = spo2_x0 + _row_span(len(str(spo2)), w_s) + rng.uniform(1.5, 2.2) * w_s
        spo2_args = (spo2_x0, baseline, h_s, w_s)
        pr_args = (pr_x0, baseline, h_p, w_p)
    else:
        # Row centroid spacing: clear of overlap, and dominating the widest
        # row's diameter so clustering cannot split a row.
        diameters = [_row_diameter(len(str(spo2)), w_s), _row_diameter(len(str(pr)), w_p)]
        if extra_group:
            diameters.append(_row_diameter(extra_digits, w_e))
        min_spread = max(diameters) * rng.uniform(1.25, 1.45)
        dx_s = rng.uniform(0.0, 0.5) * w_s
        dx_p = rng.uniform(0.0, 0.5) * w_s
        spacing_sp = max((h_s + h_p) / 2 + rng.uniform(0.55, 0.8) * h_s, min_spread)
        spo2_baseline = my + h_s
        spo2_mid = spo2_baseline - h_s / 2
        pr_baseline = spo2_mid + spacing_sp + h_p / 2
        spo2_args = (mx + dx_s, spo2_baseline, h_s, w_s)
        pr_args = (mx + dx_p, pr_baseline, h_p, w_p)

    glyphs += _digit_row(spo2, *spo2_args, GlyphRole.SPO2)
    glyphs += _digit_row(pr, *pr_args, GlyphRole.PR)

    if extra_group:
        spacing_pe = max((h_p + h_e) / 2 + rng.uniform(0.55, 0.8) * h_s, min_spread)
        extra_baseline = pr_args[1] - h_p / 2 + spacing_pe + h_e / 2
        extra_x0 = mx + rng.uniform(1.0, 2.5) * w_p
        glyphs += _digit_row(extra_val, extra_x0, extra_baseline, h_e, w_e, GlyphRole.EXTRA)

    if layout is LayoutKind.EQUAL_WITH_SYMBOL:
        token = rng.choice(("%", "s", "p"))
        h_sym = 0.6 * h_s
        w_sym = aspect * h_sym
        sym_x0 = spo2_args[0] + _row_span(len(str(spo2)), w_s) + rng.uniform(0.3, 0.6) * w_s
        sym_baseline = spo2_args[1]
        glyphs.append(
            SceneGlyph(
                GlyphClass.from_token(token),
                BBox(sym_x0, sym_baseline - h_sym, sym_x0 + w_sym, sym_baseline),
                GlyphRole.SYMBOL,
            )
        )

    for g in glyphs:
        if not g.box.within(dims):
            raise ValidationError(f"layout overflow: {g} outside {side}x{side} canvas (seed {seed})")

    if scale != 1.0:
        dims = ImageDims(side * scale, side * scale)
        glyphs = [
            SceneGlyph(
                g.glyph,
                BBox(g.box.x_min * scale, g.box.y_min * scale, g.box.x_max * scale, g.box.y_max * scale),
                g.role,
            )
            for g in glyphs
        ]

    # The captured image is the upright layout rotated so that applying
    # `orientation` to it brings the display upright again.
    capture_turn = (360 - orientation) % 360
    captured = tuple(
        SceneGlyph(g.glyph, rotate_box(g.box, capture_turn, dims), g.role) for g in glyphs
    )
    return GroundTruthScene(
        dims=dims.rotated(capture_turn),
        layout=layout,
        display=display,
        spo2_true=spo2,
        pr_true=pr,
        glyphs=captured,
        true_orientation=orientation,
    )


def symbol_nearest_spo2(scene: GroundTruthScene) -> bool:
    """True if some symbol centroid is strictly nearer the leftmost upright
    SpO2 digit than the leftmost PR digit (upright frame)."""
    up = scene.true_orientation
    boxes = {}
    for role in (GlyphRole.SPO2, GlyphRole.PR):
        first = next(g for g in scene.glyphs if g.role is role)
        boxes[role] = centroid(rotate_box(first.box, up, scene.dims))
    for g in scene.glyphs:
        if g.role is GlyphRole.SYMBOL:
            c = centroid(rotate_box(g.box, up, scene.dims))
            d_spo2 = (c.x - boxes[GlyphRole.SPO2].x) ** 2 + (c.y - boxes[GlyphRole.SPO2].y) ** 2
            d_pr = (c.x - boxes[GlyphRole.PR].x) ** 2 + (c.y - boxes[GlyphRole.PR].y) ** 2
            if d_spo2 < d_pr:
                return True
    return False
