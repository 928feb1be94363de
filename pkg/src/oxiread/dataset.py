"""Corpus construction, annotation I/O, balancing, and cross-validation.

A corpus on disk is a directory with two files (native format):

  manifest.jsonl     one record per image: id, group, dims, vitals, layout
  annotations.jsonl  header line, then one record per glyph box

The normalized-box text convention is also accepted: one `<image_id>.txt`
per image next to the manifest, holding `class cx cy w h` lines. That
format has no group-role column, so roles are re-derived from geometry and
the manifest values on load.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .detections import Detection, DetectionSet, GlyphClass, derive_seed
from .errors import ParseError, ValidationError
from .formats import (
    ANNOTATION_FORMAT,
    ANNOTATION_VERSION,
    dump_record,
    normbox_line,
    parse_normbox_line,
    read_jsonl,
    write_jsonl,
)
from .geometry import QUARTER_TURNS, BBox, ImageDims, Point, centroid, rotate_box
from .grouping import assemble_clusters, choose_k, kmeans
from .synthgen import (
    GROUP_TAGS,
    DisplayKind,
    GlyphRole,
    GroundTruthScene,
    LayoutKind,
    SceneGlyph,
    classify_group,
    generate_scene,
)


@dataclass(frozen=True)
class AnnotatedImage:
    image_id: str
    scene: GroundTruthScene
    group: str

    def __post_init__(self):
        expected = classify_group(self.scene)
        if self.group != expected:
            raise ValidationError(
                f"{self.image_id}: group tag {self.group!r} but scene classifies as {expected!r}"
            )

    @property
    def dims(self) -> ImageDims:
        return self.scene.dims

    @property
    def spo2_true(self) -> int:
        return self.scene.spo2_true

    @property
    def pr_true(self) -> int:
        return self.scene.pr_true

    def gt_boxes(self) -> list[tuple]:
        """(class, box) pairs in the captured frame, for detection metrics."""
        return [(g.glyph, g.box) for g in self.scene.glyphs]


@dataclass(frozen=True)
class SplitPlan:
    folds: int
    seed: int
    assignments: dict[str, int]

    def validation_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(i for i, f in self.assignments.items() if f == fold)

    def training_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(i for i, f in self.assignments.items() if f != fold)


def build_balanced_corpus(
    per_group: int,
    seed: int,
    orientations: str = "mixed",
    scale: float = 1.0,
) -> list[AnnotatedImage]:
    """Synthesize an equally sized sample of every display group.

    `orientations` is "upright" (all scenes captured upright) or "mixed"
    (uniform quarter turns). Scenes whose two vitals already occupy six
    digits get a third small number so the digit count still determines
    the cluster count correctly.
    """
    if orientations not in ("upright", "mixed"):
        raise ValidationError(f"orientations must be upright or mixed, got {orientations!r}")
    if per_group < 0:
        raise ValidationError("per_group cannot be negative")
    images = []
    for tag in GROUP_TAGS:
        display = DisplayKind(tag.split("-")[0])
        normal_level = tag.endswith("-N")
        for i in range(per_group):
            rng = random.Random(derive_seed("corpus", seed, tag, i))
            spo2 = rng.randint(95, 100) if normal_level else rng.randint(70, 94)
            pr = rng.randint(40, 300)
            layout = rng.choice(list(LayoutKind))
            orientation = 0 if orientations == "upright" else rng.choice(QUARTER_TURNS)
            extra = len(str(spo2)) + len(str(pr)) >= 6 or rng.random() < 0.4
            scene = generate_scene(
                layout,
                display,
                spo2,
                pr,
                orientation,
                seed=derive_seed(seed, tag, i),
                extra_group=extra,
                scale=scale,
            )
            images.append(AnnotatedImage(image_id=f"{tag.lower()}-{i:05d}", scene=scene, group=tag))
    return images


# -- corpus files ------------------------------------------------------------

def _manifest_record(img: AnnotatedImage) -> dict:
    s = img.scene
    return {
        "image_id": img.image_id,
        "group": img.group,
        "width": s.dims.width,
        "height": s.dims.height,
        "spo2": s.spo2_true,
        "pr": s.pr_true,
        "orientation": s.true_orientation,
        "layout": s.layout.value,
        "display": s.display.value,
    }


def save_corpus(images: list[AnnotatedImage], out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "manifest.jsonl", [_manifest_record(img) for img in images])
    with open(out_dir / "annotations.jsonl", "w") as fh:
        fh.write(dump_record({"format": ANNOTATION_FORMAT, "version": ANNOTATION_VERSION, "images": len(images)}) + "\n")
        for img in images:
            for g in img.scene.glyphs:
                fh.write(
                    dump_record(
                        {
                            "image_id": img.image_id,
                            "glyph": g.glyph.token,
                            "role": g.role.value,
                            "box": [g.box.x_min, g.box.y_min, g.box.x_max, g.box.y_max],
                        }
                    )
                    + "\n"
                )


def save_corpus_normbox(images: list[AnnotatedImage], out_dir: Path) -> None:
    """Write the interoperability flavor: manifest plus one text file of
    normalized boxes per image."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "manifest.jsonl", [_manifest_record(img) for img in images])
    for img in images:
        lines = [normbox_line(g.glyph, g.box, img.dims) for g in img.scene.glyphs]
        (out_dir / f"{img.image_id}.txt").write_text("".join(line + "\n" for line in lines))


def _load_manifest(path: Path) -> dict[str, dict]:
    records = {}
    for line_no, rec in read_jsonl(path):
        for key in ("image_id", "group", "width", "height", "spo2", "pr", "orientation", "layout", "display"):
            if key not in rec:
                raise ParseError(f"manifest: missing {key!r}", line_no=line_no)
        if rec["image_id"] in records:
            raise ParseError(f"manifest: duplicate image id {rec['image_id']!r}", line_no=line_no)
        records[rec["image_id"]] = rec
    return records


def _scene_from_parts(meta: dict, glyphs: list[SceneGlyph]) -> GroundTruthScene:
    return GroundTruthScene(
        dims=ImageDims(meta["width"], meta["height"]),
        layout=LayoutKind(meta["layout"]),
        display=DisplayKind(meta["display"]),
        spo2_true=meta["spo2"],
        pr_true=meta["pr"],
        glyphs=tuple(glyphs),
        true_orientation=meta["orientation"],
    )


def _infer_roles(meta: dict, glyphs: list[tuple]) -> list[SceneGlyph]:
    """Recover group roles for role-less annotations.

    Digits are rotated upright, clustered by position (k from the group
    count implied by the digit total), and each cluster is matched to the
    manifest vitals by its concatenated value. Fails loudly when geometry
    and values cannot be reconciled.
    """
    dims = ImageDims(meta["width"], meta["height"])
    upright_dims = dims.rotated(meta["orientation"])
    digits = [(cls, box) for cls, box in glyphs if cls.is_digit]
    symbols = [(cls, box) for cls, box in glyphs if not cls.is_digit]
    if len(digits) < 4:
        raise ValidationError(f"{meta['image_id']}: too few digits to infer roles")

    upright = [
        Detection(glyph=cls, box=rotate_box(box, meta["orientation"], dims), confidence=1.0)
        for cls, box in digits
    ]
    det_set = DetectionSet(detections=tuple(upright), dims=upright_dims, rotation_applied=0)
    features = [
        Point(centroid(d.box).x / upright_dims.width, centroid(d.box).y / upright_dims.height)
        for d in upright
    ]
    k = choose_k(len(digits))
    clusters = assemble_clusters(det_set, kmeans(features, k))

    remaining = list(clusters)
    roles: dict[int, GlyphRole] = {}

    def claim(value: int, role: GlyphRole) -> None:
        match = [c for c in remaining if c.value == value]
        if not match:
            raise ValidationError(
                f"{meta['image_id']}: no digit group reads {value} for {role.value}"
            )
        chosen = max(match, key=lambda c: c.mean_glyph_area)
        remaining.remove(chosen)
        for m in chosen.members:
            roles[id(m)] = role

    claim(meta["spo2"], GlyphRole.SPO2)
    claim(meta["pr"], GlyphRole.PR)
    for c in remaining:
        for m in c.members:
            roles[id(m)] = GlyphRole.EXTRA

    # Rebuild in canonical order (saturation, pulse, extra digits, symbols),
    # reading order within each group, with the original captured boxes.
    captured_by_id = {id(d): box for d, (_, box) in zip(upright, digits)}
    ordered = []
    for role in (GlyphRole.SPO2, GlyphRole.PR, GlyphRole.EXTRA):
        members = [d for d in upright if roles.get(id(d)) is role]
        members.sort(key=lambda d: centroid(d.box).x)
        ordered += [SceneGlyph(d.glyph, captured_by_id[id(d)], role) for d in members]
    ordered += [SceneGlyph(cls, box, GlyphRole.SYMBOL) for cls, box in symbols]
    return ordered


def load_annotations(path: Path, fmt: str = "native") -> list[AnnotatedImage]:
    """Read a corpus directory back into annotated images.

    `fmt` is "native" or "normbox". Malformed lines raise a parse error
    with their line number; geometrically or semantically impossible
    records raise a validation error.
    """
    root = Path(path)
    manifest = _load_manifest(root / "manifest.jsonl")

    if fmt == "native":
        lines = read_jsonl(root / "annotations.jsonl")
        line_no, header = next(lines, (0, None))
        if header is None or header.get("format") != ANNOTATION_FORMAT:
            raise ParseError("annotations: missing or foreign header line", line_no=line_no)
        if header.get("version") != ANNOTATION_VERSION:
            raise ParseError(f"annotations: unsupported version {header.get('version')!r}", line_no=line_no)
        by_image: dict[str, list[SceneGlyph]] = {image_id: [] for image_id in manifest}
        for line_no, rec in lines:
            for key in ("image_id", "glyph", "role", "box"):
                if key not in rec:
                    raise ParseError(f"annotations: missing {key!r}", line_no=line_no)
            if rec["image_id"] not in manifest:
                raise ParseError(f"annotations: unknown image id {rec['image_id']!r}", line_no=line_no)
            try:
                glyph = SceneGlyph(
                    glyph=GlyphClass.from_token(rec["glyph"]),
                    box=BBox(*rec["box"]),
                    role=GlyphRole(rec["role"]),
                )
            except ValidationError:
                raise  # bad geometry is a validation failure even when the JSON parses
            except (TypeError, ValueError) as exc:
                raise ParseError(f"annotations: {exc}", line_no=line_no) from exc
            by_image[rec["image_id"]].append(glyph)
        return [
            AnnotatedImage(
                image_id=image_id,
                scene=_scene_from_parts(meta, by_image[image_id]),
                group=meta["group"],
            )
            for image_id, meta in manifest.items()
        ]

    if fmt == "normbox":
        images = []
        for image_id, meta in manifest.items():
            dims = ImageDims(meta["width"], meta["height"])
            glyphs = []
            text = (root / f"{image_id}.txt").read_text()
            for line_no, line in enumerate(text.splitlines(), start=1):
                if line.strip():
                    glyphs.append(parse_normbox_line(line, dims, line_no=line_no))
            scene = _scene_from_parts(meta, _infer_roles(meta, glyphs))
            images.append(AnnotatedImage(image_id=image_id, scene=scene, group=meta["group"]))
        return images

    raise ValidationError(f"unknown annotation format {fmt!r}")


# -- balancing and splitting ---------------------------------------------------

def undersample_balance(images: list[AnnotatedImage], per_group: int, seed: int) -> list[AnnotatedImage]:
    """Seeded uniform undersampling to exactly `per_group` images per group,
    preserving the input order of what survives."""
    by_group: dict[str, list[AnnotatedImage]] = {}
    for img in images:
        by_group.setdefault(img.group, []).append(img)
    selected: set[str] = set()
    for tag in sorted(by_group):
        members = by_group[tag]
        if len(members) < per_group:
            raise ValidationError(
                f"group {tag} has {len(members)} images, cannot undersample to {per_group}"
            )
        rng = random.Random(derive_seed("undersample", seed, tag))
        selected.update(img.image_id for img in rng.sample(members, per_group))
    return [img for img in images if img.image_id in selected]


def kfold_split(images: list[AnnotatedImage], folds: int = 5, seed: int = 0) -> SplitPlan:
    """Stratified fold assignment: shuffle within each group, deal
    round-robin, so per-group counts across folds differ by at most one.

    The deal continues across groups instead of restarting at fold zero,
    so overall fold sizes also differ by at most one; groups smaller than
    the fold count would otherwise leave the last folds empty."""
    if folds < 2:
        raise ValidationError(f"need at least 2 folds, got {folds}")
    if folds > len(images):
        raise ValidationError(f"{folds} folds for {len(images)} images")
    assignments: dict[str, int] = {}
    by_group: dict[str, list[str]] = {}
    for img in images:
        by_group.setdefault(img.group, []).append(img.image_id)
    cursor = 0
    for tag in sorted(by_group):
        ids = list(by_group[tag])
        random.Random(derive_seed("kfold", seed, tag)).shuffle(ids)
        for image_id in ids:
            assignments[image_id] = cursor % folds
            cursor += 1
    return SplitPlan(folds=folds, seed=seed, assignments=assignments)
