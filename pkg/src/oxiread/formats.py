"""Line-oriented record formats shared by the CLI, the service, and tests.

Every file this package writes is JSON-lines with sorted keys and compact
separators, so identical data always serializes to identical bytes. The
normalized-box text convention (one `class cx cy w h` line per glyph) is
supported for interoperability with common detection tooling.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .detections import CLASS_FROM_ID, CLASS_IDS, Detection, DetectionSet, GlyphClass
from .errors import ParseError, ValidationError
from .geometry import BBox, ImageDims
from .vitals import (
    AssignmentRule,
    CandidateDiagnostic,
    FailureReason,
    ReadFailure,
    VitalsReading,
)

ANNOTATION_FORMAT = "oxiread-annotations"
ANNOTATION_VERSION = 1


def dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(dump_record(record) + "\n")


def read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    """Yield (line number, record); malformed lines raise with their location."""
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: bad JSON: {exc}", line_no=line_no) from exc
            if not isinstance(record, dict):
                raise ParseError(f"{path}: expected an object", line_no=line_no)
            yield line_no, record


def _require(record: dict, keys: tuple[str, ...], where: str, line_no: int) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise ParseError(f"{where}: missing fields {missing}", line_no=line_no)


# -- detection interchange ---------------------------------------------------

def detection_records(image_id: str, detections: DetectionSet) -> list[dict]:
    return [
        {
            "image_id": image_id,
            "glyph": d.glyph.token,
            "confidence": d.confidence,
            "box": [d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max],
            "rotation_applied": detections.rotation_applied,
            "width": detections.dims.width,
            "height": detections.dims.height,
        }
        for d in detections.detections
    ]


def detection_sets_from_records(records: list[tuple[int, dict]]) -> dict[tuple[str, int], DetectionSet]:
    """Group detection lines into per-(image, rotation) sets, preserving
    line order within each set."""
    grouped: dict[tuple[str, int], list[Detection]] = {}
    meta: dict[tuple[str, int], ImageDims] = {}
    for line_no, rec in records:
        _require(rec, ("image_id", "glyph", "confidence", "box", "rotation_applied", "width", "height"), "detection", line_no)
        try:
            key = (rec["image_id"], int(rec["rotation_applied"]))
            det = Detection(
                glyph=GlyphClass.from_token(rec["glyph"]),
                box=BBox(*rec["box"]),
                confidence=float(rec["confidence"]),
            )
            dims = ImageDims(float(rec["width"]), float(rec["height"]))
        except ValidationError:
            raise  # impossible geometry is a data problem, not a syntax problem
        except (TypeError, ValueError) as exc:
            raise ParseError(f"detection: {exc}", line_no=line_no) from exc
        if key in meta and meta[key] != dims:
            raise ParseError(f"detection: inconsistent dims for {key}", line_no=line_no)
        meta[key] = dims
        grouped.setdefault(key, []).append(det)
    return {
        key: DetectionSet(detections=tuple(dets), dims=meta[key], rotation_applied=key[1])
        for key, dets in grouped.items()
    }


# -- reading results ---------------------------------------------------------

def reading_payload(result: VitalsReading | ReadFailure) -> dict:
    if isinstance(result, VitalsReading):
        return {
            "status": "ok",
            "spo2": result.spo2,
            "pr": result.pr,
            "rotation_used": result.rotation_used,
            "median_conf": result.median_conf,
            "assignment_rule": result.assignment_rule.value,
            "pruned": result.pruned,
        }
    return {
        "status": "failed",
        "reason": result.reason.value,
        "diagnostics": [
            {
                "rotation": d.rotation,
                "median_conf": d.median_conf,
                "n_digits": d.n_digits,
                "note": d.note,
            }
            for d in result.diagnostics
        ],
    }


def reading_record(image_id: str, result: VitalsReading | ReadFailure) -> dict:
    return {"image_id": image_id, **reading_payload(result)}


def reading_from_record(record: dict, line_no: int = 0) -> tuple[str, VitalsReading | ReadFailure]:
    _require(record, ("image_id", "status"), "reading", line_no)
    if record["status"] == "ok":
        _require(record, ("spo2", "pr", "rotation_used", "median_conf", "assignment_rule", "pruned"), "reading", line_no)
        return record["image_id"], VitalsReading(
            spo2=record["spo2"],
            pr=record["pr"],
            rotation_used=record["rotation_used"],
            median_conf=record["median_conf"],
            assignment_rule=AssignmentRule(record["assignment_rule"]),
            pruned=record["pruned"],
        )
    if record["status"] == "failed":
        _require(record, ("reason",), "reading", line_no)
        return record["image_id"], ReadFailure(
            reason=FailureReason(record["reason"]),
            diagnostics=tuple(
                CandidateDiagnostic(
                    rotation=d["rotation"],
                    median_conf=d["median_conf"],
                    n_digits=d["n_digits"],
                    note=d["note"],
                )
                for d in record.get("diagnostics", ())
            ),
        )
    raise ParseError(f"reading: unknown status {record['status']!r}", line_no=line_no)


# -- normalized-box text convention ------------------------------------------

def normbox_line(cls: GlyphClass, box: BBox, dims: ImageDims) -> str:
    cx = (box.x_min + box.x_max) / 2 / dims.width
    cy = (box.y_min + box.y_max) / 2 / dims.height
    w = box.width / dims.width
    h = box.height / dims.height
    return f"{CLASS_IDS[cls]} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}"


def parse_normbox_line(line: str, dims: ImageDims, line_no: int = 0) -> tuple[GlyphClass, BBox]:
    parts = line.split()
    if len(parts) != 5:
        raise ParseError(f"normalized box line needs 5 fields, got {len(parts)}", line_no=line_no)
    try:
        cls_id = int(parts[0])
        cx, cy, w, h = (float(p) for p in parts[1:])
    except ValueError as exc:
        raise ParseError(f"normalized box line: {exc}", line_no=line_no) from exc
    if cls_id not in CLASS_FROM_ID:
        raise ParseError(f"unknown class id {cls_id}", line_no=line_no)
    box = BBox(
        (cx - w / 2) * dims.width,
        (cy - h / 2) * dims.height,
        (cx + w / 2) * dims.width,
        (cy + h / 2) * dims.height,
    )
    return CLASS_FROM_ID[cls_id], box
