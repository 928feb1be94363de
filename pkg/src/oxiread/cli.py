"""Command line entry points.

Five subcommands: generate (synthesize a balanced corpus), read (vitals for
every image), orient (rotation ranking report), eval (detection metrics plus
the three experiment accuracies over folds), split (undersample and assign
cross-validation folds).

Output is machine-readable JSON lines by default; `--format table` renders
for humans. Exit codes: 0 success, 2 usage, 3 parse failure, 4 validation
failure. Every option can be set via environment variables prefixed
OXIREAD_<COMMAND>_<OPTION>.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from .dataset import (
    build_balanced_corpus,
    kfold_split,
    load_annotations,
    save_corpus,
    save_corpus_normbox,
    undersample_balance,
)
from .detections import NoiseModel, ReplayBackend
from .errors import ParseError, ValidationError
from .experiments import detection_report, fold_summaries, mock_factory
from .formats import detection_sets_from_records, dump_record, read_jsonl, reading_record
from .orientation import rank_rotations
from .vitals import read_vitals

EXIT_PARSE = 3
EXIT_VALIDATION = 4


def guarded(fn):
    """Map domain failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            click.echo(f"parse error: {exc}", err=True)
            sys.exit(EXIT_PARSE)
        except ValidationError as exc:
            click.echo(f"validation error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


def noise_options(fn):
    opts = [
        click.option("--noise-dropout", type=float, default=0.0, show_default=True, help="per-glyph miss probability"),
        click.option("--noise-jitter", type=float, default=0.0, show_default=True, help="box jitter, fraction of glyph height"),
        click.option("--noise-confusion", type=float, default=0.0, show_default=True, help="6/9 swap rate for upside-down views"),
        click.option("--noise-conf-spread", type=float, default=0.0, show_default=True, help="confidence spread within the band"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _noise(kwargs: dict) -> NoiseModel:
    return NoiseModel(
        dropout=kwargs.pop("noise_dropout"),
        jitter=kwargs.pop("noise_jitter"),
        confusion_180=kwargs.pop("noise_confusion"),
        conf_spread=kwargs.pop("noise_conf_spread"),
    )


def _render_table(rows: list[dict], columns: list[str]) -> str:
    cells = [[("" if row.get(c) is None else str(row.get(c))) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def _emit(records: list[dict], fmt: str, output: str, columns: list[str]) -> None:
    with click.open_file(output, "w") as out:
        if fmt == "table":
            out.write(_render_table(records, columns))
        else:
            for record in records:
                out.write(dump_record(record) + "\n")


def _replay_sets(path: Path) -> dict[tuple[str, int], object]:
    return detection_sets_from_records(list(read_jsonl(path)))


def _replay_backend(sets_by_key: dict, image_id: str, fallback_dims=None) -> ReplayBackend:
    sets = {rot: ds for (iid, rot), ds in sets_by_key.items() if iid == image_id}
    if sets:
        rot, ds = next(iter(sets.items()))
        captured = ds.dims.rotated(rot)
        for r, d in sets.items():
            if d.dims != captured.rotated(r):
                raise ValidationError(f"{image_id}: detection sets disagree about image dims")
    else:
        captured = fallback_dims
    return ReplayBackend(sets=sets, dims=captured)


@click.group(context_settings={"auto_envvar_prefix": "OXIREAD"})
def cli():
    """Read pulse-oximeter vitals from per-digit detections."""


@cli.command()
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--per-group", type=int, default=125, show_default=True, help="scenes per display group")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--orientations", type=click.Choice(["upright", "mixed"]), default="mixed", show_default=True)
@click.option("--resolution", type=click.Choice(["640", "1280"]), default="640", show_default=True)
@click.option("--normbox", is_flag=True, help="also write normalized-box text files")
@guarded
def generate(out_dir: Path, per_group: int, seed: int, orientations: str, resolution: str, normbox: bool):
    """Synthesize a balanced ground-truth corpus into OUT_DIR."""
    images = build_balanced_corpus(per_group, seed, orientations, scale=int(resolution) / 640)
    save_corpus(images, out_dir)
    if normbox:
        save_corpus_normbox(images, out_dir)
    click.echo(f"wrote {len(images)} scenes ({per_group} per group) to {out_dir}", err=True)


@cli.command()
@click.argument("corpus", type=click.Path(exists=True, file_okay=False, path_type=Path), required=False)
@click.option("--detections", "detections_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="replay a detections file instead of mocking from the corpus")
@click.option("--seed", type=int, default=0, show_default=True)
@noise_options
@click.option("--auto-orient/--no-auto-orient", default=True, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["lines", "table"]), default="lines", show_default=True)
@click.option("-o", "--output", default="-", show_default=True)
@guarded
def read(corpus: Path | None, detections_path: Path | None, seed: int, auto_orient: bool, fmt: str, output: str, **noise_kwargs):
    """Read vitals for every image in CORPUS (or a --detections file)."""
    noise = _noise(noise_kwargs)
    results = []
    if detections_path is not None:
        sets_by_key = _replay_sets(detections_path)
        for image_id in dict.fromkeys(iid for iid, _ in sets_by_key):
            backend = _replay_backend(sets_by_key, image_id)
            results.append((image_id, read_vitals(backend, None, auto_orient=auto_orient)))
    elif corpus is not None:
        factory = mock_factory(noise, seed)
        for img in load_annotations(corpus):
            results.append((img.image_id, read_vitals(factory(img), img, auto_orient=auto_orient)))
    else:
        raise click.UsageError("pass a corpus directory or --detections")

    records = [reading_record(image_id, result) for image_id, result in results]
    _emit(records, fmt, output, ["image_id", "status", "spo2", "pr", "rotation_used", "reason"])
    ok = sum(1 for r in records if r["status"] == "ok")
    click.echo(f"{ok} ok, {len(records) - ok} failed", err=True)


@cli.command()
@click.argument("corpus", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--seed", type=int, default=0, show_default=True)
@noise_options
@click.option("--format", "fmt", type=click.Choice(["lines", "table"]), default="lines", show_default=True)
@click.option("-o", "--output", default="-", show_default=True)
@guarded
def orient(corpus: Path, seed: int, fmt: str, output: str, **noise_kwargs):
    """Rank the four quarter turns for every image in CORPUS."""
    factory = mock_factory(_noise(noise_kwargs), seed)
    records = []
    for img in load_annotations(corpus):
        candidates = rank_rotations(factory(img), img)
        records.append(
            {
                "image_id": img.image_id,
                "true_orientation": img.scene.true_orientation,
                "top_rotation": candidates[0].rotation,
                "hit": candidates[0].rotation == img.scene.true_orientation,
                "ranking": [
                    {"rotation": c.rotation, "median_conf": c.median_confidence} for c in candidates
                ],
            }
        )
    _emit(records, fmt, output, ["image_id", "true_orientation", "top_rotation", "hit"])
    hits = sum(r["hit"] for r in records)
    pct = 100.0 * hits / len(records) if records else 0.0
    click.echo(f"top-1 orientation recovery: {hits}/{len(records)} ({pct:.1f}%)", err=True)


@cli.command("eval")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--predictions", "predictions_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="score a detections file instead of the mock detector")
@click.option("--seed", type=int, default=0, show_default=True)
@noise_options
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--iou-threshold", type=float, default=0.5, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["lines", "table"]), default="lines", show_default=True)
@click.option("-o", "--output", default="-", show_default=True)
@guarded
def eval_cmd(corpus: Path, predictions_path: Path | None, seed: int, folds: int, iou_threshold: float, fmt: str, output: str, **noise_kwargs):
    """Detection metrics and experiment accuracies for CORPUS."""
    noise = _noise(noise_kwargs)
    images = load_annotations(corpus)
    if predictions_path is not None:
        sets_by_key = _replay_sets(predictions_path)
        known = {img.image_id for img in images}
        orphans = sorted({iid for iid, _ in sets_by_key if iid not in known})
        if orphans:
            raise ValidationError(f"predictions reference unknown image ids: {', '.join(orphans)}")

        def factory(img):
            return _replay_backend(sets_by_key, img.image_id, fallback_dims=img.dims)
    else:
        factory = mock_factory(noise, seed)

    report = detection_report(images, factory, iou_threshold=iou_threshold)
    summaries = fold_summaries(images, kfold_split(images, folds, seed), factory)

    records = [{"metric": "n_images", "value": report.n_images}, {"metric": "map50", "value": report.map50}]
    records += [
        {"metric": "class_ap", "glyph": cls.token, "value": ap}
        for cls, ap in report.per_class_ap.items()
    ]
    records += [
        {"metric": "accuracy", "experiment": name, "mean": s.mean, "sd": s.sd}
        for name, s in summaries.items()
    ]
    if fmt == "table":
        rows = [{"metric": "images", "value": report.n_images}, {"metric": "mAP@50", "value": f"{report.map50:.4f}"}]
        rows += [{"metric": f"AP[{cls.token}]", "value": f"{ap:.4f}"} for cls, ap in report.per_class_ap.items()]
        rows += [{"metric": f"accuracy/{name}", "value": str(s)} for name, s in summaries.items()]
        _emit(rows, fmt, output, ["metric", "value"])
    else:
        _emit(records, fmt, output, [])


@cli.command()
@click.argument("corpus", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--per-group", type=int, default=None, help="undersample each group to this size first")
@click.option("--format", "fmt", type=click.Choice(["lines", "table"]), default="lines", show_default=True)
@click.option("-o", "--output", default="-", show_default=True)
@guarded
def split(corpus: Path, folds: int, seed: int, per_group: int | None, fmt: str, output: str):
    """Assign stratified cross-validation folds for CORPUS."""
    images = load_annotations(corpus)
    if per_group is not None:
        images = undersample_balance(images, per_group, seed)
    plan = kfold_split(images, folds, seed)
    records = [
        {"image_id": img.image_id, "group": img.group, "fold": plan.assignments[img.image_id]}
        for img in images
    ]
    _emit(records, fmt, output, ["image_id", "group", "fold"])
    sizes = [len(plan.validation_ids(f)) for f in range(folds)]
    click.echo(f"fold sizes: {sizes}", err=True)


def main():
    cli()


if __name__ == "__main__":
    main()
