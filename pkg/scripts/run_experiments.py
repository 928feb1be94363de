#!/usr/bin/env python3
"""Full evaluation sweep over capture conditions and resolutions.

Three corpus conditions, hardest last:

  upright-clean   every scene captured upright, exact detections
  rotated-clean   uniform quarter-turn captures, exact detections
  rotated-noisy   quarter-turn captures plus default detector noise

Each condition runs the three scoring experiments (fixed view, auto-oriented
view, validated vitals) under k-fold cross validation, plus a box-level
detection report. The rotated conditions isolate what auto-orientation buys;
the noisy one shows how much of that survives a degraded detector.
"""

import click

from oxiread.dataset import build_balanced_corpus, kfold_split
from oxiread.detections import DEFAULT_NOISE, ZERO_NOISE
from oxiread.experiments import detection_report, fold_summaries, mock_factory

CONDITIONS = (
    ("upright-clean", "upright", ZERO_NOISE),
    ("rotated-clean", "mixed", ZERO_NOISE),
    ("rotated-noisy", "mixed", DEFAULT_NOISE),
)


@click.command()
@click.option("--per-group", default=125, show_default=True)
@click.option("--folds", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--resolutions", default="640,1280", show_default=True,
              help="Comma-separated long-side pixel sizes.")
def main(per_group: int, folds: int, seed: int, resolutions: str) -> None:
    sizes = [int(s) for s in resolutions.split(",")]
    header = f"{'condition':<16} {'res':>5} {'mAP@50':>7}  {'fixed':>12}  {'oriented':>12}  {'vitals':>12}"
    click.echo(header)
    click.echo("-" * len(header))
    for name, orientations, noise in CONDITIONS:
        for size in sizes:
            corpus = build_balanced_corpus(
                per_group, seed=seed, orientations=orientations, scale=size / 640
            )
            factory = mock_factory(noise=noise, seed=seed)
            plan = kfold_split(corpus, folds=folds, seed=seed)
            summary = fold_summaries(corpus, plan, factory)
            report = detection_report(corpus, factory)
            click.echo(
                f"{name:<16} {size:>5} {report.map50:>7.3f}  "
                f"{str(summary['fixed']):>12}  {str(summary['oriented']):>12}  "
                f"{str(summary['vitals']):>12}"
            )


if __name__ == "__main__":
    main()
