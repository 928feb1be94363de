#!/usr/bin/env python3
"""Accuracy as a function of detector dropout.

Sweeps the dropout probability on a fixed mixed-orientation corpus and
reports all three experiment accuracies at each level. The gap between the
fixed and oriented columns is the value of auto-orientation; watching it
shrink as dropout grows shows where confidence ranking stops being
informative.
"""

import click

from oxiread.dataset import build_balanced_corpus
from oxiread.detections import NoiseModel
from oxiread.experiments import corpus_accuracies, mock_factory


@click.command()
@click.option("--per-group", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-dropout", default=0.5, show_default=True)
@click.option("--steps", default=11, show_default=True)
@click.option("--jitter", default=0.05, show_default=True,
              help="Box jitter held constant across the sweep.")
def main(per_group: int, seed: int, max_dropout: float, steps: int, jitter: float) -> None:
    corpus = build_balanced_corpus(per_group, seed=seed, orientations="mixed")
    click.echo(f"{'dropout':>8} {'fixed':>8} {'oriented':>9} {'vitals':>8}")
    for step in range(steps):
        dropout = max_dropout * step / (steps - 1) if steps > 1 else 0.0
        noise = NoiseModel(dropout=dropout, jitter=jitter, conf_spread=1.0)
        acc = corpus_accuracies(corpus, mock_factory(noise=noise, seed=seed))
        click.echo(
            f"{dropout:>8.3f} {acc['fixed']:>8.1f} {acc['oriented']:>9.1f} {acc['vitals']:>8.1f}"
        )


if __name__ == "__main__":
    main()
