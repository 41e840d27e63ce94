#!/usr/bin/env python3
"""Train the fused model on growing fractions of the synthetic corpus and
report the dev macro-F1 trend.

Usage: python scripts/run_data_scaling.py [--fractions 0.1,0.2,0.4,0.8,1.0]
"""

import argparse

from textfuse.corpus import split_dataset
from textfuse.model import TrainConfig
from textfuse.stats import data_scaling_run
from textfuse.synthetic import LABEL_NAMES, fusion_features, make_fusion_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fractions", default="0.1,0.2,0.4,0.8,1.0")
    ap.add_argument("--docs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--lr", type=float, default=0.05)
    args = ap.parse_args()

    fractions = sorted(float(f) for f in args.fractions.split(","))
    corpus = make_fusion_corpus(n_docs=args.docs, seed=1234)
    train_ds, _ = split_dataset(corpus, (4, 1), args.seed)
    features = fusion_features(corpus, {d.id for d in train_ds.documents})
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    table = data_scaling_run(
        fractions, features["fused"]["train"], features["fused"]["dev"],
        config, LABEL_NAMES,
    )
    for line in table.tsv_lines():
        print(line)


if __name__ == "__main__":
    main()
