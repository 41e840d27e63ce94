#!/usr/bin/env python3
"""Compare TF-IDF-only, dense-only, and fused models on the two-signal
synthetic corpus across several seeds.

Usage: python scripts/run_fusion_benchmark.py [--docs 2000] [--seeds 5]
"""

import argparse
from statistics import median

from textfuse.model import TrainConfig
from textfuse.synthetic import fusion_benchmark, make_fusion_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--docs", type=int, default=2000)
    ap.add_argument("--corpus-seed", type=int, default=1234)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--lr", type=float, default=0.05)
    args = ap.parse_args()

    corpus = make_fusion_corpus(n_docs=args.docs, seed=args.corpus_seed)
    print(f"corpus: {len(corpus)} docs ({corpus.source})")
    print("seed\tmodel\ttrain_macro_f1\tdev_macro_f1")
    collected = {"tfidf": [], "dense": [], "fused": []}
    for seed in range(1, args.seeds + 1):
        config = TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=seed)
        run = fusion_benchmark(corpus, seed, config=config)
        for model in ("tfidf", "dense", "fused"):
            train_rep, dev_rep = getattr(run, model)
            collected[model].append(dev_rep.macro_f1)
            print(f"{seed}\t{model}\t{train_rep.macro_f1:.4f}\t{dev_rep.macro_f1:.4f}")
    print("\nmodel\tmedian_dev_macro_f1")
    for model, values in collected.items():
        print(f"{model}\t{median(values):.4f}")


if __name__ == "__main__":
    main()
