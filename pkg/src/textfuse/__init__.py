"""textfuse: fused TF-IDF + dense-embedding text classification.

Corpus-level count features (TF-IDF, noun counts) concatenated with a
dense sentence representation, trained under a cost-weighted softmax
loss, with the statistics machinery (macro-F1, signed-rank tests,
weight grids) needed to compare the fused model against its parts on
imbalanced data.
"""

__version__ = "0.1.0"
