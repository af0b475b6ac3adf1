"""
Scoring baselines on the bundled corpus
=======================================

The package ships five small synthetic documents with EDU-level gold trees.
Here every generator is scored at three levels with both span conventions.
"""

from pathlib import Path

import numpy as np

import discotree
from discotree.boundary import cohesion_scores
from discotree.corpus import load_corpus, parse_tree, read_tree_lines
from discotree.errors import EmptyTotal
from discotree.parseval import evaluate, format_table
from discotree.treegen import GenMethod, generate

root = Path(discotree.__file__).parent / "data" / "synthetic"
docs = load_corpus(root)
lines = read_tree_lines(root / "gold.trees")
gold = {d.id: parse_tree(lines[d.id], "edu", d.n_edus) for d in docs}

# lexical cohesion stands in for a trained segmenter
probs = {d.id: cohesion_scores(d, window=2) for d in docs}

levels = ["s-p", "p-d", "s-d"]


def score(pred, conv):
    row = {}
    for level in levels:
        try:
            row[level] = evaluate(pred, gold, docs, level, conv).precision
        except EmptyTotal:
            row[level] = None
    return row


###############################################################################
# Deterministic generators.

rows = {}
for method in (GenMethod("greedy"), GenMethod("cky", gamma=0.5), GenMethod("right"),
               GenMethod("left")):
    pred = {d.id: generate(method, probs[d.id], d.n_sentences) for d in docs}
    rows[method.kind.value] = score(pred, "rst")

###############################################################################
# The random baseline is averaged over ten seeds.

runs = [score({d.id: generate(GenMethod("random", seed=s), k=d.n_sentences) for d in docs}, "rst")
        for s in range(1, 11)]
rows["random"] = {lv: float(np.mean([r[lv] for r in runs])) for lv in levels}

print(format_table(rows, levels, digits=4))
