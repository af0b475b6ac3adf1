"""
Trees from topic-shift probabilities
====================================

A segmenter gives one probability per gap between adjacent sentences.  This
walk-through turns such a sequence into binary trees with each generator and
compares their scores.
"""

import numpy as np

from discotree.treegen import (
    GenMethod, cky_discounted, generate, greedy_bottomup, greedy_topdown, tree_score,
)

# six sentences, five gaps; the strongest shift sits after sentence 2
probs = np.array([0.20, 0.05, 0.90, 0.30, 0.60])

###############################################################################
# Greedy top-down splits each span at its strongest gap.  Bottom-up merges the
# weakest gap first; with distinct values both give the same tree.

top = greedy_topdown(probs)
print("greedy top-down :", top.to_bracket())
print("greedy bottom-up:", greedy_bottomup(probs).to_bracket())

###############################################################################
# The discounted chart search scores a merge by (1 - p) * gamma ** (size - 1).
# gamma = 1 makes every tree score the same, so the tie rule decides.

for gamma in (0.3, 0.7, 1.0):
    tree = cky_discounted(probs, gamma)
    print(f"cky gamma={gamma:<4}: {tree.to_bracket():<28} score={tree_score(tree, probs, gamma):.4f}")

###############################################################################
# Baselines ignore the probabilities.

for method in (GenMethod("right"), GenMethod("left"), GenMethod("random", seed=4)):
    print(f"{method.kind.value:<6}:", generate(method, k=len(probs) + 1).to_bracket())
