"""Binary trees over sentences from boundary probabilities.

Reading ``probs[b]`` as the topical distance between sentence b and b+1,
the greedy generator splits every span at its most distant gap.  The
discounted CKY generator and the structural baselines share the same output
type, so they can be evaluated side by side.
"""

from __future__ import annotations

import enum
import heapq
import json
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boundary import BoundarySeq
from .corpus import DiscTree, Granularity, TreeNode, build_tree
from .errors import GammaOutOfRange

# relative tolerance under which CKY chart entries count as tied
CKY_TIE_RTOL = 1e-12


class MethodKind(enum.Enum):
    GREEDY = "greedy"
    CKY = "cky"
    RIGHT_BRANCH = "right"
    LEFT_BRANCH = "left"
    RANDOM = "random"


@dataclass(frozen=True)
class GenMethod:
    kind: MethodKind
    gamma: float | None = None
    seed: int | None = None

    def __post_init__(self):
        kind = MethodKind(self.kind) if not isinstance(self.kind, MethodKind) else self.kind
        object.__setattr__(self, "kind", kind)
        if (self.gamma is not None) != (kind is MethodKind.CKY):
            raise ValueError("gamma must be given for CKY and only for CKY")
        if (self.seed is not None) != (kind is MethodKind.RANDOM):
            raise ValueError("seed must be given for RANDOM and only for RANDOM")
        if kind is MethodKind.CKY:
            _check_gamma(self.gamma)

    @property
    def needs_probs(self) -> bool:
        return self.kind in (MethodKind.GREEDY, MethodKind.CKY)

    def manifest(self) -> dict:
        out = {"method": self.kind.value}
        if self.gamma is not None:
            out["gamma"] = round(float(self.gamma), 6)
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def manifest_json(self) -> str:
        return json.dumps(self.manifest(), sort_keys=True) + "\n"


def _check_gamma(gamma):
    if gamma is None or not 0.0 < gamma <= 1.0:
        raise GammaOutOfRange(f"gamma must lie in (0, 1], got {gamma!r}")


def _probs(seq) -> tuple[float, ...]:
    return seq.probs if isinstance(seq, BoundarySeq) else tuple(float(p) for p in seq)


def greedy_topdown(seq) -> DiscTree:
    """Split each span after its highest-probability gap, leftmost on ties."""
    p = _probs(seq)

    def split(lo, hi):
        best = lo
        for b in range(lo + 1, hi):
            if p[b] > p[best]:
                best = b
        return best

    return DiscTree(Granularity.SENTENCE, build_tree(0, len(p), split))


def greedy_bottomup(seq) -> DiscTree:
    """Merge across the lowest-probability gap first, leftmost on ties."""
    p = _probs(seq)
    k = len(p) + 1
    # block containing each sentence is tracked at its two ends
    left_of: dict[int, TreeNode] = {i: TreeNode(i, i) for i in range(k)}
    right_of: dict[int, TreeNode] = dict(left_of)
    heap = [(prob, b) for b, prob in enumerate(p)]
    heapq.heapify(heap)
    while heap:
        _, b = heapq.heappop(heap)
        a_node = right_of.pop(b)
        b_node = left_of.pop(b + 1)
        merged = TreeNode.join(a_node, b_node)
        left_of[merged.lo] = merged
        right_of[merged.hi] = merged
    return DiscTree(Granularity.SENTENCE, left_of[0])


def merge_score(prob: float, span_size: int, gamma: float) -> float:
    """Contribution of merging two blocks across a gap into a block of `span_size` units."""
    return (1.0 - prob) * gamma ** (span_size - 1)


def tree_score(tree: DiscTree | TreeNode, seq, gamma: float) -> float:
    """Sum of discounted merge scores over all internal nodes."""
    p = _probs(seq)
    root = tree.root if isinstance(tree, DiscTree) else tree
    return sum(
        merge_score(p[n.left.hi], n.size, gamma) for n in root.iter_nodes() if not n.is_leaf
    )


def cky_discounted(seq, gamma: float) -> DiscTree:
    """Highest-scoring tree under the discounted merge score.

    Ties (within CKY_TIE_RTOL) prefer the leftmost split point, i.e. the
    larger right child, so a fully tied chart yields a right-branching tree.
    """
    _check_gamma(gamma)
    p = _probs(seq)
    k = len(p) + 1
    best = np.zeros((k, k))
    split = np.zeros((k, k), dtype=np.int64)
    for width in range(2, k + 1):
        discount = gamma ** (width - 1)
        for lo in range(0, k - width + 1):
            hi = lo + width - 1
            cands = [best[lo, m] + best[m + 1, hi] + (1.0 - p[m]) * discount
                     for m in range(lo, hi)]
            top = max(cands)
            tol = CKY_TIE_RTOL * max(1.0, abs(top))
            m_star = next(i for i, c in enumerate(cands) if c >= top - tol)
            best[lo, hi] = cands[m_star]
            split[lo, hi] = lo + m_star
    return DiscTree(Granularity.SENTENCE, build_tree(0, k - 1, lambda a, b: int(split[a, b])))


def right_branching(k: int, granularity=Granularity.SENTENCE) -> DiscTree:
    return DiscTree(granularity, build_tree(0, k - 1, lambda lo, hi: lo))


def left_branching(k: int, granularity=Granularity.SENTENCE) -> DiscTree:
    return DiscTree(granularity, build_tree(0, k - 1, lambda lo, hi: hi - 1))


def random_tree(k: int, seed: int, granularity=Granularity.SENTENCE) -> DiscTree:
    """Uniform split point per span, spans expanded in pre-order."""
    rng = random.Random(seed)
    return DiscTree(granularity, build_tree(0, k - 1, lambda lo, hi: rng.randrange(lo, hi)))


def baseline_tree(k: int, method: GenMethod, granularity=Granularity.SENTENCE) -> DiscTree:
    if k < 1:
        raise ValueError("a tree needs at least one unit")
    kind = method.kind
    if kind is MethodKind.RIGHT_BRANCH:
        return right_branching(k, granularity)
    if kind is MethodKind.LEFT_BRANCH:
        return left_branching(k, granularity)
    if kind is MethodKind.RANDOM:
        return random_tree(k, method.seed, granularity)
    raise ValueError(f"{kind.value} is not a baseline method")


def generate(method: GenMethod, seq: BoundarySeq | Sequence[float] | None = None,
             k: int | None = None) -> DiscTree:
    """Dispatch to the generator named by `method`.

    Probability-driven methods need `seq`; baselines need only the sentence
    count, taken from `seq` when `k` is not given.
    """
    if method.needs_probs:
        if seq is None:
            raise ValueError(f"{method.kind.value} needs boundary probabilities")
        if method.kind is MethodKind.GREEDY:
            return greedy_topdown(seq)
        return cky_discounted(seq, method.gamma)
    if k is None:
        if seq is None:
            raise ValueError("baselines need a sentence count")
        k = len(_probs(seq)) + 1
    return baseline_tree(k, method)
