"""Topic-shift probabilities between consecutive sentences.

A k-sentence document gets k-1 probabilities; ``probs[i]`` is the
probability that sentence ``i`` ends a topical segment.  The last sentence
always ends the last segment and carries no score.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document
from .errors import EmptyInput, LengthMismatch, MalformedInput, OutOfRange, TooShort, UnknownDoc


@dataclass(frozen=True)
class BoundarySeq:
    doc_id: str
    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        for i, p in enumerate(probs):
            if not 0.0 <= p <= 1.0:
                raise OutOfRange(f"{self.doc_id}: probability {p} at boundary {i} not in [0, 1]")
        object.__setattr__(self, "probs", probs)

    @property
    def n_sentences(self) -> int:
        return len(self.probs) + 1

    def check_length(self, doc: Document) -> "BoundarySeq":
        if len(self.probs) != doc.n_sentences - 1:
            raise LengthMismatch(
                f"{self.doc_id}: {len(self.probs)} probabilities for "
                f"{doc.n_sentences} sentences (expected {doc.n_sentences - 1})"
            )
        return self


@dataclass(frozen=True)
class Segmentation:
    """Sentence indexes that end a segment; the final sentence is always included."""

    n_sentences: int
    boundaries: frozenset[int]

    def __post_init__(self):
        k = self.n_sentences
        if k < 1:
            raise MalformedInput("segmentation needs at least one sentence")
        bounds = frozenset(int(b) for b in self.boundaries) | {k - 1}
        if min(bounds) < 0 or max(bounds) > k - 1:
            raise OutOfRange(f"boundary index outside [0, {k - 1}]")
        object.__setattr__(self, "boundaries", bounds)

    @classmethod
    def from_paragraphs(cls, doc: Document) -> "Segmentation":
        """Paragraph breaks as gold topic boundaries."""
        para = doc.unit_map("sent", "para")
        ends = [i for i in range(doc.n_sentences - 1) if para[i] != para[i + 1]]
        return cls(doc.n_sentences, frozenset(ends))

    def labels(self) -> list[int]:
        return [int(i in self.boundaries) for i in range(self.n_sentences)]

    def segment_ids(self) -> list[int]:
        ids, seg = [], 0
        for i in range(self.n_sentences):
            ids.append(seg)
            if i in self.boundaries:
                seg += 1
        return ids

    @property
    def n_segments(self) -> int:
        return len(self.boundaries)


# ---------------------------------------------------------------------------
# Files


def _format_prob(p: float) -> float:
    return round(p, 6)


def read_jsonl(path) -> list[dict]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{path}:{lineno}: invalid JSON ({exc})") from exc
        if not isinstance(rec, dict) or not isinstance(rec.get("doc_id"), str):
            raise MalformedInput(f"{path}:{lineno}: record needs a string 'doc_id'")
        records.append(rec)
    return records


def parse_prob_record(rec: dict, docs_by_id: dict[str, Document]) -> BoundarySeq:
    doc_id = rec["doc_id"]
    if doc_id not in docs_by_id:
        raise UnknownDoc(doc_id)
    probs = rec.get("probs")
    if not isinstance(probs, list) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs
    ):
        raise MalformedInput(f"{doc_id}: 'probs' must be a list of numbers")
    return BoundarySeq(doc_id, tuple(probs)).check_length(docs_by_id[doc_id])


def load_probs(path, docs: Sequence[Document]) -> list[BoundarySeq]:
    """Read probability JSONL, validating every record against its document."""
    docs_by_id = {d.id: d for d in docs}
    return [parse_prob_record(rec, docs_by_id) for rec in read_jsonl(path)]


def format_probs(seqs: Iterable[BoundarySeq]) -> str:
    return "".join(
        json.dumps({"doc_id": s.doc_id, "probs": [_format_prob(p) for p in s.probs]}) + "\n"
        for s in seqs
    )


def load_segmentations(path, docs: Sequence[Document]) -> dict[str, Segmentation]:
    docs_by_id = {d.id: d for d in docs}
    out = {}
    for rec in read_jsonl(path):
        doc = docs_by_id.get(rec["doc_id"])
        if doc is None:
            raise UnknownDoc(rec["doc_id"])
        bounds = rec.get("boundaries")
        if not isinstance(bounds, list) or not all(isinstance(b, int) for b in bounds):
            raise MalformedInput(f"{doc.id}: 'boundaries' must be a list of integers")
        out[doc.id] = Segmentation(doc.n_sentences, frozenset(bounds))
    return out


def format_segmentations(segs: dict[str, Segmentation]) -> str:
    return "".join(
        json.dumps({"doc_id": doc_id, "boundaries": sorted(seg.boundaries)}) + "\n"
        for doc_id, seg in segs.items()
    )


# ---------------------------------------------------------------------------
# Lexical cohesion scorer

_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str, stopwords: frozenset[str] | set[str] = frozenset()) -> list[str]:
    return [w for w in _WORD.findall(text.lower()) if w not in stopwords]


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[w] for w, v in a.items() if w in b)
    norm = math.sqrt(sum(v * v for v in a.values())) * math.sqrt(sum(v * v for v in b.values()))
    return dot / norm


def block_similarities(sentences: Sequence[str], window: int,
                       stopwords: frozenset[str] | set[str] = frozenset()) -> np.ndarray:
    """Cosine similarity of the term counts of the `window` sentences on each side of every gap."""
    bags = [Counter(tokenize(s, stopwords)) for s in sentences]
    k = len(bags)
    sims = np.zeros(k - 1)
    for i in range(k - 1):
        left = sum((bags[j] for j in range(max(0, i - window + 1), i + 1)), Counter())
        right = sum((bags[j] for j in range(i + 1, min(k, i + 1 + window))), Counter())
        sims[i] = _cosine(left, right)
    return sims


def depth_scores(sims: np.ndarray) -> np.ndarray:
    """Drop from the nearest peak on each side (hill climbing while the series does not fall)."""
    n = len(sims)
    depths = np.zeros(n)
    for i in range(n):
        left = i
        while left > 0 and sims[left - 1] >= sims[left]:
            left -= 1
        right = i
        while right < n - 1 and sims[right + 1] >= sims[right]:
            right += 1
        depths[i] = (sims[left] - sims[i]) + (sims[right] - sims[i])
    return depths


def cohesion_scores(doc: Document, window: int = 2,
                    stopwords: frozenset[str] | set[str] = frozenset()) -> BoundarySeq:
    """TextTiling-style boundary probabilities from lexical cohesion.

    Depth scores are min-max scaled to [0, 1]; a flat series maps to all zeros.
    """
    if isinstance(window, bool) or not isinstance(window, int) or window < 1:
        raise ValueError(f"window must be a positive integer, got {window!r}")
    if doc.n_sentences < 2:
        raise TooShort(f"{doc.id}: cohesion scoring needs at least 2 sentences")
    depths = depth_scores(block_similarities(doc.sentences(), window, stopwords))
    lo, hi = depths.min(), depths.max()
    if hi - lo <= 1e-12:
        probs = np.zeros_like(depths)
    else:
        probs = (depths - lo) / (hi - lo)
    return BoundarySeq(doc.id, tuple(np.clip(probs, 0.0, 1.0).tolist()))


# ---------------------------------------------------------------------------
# Binarization and Pk


def binarize(seq: BoundarySeq, tau: float) -> Segmentation:
    """Boundary after sentence i iff probs[i] > tau."""
    return Segmentation(seq.n_sentences, frozenset(i for i, p in enumerate(seq.probs) if p > tau))


def default_pk_window(reference: Segmentation) -> int:
    half = reference.n_sentences / reference.n_segments / 2.0
    return max(2, int(math.floor(half + 0.5)))


def pk_score(reference: Segmentation, hypothesis: Segmentation, k_window: int | None = None) -> float:
    """Pk segmentation error (lower is better).

    A window covers `k_window` consecutive boundary slots; it counts as an
    error when exactly one of the two segmentations places a boundary inside
    it.  Equivalently, the probe asks whether sentence i and sentence
    i + k_window fall into the same segment.  The obligatory boundary after
    the last sentence never counts.
    """
    k = reference.n_sentences
    if hypothesis.n_sentences != k:
        raise LengthMismatch(f"segmentations cover {k} and {hypothesis.n_sentences} sentences")
    if k_window is None:
        k_window = default_pk_window(reference)
    if k_window < 1:
        raise ValueError("k_window must be positive")
    if k <= k_window:
        raise TooShort(f"{k} sentences cannot hold a Pk window of {k_window}")
    ref = np.array(reference.labels(), dtype=np.int64)
    hyp = np.array(hypothesis.labels(), dtype=np.int64)
    ref[-1] = hyp[-1] = 0
    # boundaries inside each window via prefix sums
    ref_c = np.concatenate([[0], np.cumsum(ref)])
    hyp_c = np.concatenate([[0], np.cumsum(hyp)])
    starts = np.arange(k - k_window + 1)
    ref_in = ref_c[starts + k_window] - ref_c[starts] > 0
    hyp_in = hyp_c[starts + k_window] - hyp_c[starts] > 0
    return float(np.mean(ref_in != hyp_in))


def tune_threshold(dev: Sequence[tuple[BoundarySeq, Segmentation]], grid: Sequence[float],
                   k_window: int | None = None) -> float:
    """Pick the grid value minimizing mean Pk on `dev`; smaller tau wins ties."""
    if not dev or not grid:
        raise EmptyInput("tune_threshold needs a non-empty dev set and grid")
    best_tau, best_pk = None, math.inf
    for tau in sorted(grid):
        pk = float(np.mean([pk_score(ref, binarize(seq, tau), k_window) for seq, ref in dev]))
        if pk < best_pk:
            best_tau, best_pk = tau, pk
    return best_tau
