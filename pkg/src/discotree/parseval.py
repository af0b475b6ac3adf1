"""Span-matching evaluation of discourse trees.

Two counting conventions are supported:

* ``RST_PARSEVAL`` counts every node, leaves and roots included.
* ``ORIG_PARSEVAL`` counts internal nodes only and skips each tree's root.

Scores are micro-averaged: matched and total span counts are pooled over all
documents before dividing.  Predicted and gold views cover the same units,
so precision, recall and F1 coincide.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import DiscTree, Document, Forest
from .errors import DocMismatch, EmptyTotal, MissingGenre, UnitMismatch
from .transform import LevelSpec, to_level


class Convention(enum.Enum):
    RST_PARSEVAL = "rst"
    ORIG_PARSEVAL = "orig"

    @classmethod
    def parse(cls, name) -> "Convention":
        if isinstance(name, Convention):
            return name
        key = str(name).strip().lower()
        for conv in cls:
            if key in (conv.value, conv.name.lower()):
                return conv
        raise ValueError(f"unknown convention {name!r}")


def span_inventory(forest: Forest | DiscTree, convention) -> frozenset[tuple[int, int]]:
    convention = Convention.parse(convention)
    trees = forest.trees if isinstance(forest, Forest) else (forest,)
    spans = set()
    for tree in trees:
        for node in tree.nodes():
            if convention is Convention.RST_PARSEVAL:
                spans.add(node.span)
            elif not node.is_leaf and node is not tree.root:
                spans.add(node.span)
    return frozenset(spans)


@dataclass
class EvalReport:
    level: LevelSpec | None
    convention: Convention
    matched: int
    total: int
    per_doc: list[tuple[str, int, int]] = field(default_factory=list)
    per_genre: dict[str, float] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        if self.total == 0:
            raise EmptyTotal("no spans to score; precision is undefined")
        return self.matched / self.total

    def to_json(self) -> dict:
        out = {
            "level": self.level.name if self.level is not None else None,
            "convention": self.convention.value,
            "matched": self.matched,
            "total": self.total,
            "precision": round(self.precision, 6) if self.total else None,
            "per_doc": [{"doc_id": d, "matched": m, "total": t} for d, m, t in self.per_doc],
        }
        if self.per_genre is not None:
            out["per_genre"] = {g: round(p, 6) for g, p in sorted(self.per_genre.items())}
        if self.meta:
            out["meta"] = self.meta
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _align(pred: Sequence[Forest], gold: Sequence[Forest]) -> list[tuple[Forest, Forest]]:
    pred_by = {f.doc_id: f for f in pred}
    gold_by = {f.doc_id: f for f in gold}
    if len(pred_by) != len(pred) or len(gold_by) != len(gold):
        raise DocMismatch("duplicate document ids")
    missing_pred = sorted(gold_by.keys() - pred_by.keys())
    missing_gold = sorted(pred_by.keys() - gold_by.keys())
    if missing_pred or missing_gold:
        raise DocMismatch(
            f"unmatched documents: no prediction for {missing_pred}, no gold for {missing_gold}",
            missing_pred, missing_gold,
        )
    pairs = []
    for f in gold:
        p = pred_by[f.doc_id]
        if p.granularity is not f.granularity or p.scopes != f.scopes:
            raise UnitMismatch(
                f"{f.doc_id}: predicted view covers {p.scopes} at {p.granularity.name}, "
                f"gold covers {f.scopes} at {f.granularity.name}"
            )
        pairs.append((p, f))
    return pairs


def micro_precision(pred: Sequence[Forest], gold: Sequence[Forest], convention,
                    level: LevelSpec | None = None) -> EvalReport:
    """Pooled span precision over aligned documents.

    Raises EmptyTotal when no document contributes a span.
    """
    convention = Convention.parse(convention)
    per_doc = []
    matched = total = 0
    for p, g in _align(pred, gold):
        p_spans = span_inventory(p, convention)
        hits = len(p_spans & span_inventory(g, convention))
        per_doc.append((g.doc_id, hits, len(p_spans)))
        matched += hits
        total += len(p_spans)
    report = EvalReport(level, convention, matched, total, per_doc)
    report.precision  # surfaces EmptyTotal
    return report


def _trivial(forest: Forest) -> bool:
    return all(t.root.is_leaf for t in forest.trees)


def per_genre_report(pred: Sequence[Forest], gold: Sequence[Forest], genres: Mapping[str, str],
                     convention, level: LevelSpec | None = None) -> EvalReport:
    """Overall report plus a micro-average per genre.

    Documents whose view holds no structure (single-unit trees only, e.g. a
    one-paragraph document at P-D) are left out of the genre figures; a genre
    left with no documents is omitted.  Overall figures include everything.
    """
    missing = sorted({f.doc_id for f in gold} - set(genres))
    if missing:
        raise MissingGenre(f"no genre for documents {missing}")
    report = micro_precision(pred, gold, convention, level)
    pred_by = {f.doc_id: f for f in pred}
    buckets: dict[str, tuple[int, int]] = {}
    for (doc_id, hits, n), g in zip(report.per_doc, gold):
        if n == 0 or _trivial(g) or _trivial(pred_by[doc_id]):
            continue
        m, t = buckets.get(genres[doc_id], (0, 0))
        buckets[genres[doc_id]] = (m + hits, t + n)
    report.per_genre = {genre: m / t for genre, (m, t) in buckets.items()}
    return report


def evaluate(pred: Mapping[str, DiscTree], gold: Mapping[str, DiscTree], docs: Sequence[Document],
             level, convention) -> EvalReport:
    """Project predicted and gold trees to `level` and score them."""
    level = LevelSpec.parse(level)
    missing_pred = sorted(d.id for d in docs if d.id not in pred)
    missing_gold = sorted(d.id for d in docs if d.id not in gold)
    if missing_pred or missing_gold:
        raise DocMismatch(
            f"unmatched documents: no prediction for {missing_pred}, no gold for {missing_gold}",
            missing_pred, missing_gold,
        )
    pred_views = [to_level(pred[d.id], d, level) for d in docs]
    gold_views = [to_level(gold[d.id], d, level) for d in docs]
    genres = {d.id: d.genre for d in docs if d.genre is not None}
    if genres and len(genres) == len(docs):
        return per_genre_report(pred_views, gold_views, genres, convention, level)
    return micro_precision(pred_views, gold_views, convention, level)


def format_table(rows: Mapping[str, Mapping[str, float | None]], columns: Sequence[str],
                 digits: int = 6) -> str:
    """Aligned text table, one row per method and one column per level."""
    head = ["Model", *(c.upper() for c in columns)]
    body = []
    for name, values in rows.items():
        cells = [name]
        for c in columns:
            v = values.get(c)
            cells.append("-" if v is None else f"{v:.{digits}f}")
        body.append(cells)
    widths = [max(len(r[i]) for r in [head, *body]) for i in range(len(head))]
    lines = []
    for r in [head, *body]:
        lines.append("  ".join(
            cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths))
        ).rstrip())
    return "\n".join(lines) + "\n"
