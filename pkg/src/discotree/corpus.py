"""Documents, discourse trees and forests, plus their file formats.

Unit indexes are 0-based everywhere.  A document is a sequence of EDUs, each
carrying the index of its sentence and paragraph; trees are binary
constituency trees over contiguous spans of one unit type (EDUs, sentences or
paragraphs).

Tree files hold one tree per line, ``doc_id<TAB>((0 1) 2)``.  Forest files
annotate each tree with the scope unit it covers,
``doc_id<TAB>scope=para:0<TAB>(0 1)``.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import EmptyCorpus, LeafMismatch, MalformedInput


class Granularity(enum.IntEnum):
    EDU = 0
    SENTENCE = 1
    PARAGRAPH = 2
    DOCUMENT = 3

    @property
    def short(self) -> str:
        return _SHORT_NAMES[self]

    @classmethod
    def parse(cls, name) -> "Granularity":
        if isinstance(name, Granularity):
            return name
        key = str(name).strip().lower()
        for g, short in _SHORT_NAMES.items():
            if key in (short, g.name.lower(), short[0]):
                return g
        raise ValueError(f"unknown granularity {name!r}")


_SHORT_NAMES = {
    Granularity.EDU: "edu",
    Granularity.SENTENCE: "sent",
    Granularity.PARAGRAPH: "para",
    Granularity.DOCUMENT: "doc",
}


class DocFormat(enum.Enum):
    JSON_DOC = "json"
    PLAIN_SENTENCES = "plain"


# ---------------------------------------------------------------------------
# Documents


@dataclass(frozen=True)
class EduRecord:
    text: str
    sent: int
    para: int

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise MalformedInput("EDU text must be a non-empty string")
        for name in ("sent", "para"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise MalformedInput(f"EDU {name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class Document:
    """An ordered list of EDUs with sentence and paragraph assignments.

    Sentence and paragraph ids start at 0 and grow by at most one from one
    EDU to the next; a paragraph may only change where a sentence changes.
    """

    id: str
    edus: tuple[EduRecord, ...]
    genre: str | None = None
    _sent_para: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edus = tuple(self.edus)
        object.__setattr__(self, "edus", edus)
        if not edus:
            raise MalformedInput(f"document {self.id!r} has no EDUs")
        if edus[0].sent != 0 or edus[0].para != 0:
            raise MalformedInput(f"document {self.id!r}: ids must start at 0")
        sent_para = [0]
        for i in range(1, len(edus)):
            prev, cur = edus[i - 1], edus[i]
            ds, dp = cur.sent - prev.sent, cur.para - prev.para
            if ds not in (0, 1) or dp not in (0, 1):
                raise MalformedInput(
                    f"document {self.id!r}: sentence/paragraph ids must be "
                    f"contiguous and non-decreasing (EDU {i})"
                )
            if ds == 0 and dp != 0:
                raise MalformedInput(
                    f"document {self.id!r}: sentence {cur.sent} spans two paragraphs"
                )
            if ds == 1:
                sent_para.append(cur.para)
        object.__setattr__(self, "_sent_para", tuple(sent_para))

    @property
    def n_edus(self) -> int:
        return len(self.edus)

    @property
    def n_sentences(self) -> int:
        return self.edus[-1].sent + 1

    @property
    def n_paragraphs(self) -> int:
        return self.edus[-1].para + 1

    def n_units(self, granularity) -> int:
        g = Granularity.parse(granularity)
        if g is Granularity.EDU:
            return self.n_edus
        if g is Granularity.SENTENCE:
            return self.n_sentences
        if g is Granularity.PARAGRAPH:
            return self.n_paragraphs
        return 1

    def unit_map(self, fine, coarse) -> tuple[int, ...]:
        """Map every `fine` unit index to the index of the `coarse` unit containing it."""
        fine, coarse = Granularity.parse(fine), Granularity.parse(coarse)
        if coarse < fine:
            raise ValueError(f"{coarse.name} is finer than {fine.name}")
        if coarse is Granularity.DOCUMENT:
            return (0,) * self.n_units(fine)
        if fine is coarse:
            return tuple(range(self.n_units(fine)))
        if fine is Granularity.EDU:
            attr = "sent" if coarse is Granularity.SENTENCE else "para"
            return tuple(getattr(e, attr) for e in self.edus)
        return self._sent_para

    def sentences(self) -> list[str]:
        out = [[] for _ in range(self.n_sentences)]
        for e in self.edus:
            out[e.sent].append(e.text.strip())
        return [" ".join(parts) for parts in out]

    def to_json(self) -> dict:
        data = {
            "id": self.id,
            "edus": [{"text": e.text, "sent": e.sent, "para": e.para} for e in self.edus],
        }
        if self.genre is not None:
            data["genre"] = self.genre
        return data


def document_from_json(data) -> Document:
    if not isinstance(data, dict):
        raise MalformedInput("JSON document must be an object")
    doc_id = data.get("id")
    edus = data.get("edus")
    genre = data.get("genre")
    if not isinstance(doc_id, str) or not doc_id:
        raise MalformedInput("JSON document needs a non-empty string 'id'")
    if not isinstance(edus, list) or not edus:
        raise MalformedInput(f"document {doc_id!r}: 'edus' must be a non-empty list")
    if genre is not None and not isinstance(genre, str):
        raise MalformedInput(f"document {doc_id!r}: 'genre' must be a string")
    records = []
    for i, item in enumerate(edus):
        if not isinstance(item, dict) or not {"text", "sent", "para"} <= item.keys():
            raise MalformedInput(f"document {doc_id!r}: EDU {i} needs text, sent and para")
        records.append(EduRecord(item["text"], item["sent"], item["para"]))
    return Document(doc_id, tuple(records), genre)


def document_from_sentences(doc_id: str, lines: Sequence[str]) -> Document:
    """One sentence per line, blank lines separate paragraphs."""
    records = []
    sent = para = 0
    pending_break = False
    for line in lines:
        if not line.strip():
            pending_break = bool(records)
            continue
        if pending_break:
            para += 1
            pending_break = False
        records.append(EduRecord(line.strip(), sent, para))
        sent += 1
    if not records:
        raise MalformedInput(f"document {doc_id!r} is empty")
    return Document(doc_id, tuple(records))


def load_document(path, format=DocFormat.JSON_DOC) -> Document:
    path = Path(path)
    fmt = DocFormat(format) if not isinstance(format, DocFormat) else format
    text = path.read_text(encoding="utf-8")
    if fmt is DocFormat.PLAIN_SENTENCES:
        return document_from_sentences(path.stem, text.splitlines())
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from exc
    return document_from_json(data)


def save_document(doc: Document, path) -> None:
    Path(path).write_text(json.dumps(doc.to_json(), ensure_ascii=False, indent=1) + "\n",
                          encoding="utf-8")


def load_corpus(directory) -> list[Document]:
    """Load every ``*.json`` (JSON_DOC) and ``*.txt`` (PLAIN_SENTENCES) file, sorted by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    docs = []
    for path in sorted(directory.iterdir()):
        if path.suffix == ".json":
            docs.append(load_document(path, DocFormat.JSON_DOC))
        elif path.suffix == ".txt":
            docs.append(load_document(path, DocFormat.PLAIN_SENTENCES))
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        raise MalformedInput(f"{directory}: duplicate document ids")
    return sorted(docs, key=lambda d: d.id)


# ---------------------------------------------------------------------------
# Trees


@dataclass(frozen=True, slots=True, eq=False)
class TreeNode:
    lo: int
    hi: int
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise MalformedInput(f"node span ({self.lo}, {self.hi}) is empty")
        if (self.left is None) != (self.right is None):
            raise MalformedInput("internal nodes need exactly two children")
        if self.left is None:
            if self.lo != self.hi:
                raise MalformedInput(f"leaf spans more than one unit: ({self.lo}, {self.hi})")
        elif (self.left.lo != self.lo or self.right.hi != self.hi
              or self.left.hi + 1 != self.right.lo):
            raise MalformedInput(f"children do not partition ({self.lo}, {self.hi})")

    # structural equality without recursion; deep EDU trees exceed the stack limit
    def __eq__(self, other):
        if not isinstance(other, TreeNode):
            return NotImplemented
        return self.span_list() == other.span_list()

    def __hash__(self):
        return hash(tuple(self.span_list()))

    def span_list(self) -> list[tuple[int, int]]:
        return [(n.lo, n.hi) for n in self.iter_nodes()]

    @classmethod
    def leaf(cls, i: int) -> "TreeNode":
        return cls(i, i)

    @classmethod
    def join(cls, left: "TreeNode", right: "TreeNode") -> "TreeNode":
        return cls(left.lo, right.hi, left, right)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def span(self) -> tuple[int, int]:
        return (self.lo, self.hi)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def iter_nodes(self) -> Iterator["TreeNode"]:
        """Pre-order traversal, left child first."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.left is not None:
                stack.append(node.right)
                stack.append(node.left)

    def shift(self, offset: int) -> "TreeNode":
        return rebuild(self, lambda lo, hi: None, offset=offset)


def rebuild(node: TreeNode, leaf_fn, offset: int = 0) -> TreeNode:
    """Copy a tree bottom-up without recursion.

    `leaf_fn(lo, hi)` may return a replacement subtree for the node spanning
    (lo, hi); returning None keeps the original structure.  Spans are shifted by
    `offset`.
    """
    out: dict[int, TreeNode] = {}
    stack = [(node, False)]
    while stack:
        cur, done = stack.pop()
        if not done:
            repl = leaf_fn(cur.lo, cur.hi)
            if repl is not None:
                out[id(cur)] = repl
                continue
            if cur.is_leaf:
                out[id(cur)] = TreeNode(cur.lo + offset, cur.hi + offset)
                continue
            stack.append((cur, True))
            stack.append((cur.right, False))
            stack.append((cur.left, False))
        else:
            out[id(cur)] = TreeNode.join(out.pop(id(cur.left)), out.pop(id(cur.right)))
    return out[id(node)]


def build_tree(lo: int, hi: int, choose_split) -> TreeNode:
    """Build a tree top-down; `choose_split(lo, hi)` returns m, splitting into [lo, m] and [m+1, hi]."""
    done: dict[tuple[int, int], TreeNode] = {}
    stack = [(lo, hi, None)]
    while stack:
        a, b, m = stack.pop()
        if a == b:
            done[(a, b)] = TreeNode(a, a)
        elif m is None:
            m = choose_split(a, b)
            if not a <= m < b:
                raise ValueError(f"split {m} outside ({a}, {b})")
            stack.append((a, b, m))
            stack.append((m + 1, b, None))
            stack.append((a, m, None))
        else:
            done[(a, b)] = TreeNode(a, b, done.pop((a, m)), done.pop((m + 1, b)))
    return done[(lo, hi)]


@dataclass(frozen=True)
class DiscTree:
    granularity: Granularity
    root: TreeNode

    def __post_init__(self):
        g = Granularity.parse(self.granularity)
        if g is Granularity.DOCUMENT:
            raise MalformedInput("trees cannot have DOCUMENT-granularity leaves")
        object.__setattr__(self, "granularity", g)

    @property
    def n_leaves(self) -> int:
        return self.root.size

    def nodes(self) -> Iterator[TreeNode]:
        return self.root.iter_nodes()

    def spans(self) -> list[tuple[int, int]]:
        return [n.span for n in self.nodes()]

    def to_bracket(self) -> str:
        return format_tree(self.root)

    def __str__(self) -> str:
        return self.to_bracket()


def format_tree(node: TreeNode) -> str:
    """Canonical bracketed form: ``((0 1) 2)``; a lone leaf is written as its index."""
    parts: list[str] = []
    stack: list = [node]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
        elif item.is_leaf:
            parts.append(str(item.lo))
        else:
            stack.extend([")", item.right, " ", item.left, "("])
    return "".join(parts)


_TOKEN = re.compile(r"\(|\)|\d+|\S")


def parse_tree(text: str, granularity=Granularity.SENTENCE, n_units: int | None = None) -> DiscTree:
    """Parse a bracketed span tree.

    Leaves must be the integers 0..n-1 in order.  ``(3)`` is accepted as a
    synonym for the leaf ``3``.
    """
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise MalformedInput("empty tree")
    stack: list[list] = []
    result = None
    expected_leaf = 0
    for tok in tokens:
        if result is not None:
            raise MalformedInput(f"trailing content after tree: {text!r}")
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise MalformedInput(f"unbalanced ')' in {text!r}")
            kids = stack.pop()
            if len(kids) == 1:
                node = kids[0]
            elif len(kids) == 2:
                node = TreeNode.join(kids[0], kids[1])
            else:
                raise MalformedInput(f"node with {len(kids)} children in {text!r}")
            if stack:
                stack[-1].append(node)
            else:
                result = node
        elif tok.isdigit():
            leaf = int(tok)
            if leaf != expected_leaf:
                raise MalformedInput(f"expected leaf {expected_leaf}, found {leaf} in {text!r}")
            expected_leaf += 1
            node = TreeNode(leaf, leaf)
            if stack:
                stack[-1].append(node)
            else:
                result = node
        else:
            raise MalformedInput(f"unexpected token {tok!r} in {text!r}")
    if stack or result is None:
        raise MalformedInput(f"unbalanced '(' in {text!r}")
    if n_units is not None and result.size != n_units:
        raise LeafMismatch(f"tree has {result.size} leaves, expected {n_units}")
    return DiscTree(Granularity.parse(granularity), result)


def read_tree_lines(path) -> dict[str, str]:
    """Read ``doc_id<TAB>tree`` lines into a mapping (later duplicates are an error)."""
    trees: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        doc_id, sep, body = line.partition("\t")
        if not sep or not body.strip():
            raise MalformedInput(f"{path}:{lineno}: expected 'doc_id<TAB>tree'")
        if doc_id in trees:
            raise MalformedInput(f"{path}:{lineno}: duplicate document {doc_id!r}")
        trees[doc_id] = body.strip()
    return trees


def load_tree(path, doc: Document, granularity=Granularity.SENTENCE) -> DiscTree:
    trees = read_tree_lines(path)
    if doc.id not in trees:
        raise MalformedInput(f"{path}: no tree for document {doc.id!r}")
    g = Granularity.parse(granularity)
    return parse_tree(trees[doc.id], g, doc.n_units(g))


def infer_granularity(tree_text: str, doc: Document) -> Granularity:
    """Pick the finest granularity whose unit count matches the tree's leaf count."""
    n = len(re.findall(r"\d+", tree_text))
    for g in (Granularity.EDU, Granularity.SENTENCE, Granularity.PARAGRAPH):
        if doc.n_units(g) == n:
            return g
    raise LeafMismatch(
        f"document {doc.id!r}: {n} leaves match no unit count "
        f"({doc.n_edus} EDUs, {doc.n_sentences} sentences, {doc.n_paragraphs} paragraphs)"
    )


def format_tree_lines(trees: dict[str, DiscTree]) -> str:
    return "".join(f"{doc_id}\t{tree.to_bracket()}\n" for doc_id, tree in trees.items())


# ---------------------------------------------------------------------------
# Forests


@dataclass(frozen=True)
class Forest:
    """Trees covering consecutive scopes of one document.

    Leaf indexes stay document-global: the tree for scope (3, 5) has leaves 3..5.
    """

    doc_id: str
    granularity: Granularity
    trees: tuple[DiscTree, ...]
    scope: Granularity = Granularity.DOCUMENT

    def __post_init__(self):
        trees = tuple(self.trees)
        object.__setattr__(self, "trees", trees)
        object.__setattr__(self, "granularity", Granularity.parse(self.granularity))
        object.__setattr__(self, "scope", Granularity.parse(self.scope))
        if not trees:
            raise MalformedInput(f"forest for {self.doc_id!r} is empty")
        expected = 0
        for t in trees:
            if t.granularity is not self.granularity:
                raise MalformedInput("forest trees must share one granularity")
            if t.root.lo != expected:
                raise MalformedInput(f"forest scopes for {self.doc_id!r} are not contiguous")
            expected = t.root.hi + 1

    @property
    def scopes(self) -> tuple[tuple[int, int], ...]:
        return tuple(t.root.span for t in self.trees)

    @property
    def n_units(self) -> int:
        return self.trees[-1].root.hi + 1

    @classmethod
    def single(cls, doc_id: str, tree: DiscTree) -> "Forest":
        if tree.root.lo != 0:
            raise MalformedInput("a whole-document tree must start at unit 0")
        return cls(doc_id, tree.granularity, (tree,), Granularity.DOCUMENT)

    def to_lines(self) -> str:
        return "".join(
            f"{self.doc_id}\tscope={self.scope.short}:{i}\t{t.to_bracket()}\n"
            for i, t in enumerate(self.trees)
        )


def parse_forest_lines(text: str, granularity) -> list[Forest]:
    """Inverse of :meth:`Forest.to_lines` for any number of documents."""
    g = Granularity.parse(granularity)
    grouped: dict[str, list] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3 or not fields[1].startswith("scope="):
            raise MalformedInput(f"line {lineno}: expected 'doc_id<TAB>scope=..<TAB>tree'")
        scope_name, _, _ = fields[1][len("scope="):].partition(":")
        grouped.setdefault(fields[0], []).append((scope_name, fields[2]))
    forests = []
    for doc_id, items in grouped.items():
        trees = []
        offset = 0
        for _, body in items:
            local = parse_tree(_renumber(body, offset), g)
            trees.append(DiscTree(g, local.root.shift(offset)))
            offset = trees[-1].root.hi + 1
        forests.append(Forest(doc_id, g, tuple(trees), Granularity.parse(items[0][0])))
    return forests


def _renumber(body: str, offset: int) -> str:
    return re.sub(r"\d+", lambda m: str(int(m.group()) - offset), body)


# ---------------------------------------------------------------------------
# Statistics


@dataclass(frozen=True)
class StatsTable:
    n_docs: int
    paras_per_doc: float
    sents_per_doc: float
    edus_per_doc: float
    edus_per_para: float
    edus_per_sent: float

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("# of Docs.", self.n_docs),
            ("# of Para./Doc.", self.paras_per_doc),
            ("# of Sents./Doc.", self.sents_per_doc),
            ("# of EDUs/Doc.", self.edus_per_doc),
            ("# of EDUs/Para.", self.edus_per_para),
            ("# of EDUs/Sent.", self.edus_per_sent),
        ]


def corpus_stats(docs: Sequence[Document]) -> StatsTable:
    """Corpus-level means; per-unit ratios pool counts over the whole corpus."""
    if not docs:
        raise EmptyCorpus("corpus_stats needs at least one document")
    n = len(docs)
    paras = sum(d.n_paragraphs for d in docs)
    sents = sum(d.n_sentences for d in docs)
    edus = sum(d.n_edus for d in docs)
    return StatsTable(n, paras / n, sents / n, edus / n, edus / paras, edus / sents)
