"""Tree surgery that produces the evaluation views (S-P, P-D, S-D, E-*).

Trimming to a lower bound collapses everything below a target unit into a
single leaf.  A unit whose parts hang off different places in the tree
("leaky") is first re-attached as a whole where its largest part sits.
Restricting to an upper bound cuts every node that crosses a scope-unit
boundary, leaving one tree per scope unit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import DiscTree, Document, Forest, Granularity, TreeNode, rebuild
from .errors import GranularityOrder, MalformedInput


@dataclass(frozen=True)
class LevelSpec:
    lower: Granularity
    upper: Granularity

    def __post_init__(self):
        lower, upper = Granularity.parse(self.lower), Granularity.parse(self.upper)
        if lower is Granularity.DOCUMENT or upper is Granularity.EDU:
            raise GranularityOrder(f"invalid level {lower.name}-{upper.name}")
        if not lower < upper:
            raise GranularityOrder(f"{lower.name} must be finer than {upper.name}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def name(self) -> str:
        return f"{self.lower.name[0]}-{self.upper.name[0]}"

    @classmethod
    def parse(cls, name) -> "LevelSpec":
        if isinstance(name, LevelSpec):
            return name
        parts = str(name).strip().lower().split("-")
        if len(parts) != 2:
            raise ValueError(f"level must look like 's-p', got {name!r}")
        return cls(Granularity.parse(parts[0]), Granularity.parse(parts[1]))

    def __str__(self) -> str:
        return self.name


LEVELS = {name: LevelSpec.parse(name) for name in ("e-s", "s-p", "p-d", "e-p", "s-d", "e-d")}


def _unit_spans(unit_of: tuple[int, ...]) -> list[tuple[int, int]]:
    """(first, last) leaf index of each coarse unit."""
    spans: list[list[int]] = []
    for leaf, u in enumerate(unit_of):
        if u == len(spans):
            spans.append([leaf, leaf])
        else:
            spans[u][1] = leaf
    return [tuple(s) for s in spans]


def fragments(root: TreeNode, lo: int, hi: int) -> list[TreeNode]:
    """Maximal subtrees lying entirely inside [lo, hi], in leaf order."""
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node.hi < lo or node.lo > hi:
            continue
        if lo <= node.lo and node.hi <= hi:
            out.append(node)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


def _combine_right(parts: list[TreeNode]) -> TreeNode:
    node = parts[-1]
    for part in reversed(parts[:-1]):
        node = TreeNode.join(part, node)
    return node


def _attach_unit(root: TreeNode, lo: int, hi: int, parts: list[TreeNode]) -> TreeNode:
    """Move all of [lo, hi] to where its largest fragment sits (rightmost on ties)."""
    keep = max(range(len(parts)), key=lambda i: (parts[i].size, i))
    kept = parts[keep]
    whole = _combine_right(parts)
    out: dict[int, TreeNode | None] = {}
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if not done:
            if lo <= node.lo and node.hi <= hi:
                out[id(node)] = whole if node is kept else None
            elif node.is_leaf:
                out[id(node)] = node
            else:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))
        else:
            left, right = out.pop(id(node.left)), out.pop(id(node.right))
            if left is None:
                out[id(node)] = right
            elif right is None:
                out[id(node)] = left
            elif left is node.left and right is node.right:
                out[id(node)] = node
            else:
                out[id(node)] = TreeNode.join(left, right)
    return out[id(root)]


def _next_coarser(g: Granularity) -> Granularity:
    return Granularity(g + 1)


def _check_finer(tree: DiscTree, doc: Document, target: Granularity):
    if target <= tree.granularity:
        raise GranularityOrder(
            f"cannot go from {tree.granularity.name} to {target.name}"
        )
    if tree.n_leaves != doc.n_units(tree.granularity) or tree.root.lo != 0:
        raise MalformedInput(
            f"{doc.id}: tree has {tree.n_leaves} leaves, document has "
            f"{doc.n_units(tree.granularity)} {tree.granularity.name} units"
        )


def leaky_attach(tree: DiscTree, doc: Document, target) -> DiscTree:
    """Make every `target` unit a complete subtree, keeping the input granularity.

    A leaky unit is rebuilt from all its fragments (combined right-branching,
    in order) and placed where its largest fragment was; the other fragments
    are detached from their old positions.  Sizes count input-granularity
    leaves.  Units are resolved directly at `target`; `trim_to_lower` instead
    steps through each intermediate granularity, innermost first.
    """
    target = Granularity.parse(target)
    _check_finer(tree, doc, target)
    if target is Granularity.DOCUMENT:
        return tree
    unit_of = doc.unit_map(tree.granularity, target)
    root = tree.root
    for lo, hi in _unit_spans(unit_of):
        parts = fragments(root, lo, hi)
        if len(parts) > 1:
            root = _attach_unit(root, lo, hi, parts)
    return DiscTree(tree.granularity, root)


def is_leaky(tree: DiscTree, doc: Document, target) -> bool:
    """Whether any `target` unit fails to form a single subtree of `tree`."""
    target = Granularity.parse(target)
    unit_of = doc.unit_map(tree.granularity, target)
    return any(len(fragments(tree.root, lo, hi)) > 1 for lo, hi in _unit_spans(unit_of))


def _collapse(tree: DiscTree, doc: Document, target: Granularity) -> DiscTree:
    unit_of = doc.unit_map(tree.granularity, target)

    def replace(lo, hi):
        if unit_of[lo] == unit_of[hi]:
            return TreeNode(unit_of[lo], unit_of[lo])
        return None

    # every unit is a complete subtree here, so each one becomes a single leaf
    return DiscTree(target, rebuild(tree.root, replace))


def trim_to_lower(tree: DiscTree, doc: Document, target) -> DiscTree:
    """Collapse sub-unit structure so the leaves become `target` units.

    Kept nodes are those covering several target units or exactly one
    complete unit.  Leaky units are re-attached first, one granularity step at
    a time (EDU -> sentence -> paragraph).  The target must be coarser than
    the tree's leaves.
    """
    target = Granularity.parse(target)
    if target is Granularity.DOCUMENT:
        raise GranularityOrder("trim target must be SENTENCE or PARAGRAPH")
    _check_finer(tree, doc, target)
    while tree.granularity < target:
        step = _next_coarser(tree.granularity)
        tree = _collapse(leaky_attach(tree, doc, step), doc, step)
    return tree


def restrict_to_upper(tree: DiscTree | Forest, doc: Document, scope) -> Forest:
    """Cut nodes crossing `scope` units; one tree per scope unit.

    When the cut leaves several maximal subtrees inside one scope unit, they
    are recombined right-branching in order.  Restricting an existing Forest
    restricts each of its trees.
    """
    scope = Granularity.parse(scope)
    if isinstance(tree, Forest):
        out = []
        for t in tree.trees:
            out.extend(_restrict_tree(t, doc, scope))
        return Forest(tree.doc_id, tree.granularity, tuple(out), min(scope, tree.scope))
    _check_finer(tree, doc, scope)
    return Forest(doc.id, tree.granularity, tuple(_restrict_tree(tree, doc, scope)), scope)


def _restrict_tree(tree: DiscTree, doc: Document, scope: Granularity) -> list[DiscTree]:
    if scope <= tree.granularity:
        raise GranularityOrder(f"cannot restrict {tree.granularity.name} trees to {scope.name}")
    if scope is Granularity.DOCUMENT:
        return [tree]
    unit_of = doc.unit_map(tree.granularity, scope)
    out = []
    for lo, hi in _unit_spans(unit_of):
        lo, hi = max(lo, tree.root.lo), min(hi, tree.root.hi)
        if lo > hi:
            continue
        parts = fragments(tree.root, lo, hi)
        out.append(DiscTree(tree.granularity, _combine_right(parts)))
    return out


def to_level(tree: DiscTree, doc: Document, level) -> Forest:
    """Trim to the level's lower bound, then restrict to its upper bound."""
    level = LevelSpec.parse(level)
    if tree.granularity > level.lower:
        raise GranularityOrder(
            f"{tree.granularity.name} tree cannot be evaluated at level {level.name}"
        )
    trimmed = tree if tree.granularity is level.lower else trim_to_lower(tree, doc, level.lower)
    if level.upper is Granularity.DOCUMENT:
        return Forest.single(doc.id, trimmed)
    return restrict_to_upper(trimmed, doc, level.upper)
