"""Acceptance criteria, one PASS/FAIL line each in the terminal summary.

Criteria 9 and 10 need converted treebanks (see docs/conversion.md) and are
skipped unless DISCOTREE_RSTDT / DISCOTREE_GUM point at the converted test sets.
"""

import json
import os
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from discotree.boundary import BoundarySeq, Segmentation, binarize, format_probs, pk_score
from discotree.cli import main
from discotree.corpus import Forest, Granularity, load_corpus, parse_tree, read_tree_lines
from discotree.parseval import evaluate, micro_precision, span_inventory
from discotree.transform import is_leaky, leaky_attach, restrict_to_upper, trim_to_lower
from discotree.treegen import (
    cky_discounted, greedy_bottomup, greedy_topdown, left_branching, right_branching, tree_score,
)

from helpers import make_doc, random_doc
from oracles import (
    all_trees, brute_precision, exact_score, nested_to_bracket, random_nested,
)

C1 = "1. greedy top-down equals bottom-up, valid trees"
C2 = "2. CKY scores all tie at gamma=1"
C3 = "3. CKY matches brute-force maximum"
C4 = "4. parseval agrees with brute-force oracle"
C5 = "5. span inventory sizes"
C6 = "6. transform suite"
C7 = "7. Pk properties and hand examples"
C8 = "8. determinism"
C9 = "9. RST-DT branching baselines"
C10 = "10. GUM right-branching baseline"
C11 = "11. rows recomputable from a probability file"


def valid(tree, k):
    nodes = list(tree.nodes())
    return [n.lo for n in nodes if n.is_leaf] == list(range(k)) and len(nodes) == 2 * k - 1


def to_nested(node):
    # trees here are small, recursion is fine
    if node.is_leaf:
        return node.lo
    return (to_nested(node.left), to_nested(node.right))


@pytest.mark.criterion(C1)
def test_greedy_equivalence(rng):
    for _ in range(1000):
        k = int(rng.integers(1, 13))
        probs = list(rng.permutation(rng.random(k - 1)))
        assert len(set(probs)) == len(probs)
        top, bottom = greedy_topdown(probs), greedy_bottomup(probs)
        assert top == bottom
        assert valid(top, k) and valid(bottom, k)


@pytest.mark.criterion(C2)
def test_cky_degenerate_at_gamma_one(rng):
    for k in range(1, 7):
        for _ in range(20):
            probs = list(rng.random(k - 1))
            scores = []
            for t in all_trees(0, k - 1):
                tree = parse_tree(nested_to_bracket(t))
                scores.append(tree_score(tree, probs, 1.0))
            assert max(scores) - min(scores) <= 1e-12
            assert exact_score(all_trees(0, k - 1)[0], probs, 1) == k - 1 - Fraction(sum(
                Fraction(p) for p in probs))


@pytest.mark.criterion(C3)
def test_cky_optimal(rng):
    for gamma in (0.3, 0.5, 0.9):
        g = Fraction(gamma)
        for k in range(1, 9):
            for _ in range(5):
                probs = list(rng.random(k - 1))
                best = max(exact_score(t, probs, g) for t in all_trees(0, k - 1))
                got = to_nested(cky_discounted(probs, gamma).root)
                assert exact_score(got, probs, g) == best


@pytest.mark.criterion(C4)
def test_parseval_oracle(rng):
    for conv in ("rst", "orig"):
        # the original convention has no spans below three units
        smallest = 1 if conv == "rst" else 3
        for _ in range(1000):
            n = int(rng.integers(smallest, 16))
            p = nested_to_bracket(random_nested(rng, 0, n - 1))
            g = nested_to_bracket(random_nested(rng, 0, n - 1))
            pf = [Forest("d", "sent", (parse_tree(p, "sent"),))]
            gf = [Forest("d", "sent", (parse_tree(g, "sent"),))]
            report = micro_precision(pf, gf, conv)
            assert Fraction(report.matched, report.total) == brute_precision([p], [g], conv)


@pytest.mark.criterion(C4)
def test_parseval_hand_case():
    pred = [Forest("d", "sent", (left_branching(3),))]
    gold = [Forest("d", "sent", (right_branching(3),))]
    rst, orig = micro_precision(pred, gold, "rst"), micro_precision(pred, gold, "orig")
    assert Fraction(rst.matched, rst.total) == Fraction(4, 5)
    assert f"{rst.precision:.4f}" == "0.8000"
    assert (orig.matched, orig.total) == (0, 1)
    assert f"{orig.precision:.4f}" == "0.0000"


@pytest.mark.criterion(C5)
def test_inventory_sizes(rng):
    for n in range(1, 51):
        for _ in range(4):
            tree = parse_tree(nested_to_bracket(random_nested(rng, 0, n - 1)))
            assert len(span_inventory(tree, "rst")) == 2 * n - 1
            assert len(span_inventory(tree, "orig")) == max(n - 2, 0)


@pytest.mark.criterion(C6)
def test_trim_leaf_counts_fuzzed(rng):
    leaky_seen = 0
    for _ in range(500):
        n = int(rng.integers(2, 40))
        doc = random_doc(rng, n)
        tree = parse_tree(nested_to_bracket(random_nested(rng, 0, n - 1)), "edu")
        leaky_seen += is_leaky(tree, doc, "sent")
        for target in ("sent", "para"):
            out = trim_to_lower(tree, doc, target)
            assert out.n_leaves == doc.n_units(target)
            assert valid(out, doc.n_units(target))
    assert leaky_seen > 100


@pytest.mark.criterion(C6)
def test_transforms_idempotent(rng):
    for _ in range(300):
        n = int(rng.integers(1, 40))
        doc = random_doc(rng, n)
        tree = parse_tree(nested_to_bracket(random_nested(rng, 0, n - 1)), "edu")
        fixed = leaky_attach(tree, doc, "sent")
        assert leaky_attach(fixed, doc, "sent") == fixed
        # trimming is stable: repaired input and staged trimming give the same tree
        sent = trim_to_lower(tree, doc, "sent")
        assert trim_to_lower(fixed, doc, "sent") == sent
        assert trim_to_lower(sent, doc, "para") == trim_to_lower(tree, doc, "para")
        forest = restrict_to_upper(sent, doc, "para")
        assert restrict_to_upper(forest, doc, "para") == forest


@pytest.mark.criterion(C6)
def test_leaky_examples():
    # five-EDU sentence split 3/2: the larger part wins, so the unit attaches left
    doc = make_doc([0, 1, 1, 1, 1, 1, 2])
    tree = parse_tree("((0 (1 (2 3))) ((4 5) 6))", "edu")
    assert trim_to_lower(tree, doc, "sent").to_bracket() == "((0 1) 2)"
    # four-EDU sentence split 2/2: ties attach right
    doc = make_doc([0, 1, 1, 1, 1, 2])
    tree = parse_tree("((0 (1 2)) ((3 4) 5))", "edu")
    assert trim_to_lower(tree, doc, "sent").to_bracket() == "(0 (1 2))"


@pytest.mark.criterion(C7)
def test_pk(rng):
    for _ in range(500):
        k = int(rng.integers(2, 60))
        x = Segmentation(k, frozenset(np.flatnonzero(rng.random(k) < 0.3).tolist()))
        assert pk_score(x, x, int(rng.integers(1, k))) == 0.0
    assert pk_score(Segmentation(6, frozenset()), Segmentation(6, frozenset(range(6))), 3) == 1.0
    assert pk_score(Segmentation(6, frozenset({2})), Segmentation(6, frozenset()), 2) == 2 / 5


@pytest.mark.criterion(C7)
def test_binarize_monotone(rng):
    for _ in range(1000):
        seq = BoundarySeq("d", tuple(rng.random(int(rng.integers(0, 30)))))
        lo, hi = sorted(rng.random(2))
        assert binarize(seq, hi).boundaries <= binarize(seq, lo).boundaries


@pytest.mark.criterion(C8)
def test_pipeline_byte_identical(synthetic_corpus, tmp_path):
    out = tmp_path / "out"
    argv = ["pipeline", "--corpus", str(synthetic_corpus), "--out", str(out)]
    assert main(argv) == 0
    first = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    assert main(argv) == 0
    assert {p.name: p.read_bytes() for p in sorted(out.iterdir())} == first


@pytest.mark.criterion(C8)
def test_random_mean_reproducible(synthetic_corpus, tmp_path):
    means = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["eval", "--corpus", str(synthetic_corpus), "--method", "random",
                     "--seed", "1", "--runs", "10", "--convention", "rst", "--out", str(out)]) == 0
        results = json.loads((out / "eval.json").read_text())["results"]
        means.append({lv: f"{r['rst']['mean']:.6f}" for lv, r in results.items()})
        assert all(len(r["rst"]["per_seed"]) == 10 for r in results.values())
    assert means[0] == means[1]


def _treebank(var):
    root = os.environ.get(var)
    if not root:
        pytest.skip(f"set {var} to a converted test set to run this reproduction")
    root = Path(root)
    docs = load_corpus(root)
    lines = read_tree_lines(root / "gold.trees")
    gold = {d.id: parse_tree(lines[d.id], Granularity.EDU, d.n_edus) for d in docs}
    return docs, gold


def _baseline_score(docs, gold, build, level):
    pred = {d.id: build(d.n_sentences) for d in docs}
    return 100 * evaluate(pred, gold, docs, level, "rst").precision


RSTDT_TARGETS = {
    # level: (right, left)
    "s-d": (59.46, 58.07),
    "s-p": (73.57, 72.41),
    "p-d": (65.50, 64.07),
}


@pytest.mark.criterion(C9)
@pytest.mark.parametrize("level", sorted(RSTDT_TARGETS))
def test_rstdt_baselines(level):
    docs, gold = _treebank("DISCOTREE_RSTDT")
    right, left = RSTDT_TARGETS[level]
    got_right = _baseline_score(docs, gold, right_branching, level)
    got_left = _baseline_score(docs, gold, left_branching, level)
    print(f"RST-DT {level.upper()}: right {got_right:.2f} (target {right}), "
          f"left {got_left:.2f} (target {left})")
    assert abs(got_right - right) <= 0.05
    assert abs(got_left - left) <= 0.05


# GUM genre codes and their right-branching P-D scores
GUM_GENRES = {
    "voyage": 78.1, "bio": 75.0, "fiction": 80.6, "whow": 69.4, "academic": 70.4,
    "news": 57.4, "speech": 80.0, "textbook": 78.6, "interview": 78.8,
}


@pytest.mark.criterion(C10)
def test_gum_right_branching():
    docs, gold = _treebank("DISCOTREE_GUM")
    pred = {d.id: right_branching(d.n_sentences) for d in docs}
    report = evaluate(pred, gold, docs, "p-d", "rst")
    print(f"GUM P-D right-branching {100 * report.precision:.2f} (target 72.71)")
    assert abs(100 * report.precision - 72.71) <= 0.05
    if report.per_genre is not None:
        for genre, target in GUM_GENRES.items():
            if genre in report.per_genre:
                got = 100 * report.per_genre[genre]
                print(f"  {genre}: {got:.1f} (target {target})")
                assert abs(got - target) <= 0.1


@pytest.mark.criterion(C11)
def test_rows_from_probability_file(synthetic_corpus, tmp_path):
    # an external probability file drives gentree and eval with no scorer involved;
    # matching published model rows needs that model's outputs (docs/conversion.md)
    docs = load_corpus(synthetic_corpus)
    rng = np.random.default_rng(7)
    seqs = [BoundarySeq(d.id, tuple(rng.random(d.n_sentences - 1))) for d in docs]
    probs = tmp_path / "probs.jsonl"
    probs.write_text(format_probs(seqs))
    rows = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["pipeline", "--corpus", str(synthetic_corpus), "--probs", str(probs),
                     "--out", str(out)]) == 0
        assert not (out / "probs.jsonl").exists()
        rows.append(json.loads((out / "eval.json").read_text())["results"])
    assert rows[0] == rows[1]
    expected = {d.id: greedy_topdown(s) for d, s in zip(docs, seqs)}
    assert read_tree_lines(tmp_path / "a" / "trees.txt") == {
        k: t.to_bracket() for k, t in expected.items()}
