import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discotree.boundary import BoundarySeq
from discotree.corpus import parse_tree
from discotree.errors import GammaOutOfRange
from discotree.treegen import (
    GenMethod, MethodKind, baseline_tree, cky_discounted, generate, greedy_bottomup,
    greedy_topdown, random_tree, tree_score,
)

from oracles import all_trees, exact_score, greedy_reference, leaves, nested_to_bracket

probs_lists = st.lists(st.floats(0, 1, allow_nan=False), min_size=0, max_size=40)


def in_order_full_binary(tree, k):
    nodes = list(tree.nodes())
    leaf_spans = [n.lo for n in nodes if n.is_leaf]
    return leaf_spans == list(range(k)) and len(nodes) == 2 * k - 1


class TestGreedy:
    @pytest.mark.parametrize("probs,expected", [
        ([0.9, 0.8, 0.7], "(0 (1 (2 3)))"),
        ([0.9, 0.1, 0.5], "(0 ((1 2) 3))"),
        ([0.5, 0.5], "(0 (1 2))"),
        ([], "0"),
        ([0.3], "(0 1)"),
    ])
    def test_examples(self, probs, expected):
        assert greedy_topdown(probs).to_bracket() == expected

    def test_bottomup_examples(self):
        assert greedy_bottomup([0.9, 0.1, 0.5]).to_bracket() == "(0 ((1 2) 3))"
        assert greedy_bottomup([0.3]).to_bracket() == "(0 1)"
        assert greedy_bottomup([]).to_bracket() == "0"

    def test_matches_reference_recursion(self, rng):
        for _ in range(500):
            probs = list(rng.random(int(rng.integers(0, 30))))
            assert greedy_topdown(probs).to_bracket() == nested_to_bracket(greedy_reference(probs))

    def test_reference_with_ties(self, rng):
        for _ in range(200):
            probs = list(rng.integers(0, 3, int(rng.integers(0, 15))) / 2)
            assert greedy_topdown(probs).to_bracket() == nested_to_bracket(greedy_reference(probs))

    @settings(max_examples=200)
    @given(st.lists(st.floats(0, 1), max_size=12, unique=True))
    def test_topdown_equals_bottomup_distinct(self, probs):
        assert greedy_topdown(probs) == greedy_bottomup(probs)

    @settings(max_examples=100)
    @given(st.lists(st.sampled_from([0.0, 0.5, 1.0]), max_size=12))
    def test_ties_still_valid(self, probs):
        k = len(probs) + 1
        assert in_order_full_binary(greedy_topdown(probs), k)
        assert in_order_full_binary(greedy_bottomup(probs), k)

    def test_accepts_boundary_seq(self):
        seq = BoundarySeq("d", (0.2, 0.7))
        assert greedy_topdown(seq).to_bracket() == "((0 1) 2)"


class TestCky:
    def test_discounted_example(self):
        probs = [0.9, 0.1]
        tree = cky_discounted(probs, 0.5)
        assert tree.to_bracket() == "(0 (1 2))"
        assert tree_score(tree, probs, 0.5) == pytest.approx(0.475, abs=1e-15)
        assert tree_score(parse_tree("((0 1) 2)"), probs, 0.5) == pytest.approx(0.275, abs=1e-15)

    def test_gamma_one_tie_break(self):
        probs = [0.9, 0.1]
        assert tree_score(parse_tree("((0 1) 2)"), probs, 1.0) == pytest.approx(1.0)
        assert tree_score(parse_tree("(0 (1 2))"), probs, 1.0) == pytest.approx(1.0)
        assert cky_discounted(probs, 1.0).to_bracket() == "(0 (1 2))"

    def test_gamma_one_is_right_branching(self, rng):
        for k in range(1, 30):
            probs = list(rng.random(k - 1))
            assert cky_discounted(probs, 1.0) == baseline_tree(k, GenMethod("right"))

    @pytest.mark.parametrize("probs", [[0.1], [0.9], [0.0]])
    def test_two_sentences(self, probs):
        assert cky_discounted(probs, 0.7).to_bracket() == "(0 1)"

    @pytest.mark.parametrize("gamma", [0.0, -0.5, 1.5, None])
    def test_gamma_range(self, gamma):
        with pytest.raises(GammaOutOfRange):
            cky_discounted([0.5], gamma)

    def test_optimal_against_enumeration(self, rng):
        for gamma in (0.2, 0.6, 0.95):
            for k in range(1, 8):
                probs = list(rng.random(k - 1))
                best = max(exact_score(t, probs, gamma) for t in all_trees(0, k - 1))
                got = parse_tree(cky_discounted(probs, gamma).to_bracket())
                nested = _to_nested(got.root)
                assert exact_score(nested, probs, gamma) == best

    def test_small_gamma_balances(self):
        # strong discount on large merges favours merging big blocks late and evenly
        probs = [0.5] * 15
        tree = cky_discounted(probs, 0.3)
        depth = max(_depths(tree.root))
        assert depth <= 6
        assert max(_depths(cky_discounted(probs, 1.0).root)) == 15


def _to_nested(node):
    if node.is_leaf:
        return node.lo
    return (_to_nested(node.left), _to_nested(node.right))


def _depths(node, d=0):
    if node.is_leaf:
        yield d
    else:
        yield from _depths(node.left, d + 1)
        yield from _depths(node.right, d + 1)


class TestBaselines:
    def test_right(self):
        assert baseline_tree(4, GenMethod("right")).to_bracket() == "(0 (1 (2 3)))"

    def test_left(self):
        assert baseline_tree(4, GenMethod("left")).to_bracket() == "(((0 1) 2) 3)"

    def test_random_reproducible(self):
        a = baseline_tree(3, GenMethod("random", seed=7)).to_bracket()
        assert a in ("((0 1) 2)", "(0 (1 2))")
        assert all(baseline_tree(3, GenMethod("random", seed=7)).to_bracket() == a for _ in range(5))

    def test_random_seeds_bit_identical(self):
        for seed in range(20):
            assert random_tree(60, seed) == random_tree(60, seed)

    def test_random_split_histogram(self):
        # uniform split point on k=3: chi-square with 1 dof, sanity bound 10.83 (p=0.001)
        counts = np.zeros(2)
        for seed in range(2000):
            counts[random_tree(3, seed).root.left.hi] += 1
        chi2 = ((counts - 1000) ** 2 / 1000).sum()
        assert chi2 < 10.83

    def test_single_unit(self):
        for kind in ("right", "left"):
            assert baseline_tree(1, GenMethod(kind)).to_bracket() == "0"
        assert baseline_tree(1, GenMethod("random", seed=0)).to_bracket() == "0"

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 200), st.integers(0, 10_000))
    def test_all_generators_valid(self, k, seed):
        rng = np.random.default_rng(seed)
        probs = list(rng.random(k - 1))
        methods = [GenMethod("greedy"), GenMethod("cky", gamma=0.5), GenMethod("right"),
                   GenMethod("left"), GenMethod("random", seed=seed)]
        for m in methods:
            if m.kind is MethodKind.CKY and k > 60:
                continue
            assert in_order_full_binary(generate(m, probs), k)


class TestGenMethod:
    def test_invariants(self):
        with pytest.raises(ValueError):
            GenMethod("cky")
        with pytest.raises(ValueError):
            GenMethod("greedy", gamma=0.5)
        with pytest.raises(ValueError):
            GenMethod("random")
        with pytest.raises(ValueError):
            GenMethod("right", seed=3)

    def test_manifest(self):
        assert GenMethod("cky", gamma=0.5).manifest_json() == '{"gamma": 0.5, "method": "cky"}\n'
        assert GenMethod("random", seed=3).manifest() == {"method": "random", "seed": 3}

    def test_generate_needs_probs(self):
        with pytest.raises(ValueError):
            generate(GenMethod("greedy"))
        assert generate(GenMethod("right"), k=3).to_bracket() == "(0 (1 2))"


def test_enumeration_oracle_counts():
    catalan = [1, 1, 2, 5, 14, 42, 132, 429]
    for k in range(1, 9):
        trees = all_trees(0, k - 1)
        assert len(trees) == catalan[k - 1]
        assert all(leaves(t) == list(range(k)) for t in trees)
