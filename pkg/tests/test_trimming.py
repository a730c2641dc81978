import pytest
from conftest import MG_EQ_KTREE, MG_EQ_STREE, TRIM_AFTER, TRIM_BEFORE
from lemmanamer.errors import ConfigError
from lemmanamer.sexp import Atom, depth, node_count, parse_sexp, print_sexp
from lemmanamer.trimming import (
    TrimConfig,
    TrimVariant,
    flatten,
    standard_keep_fraction,
    stats,
    trim,
)


def trimmed(text, **config):
    return print_sexp(trim(parse_sexp(text), TrimConfig(**config)))


class TestStandardTrim:
    def test_worked_example(self):
        assert trimmed(TRIM_BEFORE) == TRIM_AFTER

    def test_location_subtrees_are_removed(self):
        text = "(CRef (Ser_Qualid (DirPath ()) (Id L1)) (loc (bp 0) (ep 2)))"
        assert trimmed(text) == "(CRef L1)"

    def test_qualified_names_collapse_to_identifier(self):
        text = "(App (Ref (DirPath ((Id myhill_nerode) (Id RegLang))) (Id nerode)) L2)"
        assert trimmed(text) == "(App nerode L2)"

    def test_singletons_are_extracted(self):
        assert trimmed("(f ((g x)) (((y))))") == "(f (g x) y)"

    def test_root_is_kept(self):
        assert trimmed("(loc (bp 0) (ep 2))") == "(loc (bp 0) (ep 2))"
        assert trim(parse_sexp("(((x)))")) == Atom("x")

    def test_atoms_come_back_unchanged(self):
        assert trim(Atom("nat")) == Atom("nat")

    @pytest.mark.parametrize("text", [TRIM_BEFORE, MG_EQ_KTREE, MG_EQ_STREE])
    def test_idempotent(self, text):
        once = trim(parse_sexp(text))
        assert trim(once) == once

    def test_custom_location_heads(self):
        text = "(CRef x (pos 3 4) (pos 5 6))"
        assert trimmed(text, location_heads={"pos"}) == "(CRef x)"

    def test_reduces_kernel_tree(self):
        tree = parse_sexp(MG_EQ_KTREE)
        result = trim(tree)
        assert depth(result) < depth(tree)
        assert node_count(result) < node_count(tree)
        assert "eq_mem" in flatten(result)
        assert "ssrbool" not in flatten(result)


class TestVariants:
    def test_keep_category(self):
        text = "(App (Ref (DirPath ((Id ssrbool))) (Id eq_mem)) x)"
        assert trimmed(text, variant="keep-category") == "(App (Ref eq_mem) x)"

    def test_depth_limit(self):
        assert trimmed("(a (b (c d)) e)", variant="depth", max_depth=2) == "(a () e)"
        assert trimmed("(a (b (c d)))", variant="depth", max_depth=3) == "(a (b ()))"

    def test_random_meets_node_budget(self):
        tree = parse_sexp("(a (b c) (d e f) (g (h i)))")
        config = TrimConfig(variant=TrimVariant.RANDOM, target_node_count=5, seed=3)
        result = trim(tree, config)
        assert node_count(result) == 5
        assert trim(tree, config) == result

    def test_random_keep_fraction(self):
        tree = parse_sexp(MG_EQ_KTREE)
        config = TrimConfig(variant="random", keep_fraction=0.5, seed=1)
        assert node_count(trim(tree, config)) == round(0.5 * node_count(tree))

    def test_random_leaves_small_trees(self):
        tree = parse_sexp("(a b)")
        config = TrimConfig(variant="random", target_node_count=10)
        assert trim(tree, config) == tree

    def test_random_on_a_wide_tree(self):
        groups = (
            "(g " + " ".join(f"x{g}_{i}" for i in range(100)) + ")" for g in range(500)
        )
        tree = parse_sexp("(r " + " ".join(groups) + ")")
        assert node_count(tree) == 51002
        config = TrimConfig(variant="random", target_node_count=10, seed=5)
        result = trim(tree, config)
        assert node_count(result) == 10
        assert trim(tree, config) == result

    def test_random_matches_standard_size(self, synthetic_records):
        trees = [t for record in synthetic_records for t in (record.stree, record.ktree)]
        fraction = standard_keep_fraction(trees)
        assert 0 < fraction < 1
        standard = sum(node_count(trim(tree)) for tree in trees)
        config = TrimConfig(variant="random", keep_fraction=fraction, seed=2)
        sampled = sum(node_count(trim(tree, config)) for tree in trees)
        assert abs(sampled - standard) <= len(trees)

    def test_standard_fraction_needs_trees(self):
        with pytest.raises(ConfigError):
            standard_keep_fraction([])


class TestTrimConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            TrimConfig(variant="random")
        with pytest.raises(ConfigError):
            TrimConfig(max_depth=0)
        with pytest.raises(ConfigError):
            TrimConfig(variant="random", keep_fraction=1.5)

    def test_from_dict(self):
        config = TrimConfig.from_dict({"variant": "depth", "max_depth": 4})
        assert config.variant is TrimVariant.DEPTH_LIMIT
        assert TrimConfig.from_dict(config.to_dict()) == config
        with pytest.raises(ConfigError):
            TrimConfig.from_dict({"variant": "pruned"})
        with pytest.raises(ConfigError):
            TrimConfig.from_dict({"depth": 4})


class TestFlatten:
    def test_preorder_with_boundaries(self):
        assert flatten(parse_sexp("(a (b c))")) == ["(", "a", "(", "b", "c", ")", ")"]
        assert flatten(Atom("x")) == ["x"]

    def test_stats(self):
        result = stats(parse_sexp("(App addnC (Var x))"))
        assert result.depth == 3
        assert result.node_count == 6
        # ( App add n C ( Var x ) )
        assert result.flat_subtoken_count == 10
