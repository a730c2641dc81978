import pytest
from conftest import MG_EQ_STMT, MG_EQ_STREE
from lemmanamer.errors import (
    EmptyAtom,
    MalformedToken,
    NestingTooDeep,
    SexpError,
    UnbalancedParen,
    UnexpectedTrailingInput,
    UnterminatedString,
)
from lemmanamer.sexp import (
    Atom,
    SexpList,
    TokenKind,
    depth,
    node_count,
    parse_sentence_tokens,
    parse_sexp,
    print_sexp,
    sentence_sexp,
    slist,
)


class TestParse:
    def test_atom(self):
        assert parse_sexp("  nat ") == Atom("nat")

    def test_nested_lists(self):
        tree = parse_sexp("(App (Ref y1) ())")
        assert tree == slist("App", slist("Ref", "y1"), SexpList())
        assert tree.head == "App"

    def test_quoted_atom_escapes(self):
        assert parse_sexp(r'"a\"b\\c"') == Atom('a"b\\c')
        assert parse_sexp('"_ -> _"') == Atom("_ -> _")

    def test_whitespace_between_siblings_is_ignored(self):
        assert print_sexp(parse_sexp("( a\n\t(b   c) )")) == "(a (b c))"

    def test_errors(self):
        with pytest.raises(UnbalancedParen):
            parse_sexp("(a b")
        with pytest.raises(UnbalancedParen):
            parse_sexp(")")
        with pytest.raises(UnexpectedTrailingInput) as info:
            parse_sexp("(a) b")
        assert info.value.position == 4
        with pytest.raises(UnterminatedString):
            parse_sexp('(a "bc)')
        with pytest.raises(EmptyAtom):
            parse_sexp('""')
        with pytest.raises(SexpError):
            parse_sexp("   ")

    def test_deep_nesting(self):
        levels = 20000
        tree = parse_sexp("(" * levels + "x" + ")" * levels)
        assert depth(tree) == levels + 1
        assert print_sexp(tree) == "(" * levels + "x" + ")" * levels

    def test_nesting_limit(self):
        with pytest.raises(NestingTooDeep):
            parse_sexp("((((x))))", max_depth=3)


class TestPrint:
    def test_canonical_spacing(self):
        assert print_sexp(slist(SexpList(), "a", slist("b"))) == "(() a (b))"

    def test_quotes_atoms_that_need_it(self):
        tree = slist("InConstrEntrySomeLevel", Atom("_ = _"), Atom('say "hi"'))
        text = print_sexp(tree)
        assert text == r'(InConstrEntrySomeLevel "_ = _" "say \"hi\"")'
        assert parse_sexp(text) == tree

    def test_reprint_of_serialized_tree(self):
        tree = parse_sexp(MG_EQ_STREE)
        assert parse_sexp(print_sexp(tree)) == tree


class TestMeasures:
    @pytest.mark.parametrize(
        "text, expected_depth, expected_nodes",
        [("x", 1, 1), ("()", 1, 1), ("(x)", 2, 2), ("(a (b c))", 3, 5)],
    )
    def test_depth_and_node_count(self, text, expected_depth, expected_nodes):
        tree = parse_sexp(text)
        assert depth(tree) == expected_depth
        assert node_count(tree) == expected_nodes


class TestSentenceTokens:
    def test_lemma_sentence(self):
        tokens = parse_sentence_tokens(parse_sexp(MG_EQ_STMT))
        assert len(tokens) == 19
        assert tokens[1].text == "mg_eq_proof"
        assert tokens[1].kind is TokenKind.IDENTIFIER
        assert tokens[4].text == "("
        assert tokens[4].kind is TokenKind.KEYWORD
        assert tokens[-1].text == "."

    def test_inverse(self):
        tokens = parse_sentence_tokens(parse_sexp(MG_EQ_STMT))
        assert parse_sentence_tokens(sentence_sexp(tokens)) == tokens

    def test_malformed_token(self):
        with pytest.raises(MalformedToken) as info:
            parse_sentence_tokens(parse_sexp("(Sentence ((IDENT a) (IDENT b c)))"))
        assert info.value.index == 1

    def test_not_a_sentence(self):
        with pytest.raises(SexpError):
            parse_sentence_tokens(parse_sexp("(Tokens ())"))
