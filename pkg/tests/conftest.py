import pytest
from lemmanamer.config import ModelConfig
from lemmanamer.corpus import LemmaRecord, parse_record
from lemmanamer.model import NamingModel
from lemmanamer.sexp import SourceToken, TokenKind, parse_sexp
from lemmanamer.synthetic import GeneratorSpec, generate
from lemmanamer.vocab import build_vocab

MG_EQ_STMT = (
    "(Sentence ((IDENT Lemma) (IDENT mg_eq_proof) (IDENT L1) (IDENT L2)"
    ' (KEYWORD "(") (IDENT N1) (KEYWORD :) (IDENT mgClassifier) (IDENT L1)'
    ' (KEYWORD ")") (KEYWORD :) (IDENT L1) (KEYWORD =i) (IDENT L2)'
    " (KEYWORD ->) (IDENT nerode) (IDENT L2) (IDENT N1) (KEYWORD .)))"
)

MG_EQ_STREE = """
(VernacExpr () (VernacStartTheoremProof Lemma (Id mg_eq_proof)
 (((CLocalAssum (Name (Id L1)) (CHole () IntroAnonymous ()))
   (CLocalAssum (Name (Id L2)) (CHole () IntroAnonymous ()))
   (CLocalAssum (Name (Id N1))
    (CApp (CRef (Ser_Qualid (DirPath ()) (Id mgClassifier)))
          (CRef (Ser_Qualid (DirPath ()) (Id L1))))))
  (CNotation (InConstrEntrySomeLevel "_ -> _")
   (CNotation (InConstrEntrySomeLevel "_ =i _")
    (CRef (Ser_Qualid (DirPath ()) (Id L1)))
    (CRef (Ser_Qualid (DirPath ()) (Id L2))))
   (CApp (CRef (Ser_Qualid (DirPath ()) (Id nerode)))
    (CRef (Ser_Qualid (DirPath ()) (Id L2))) (CRef (Ser_Qualid (DirPath ()) (Id N1))))))))
"""

_REGLANG = "(DirPath ((Id myhill_nerode) (Id RegLang)))"

MG_EQ_KTREE = f"""
(Prod (Name (Id char))
 (Ind (Ref (DirPath ((Id choice) (Id ssr) (Id Coq))) (Id choiceType)))
 (Prod (Name (Id L1)) (App (Const (Ref {_REGLANG} (Id lang))) (Var (Id char)))
  (Prod (Name (Id L2)) (App (Const (Ref {_REGLANG} (Id lang))) (Var (Id char)))
   (Prod (Name (Id N1))
    (App (Const (Ref {_REGLANG} (Id mgClassifier))) (Var (Id char)) (Var (Id L1)))
    (Prod Anonymous
     (App (Ref (DirPath ((Id ssrbool) (Id ssr) (Id Coq))) (Id eq_mem))
      (Var (Id char)) (Var (Id L1)) (Var (Id L2)))
     (App (Ref {_REGLANG} (Id nerode)) (Var (Id char)) (Var (Id L2)) (Var (Id N1))))))))
"""

# The elided parts of the trimming example are instantiated with concrete subtrees.
TRIM_BEFORE = (
    "(Prod Anonymous (App (Ref (DirPath ((Id ssrbool) (Id ssr) (Id Coq))) (Id eq_mem))"
    " x1 ((App (Ref y1))) x2))"
)
TRIM_AFTER = "(Prod Anonymous (App eq_mem x1 (App (Ref y1)) x2))"


@pytest.fixture
def mg_eq_record():
    return parse_record(
        {
            "doc": "RegLang.myhill_nerode",
            "name": "mg_eq_proof",
            "qname": "RegLang.myhill_nerode.mg_eq_proof",
            "stmt": MG_EQ_STMT,
            "stree": MG_EQ_STREE,
            "ktree": MG_EQ_KTREE,
        }
    )


def make_record(name, statement=(), doc="Doc", ktree="(Ind nat)", stree="(Lemma)"):
    """A record whose statement is ``statement``; words are
    identifiers, everything else keywords."""
    tokens = [SourceToken("Lemma", TokenKind.KEYWORD)]
    tokens.append(SourceToken(name, TokenKind.IDENTIFIER))
    for text in statement:
        kind = TokenKind.IDENTIFIER if text[0].isalnum() else TokenKind.KEYWORD
        tokens.append(SourceToken(text, kind))
    tokens.append(SourceToken(".", TokenKind.KEYWORD))
    return LemmaRecord(
        doc_id=doc,
        name=name,
        qualified_name=f"{doc}.{name}",
        stmt_tokens=tuple(tokens),
        stree=parse_sexp(stree),
        ktree=parse_sexp(ktree),
    )


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture(scope="session")
def synthetic_records():
    return generate(GeneratorSpec(n_docs=6, lemmas_per_doc=6, seed=7))


@pytest.fixture
def tiny_config():
    def build(name="ln-s+bsexpl1+attn+copy", **overrides):
        values = dict(
            embedding_dim=8,
            hidden_units=6,
            num_layers=1,
            dropout=0.0,
            max_decode_len=12,
            dtype="float64",
        )
        values.update(overrides)
        return ModelConfig.from_name(name, **values)

    return build


@pytest.fixture
def tiny_model(tiny_config):
    def build(records, name="ln-s+bsexpl1+attn+copy", seed=0, **overrides):
        config = tiny_config(name, **overrides)
        name_vocab, input_vocab = build_vocab(records, config.inputs)
        return NamingModel.create(config, name_vocab, input_vocab, seed=seed)

    return build
