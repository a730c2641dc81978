"""Generates and evaluates names for formal lemmas."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig, model_name, parse_model_name
from .corpus import DatasetSplit, LemmaRecord, load_dataset, split_by_document
from .features import InputKind, Preprocessor
from .metrics import bleu4_char, bootstrap_compare, fragment_accuracy
from .model import NamingModel
from .retrieval import TfIdfIndex, build_index
from .sexp import Atom, SexpList, parse_sexp, print_sexp
from .subtokenizer import Lexicon, default_lexicon, subtokenize_name
from .synthetic import GeneratorSpec, generate
from .training import train
from .trimming import TrimConfig, TrimVariant, trim
from .vocab import Vocab, build_vocab

__version__ = "1.0"

__all__ = [
    "Atom",
    "DatasetSplit",
    "GeneratorSpec",
    "InputKind",
    "LemmaRecord",
    "Lexicon",
    "ModelConfig",
    "NamingModel",
    "Preprocessor",
    "SexpList",
    "TfIdfIndex",
    "TrainConfig",
    "TrimConfig",
    "TrimVariant",
    "Vocab",
    "bleu4_char",
    "bootstrap_compare",
    "build_index",
    "build_vocab",
    "default_lexicon",
    "fragment_accuracy",
    "generate",
    "load_checkpoint",
    "load_dataset",
    "model_name",
    "parse_model_name",
    "parse_sexp",
    "print_sexp",
    "save_checkpoint",
    "split_by_document",
    "subtokenize_name",
    "train",
    "trim",
]
