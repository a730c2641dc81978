"""Name-quality metrics and paired bootstrap significance."""

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence
import numpy as np
from .constants import BOOTSTRAP_RESAMPLES, TOP_K, UNDERSCORE
from .errors import EmptyName, EmptyReference, LengthMismatch, MissingReference
from .utils import _default_seed


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def bleu4_char(candidate: str, reference: str) -> float:
    """Character-level BLEU-4 with add-one smoothing above unigrams.

    Raises:
        EmptyReference: ``reference`` is empty.
    """
    if not reference:
        raise EmptyReference("BLEU needs a non-empty reference")
    if not candidate:
        return 0.0

    log_precision = 0.0
    for n in range(1, 5):
        cand, ref = _char_ngrams(candidate, n), _char_ngrams(reference, n)
        matches = sum(min(count, ref[gram]) for gram, count in cand.items())
        total = sum(cand.values())
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_precision += math.log(precision) / 4

    brevity = min(1.0, math.exp(1 - len(reference) / len(candidate)))
    return brevity * math.exp(log_precision)


def _fragments(name: str) -> Counter:
    return Counter(fragment for fragment in name.split(UNDERSCORE) if fragment)


def fragment_accuracy(candidate: str, reference: str, symmetric: bool = False) -> float:
    """Share of the candidate's ``_``-separated fragments found in the reference.

    Fragments are compared as multisets, so order does not matter. With
    ``symmetric`` the overlap is divided by the larger fragment count.

    Raises:
        EmptyName: A name has no fragment.
    """
    cand, ref = _fragments(candidate), _fragments(reference)
    if not cand or not ref:
        raise EmptyName("fragment accuracy needs names with at least one fragment")
    overlap = sum((cand & ref).values())
    total = sum(cand.values())
    if symmetric:
        total = max(total, sum(ref.values()))
    return overlap / total


def topk_accuracy(suggestions: Sequence[str], reference: str, k: int = TOP_K) -> int:
    """1 when ``reference`` is among the first ``k`` suggestions, else 0."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return int(reference in suggestions[:k])


def bootstrap_compare(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: Optional[int] = None,
) -> float:
    """One-sided paired bootstrap p-value for "A is better than B".

    Lemma indices are resampled with replacement; the p-value is the share
    of resamples where A's mean is below B's, ties counting one half.

    Raises:
        LengthMismatch: The score lists are not paired.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"{len(a)} scores against {len(b)}")
    if a.size == 0:
        raise LengthMismatch("no paired scores")

    rng = np.random.default_rng(_default_seed(seed))
    diff = a - b
    indexes = rng.integers(0, diff.size, size=(resamples, diff.size))
    means = diff[indexes].mean(axis=1)
    tied = np.isclose(means, 0.0, rtol=0.0, atol=1e-12)
    worse = np.count_nonzero((means < 0) & ~tied)
    ties = np.count_nonzero(tied)
    return float((worse + 0.5 * ties) / resamples)


@dataclass(frozen=True)
class LemmaScores:
    """Metric values of one lemma's suggestions."""

    qualified_name: str
    bleu4: float
    frag_acc: float
    top1: int
    top5: int


def score_lemma(
    qualified_name: str, suggestions: Sequence[str], reference: str
) -> LemmaScores:
    """Scores of a ranked suggestion list; BLEU and fragments use the top-1.

    An empty top suggestion scores 0 on BLEU and fragment accuracy.
    """
    best = suggestions[0] if suggestions else ""
    has_fragment = any(best.split(UNDERSCORE))
    return LemmaScores(
        qualified_name,
        bleu4_char(best, reference),
        fragment_accuracy(best, reference) if has_fragment else 0.0,
        topk_accuracy(suggestions, reference, 1),
        topk_accuracy(suggestions, reference, TOP_K),
    )


@dataclass(frozen=True)
class MetricReport:
    bleu4: float
    frag_acc: float
    top1: float
    top5: float
    n: int

    def to_json(self) -> dict:
        return asdict(self)

    def format_percent(self) -> Dict[str, str]:
        """Scores as percentages with one decimal."""
        return {
            name: f"{100 * getattr(self, name):.1f}"
            for name in ("bleu4", "frag_acc", "top1", "top5")
        }


def report(scores: Sequence[LemmaScores]) -> MetricReport:
    """Corpus metrics: the mean of the per-lemma values."""
    if not scores:
        return MetricReport(0.0, 0.0, 0.0, 0.0, 0)
    return MetricReport(
        bleu4=float(np.mean([s.bleu4 for s in scores])),
        frag_acc=float(np.mean([s.frag_acc for s in scores])),
        top1=float(np.mean([s.top1 for s in scores])),
        top5=float(np.mean([s.top5 for s in scores])),
        n=len(scores),
    )


def evaluate_suggestions(
    suggestions: Mapping[str, Sequence[str]], references: Mapping[str, str]
) -> List[LemmaScores]:
    """Per-lemma scores for suggestions keyed by qualified name.

    Raises:
        MissingReference: A suggested lemma has no reference name.
    """
    scores = []
    for qualified_name, names in suggestions.items():
        if qualified_name not in references:
            raise MissingReference(qualified_name)
        scores.append(score_lemma(qualified_name, names, references[qualified_name]))
    return scores


def average_reports(reports: Iterable[MetricReport]) -> MetricReport:
    """Mean of several runs' reports."""
    reports = list(reports)
    if not reports:
        return MetricReport(0.0, 0.0, 0.0, 0.0, 0)
    return MetricReport(
        bleu4=float(np.mean([r.bleu4 for r in reports])),
        frag_acc=float(np.mean([r.frag_acc for r in reports])),
        top1=float(np.mean([r.top1 for r in reports])),
        top5=float(np.mean([r.top5 for r in reports])),
        n=reports[0].n,
    )
