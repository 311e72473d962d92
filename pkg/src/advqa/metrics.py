"""Answer-quality and context-quality metrics.

Answer metrics (F1, EM) compare model output against reference answers after
SQuAD-style normalization; context metrics (BLEU-1, ROUGE-1, SIM, Mod) compare
an adversarial context against the original one.  All functions here return
values in [0, 1] (SIM in [-1, 1]); reports scale them to percentages.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import TokenizedContext, normalize_answer, tokenize

__all__ = [
    "MetricReport",
    "f1_score",
    "exact_match",
    "bleu1",
    "rouge1",
    "similarity",
    "modification_rate",
]


@dataclass
class MetricReport:
    """Aggregate metric values, all percentages unless noted.

    ``ppl`` is a raw perplexity; ``gerr`` is reserved for an externally
    computed grammar-error column and is never filled by this package.
    """

    f1: float
    em: float
    em_strict: float
    rouge1: float
    bleu1: float
    sim: float
    mod_rate: float
    ppl: Optional[float] = None
    gerr: Optional[float] = None
    seconds_per_sample: float = 0.0


def _norm_tokens(text: str) -> list[str]:
    return normalize_answer(text).split()


def f1_score(prediction: str, references: list[str]) -> float:
    """Max token-overlap F1 against any reference (normalized, multiset)."""
    if not references:
        raise ValueError("references must be non-empty")
    pred = _norm_tokens(prediction)
    best = 0.0
    for ref_text in references:
        ref = _norm_tokens(ref_text)
        if not pred and not ref:
            score = 1.0
        elif not pred or not ref:
            score = 0.0
        else:
            common = Counter(pred) & Counter(ref)
            same = sum(common.values())
            if same == 0:
                score = 0.0
            else:
                precision = same / len(pred)
                recall = same / len(ref)
                score = 2 * precision * recall / (precision + recall)
        best = max(best, score)
    return best


def exact_match(prediction: str, references: list[str], strict: bool = False) -> int:
    """1 iff the prediction matches any reference (normalized, or raw if strict)."""
    if not references:
        raise ValueError("references must be non-empty")
    if strict:
        return int(any(prediction == r for r in references))
    norm = normalize_answer(prediction)
    return int(any(norm == normalize_answer(r) for r in references))


def _context_tokens(text: str) -> list[str]:
    return [w.text.lower() for w in tokenize(text).words]


def bleu1(adv_context: str, orig_context: str) -> float:
    """Unigram modified precision of adv against orig, with brevity penalty."""
    adv = _context_tokens(adv_context)
    orig = _context_tokens(orig_context)
    if not adv:
        return 1.0 if not orig else 0.0
    clipped = Counter(adv) & Counter(orig)
    precision = sum(clipped.values()) / len(adv)
    if len(adv) >= len(orig):
        bp = 1.0
    else:
        bp = float(np.exp(1.0 - len(orig) / len(adv)))
    return bp * precision


def rouge1(adv_context: str, orig_context: str) -> float:
    """Unigram recall: fraction of orig tokens covered by adv (multiset clip)."""
    adv = _context_tokens(adv_context)
    orig = _context_tokens(orig_context)
    if not orig:
        return 1.0 if not adv else 0.0
    clipped = Counter(adv) & Counter(orig)
    return sum(clipped.values()) / len(orig)


def similarity(a: str, b: str, gateway) -> float:
    """Cosine similarity of gateway embeddings; zero vectors give 0."""
    va = np.asarray(gateway.embed(a), dtype=np.float64)
    vb = np.asarray(gateway.embed(b), dtype=np.float64)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def modification_rate(orig: TokenizedContext, substitutions) -> float:
    """Fraction of context words altered."""
    if not orig.words:
        raise ValueError("context has no words")
    return len(substitutions) / len(orig.words)
