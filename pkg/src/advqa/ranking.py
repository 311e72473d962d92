"""Word-importance ranking: attention-based, removal-based, and their fusion."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .corpus import TokenizedContext, delete_word
from .gateway import ModelGateway, ProtocolError

__all__ = [
    "WordScores",
    "RankedTargets",
    "minmax_normalize",
    "abr_scores",
    "rbr_raw_scores",
    "rbr_scores",
    "fuse",
    "top_k_select",
]


@dataclass(frozen=True)
class WordScores:
    """Per-word importance: attention component, removal component, their sum."""

    abr: np.ndarray
    rbr: np.ndarray
    fused: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.abr) != len(self.rbr):
            raise ValueError(f"score length mismatch: {len(self.abr)} vs {len(self.rbr)}")
        if self.fused is None:
            object.__setattr__(self, "fused", self.abr + self.rbr)


@dataclass(frozen=True)
class RankedTargets:
    indices: list[int]  # word indices, descending fused score, ties -> lower index
    k_requested: int


def minmax_normalize(values) -> np.ndarray:
    """Min-max scale to [0, 1]; an all-equal vector maps to all 0.5."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return v
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full_like(v, 0.5)
    return (v - lo) / (hi - lo)


def abr_scores(question: str, ctx: TokenizedContext, gateway: ModelGateway) -> np.ndarray:
    """Attention-based word scores in [0, 1].

    Each subword's attention is credited to the word whose span contains the
    subword's start character; subwords outside every word (punctuation) are
    discarded.  Word sums are min-max normalized.
    """
    if not ctx.words:
        raise ValueError("context has no words")
    profile = gateway.attention_profile(question, ctx.source)
    sums = np.zeros(len(ctx.words), dtype=np.float64)
    starts = [w.start for w in ctx.words]
    for sub in profile.subwords:
        if not 0 <= sub.start < sub.end <= len(ctx.source):
            raise ProtocolError(f"attention subword outside context: {sub}")
        i = _word_containing(starts, ctx, sub.start)
        if i is not None:
            sums[i] += sub.score
    return minmax_normalize(sums)


def _word_containing(starts, ctx, pos):
    # rightmost word whose start <= pos, if pos is inside its span
    i = bisect.bisect_right(starts, pos) - 1
    if i >= 0 and ctx.words[i].start <= pos < ctx.words[i].end:
        return i
    return None


def rbr_raw_scores(
    question: str,
    ctx: TokenizedContext,
    answer: str,
    gateway: ModelGateway,
    signed: bool = False,
) -> np.ndarray:
    """Un-normalized removal scores: base log-prob minus the deleted-word one.

    Issues exactly n+1 scoring calls for n words.  With ``signed=False`` the
    absolute difference is taken.
    """
    if not answer:
        raise ValueError("answer must be non-empty")
    base = gateway.score_answer(question, ctx.source, answer)
    raw = np.empty(len(ctx.words), dtype=np.float64)
    for i in range(len(ctx.words)):
        raw[i] = base - gateway.score_answer(question, delete_word(ctx, i), answer)
    if not signed:
        raw = np.abs(raw)
    return raw


def rbr_scores(question, ctx, answer, gateway, signed: bool = False) -> np.ndarray:
    """Removal-based word scores, min-max normalized to [0, 1]."""
    return minmax_normalize(rbr_raw_scores(question, ctx, answer, gateway, signed=signed))


def fuse(abr, rbr) -> WordScores:
    """Combine the two normalized rankings by per-word addition."""
    abr = np.asarray(abr, dtype=np.float64)
    rbr = np.asarray(rbr, dtype=np.float64)
    if abr.shape != rbr.shape:
        raise ValueError(f"length mismatch: {abr.shape} vs {rbr.shape}")
    return WordScores(abr=abr, rbr=rbr)


def top_k_select(
    scores: WordScores, k: int, eligible: Optional[Callable[[int], bool]] = None
) -> RankedTargets:
    """Pick the k highest-fused eligible word indices (ties: lower index)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    fused = scores.fused
    candidates = [i for i in range(len(fused)) if eligible is None or eligible(i)]
    candidates.sort(key=lambda i: (-fused[i], i))
    return RankedTargets(indices=candidates[:k], k_requested=k)
