"""Deterministic in-process model used as the offline stand-in victim.

The mock's behavior is exactly specified so that attack components can be
tested against closed-form oracles:

* Let Q be the set of normalized question words.  The relevance of context
  word i is the number of other positions j with |j - i| <= window whose word
  is in Q.
* Informative answers are the max-relevance word (ties: lowest index); the
  answer's log-probability is ln((1 + r_i) / sum_j(1 + r_j)).
* ``score_answer(q, C, a)`` scores the first context word that normalizes to
  a; if a does not occur, the numerator is 0.5.
* Boolean queries: yes-probability is the fraction of question words present
  anywhere in the context ("yes" iff >= 0.5); Q empty counts as 0.
* Attention per word is 1 plus question-word membership, one subword per word.
* ``fill_mask`` looks the hinted word up in the synonym table, falling back to
  ["entity", "item", "thing"]; scores descend 0.9, 0.8, 0.7, ...
* ``embed`` is a 64-bin crc32-hashed bag of lowercased words; ``perplexity``
  is (#distinct words)^2 / #words (1.0 for empty text).

Everything is pure and thread-safe; identical inputs give identical outputs.
"""

from __future__ import annotations

import json
import math
import zlib
from functools import lru_cache
from pathlib import Path

import numpy as np

from .corpus import QueryKind, normalize_answer, tokenize
from .gateway import AnswerReply, AttentionProfile, MaskCandidate, SubwordScore
from .kernels import hashed_bow, window_relevance

__all__ = ["SynonymTable", "MockGateway", "FALLBACK_SYNONYMS", "EMBED_BINS"]

FALLBACK_SYNONYMS = ("entity", "item", "thing")
EMBED_BINS = 64


class SynonymTable:
    """Case-insensitive word -> synonym-list lookup for the mock's fill-mask."""

    def __init__(self, entries: dict[str, list[str]] | None = None):
        self._entries: dict[str, tuple[str, ...]] = {}
        for word, synonyms in (entries or {}).items():
            self.register(word, synonyms)

    def register(self, word: str, synonyms) -> None:
        self._entries[word.lower()] = tuple(synonyms)

    def lookup(self, word: str) -> tuple[str, ...] | None:
        return self._entries.get(word.lower())

    def to_dict(self) -> dict[str, list[str]]:
        return {w: list(s) for w, s in sorted(self._entries.items())}

    @classmethod
    def from_json_file(cls, path) -> "SynonymTable":
        with open(Path(path), encoding="utf-8") as f:
            return cls(json.load(f))

    def save(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def __len__(self):
        return len(self._entries)


@lru_cache(maxsize=8192)
def _context_words(context: str):
    ctx = tokenize(context)
    norms = tuple(normalize_answer(w.text) for w in ctx.words)
    spans = tuple((w.start, w.end) for w in ctx.words)
    return norms, spans


@lru_cache(maxsize=2048)
def _question_set(question: str) -> frozenset:
    return frozenset(normalize_answer(question).split())


@lru_cache(maxsize=8192)
def _relevance(question: str, context: str, window: int) -> np.ndarray:
    norms, _ = _context_words(context)
    q = _question_set(question)
    in_q = np.fromiter((n in q for n in norms), dtype=np.int64, count=len(norms))
    return window_relevance(in_q, window)


class MockGateway:
    """Offline ModelGateway implementing the mock rules above."""

    model_ids = ["advqa-mock"]

    def __init__(self, lexicon: SynonymTable | None = None, window: int = 2):
        self.lexicon = lexicon if lexicon is not None else SynonymTable()
        self.window = window

    # -- answering ---------------------------------------------------------

    def answer(self, question, context, kind):
        if kind is QueryKind.BOOLEAN:
            return self._answer_boolean(question, context)
        return self._answer_informative(question, context)

    def _answer_informative(self, question, context):
        norms, spans = _context_words(context)
        if not norms:
            return AnswerReply(answer_text="", answer_score=math.log(0.5))
        r = _relevance(question, context, self.window)
        best = int(np.argmax(r))  # argmax takes the lowest index on ties
        text = context[spans[best][0] : spans[best][1]]
        return AnswerReply(answer_text=text, answer_score=self.score_answer(question, context, text))

    def _answer_boolean(self, question, context):
        q = _question_set(question)
        norms, _ = _context_words(context)
        yes = len(q & set(norms)) / len(q) if q else 0.0
        text = "yes" if yes >= 0.5 else "no"
        return AnswerReply(
            answer_text=text,
            answer_score=self.score_answer(question, context, text),
            boolean_scores={"yes": yes, "no": 1.0 - yes},
        )

    def score_answer(self, question, context, answer):
        norms, _ = _context_words(context)
        if not norms:
            return math.log(0.5)
        r = _relevance(question, context, self.window)
        total = float(len(norms) + int(r.sum()))
        target = normalize_answer(answer)
        if target:
            for i, n in enumerate(norms):
                if n == target:
                    return math.log((1.0 + float(r[i])) / total)
        return math.log(0.5 / total)

    # -- auxiliary capabilities --------------------------------------------

    def attention_profile(self, question, context):
        norms, spans = _context_words(context)
        q = _question_set(question)
        subwords = [
            SubwordScore(start, end, 1.0 + (norm in q))
            for norm, (start, end) in zip(norms, spans)
        ]
        return AttentionProfile(subwords)

    def fill_mask(self, masked_text, original_word_hint, top_d):
        if top_d <= 0:
            return []
        tokens = self.lexicon.lookup(original_word_hint) or FALLBACK_SYNONYMS
        return [MaskCandidate(tok, 0.9 - 0.1 * i) for i, tok in enumerate(tokens[:top_d])]

    def embed(self, text):
        words = [w.text.lower() for w in tokenize(text).words]
        bins = np.fromiter(
            (zlib.crc32(w.encode("utf-8")) % EMBED_BINS for w in words),
            dtype=np.int64,
            count=len(words),
        )
        return hashed_bow(bins, EMBED_BINS)

    def perplexity(self, text):
        words = [w.text.lower() for w in tokenize(text).words]
        if not words:
            return 1.0
        return len(set(words)) ** 2 / len(words)
