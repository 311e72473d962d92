"""Candidate generation and adversary selection.

The attack pipeline: rank context words, mask each target and ask the fill
model for substitutions, apply them under a search strategy, and keep the
candidate that flips the model's answer with the largest logit gap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .corpus import QAExample, QueryKind, TokenizedContext, normalize_answer, splice, tokenize
from .gateway import AnswerReply, CountingGateway, ModelGateway, ProtocolError
from .ranking import RankedTargets, WordScores, abr_scores, fuse, rbr_scores, top_k_select

__all__ = [
    "Mode",
    "Strategy",
    "AttackConfig",
    "Substitution",
    "CandidateContext",
    "AttackOutcome",
    "MASK_TOKEN",
    "propose_synonyms",
    "generate_single_word_candidates",
    "select_adversary",
    "attack",
    "apply_substitutions",
    "answer_gap",
]

MASK_TOKEN = "[MASK]"
_FILL_HEADROOM = 4  # request a few extra candidates to survive filtering


class Mode(Enum):
    ABR = "abr"
    RBR = "rbr"
    HRF = "hrf"


class Strategy(Enum):
    SINGLE_WORD = "single"
    GREEDY_SEQUENTIAL = "greedy"
    JOINT_BEST = "joint"


@dataclass(frozen=True)
class AttackConfig:
    top_k: int = 5
    d: int = 2
    mode: Mode = Mode.HRF
    strategy: Strategy = Strategy.GREEDY_SEQUENTIAL
    signed_rbr: bool = False
    exclude_answer_words: bool = False
    early_stop: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.top_k < 0 or self.d < 0:
            raise ValueError("top_k and d must be >= 0")


@dataclass(frozen=True)
class Substitution:
    word_index: int
    original: str
    candidate: str
    mlm_score: float


@dataclass(frozen=True)
class CandidateContext:
    text: str
    substitutions: list[Substitution]


@dataclass(frozen=True)
class AttackOutcome:
    success: bool
    original_answer: str
    best: Optional[CandidateContext] = None
    attacked_answer: Optional[str] = None
    gap: Optional[float] = None
    queries_used: int = 0
    elapsed: float = 0.0
    mode: Optional[Mode] = None
    strategy: Optional[Strategy] = None


def apply_substitutions(ctx: TokenizedContext, substitutions) -> str:
    """Apply disjoint word substitutions to the original context.

    Splicing in descending word order keeps every original offset valid.
    """
    text = ctx.source
    for sub in sorted(substitutions, key=lambda s: -s.word_index):
        w = ctx.words[sub.word_index]
        text = text[: w.start] + sub.candidate + text[w.end :]
    return text


def _keep_candidate(token: str, original: str) -> bool:
    if not token or token.lower() == original.lower():
        return False
    if token.startswith("##"):  # subword continuation fragment
        return False
    if any(c.isspace() for c in token):
        return False
    if not any(c.isalnum() for c in token):
        return False
    return True


def propose_synonyms(
    ctx: TokenizedContext, word_index: int, d: int, gateway: ModelGateway
) -> list[Substitution]:
    """Mask one word and return up to d usable fill-model substitutions.

    Identity tokens (case-insensitive), pure punctuation, subword continuation
    fragments and whitespace-bearing tokens are filtered out.
    """
    if d <= 0:
        return []
    original = ctx.words[word_index].text
    masked = splice(ctx, word_index, MASK_TOKEN)
    candidates = gateway.fill_mask(masked, original, d + _FILL_HEADROOM)
    candidates = sorted(candidates, key=lambda c: -c.score)
    out = []
    for cand in candidates:
        if _keep_candidate(cand.token, original):
            out.append(
                Substitution(
                    word_index=word_index,
                    original=original,
                    candidate=cand.token,
                    mlm_score=cand.score,
                )
            )
            if len(out) == d:
                break
    return out


def generate_single_word_candidates(
    ctx: TokenizedContext, targets: RankedTargets, d: int, gateway: ModelGateway
) -> list[CandidateContext]:
    """One CandidateContext per (target, synonym), target rank major."""
    out = []
    for index in targets.indices:
        for sub in propose_synonyms(ctx, index, d, gateway):
            out.append(CandidateContext(text=splice(ctx, index, sub.candidate), substitutions=[sub]))
    return out


def answer_gap(original: AnswerReply, candidate: AnswerReply, kind: QueryKind) -> float:
    """Logit gap of a candidate reply relative to the original one.

    Informative: candidate answer score minus original answer score.
    Boolean: erosion of the original answer class's (yes - no) margin,
    original minus candidate, so larger means the original decision weakened.
    """
    if kind is QueryKind.BOOLEAN:
        if original.boolean_scores is None or candidate.boolean_scores is None:
            raise ProtocolError("boolean query reply is missing boolean_scores")
        cls = normalize_answer(original.answer_text)
        other = "no" if cls == "yes" else "yes"
        orig_margin = original.boolean_scores[cls] - original.boolean_scores[other]
        cand_margin = candidate.boolean_scores[cls] - candidate.boolean_scores[other]
        return orig_margin - cand_margin
    return candidate.answer_score - original.answer_score


def _flips(original: AnswerReply, candidate: AnswerReply) -> bool:
    return normalize_answer(candidate.answer_text) != normalize_answer(original.answer_text)


def select_adversary(
    question: str,
    ctx: TokenizedContext,
    original_reply: AnswerReply,
    candidates: list[CandidateContext],
    kind: QueryKind,
    gateway: ModelGateway,
) -> AttackOutcome:
    """Evaluate all candidates and keep the max-gap flipping one.

    If no candidate flips the answer, the overall max-gap candidate is
    returned with success=False for diagnostics.  Ties keep the earlier
    candidate.
    """
    best_flip = None  # (gap, candidate, reply)
    best_any = None
    queries = 0
    for cand in candidates:
        reply = gateway.answer(question, cand.text, kind)
        queries += 1
        gap = answer_gap(original_reply, reply, kind)
        if best_any is None or gap > best_any[0]:
            best_any = (gap, cand, reply)
        if _flips(original_reply, reply) and (best_flip is None or gap > best_flip[0]):
            best_flip = (gap, cand, reply)
    chosen = best_flip or best_any
    if chosen is None:
        return AttackOutcome(
            success=False, original_answer=original_reply.answer_text, queries_used=queries
        )
    gap, cand, reply = chosen
    return AttackOutcome(
        success=best_flip is not None,
        original_answer=original_reply.answer_text,
        best=cand,
        attacked_answer=reply.answer_text,
        gap=gap,
        queries_used=queries,
    )


def _greedy_sequential(question, ctx, original_reply, targets, config, gateway, kind):
    accepted: list[Substitution] = []
    running_gap = -np.inf
    running_reply = None
    for index in targets.indices:
        step_best = None  # (gap, sub, reply)
        for sub in propose_synonyms(ctx, index, config.d, gateway):
            text = apply_substitutions(ctx, accepted + [sub])
            reply = gateway.answer(question, text, kind)
            gap = answer_gap(original_reply, reply, kind)
            if step_best is None or gap > step_best[0]:
                step_best = (gap, sub, reply)
        if step_best is not None and step_best[0] > running_gap:
            running_gap, accepted_sub, running_reply = step_best
            accepted.append(accepted_sub)
            if config.early_stop and _flips(original_reply, running_reply):
                break
    if not accepted:
        return AttackOutcome(success=False, original_answer=original_reply.answer_text)
    best = CandidateContext(apply_substitutions(ctx, accepted), accepted)
    return AttackOutcome(
        success=_flips(original_reply, running_reply),
        original_answer=original_reply.answer_text,
        best=best,
        attacked_answer=running_reply.answer_text,
        gap=running_gap,
    )


def _joint_best(question, ctx, original_reply, targets, config, gateway, kind):
    per_target_best: list[Substitution] = []
    single_outcome = None  # best single-substitution outcome, via exhaustive scan
    best_single_flip = None
    best_any = None
    for index in targets.indices:
        target_best = None  # (gap, sub)
        for sub in propose_synonyms(ctx, index, config.d, gateway):
            cand = CandidateContext(splice(ctx, index, sub.candidate), [sub])
            reply = gateway.answer(question, cand.text, kind)
            gap = answer_gap(original_reply, reply, kind)
            if target_best is None or gap > target_best[0]:
                target_best = (gap, sub)
            if best_any is None or gap > best_any[0]:
                best_any = (gap, cand, reply)
            if _flips(original_reply, reply) and (best_single_flip is None or gap > best_single_flip[0]):
                best_single_flip = (gap, cand, reply)
        if target_best is not None:
            per_target_best.append(target_best[1])
    if not per_target_best:
        return AttackOutcome(success=False, original_answer=original_reply.answer_text)
    joint = CandidateContext(apply_substitutions(ctx, per_target_best), per_target_best)
    joint_reply = gateway.answer(question, joint.text, kind)
    joint_gap = answer_gap(original_reply, joint_reply, kind)
    if _flips(original_reply, joint_reply):
        chosen = (joint_gap, joint, joint_reply, True)
    elif best_single_flip is not None:
        chosen = (*best_single_flip, True)
    else:
        # diagnostic: max gap among everything evaluated
        if best_any is None or joint_gap > best_any[0]:
            best_any = (joint_gap, joint, joint_reply)
        chosen = (*best_any, False)
    gap, cand, reply, success = chosen
    return AttackOutcome(
        success=success,
        original_answer=original_reply.answer_text,
        best=cand,
        attacked_answer=reply.answer_text,
        gap=gap,
    )


def _compute_scores(question, ctx, answer, config, gateway) -> WordScores:
    n = len(ctx.words)
    if config.mode is Mode.ABR:
        s = abr_scores(question, ctx, gateway)
        return WordScores(abr=s, rbr=np.zeros(n))
    if config.mode is Mode.RBR:
        s = rbr_scores(question, ctx, answer, gateway, signed=config.signed_rbr)
        return WordScores(abr=np.zeros(n), rbr=s)
    return fuse(
        abr_scores(question, ctx, gateway),
        rbr_scores(question, ctx, answer, gateway, signed=config.signed_rbr),
    )


def _eligibility(example: QAExample, ctx: TokenizedContext, config: AttackConfig):
    if not config.exclude_answer_words:
        return None
    banned = set()
    for ref in example.references:
        banned.update(normalize_answer(ref).split())
    return lambda i: normalize_answer(ctx.words[i].text) not in banned


def attack(example: QAExample, config: AttackConfig, gateway: ModelGateway) -> AttackOutcome:
    """Run the full pipeline on one example and return the best adversary."""
    started = time.perf_counter()
    counter = CountingGateway(gateway)
    ctx = tokenize(example.context)
    original_reply = counter.answer(example.question, example.context, example.kind)

    outcome = AttackOutcome(success=False, original_answer=original_reply.answer_text)
    if ctx.words and config.top_k > 0 and config.d > 0:
        scores = _compute_scores(example.question, ctx, original_reply.answer_text, config, counter)
        targets = top_k_select(scores, config.top_k, _eligibility(example, ctx, config))
        if config.strategy is Strategy.SINGLE_WORD:
            candidates = generate_single_word_candidates(ctx, targets, config.d, counter)
            outcome = select_adversary(
                example.question, ctx, original_reply, candidates, example.kind, counter
            )
        elif config.strategy is Strategy.GREEDY_SEQUENTIAL:
            outcome = _greedy_sequential(
                example.question, ctx, original_reply, targets, config, counter, example.kind
            )
        else:
            outcome = _joint_best(
                example.question, ctx, original_reply, targets, config, counter, example.kind
            )
    return replace(
        outcome,
        queries_used=counter.calls,
        elapsed=time.perf_counter() - started,
        mode=config.mode,
        strategy=config.strategy,
    )
