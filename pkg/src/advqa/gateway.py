"""Model access layer: capability interface, wire-protocol client, errors.

Every victim or auxiliary model is reached through the same small capability
surface (``ModelGateway``), either in-process (``advqa.mock.MockGateway``) or
over the HTTP JSON protocol (``RemoteGateway``).  The two are interchangeable:
the whole attack pipeline and its tests run against either.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

import numpy as np
import requests

from .corpus import QueryKind, normalize_answer

__all__ = [
    "AnswerReply",
    "SubwordScore",
    "AttentionProfile",
    "MaskCandidate",
    "ModelGateway",
    "GatewayError",
    "GatewayUnreachableError",
    "RemoteModelError",
    "ProtocolError",
    "RemoteGateway",
    "CountingGateway",
    "kind_to_wire",
]


class GatewayError(Exception):
    """Base class for gateway failures."""


class GatewayUnreachableError(GatewayError):
    """Transport failed, including one retry."""


class RemoteModelError(GatewayError):
    """The server answered with a non-2xx status."""

    def __init__(self, status: int, body: str):
        super().__init__(f"remote model error (HTTP {status}): {body[:500]}")
        self.status = status
        self.body = body


class ProtocolError(GatewayError):
    """The response did not match the wire protocol schema."""


@dataclass(frozen=True)
class AnswerReply:
    answer_text: str
    answer_score: float
    boolean_scores: Optional[dict] = None  # {"yes": float, "no": float}

    def __post_init__(self):
        if self.boolean_scores is not None:
            norm = normalize_answer(self.answer_text)
            if norm not in ("yes", "no"):
                raise ProtocolError(f"boolean answer {self.answer_text!r} is not yes/no")
            argmax = "yes" if self.boolean_scores["yes"] >= self.boolean_scores["no"] else "no"
            if norm != argmax:
                raise ProtocolError(
                    f"boolean answer {norm!r} disagrees with argmax of {self.boolean_scores}"
                )


@dataclass(frozen=True)
class SubwordScore:
    start: int
    end: int
    score: float


@dataclass(frozen=True)
class AttentionProfile:
    """Per-subword attention received, offsets into the context string only."""

    subwords: list[SubwordScore]


@dataclass(frozen=True)
class MaskCandidate:
    token: str
    score: float


@runtime_checkable
class ModelGateway(Protocol):
    """Capability interface to a QA victim plus its auxiliary models.

    Implementations must be deterministic given identical inputs (sampling
    disabled) and safe for concurrent calls.
    """

    def answer(self, question: str, context: str, kind: QueryKind) -> AnswerReply: ...

    def score_answer(self, question: str, context: str, answer: str) -> float: ...

    def attention_profile(self, question: str, context: str) -> AttentionProfile: ...

    def fill_mask(self, masked_text: str, original_word_hint: str, top_d: int) -> list[MaskCandidate]: ...

    def embed(self, text: str) -> np.ndarray: ...

    def perplexity(self, text: str) -> float: ...


def kind_to_wire(kind: QueryKind) -> str:
    return "boolean" if kind is QueryKind.BOOLEAN else "informative"


def _parse_answer_reply(data: dict) -> AnswerReply:
    try:
        scores = data.get("boolean_scores")
        if scores is not None:
            scores = {"yes": float(scores["yes"]), "no": float(scores["no"])}
        return AnswerReply(
            answer_text=str(data["answer_text"]),
            answer_score=float(data["answer_score"]),
            boolean_scores=scores,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"bad /v1/answer response {data!r}: {e}") from e


class RemoteGateway:
    """Wire-protocol client: one HTTP POST per capability call.

    Concurrency is bounded by ``max_inflight``; transport errors are retried
    once before surfacing as GatewayUnreachableError.
    """

    def __init__(self, base_url: str, timeout: float = 30.0, max_inflight: int = 4):
        if "://" not in base_url:
            raise ValueError(f"base_url must include a scheme: {base_url!r}")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._slots = threading.Semaphore(max_inflight)
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        url = self.base_url + path
        with self._slots:
            last = None
            for _ in range(2):  # one retry on transport errors
                try:
                    resp = self._session.post(url, json=payload, timeout=self.timeout)
                    break
                except (requests.ConnectionError, requests.Timeout) as e:
                    last = e
            else:
                raise GatewayUnreachableError(f"cannot reach {url}: {last}") from last
        if not 200 <= resp.status_code < 300:
            raise RemoteModelError(resp.status_code, resp.text)
        try:
            data = resp.json()
        except ValueError as e:
            raise ProtocolError(f"{path}: response is not JSON: {resp.text[:200]}") from e
        if not isinstance(data, dict):
            raise ProtocolError(f"{path}: expected JSON object, got {type(data).__name__}")
        return data

    def answer(self, question, context, kind):
        data = self._post(
            "/v1/answer",
            {"question": question, "context": context, "kind": kind_to_wire(kind)},
        )
        return _parse_answer_reply(data)

    def score_answer(self, question, context, answer):
        data = self._post(
            "/v1/score_answer",
            {"question": question, "context": context, "answer": answer},
        )
        try:
            return float(data["logprob"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad /v1/score_answer response {data!r}") from e

    def attention_profile(self, question, context):
        data = self._post("/v1/attention", {"question": question, "context": context})
        try:
            subwords = [
                SubwordScore(int(s["start"]), int(s["end"]), float(s["score"]))
                for s in data["subwords"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad /v1/attention response {data!r}") from e
        prev_end = 0
        for s in subwords:
            if s.score < 0:
                raise ProtocolError(f"negative attention score in {s}")
            if not (0 <= s.start < s.end <= len(context)) or s.start < prev_end:
                raise ProtocolError(f"subword offsets out of order or out of bounds: {s}")
            prev_end = s.end
        return AttentionProfile(subwords)

    def fill_mask(self, masked_text, original_word_hint, top_d):
        if top_d <= 0:
            return []
        data = self._post(
            "/v1/fill_mask",
            {"masked_text": masked_text, "original_word_hint": original_word_hint, "top_d": top_d},
        )
        try:
            return [MaskCandidate(str(c["token"]), float(c["score"])) for c in data["candidates"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad /v1/fill_mask response {data!r}") from e

    def embed(self, text):
        data = self._post("/v1/embed", {"text": text})
        try:
            return np.asarray(data["vector"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad /v1/embed response {data!r}") from e

    def perplexity(self, text):
        data = self._post("/v1/perplexity", {"text": text})
        try:
            ppl = float(data["ppl"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad /v1/perplexity response {data!r}") from e
        if not ppl > 0:
            raise ProtocolError(f"perplexity must be positive, got {ppl}")
        return ppl

    def health(self) -> dict:
        return self._post("/v1/health", {})

    @property
    def model_ids(self) -> list[str]:
        return list(self.health().get("model_ids", []))


class CountingGateway:
    """Pass-through wrapper that counts capability calls (query budget)."""

    def __init__(self, inner: ModelGateway):
        self._inner = inner
        self._lock = threading.Lock()
        self.calls = 0

    def _bump(self):
        with self._lock:
            self.calls += 1

    def answer(self, question, context, kind):
        self._bump()
        return self._inner.answer(question, context, kind)

    def score_answer(self, question, context, answer):
        self._bump()
        return self._inner.score_answer(question, context, answer)

    def attention_profile(self, question, context):
        self._bump()
        return self._inner.attention_profile(question, context)

    def fill_mask(self, masked_text, original_word_hint, top_d):
        if top_d > 0:
            self._bump()
        return self._inner.fill_mask(masked_text, original_word_hint, top_d)

    def embed(self, text):
        self._bump()
        return self._inner.embed(text)

    def perplexity(self, text):
        self._bump()
        return self._inner.perplexity(text)
