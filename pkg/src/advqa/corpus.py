"""Dataset ingestion, word-level tokenization and answer normalization.

All character offsets in this package are Unicode scalar-value indices into
the original string (i.e. plain Python string indices), never byte offsets.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

__all__ = [
    "QueryKind",
    "QAExample",
    "Span",
    "TokenizedContext",
    "DatasetError",
    "load_dataset",
    "tokenize",
    "splice",
    "delete_word",
    "normalize_answer",
    "DATASET_FORMATS",
]


class QueryKind(Enum):
    BOOLEAN = "boolean"
    INFORMATIVE = "informative"


class DatasetError(ValueError):
    """Raised for malformed dataset files; message carries a record locus."""


@dataclass(frozen=True)
class QAExample:
    id: str
    question: str
    context: str
    references: list[str]
    kind: QueryKind
    unanswerable: bool = False

    def __post_init__(self):
        if not self.context.strip():
            raise DatasetError(f"record {self.id!r}: context is empty")
        if not self.references and not self.unanswerable:
            raise DatasetError(f"record {self.id!r}: no reference answers")
        if self.kind is QueryKind.BOOLEAN:
            for ref in self.references:
                if normalize_answer(ref) not in ("yes", "no"):
                    raise DatasetError(
                        f"record {self.id!r}: boolean reference {ref!r} does not "
                        f"normalize to yes/no"
                    )


@dataclass(frozen=True)
class Span:
    text: str
    start: int
    end: int
    is_word: bool = True


@dataclass(frozen=True)
class TokenizedContext:
    """A context string plus its word spans.

    ``words`` contains the word spans only; ``all_spans`` additionally holds
    every other non-whitespace run (punctuation etc.), in document order.
    """

    source: str
    words: list[Span]
    all_spans: list[Span] = field(repr=False, default_factory=list)


# A word is a maximal run of Unicode alphanumerics, allowing apostrophes and
# hyphens strictly inside the run.  [^\W_] is "alphanumeric" (\w minus _).
_WORD_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*", re.UNICODE)
_NONSPACE_RE = re.compile(r"\S+")


def tokenize(text: str) -> TokenizedContext:
    """Split ``text`` into word and non-word spans with exact offsets."""
    words = []
    all_spans = []
    cursor = 0

    def flush_gap(upto):
        # non-whitespace runs between words become non-word spans
        for m in _NONSPACE_RE.finditer(text, cursor, upto):
            all_spans.append(Span(m.group(), m.start(), m.end(), is_word=False))

    for m in _WORD_RE.finditer(text):
        flush_gap(m.start())
        span = Span(m.group(), m.start(), m.end(), is_word=True)
        words.append(span)
        all_spans.append(span)
        cursor = m.end()
    flush_gap(len(text))
    return TokenizedContext(source=text, words=words, all_spans=all_spans)


def splice(ctx: TokenizedContext, word_index: int, replacement: str) -> str:
    """Return ``ctx.source`` with exactly one word replaced."""
    if not 0 <= word_index < len(ctx.words):
        raise IndexError(f"word_index {word_index} out of range (n={len(ctx.words)})")
    if not replacement or any(c.isspace() for c in replacement):
        raise ValueError(f"replacement must be non-empty and whitespace-free: {replacement!r}")
    w = ctx.words[word_index]
    return ctx.source[: w.start] + replacement + ctx.source[w.end :]


def delete_word(ctx: TokenizedContext, word_index: int) -> str:
    """Remove a word plus one adjacent whitespace character.

    The whitespace character after the word is removed if present, otherwise
    the one before; all other characters are preserved byte-for-byte.
    """
    if not 0 <= word_index < len(ctx.words):
        raise IndexError(f"word_index {word_index} out of range (n={len(ctx.words)})")
    w = ctx.words[word_index]
    src = ctx.source
    start, end = w.start, w.end
    if end < len(src) and src[end].isspace():
        end += 1
    elif start > 0 and src[start - 1].isspace():
        start -= 1
    return src[:start] + src[end:]


_PUNCT = set(string.punctuation)
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    """SQuAD-style answer normalization.

    Lowercase, strip ASCII punctuation, drop standalone articles (a/an/the),
    collapse whitespace.  Idempotent.
    """
    text = text.lower()
    text = "".join(c for c in text if c not in _PUNCT)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


DATASET_FORMATS = ("squad-v1", "squad-v2", "boolq-jsonl")


def load_dataset(path, format: str) -> list[QAExample]:
    """Load a dataset file into QAExamples.

    squad-v1 / squad-v2: the nested data->paragraphs->qas JSON layout; v2
    ``is_impossible`` records become unanswerable examples with no references.
    boolq-jsonl: one JSON object per line with question/passage/answer fields.

    A ``kind: "boolean"`` extension field on a squad qas record (emitted by
    this package's corpus writers) marks the example as a boolean query.
    """
    path = Path(path)
    if format not in DATASET_FORMATS:
        raise ValueError(f"unknown dataset format {format!r}; expected one of {DATASET_FORMATS}")
    if format == "boolq-jsonl":
        return _load_boolq_jsonl(path)
    return _load_squad(path, v2=(format == "squad-v2"))


def _require(record: dict, key: str, locus: str):
    if key not in record:
        raise DatasetError(f"{locus}: missing required field {key!r}")
    return record[key]


def _load_squad(path: Path, v2: bool) -> list[QAExample]:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    data = _require(doc, "data", str(path))
    examples = []
    for ai, article in enumerate(data):
        for pi, para in enumerate(article.get("paragraphs", [])):
            locus = f"{path}: article {ai}, paragraph {pi}"
            context = _require(para, "context", locus)
            for qa in _require(para, "qas", locus):
                qa_locus = f"{locus}, qa {qa.get('id', '?')}"
                qid = str(_require(qa, "id", qa_locus))
                question = _require(qa, "question", qa_locus)
                impossible = bool(qa.get("is_impossible", False)) if v2 else False
                if impossible:
                    references = []
                else:
                    answers = _require(qa, "answers", qa_locus)
                    references = [str(_require(a, "text", qa_locus)) for a in answers]
                kind = QueryKind.BOOLEAN if qa.get("kind") == "boolean" else QueryKind.INFORMATIVE
                examples.append(
                    QAExample(
                        id=qid,
                        question=question,
                        context=context,
                        references=references,
                        kind=kind,
                        unanswerable=impossible,
                    )
                )
    return examples


def _load_boolq_jsonl(path: Path) -> list[QAExample]:
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}: line {lineno}: malformed JSON: {e.msg}") from e
            locus = f"{path}: line {lineno}"
            question = _require(record, "question", locus)
            passage = _require(record, "passage", locus)
            answer = _require(record, "answer", locus)
            examples.append(
                QAExample(
                    id=str(record.get("id", f"boolq-{lineno}")),
                    question=question,
                    context=passage,
                    references=["yes" if answer else "no"],
                    kind=QueryKind.BOOLEAN,
                )
            )
    return examples
