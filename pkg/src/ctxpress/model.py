"""Shared data model: byte spans, scored tokens, lexical units and results.

All spans are byte offsets into the UTF-8 encoding of the source text. Every
type is a frozen dataclass; nothing is mutated after construction.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

LN2 = math.log(2.0)

SUM_RTOL = 1e-9
CONVERSION_RTOL = 1e-12


class SpanError(ValueError):
    """A span is out of bounds or splits a multi-byte character."""


class UnitKind(str, enum.Enum):
    TOKEN = "token"
    PHRASE = "phrase"
    SENTENCE = "sentence"


class ScoringMode(str, enum.Enum):
    SENTENCE_WISE = "sentence_wise"
    WHOLE_CONTEXT = "whole_context"


class Joiner(str, enum.Enum):
    SOURCE_WHITESPACE = "source_whitespace"
    SINGLE_SPACE = "single_space"


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise SpanError(f"invalid span [{self.start},{self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "Span") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def shift(self, offset: int) -> "Span":
        return Span(self.start + offset, self.end + offset)

    def to_list(self) -> list[int]:
        return [self.start, self.end]

    @classmethod
    def from_list(cls, pair: Sequence[int]) -> "Span":
        if len(pair) != 2:
            raise SpanError(f"span must have two elements, got {pair!r}")
        return cls(int(pair[0]), int(pair[1]))


def _is_continuation(byte: int) -> bool:
    return byte & 0xC0 == 0x80


def check_span(data: bytes, span: Span) -> None:
    if span.end > len(data):
        raise SpanError(f"span [{span.start},{span.end}) exceeds length {len(data)}")
    for pos in (span.start, span.end):
        if pos < len(data) and _is_continuation(data[pos]):
            raise SpanError(f"offset {pos} is not on a character boundary")


def slice_text(source: str | bytes, span: Span) -> str:
    """Return the exact substring of ``source`` covered by a byte span.

    >>> slice_text("abcdef", Span(1, 4))
    'bcd'
    """
    data = source.encode("utf-8") if isinstance(source, str) else source
    check_span(data, span)
    return data[span.start : span.end].decode("utf-8")


def span_of(source: str) -> Span:
    return Span(0, len(source.encode("utf-8")))


class ByteIndex:
    """Bidirectional char/byte offset map for one string."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.data = text.encode("utf-8")
        offsets = [0]
        total = 0
        for ch in text:
            total += len(ch.encode("utf-8"))
            offsets.append(total)
        self._char_to_byte = offsets
        self._byte_to_char = {b: i for i, b in enumerate(offsets)}

    def byte(self, char_offset: int) -> int:
        return self._char_to_byte[char_offset]

    def char(self, byte_offset: int) -> int:
        try:
            return self._byte_to_char[byte_offset]
        except KeyError:
            raise SpanError(f"offset {byte_offset} is not on a character boundary") from None

    def span(self, char_start: int, char_end: int) -> Span:
        return Span(self._char_to_byte[char_start], self._char_to_byte[char_end])

    def slice(self, span: Span) -> str:
        return self.text[self.char(span.start) : self.char(span.end)]


def to_bits(logprob_nat: float) -> float:
    """Convert a natural-log probability into self-information in bits."""
    if logprob_nat > 0 or math.isnan(logprob_nat):
        raise ValueError(f"log-probability must be <= 0, got {logprob_nat}")
    return -logprob_nat / LN2 if logprob_nat else 0.0


@dataclass(frozen=True)
class Token:
    span: Span
    text: str
    logprob_nat: Optional[float]
    self_info_bits: float

    @classmethod
    def from_logprob(cls, span: Span, text: str, logprob_nat: float) -> "Token":
        return cls(span, text, logprob_nat, to_bits(logprob_nat))


@dataclass(frozen=True)
class LexicalUnit:
    kind: UnitKind
    span: Span
    token_range: tuple[int, int] = (0, 0)
    self_info_bits: float = 0.0

    @property
    def n_tokens(self) -> int:
        return self.token_range[1] - self.token_range[0]


@dataclass(frozen=True)
class ScoredDocument:
    source: str
    tokens: tuple[Token, ...]
    units: tuple[LexicalUnit, ...]
    sentence_spans: tuple[Span, ...]
    model_id: str
    scoring_mode: ScoringMode

    def unit_text(self, index: int) -> str:
        return slice_text(self.source, self.units[index].span)

    def region(self) -> Span:
        """Byte range from the first sentence start to the last sentence end."""
        if not self.sentence_spans:
            return Span(0, 0)
        return Span(self.sentence_spans[0].start, self.sentence_spans[-1].end)


@dataclass(frozen=True)
class CompressionConfig:
    reduction_ratio_p: float = 50.0
    unit_kind: UnitKind = UnitKind.PHRASE
    scoring_mode: ScoringMode = ScoringMode.SENTENCE_WISE
    percentile_method: str = "linear"
    seed: int = 0
    joiner: Joiner = Joiner.SOURCE_WHITESPACE

    def __post_init__(self) -> None:
        if not 0.0 <= self.reduction_ratio_p <= 100.0:
            raise ValueError(f"reduction_ratio_p must be in [0, 100], got {self.reduction_ratio_p}")
        if self.percentile_method != "linear":
            raise ValueError("only linear percentile interpolation is supported")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class CompressionStats:
    units_total: int
    units_retained: int
    tokens_total: int
    tokens_retained: int
    chars_total: int
    chars_retained: int

    @property
    def token_retention(self) -> float:
        return self.tokens_retained / self.tokens_total if self.tokens_total else 0.0


@dataclass(frozen=True)
class CompressionResult:
    retained_unit_indices: tuple[int, ...]
    compressed_text: str
    threshold_bits: float
    stats: CompressionStats = field(compare=True)


# -- validation ---------------------------------------------------------------


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def validate_document(doc: ScoredDocument) -> list[str]:
    """Check every data-model invariant; returns violations, empty when valid."""
    problems: list[str] = []
    data = doc.source.encode("utf-8")

    def span_ok(what: str, span: Span) -> bool:
        try:
            check_span(data, span)
        except SpanError as exc:
            problems.append(f"{what} span invalid: {exc}")
            return False
        return True

    for i, span in enumerate(doc.sentence_spans):
        span_ok(f"sentence {i}", span)
        if i and span.start < doc.sentence_spans[i - 1].end:
            problems.append(f"sentences overlap at index {i}")

    for i, tok in enumerate(doc.tokens):
        if not span_ok(f"token {i}", tok.span):
            continue
        if data[tok.span.start : tok.span.end].decode("utf-8") != tok.text:
            problems.append(f"token {i} text does not match source")
        if tok.self_info_bits < 0 or math.isnan(tok.self_info_bits):
            problems.append(f"token {i} self-information negative")
        if tok.logprob_nat is not None:
            if tok.logprob_nat > 0:
                problems.append(f"token {i} log-probability positive")
            elif not _close(tok.self_info_bits, -tok.logprob_nat / LN2, CONVERSION_RTOL):
                problems.append(f"token {i} bit conversion inconsistent")
        if i and tok.span.start < doc.tokens[i - 1].span.end:
            problems.append(f"tokens overlap at index {i}")

    # tokens must tile the union of sentence spans
    covered = sum(len(t.span) for t in doc.tokens)
    expected = sum(len(s) for s in doc.sentence_spans)
    inside = all(any(s.start <= t.span.start and t.span.end <= s.end for s in doc.sentence_spans) for t in doc.tokens)
    if covered != expected or not inside:
        problems.append("tokens do not tile the sentence spans")

    n_tokens = len(doc.tokens)
    next_token = 0
    for i, unit in enumerate(doc.units):
        span_ok(f"unit {i}", unit.span)
        if i and unit.span.start < doc.units[i - 1].span.end:
            problems.append(f"units overlap at index {i}")
        lo, hi = unit.token_range
        if not 0 <= lo < hi <= n_tokens:
            problems.append(f"unit {i} token range invalid")
            continue
        if lo != next_token:
            problems.append(f"unit {i} token range not contiguous with previous unit")
        next_token = hi
        total = math.fsum(t.self_info_bits for t in doc.tokens[lo:hi])
        if unit.self_info_bits < 0 or not _close(unit.self_info_bits, total, SUM_RTOL):
            problems.append(f"unit {i} additivity violated")
    if doc.units and next_token != n_tokens:
        problems.append("units do not cover every token")
    return problems


# -- serialization ------------------------------------------------------------


def _token_to_dict(tok: Token) -> dict[str, Any]:
    return {
        "span": tok.span.to_list(),
        "text": tok.text,
        "logprob_nat": tok.logprob_nat,
        "self_info_bits": tok.self_info_bits,
    }


def _unit_to_dict(unit: LexicalUnit) -> dict[str, Any]:
    return {
        "kind": unit.kind.value,
        "span": unit.span.to_list(),
        "token_range": list(unit.token_range),
        "self_info_bits": unit.self_info_bits,
    }


def document_to_dict(doc: ScoredDocument) -> dict[str, Any]:
    return {
        "source": doc.source,
        "tokens": [_token_to_dict(t) for t in doc.tokens],
        "units": [_unit_to_dict(u) for u in doc.units],
        "sentence_spans": [s.to_list() for s in doc.sentence_spans],
        "model_id": doc.model_id,
        "scoring_mode": doc.scoring_mode.value,
    }


def document_from_dict(obj: dict[str, Any]) -> ScoredDocument:
    return ScoredDocument(
        source=obj["source"],
        tokens=tuple(
            Token(Span.from_list(t["span"]), t["text"], t["logprob_nat"], float(t["self_info_bits"]))
            for t in obj["tokens"]
        ),
        units=tuple(
            LexicalUnit(
                UnitKind(u["kind"]),
                Span.from_list(u["span"]),
                (int(u["token_range"][0]), int(u["token_range"][1])),
                float(u["self_info_bits"]),
            )
            for u in obj["units"]
        ),
        sentence_spans=tuple(Span.from_list(s) for s in obj["sentence_spans"]),
        model_id=obj["model_id"],
        scoring_mode=ScoringMode(obj["scoring_mode"]),
    )


def result_to_dict(result: CompressionResult) -> dict[str, Any]:
    threshold = result.threshold_bits
    s = result.stats
    return {
        "retained_unit_indices": list(result.retained_unit_indices),
        "compressed_text": result.compressed_text,
        "threshold_bits": None if math.isnan(threshold) else threshold,
        "stats": {
            "units_total": s.units_total,
            "units_retained": s.units_retained,
            "tokens_total": s.tokens_total,
            "tokens_retained": s.tokens_retained,
            "chars_total": s.chars_total,
            "chars_retained": s.chars_retained,
        },
    }


def result_from_dict(obj: dict[str, Any]) -> CompressionResult:
    threshold = obj["threshold_bits"]
    return CompressionResult(
        retained_unit_indices=tuple(int(i) for i in obj["retained_unit_indices"]),
        compressed_text=obj["compressed_text"],
        threshold_bits=math.nan if threshold is None else float(threshold),
        stats=CompressionStats(**{k: int(v) for k, v in obj["stats"].items()}),
    )


def dumps(obj: dict[str, Any]) -> str:
    """Canonical single-line JSON; floats keep their shortest round-trip repr."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_jsonl(path, records: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_jsonl(path) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
