"""Token self-information from a log-probability backend, and unit aggregation."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .backends import BackendError, CacheKey, LogprobProvider, ProviderToken, ScoreCache, TilingError, check_tiling
from .model import ByteIndex, LexicalUnit, ScoringMode, Span, Token, to_bits
from .segmentation import AlignmentError

log = logging.getLogger(__name__)

__all__ = [
    "ScoringError",
    "aggregate_units",
    "fetch_request",
    "score_tokens",
    "sentence_entropy",
    "sentence_perplexity",
    "to_bits",
]

DEFAULT_PARALLELISM = 4
FALLBACK_BITS = 1.0


class ScoringError(RuntimeError):
    def __init__(self, sentence_index: int, cause: BaseException) -> None:
        super().__init__(f"scoring failed for sentence {sentence_index}: {cause}")
        self.sentence_index = sentence_index
        self.cause = cause


@dataclass(frozen=True)
class _Request:
    index: int
    offset: int
    text: str


def fetch_request(
    provider: LogprobProvider, text: str, mode: ScoringMode, cache: Optional[ScoreCache] = None
) -> list[ProviderToken]:
    key = CacheKey.for_request(provider.model_id, mode.value, text) if cache is not None else None
    if key is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    tokens = provider.fetch(text)
    check_tiling(text, tokens)
    if key is not None:
        cache.put(key, tokens)
    return tokens


def _fold_empty(tokens: Sequence[ProviderToken]) -> list[ProviderToken]:
    """Drop zero-width tokens, adding their log-probability to a neighbour."""
    out: list[ProviderToken] = []
    carry = 0.0
    for tok in tokens:
        if not tok.text:
            if tok.logprob_nat is not None:
                carry += tok.logprob_nat
            continue
        lp = tok.logprob_nat
        if carry and lp is not None:
            lp += carry
            carry = 0.0
        out.append(replace(tok, logprob_nat=lp) if lp != tok.logprob_nat else tok)
    if carry and out and out[-1].logprob_nat is not None:
        out[-1] = replace(out[-1], logprob_nat=out[-1].logprob_nat + carry)
    return out


def _split_by_sentences(
    span: Span, logprob: Optional[float], sentences: Sequence[Span], first: int
) -> list[tuple[int, Span, Optional[float]]]:
    """Clip a whole-context token to the sentences it touches.

    The piece holding most bytes keeps the log-probability; any other piece
    gets 0.0 (zero bits) so the token's information is counted exactly once.
    Bytes between sentences are not part of any unit and are discarded.
    """
    pieces = []
    s = first
    while s < len(sentences) and sentences[s].start < span.end:
        lo, hi = max(span.start, sentences[s].start), min(span.end, sentences[s].end)
        if lo < hi:
            pieces.append((s, Span(lo, hi)))
        s += 1
    if not pieces:
        return []
    keeper = max(range(len(pieces)), key=lambda k: (len(pieces[k][1]), -k))
    return [(si, sp, logprob if k == keeper else 0.0) for k, (si, sp) in enumerate(pieces)]


def score_tokens(
    source: str,
    sentence_spans: Sequence[Span],
    provider: LogprobProvider,
    mode: ScoringMode = ScoringMode.SENTENCE_WISE,
    *,
    cache: Optional[ScoreCache] = None,
    max_parallel: int = DEFAULT_PARALLELISM,
) -> list[Token]:
    """Score every token of the sentences, returning absolute-offset tokens.

    In sentence-wise mode each sentence is its own request with no context
    from its neighbours; in whole-context mode one request covers the text
    from the first sentence start to the last sentence end. Missing
    log-probabilities (the first token of a completion request) are imputed
    with the largest self-information among the rest of the sentence, then
    the document mean, then one bit.
    """
    if not sentence_spans:
        return []
    index = ByteIndex(source)
    if mode is ScoringMode.SENTENCE_WISE:
        requests = [_Request(i, s.start, index.slice(s)) for i, s in enumerate(sentence_spans)]
    else:
        region = Span(sentence_spans[0].start, sentence_spans[-1].end)
        requests = [_Request(0, region.start, index.slice(region))]

    def run(req: _Request) -> list[ProviderToken]:
        try:
            return fetch_request(provider, req.text, mode, cache)
        except TilingError as exc:
            raise AlignmentError(f"sentence {req.index}: {exc}") from exc
        except BackendError as exc:
            raise ScoringError(req.index, exc) from exc

    if max_parallel > 1 and len(requests) > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            responses = list(pool.map(run, requests))
    else:
        responses = [run(r) for r in requests]

    # (sentence index, absolute span, logprob) in document order
    raw: list[tuple[int, Span, Optional[float]]] = []
    for req, resp in zip(requests, responses):
        for ptok in _fold_empty(resp):
            span = ptok.span.shift(req.offset)
            if mode is ScoringMode.SENTENCE_WISE:
                raw.append((req.index, span, ptok.logprob_nat))
            else:
                first = raw[-1][0] if raw else 0
                raw.extend(_split_by_sentences(span, ptok.logprob_nat, sentence_spans, first))

    present = [to_bits(lp) for _, _, lp in raw if lp is not None]
    doc_mean = math.fsum(present) / len(present) if present else FALLBACK_BITS
    by_sentence: dict[int, list[float]] = {}
    for si, _, lp in raw:
        if lp is not None:
            by_sentence.setdefault(si, []).append(to_bits(lp))

    tokens: list[Token] = []
    for si, span, lp in raw:
        text = index.slice(span)
        if lp is not None:
            tokens.append(Token.from_logprob(span, text, lp))
            continue
        others = by_sentence.get(si)
        bits = max(others) if others else doc_mean
        tokens.append(Token(span, text, None, bits))
    return tokens


def aggregate_units(tokens: Sequence[Token], units: Sequence[LexicalUnit]) -> list[LexicalUnit]:
    """Unit self-information is the sum over its tokens."""
    return [
        replace(u, self_info_bits=math.fsum(t.self_info_bits for t in tokens[u.token_range[0] : u.token_range[1]]))
        for u in units
    ]


def sentence_entropy(tokens: Sequence[Token]) -> float:
    """Mean self-information in bits per token."""
    if not tokens:
        raise ValueError("entropy of an empty sentence is undefined")
    return math.fsum(t.self_info_bits for t in tokens) / len(tokens)


def sentence_perplexity(tokens: Sequence[Token]) -> float:
    return 2.0 ** sentence_entropy(tokens)
