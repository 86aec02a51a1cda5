"""Provider contract shared by every log-probability backend."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from ..model import Span

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    """A provider could not score a request."""

    retryable = False


class RetryableBackendError(BackendError):
    retryable = True


class ConfigurationError(BackendError):
    """Authentication or configuration problem; retrying will not help."""


class TilingError(BackendError):
    """Provider tokens do not reassemble the request text."""


@dataclass(frozen=True)
class ProviderToken:
    text: str
    logprob_nat: Optional[float]
    span: Span


class LogprobProvider(Protocol):
    model_id: str

    def fetch(self, text: str) -> list[ProviderToken]: ...


def _offsets_consistent(token_texts: Sequence[str], offsets: Sequence[int]) -> bool:
    if len(offsets) != len(token_texts):
        return False
    pos = 0
    for tok, off in zip(token_texts, offsets):
        if off != pos:
            return False
        pos += len(tok)
    return True


def build_tokens(
    text: str,
    token_texts: Sequence[str],
    logprobs: Sequence[Optional[float]],
    char_offsets: Optional[Sequence[int]] = None,
) -> list[ProviderToken]:
    """Turn parallel token/logprob lists into byte-spanned provider tokens.

    Wire offsets are character offsets and only serve as a consistency check;
    spans are always recomputed by sequential matching of the token texts.
    """
    if len(token_texts) != len(logprobs):
        raise TilingError("token and logprob lists differ in length")
    if "".join(token_texts) != text:
        raise TilingError("provider tokens do not concatenate to the request text")
    if char_offsets is not None and not _offsets_consistent(token_texts, char_offsets):
        log.debug("ignoring inconsistent wire offsets")
    out: list[ProviderToken] = []
    byte_pos = 0
    for i, (tok, lp) in enumerate(zip(token_texts, logprobs)):
        if lp is not None:
            lp = float(lp)
            if math.isnan(lp) or lp > 0:
                raise BackendError(f"token {i} has invalid log-probability {lp}")
        width = len(tok.encode("utf-8"))
        out.append(ProviderToken(tok, lp, Span(byte_pos, byte_pos + width)))
        byte_pos += width
    return out


def check_tiling(text: str, tokens: Sequence[ProviderToken]) -> None:
    data = text.encode("utf-8")
    pos = 0
    for i, tok in enumerate(tokens):
        if tok.span.start != pos or data[tok.span.start : tok.span.end] != tok.text.encode("utf-8"):
            raise TilingError(f"provider token {i} does not tile the request text")
        pos = tok.span.end
    if pos != len(data):
        raise TilingError("provider tokens stop short of the request end")
