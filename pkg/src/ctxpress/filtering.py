"""Percentile-threshold selection of lexical units and rendering of the result."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .model import (
    ByteIndex,
    CompressionResult,
    CompressionStats,
    Joiner,
    LexicalUnit,
    Span,
)


@dataclass(frozen=True)
class SelectionOutcome:
    retained: tuple[int, ...]
    dropped: tuple[int, ...]
    threshold_bits: float

    @property
    def is_random(self) -> bool:
        return math.isnan(self.threshold_bits)


def percentile(values: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile between closest ranks.

    >>> percentile([1, 2, 3, 4], 50)
    2.5
    """
    if not values:
        raise ValueError("percentile of an empty list")
    if not 0.0 <= p <= 100.0 or math.isnan(p):
        raise ValueError(f"percentile p must be in [0, 100], got {p}")
    v = sorted(values)
    rank = p * (len(v) - 1) / 100.0
    lo = math.floor(rank)
    hi = min(math.ceil(rank), len(v) - 1)
    frac = rank - lo
    if frac == 0.0 or v[hi] == v[lo]:
        return float(v[lo])
    return v[lo] + frac * (v[hi] - v[lo])


def select_units(units: Sequence[LexicalUnit], p: float) -> SelectionOutcome:
    """Keep units whose self-information is at least the p-th percentile."""
    if not units:
        raise ValueError("cannot select from an empty unit list")
    bits = [u.self_info_bits for u in units]
    threshold = percentile(bits, p)
    retained = tuple(i for i, b in enumerate(bits) if b >= threshold)
    dropped = tuple(i for i, b in enumerate(bits) if b < threshold)
    return SelectionOutcome(retained, dropped, threshold)


def random_select(units: Sequence[LexicalUnit], p: float, seed: int) -> SelectionOutcome:
    """Drop as many units as :func:`select_units` would, chosen uniformly at random."""
    if not units:
        raise ValueError("cannot select from an empty unit list")
    n_drop = len(select_units(units, p).dropped)
    rng = random.Random(seed)
    dropped = set(rng.sample(range(len(units)), n_drop))
    retained = tuple(i for i in range(len(units)) if i not in dropped)
    return SelectionOutcome(retained, tuple(sorted(dropped)), math.nan)


def render_compressed(
    source: str,
    units: Sequence[LexicalUnit],
    outcome: SelectionOutcome,
    joiner: Joiner = Joiner.SOURCE_WHITESPACE,
) -> CompressionResult:
    """Concatenate retained units in document order.

    With ``source_whitespace`` consecutive retained units keep the exact
    source bytes between them; after a gap a single space is inserted and the
    next unit's leading whitespace dropped. ``single_space`` joins stripped
    unit texts with one space.
    """
    index = ByteIndex(source)
    texts = [index.slice(u.span) for u in units]
    kept = outcome.retained
    parts: list[str] = []
    prev = -2
    for i in kept:
        text = texts[i]
        if joiner is Joiner.SINGLE_SPACE:
            if parts:
                parts.append(" ")
            parts.append(text.strip())
        elif not parts:
            parts.append(text.lstrip())
        elif i == prev + 1:
            parts.append(index.slice(Span(units[prev].span.end, units[i].span.start)))
            parts.append(text)
        else:
            parts.append(" ")
            parts.append(text.lstrip())
        prev = i

    stats = CompressionStats(
        units_total=len(units),
        units_retained=len(kept),
        tokens_total=sum(u.n_tokens for u in units),
        tokens_retained=sum(units[i].n_tokens for i in kept),
        chars_total=sum(len(t) for t in texts),
        chars_retained=sum(len(texts[i]) for i in kept),
    )
    return CompressionResult(tuple(kept), "".join(parts), outcome.threshold_bits, stats)
