"""Heat-map rendering of unit self-information, with dropped units struck through."""

from __future__ import annotations

from html import escape
from typing import Optional, Sequence

from .filtering import SelectionOutcome
from .model import ByteIndex, CompressionResult, ScoredDocument, Span


def intensities(values: Sequence[float]) -> list[float]:
    """Min-max normalise to [0, 100]; a constant list maps to all zeros."""
    if not values:
        return []
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0 for _ in values]
    return [100.0 * (v - lo) / (hi - lo) for v in values]


def _rgb(intensity: float) -> tuple[int, int, int]:
    t = max(0.0, min(1.0, intensity / 100.0))
    return 255, round(255 - 150 * t), round(255 - 200 * t)


def _pieces(doc: ScoredDocument) -> list[tuple[Optional[int], str]]:
    """Region text split into (unit index or None for inter-unit gaps, text)."""
    index = ByteIndex(doc.source)
    out: list[tuple[Optional[int], str]] = []
    prev_end: Optional[int] = None
    for i, unit in enumerate(doc.units):
        if prev_end is not None and unit.span.start > prev_end:
            out.append((None, index.slice(Span(prev_end, unit.span.start))))
        out.append((i, index.slice(unit.span)))
        prev_end = unit.span.end
    return out


_STYLE = (
    "body{font-family:Georgia,serif;max-width:60em;margin:2em auto;line-height:1.6}"
    ".panel{border:1px solid #999;padding:0.8em;margin-bottom:1em;white-space:pre-wrap}"
    ".unit.dropped{text-decoration:line-through;color:#555}"
    "h2{font-size:1em;margin:0 0 0.4em 0}"
)


def render_html(
    doc: ScoredDocument,
    outcome: SelectionOutcome,
    result: Optional[CompressionResult] = None,
    title: str = "Selective context",
) -> str:
    """Self-contained HTML page: the scored text, then the filtered text."""
    bits = [u.self_info_bits for u in doc.units]
    heat = intensities(bits)
    kept = set(outcome.retained)
    spans = []
    for i, text in _pieces(doc):
        if i is None:
            spans.append(escape(text))
            continue
        r, g, b = _rgb(heat[i])
        cls = "unit" if i in kept else "unit dropped"
        style = f"background-color:rgb({r},{g},{b})"
        if i not in kept:
            style += ";text-decoration:line-through"
        spans.append(
            f'<span class="{cls}" data-index="{i}" data-bits="{bits[i]:.6f}" '
            f'data-intensity="{heat[i]:.2f}" style="{style}">{escape(text)}</span>'
        )
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>{escape(title)}</title><style>{_STYLE}</style></head><body>",
        f'<div class="panel original"><h2>Original</h2>{"".join(spans)}</div>',
    ]
    if result is not None:
        parts.append(f'<div class="panel filtered"><h2>Filtered</h2>{escape(result.compressed_text)}</div>')
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def render_ansi(doc: ScoredDocument, outcome: SelectionOutcome) -> str:
    """Terminal rendering with 24-bit background colours and strike-through."""
    heat = intensities([u.self_info_bits for u in doc.units])
    kept = set(outcome.retained)
    out = []
    for i, text in _pieces(doc):
        if i is None:
            out.append(text)
            continue
        r, g, b = _rgb(heat[i])
        codes = f"\x1b[38;2;0;0;0;48;2;{r};{g};{b}m"
        if i not in kept:
            codes += "\x1b[9m"
        out.append(f"{codes}{text}\x1b[0m")
    return "".join(out) + "\n"
