"""Reading JSONL document collections."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .model import ByteIndex
from .segmentation import split_sentences

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    id: str
    text: str


@dataclass
class IngestStats:
    documents: int = 0
    malformed: list[int] = field(default_factory=list)


def truncate_at_sentence(text: str, max_chars: int) -> str:
    """Cut after the last sentence ending within ``max_chars`` characters.

    Never cuts inside a sentence: when even the first sentence is longer than
    the limit, that whole sentence is kept.
    """
    if len(text) <= max_chars:
        return text
    index = ByteIndex(text)
    ends = [index.char(s.end) for s in split_sentences(text)]
    if not ends:
        return ""
    fitting = [e for e in ends if e <= max_chars]
    return text[: fitting[-1] if fitting else ends[0]]


def iter_dataset(path: str | Path, max_chars: Optional[int] = None, stats: Optional[IngestStats] = None) -> Iterator[Document]:
    """Yield ``{"id", "text"}`` documents in file order, skipping malformed lines."""
    stats = stats if stats is not None else IngestStats()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                doc_id, text = obj["id"], obj["text"]
                if not isinstance(text, str) or not isinstance(doc_id, (str, int)):
                    raise TypeError("id must be a string and text a string")
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                stats.malformed.append(lineno)
                continue
            if max_chars is not None:
                text = truncate_at_sentence(text, max_chars)
            stats.documents += 1
            yield Document(str(doc_id), text)
