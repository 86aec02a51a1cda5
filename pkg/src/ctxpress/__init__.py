"""Self-information based context compression."""

__version__ = "0.1.0"

from .backends import HttpProvider, MockProvider, ProviderConfig, ScoreCache
from .filtering import SelectionOutcome, percentile, random_select, render_compressed, select_units
from .model import (
    CompressionConfig,
    CompressionResult,
    Joiner,
    LexicalUnit,
    ScoredDocument,
    ScoringMode,
    Span,
    Token,
    UnitKind,
    slice_text,
    validate_document,
)
from .pipeline import compress, compress_document, score_document

__all__ = [
    "CompressionConfig",
    "CompressionResult",
    "HttpProvider",
    "Joiner",
    "LexicalUnit",
    "MockProvider",
    "ProviderConfig",
    "ScoreCache",
    "ScoredDocument",
    "ScoringMode",
    "SelectionOutcome",
    "Span",
    "Token",
    "UnitKind",
    "compress",
    "compress_document",
    "percentile",
    "random_select",
    "render_compressed",
    "score_document",
    "select_units",
    "slice_text",
    "validate_document",
]
