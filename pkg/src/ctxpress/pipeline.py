"""End-to-end helpers: segment, score, align, select, render."""

from __future__ import annotations

from typing import Optional

from .backends import LogprobProvider, ScoreCache
from .filtering import SelectionOutcome, random_select, render_compressed, select_units
from .model import CompressionConfig, CompressionResult, ScoredDocument, ScoringMode, UnitKind
from .scoring import DEFAULT_PARALLELISM, aggregate_units, score_tokens
from .segmentation import ChunkAnnotation, align_tokens_to_units, segment, split_sentences, token_units


def score_document(
    source: str,
    provider: LogprobProvider,
    unit_kind: UnitKind = UnitKind.PHRASE,
    mode: ScoringMode = ScoringMode.SENTENCE_WISE,
    *,
    annotations: Optional[ChunkAnnotation] = None,
    cache: Optional[ScoreCache] = None,
    max_parallel: int = DEFAULT_PARALLELISM,
) -> ScoredDocument:
    sentences = split_sentences(source)
    tokens = score_tokens(source, sentences, provider, mode, cache=cache, max_parallel=max_parallel)
    if unit_kind is UnitKind.TOKEN:
        units = token_units(tokens)
    elif sentences:
        units = align_tokens_to_units(tokens, segment(source, sentences, unit_kind, annotations))
    else:
        units = []
    return ScoredDocument(
        source=source,
        tokens=tuple(tokens),
        units=tuple(aggregate_units(tokens, units)),
        sentence_spans=tuple(sentences),
        model_id=provider.model_id,
        scoring_mode=mode,
    )


def select(doc: ScoredDocument, config: CompressionConfig, *, baseline: bool = False) -> SelectionOutcome:
    if baseline:
        return random_select(doc.units, config.reduction_ratio_p, config.seed)
    return select_units(doc.units, config.reduction_ratio_p)


def compress_document(doc: ScoredDocument, config: CompressionConfig, *, baseline: bool = False) -> CompressionResult:
    return render_compressed(doc.source, doc.units, select(doc, config, baseline=baseline), config.joiner)


def compress(
    source: str,
    provider: LogprobProvider,
    config: CompressionConfig = CompressionConfig(),
    *,
    annotations: Optional[ChunkAnnotation] = None,
    cache: Optional[ScoreCache] = None,
    max_parallel: int = DEFAULT_PARALLELISM,
    baseline: bool = False,
) -> tuple[ScoredDocument, CompressionResult]:
    """Score ``source`` and drop the least informative units.

    >>> from ctxpress.backends import MockProvider
    >>> doc, result = compress("Hello world. Bye.", MockProvider(), CompressionConfig(0.0))
    >>> result.compressed_text
    'Hello world. Bye.'
    """
    doc = score_document(
        source,
        provider,
        config.unit_kind,
        config.scoring_mode,
        annotations=annotations,
        cache=cache,
        max_parallel=max_parallel,
    )
    return doc, compress_document(doc, config, baseline=baseline)
