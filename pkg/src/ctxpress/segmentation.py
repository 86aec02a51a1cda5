"""Sentence splitting, noun-phrase chunking and token-to-unit alignment.

The chunker is a small deterministic pipeline: a lexicon plus suffix tagger
feeds a regular grammar ``DET? (ADJ|NUM)* (NOUN|PROPN)+``. Verbs are never
merged into phrases. Users with a proper NLP chunker can bypass all of this by
supplying an annotation sidecar of phrase byte spans.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import ByteIndex, LexicalUnit, Span, SpanError, Token, UnitKind, check_span


class SegmentationError(ValueError):
    """Bad segmentation input, such as overlapping annotation spans."""


class AlignmentError(ValueError):
    """Tokens cannot be mapped onto lexical units."""


class Pos(str, enum.Enum):
    DET = "DET"
    ADJ = "ADJ"
    NOUN = "NOUN"
    PROPN = "PROPN"
    NUM = "NUM"
    VERB = "VERB"
    ADP = "ADP"
    PUNCT = "PUNCT"
    OTHER = "OTHER"


@dataclass(frozen=True)
class PosTaggedWord:
    span: Span
    coarse_pos: Pos


@dataclass(frozen=True)
class ChunkAnnotation:
    spans: tuple[Span, ...]

    @classmethod
    def load(cls, path: str | Path) -> "ChunkAnnotation":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            return cls(tuple(Span.from_list(p) for p in obj["phrases"]))
        except (KeyError, TypeError, SpanError) as exc:
            raise SegmentationError(f"malformed annotation file {path}: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps({"phrases": [s.to_list() for s in self.spans]})


# -- sentences ------------------------------------------------------------------

ABBREVIATIONS = frozenset(
    """
    mr mrs ms dr prof sr jr st mt rev hon gen col lt sgt capt cmdr adm gov sen rep
    vs etc al cf viz e.g i.e fig figs eq eqs tab sec secs ch vol vols pp ed eds
    approx ca inc ltd co corp bros dept univ assn jan feb apr jun jul aug sep sept
    oct nov dec mon tue tues thu thur thurs fri ave blvd rd u.s u.k u.n ph.d
    a.m p.m b.sc m.sc no nos op resp ref refs
    """.split()
)

_TERMINATOR = re.compile(r"(?:[.!?…]+)[\"'”’)\]]*(?=\s|$)")
_WORD = re.compile(r"\w+(?:[-'’./]\w+)*|[^\w\s]")


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    start = dot_pos
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:dot_pos].lstrip("([{\"'“‘").lower()
    return word in ABBREVIATIONS


def _next_is_lower(text: str, pos: int) -> bool:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos < len(text) and text[pos].islower()


def split_sentences(source: str) -> list[Span]:
    """Split text into sentence byte spans, trimming surrounding whitespace.

    A boundary is a run of ``. ! ? …`` (plus closing quotes or brackets)
    followed by whitespace or end of text, unless the period ends a known
    abbreviation or an ellipsis runs on into a lowercase word.
    """
    index = ByteIndex(source)
    spans: list[Span] = []
    start = 0
    n = len(source)

    def emit(lo: int, hi: int) -> None:
        while lo < hi and source[lo].isspace():
            lo += 1
        while hi > lo and source[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            spans.append(index.span(lo, hi))

    for match in _TERMINATOR.finditer(source):
        if match.start() < start:
            continue
        punct = match.group()
        if punct.startswith(".") and not punct.startswith("..") and _is_abbreviation(source, match.start()):
            continue
        if punct.startswith(("..", "…")) and _next_is_lower(source, match.end()):
            continue
        emit(start, match.end())
        start = match.end()
    emit(start, n)
    return spans


def word_spans(source: str, within: Optional[Span] = None) -> list[Span]:
    index = ByteIndex(source)
    lo, hi = 0, len(source)
    if within is not None:
        lo, hi = index.char(within.start), index.char(within.end)
    return [index.span(m.start() + lo, m.end() + lo) for m in _WORD.finditer(source[lo:hi])]


# -- tagging --------------------------------------------------------------------


def _words(s: str) -> frozenset[str]:
    return frozenset(s.split())


DETERMINERS = _words(
    "the a an this these those my your his her its our their some any each every no "
    "another either neither all both such"
)
PREPOSITIONS = _words(
    "of in on at by for with from into onto about over under across between through "
    "during without within after before against among amongst around behind below beneath "
    "beside besides beyond despite down except inside near off outside past per since than "
    "toward towards upon via like along amid throughout until unlike versus up"
)
PRONOUNS = _words(
    "i me we us you he him she it they them myself yourself himself herself itself ourselves "
    "themselves who whom whose which that what whatever whoever whichever something anything "
    "nothing everything someone anyone everyone nobody mine yours hers ours theirs"
)
CONJUNCTIONS = _words(
    "and or but nor yet so if because while although though whereas unless whether as once "
    "when where whenever wherever"
)
AUXILIARIES = _words(
    "is are was were be been being am have has had having do does did will would can could "
    "should may might must shall"
)
ADVERBS = _words(
    "not n't also very then too only just even still already often always never however thus "
    "therefore moreover furthermore here there now well quite rather almost again further instead "
    "ever perhaps sometimes soon yesterday today tomorrow away back out how why why else indeed "
    "hence otherwise together"
)
NUMBER_WORDS = _words(
    "zero one two three four five six seven eight nine ten eleven twelve twenty thirty forty "
    "fifty hundred thousand million billion trillion dozen"
)
ADJECTIVES = _words(
    "big large small new good great high low long short old young different same other various "
    "many few several more most less least important possible able real main major key recent "
    "early late whole full certain clear common general specific similar strong difficult easy "
    "simple ideal unique previous current original entire multiple public open free human final "
    "available likely own single better best worse worst first last next top fast slow hard "
    "wide deep rich poor true false wrong right nice bad huge tiny little much efficient "
    "sufficient relevant recent present absent latest robust"
)
VERBS = _words(
    "say says make makes use uses propose design learn perform train evaluate challenge adopt "
    "enhance deal sample consider start move build go goes get gets take see know think come "
    "give find tell ask work seem feel try leave call need become show include provide allow "
    "require help run set put mean keep let begin turn follow create increase reduce add offer "
    "improve apply compute filter remain appear achieve suggest study develop introduce compare "
    "present demonstrate generate process handle answer focus enable retain measure describe "
    "made took gave came went saw knew thought found told became began ran left said got kept "
    "held brought met sat stood lost paid sent built understood"
)
_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish", "ary")
_NUMERIC = re.compile(r"^[+-]?\d[\d.,]*%?$")
_SUBJECT_PRONOUNS = _words("i we you they he she it")


def _has_alpha(word: str) -> bool:
    return any(ch.isalpha() for ch in word)


def _lexicon_tag(lower: str) -> Optional[Pos]:
    if lower in DETERMINERS:
        return Pos.DET
    if lower in PREPOSITIONS:
        return Pos.ADP
    if lower in PRONOUNS or lower in CONJUNCTIONS or lower in ADVERBS:
        return Pos.OTHER
    if lower in AUXILIARIES or lower in VERBS:
        return Pos.VERB
    if lower in NUMBER_WORDS:
        return Pos.NUM
    if lower in ADJECTIVES:
        return Pos.ADJ
    if lower == "to":
        return Pos.OTHER
    return None


def _suffix_tag(lower: str) -> Pos:
    if len(lower) > 4 and lower.endswith("ly"):
        return Pos.OTHER
    if len(lower) > 4 and lower.endswith("ing"):
        return Pos.VERB
    if len(lower) > 3 and lower.endswith("ed") and not lower.endswith("eed"):
        return Pos.VERB
    if len(lower) > 4 and lower.endswith(_ADJ_SUFFIXES):
        return Pos.ADJ
    return Pos.NOUN


def _initial_tag(word: str, sentence_initial: bool) -> tuple[Pos, bool]:
    """Tag one word in isolation; the flag marks suffix-guessed verbs."""
    if not _has_alpha(word) and not word.isdigit():
        if _NUMERIC.match(word):
            return Pos.NUM, False
        return (Pos.PUNCT, False) if not any(ch.isalnum() for ch in word) else (Pos.OTHER, False)
    if _NUMERIC.match(word):
        return Pos.NUM, False
    lower = word.lower()
    lex = _lexicon_tag(lower)
    if lex is not None and not (lex is not Pos.DET and word.isupper() and len(word) > 1):
        return lex, False
    if word[0].isupper() and (not sentence_initial or (word.isupper() and len(word) > 1)):
        return Pos.PROPN, False
    if any(ch.isdigit() for ch in word):
        return Pos.PROPN if word[0].isupper() else Pos.NOUN, False
    pos = _suffix_tag(lower)
    return pos, pos is Pos.VERB


def tag_pos(source: str, spans: Sequence[Span]) -> list[PosTaggedWord]:
    """Deterministically tag words with coarse parts of speech.

    Closed-class lexicon first, then capitalisation and suffix heuristics; any
    unknown word is a NOUN. A second pass fixes a few common context cases,
    such as participles inside noun phrases ("a promising learning paradigm").
    """
    index = ByteIndex(source)
    texts = [index.slice(s) for s in spans]
    tags: list[Pos] = []
    guessed: list[bool] = []
    initial = True
    for text in texts:
        pos, guess = _initial_tag(text, initial)
        tags.append(pos)
        guessed.append(guess)
        initial = pos is Pos.PUNCT and text in ".!?…:"

    nominal = (Pos.NOUN, Pos.PROPN, Pos.ADJ)
    for i, text in enumerate(texts):
        lower = text.lower()
        prev = tags[i - 1] if i else None
        nxt = tags[i + 1] if i + 1 < len(tags) else None
        nxt_guessed = guessed[i + 1] if i + 1 < len(tags) else False
        if guessed[i] and prev in (Pos.DET, Pos.ADJ, Pos.NUM):
            # participle or gerund inside a noun phrase
            tags[i] = Pos.ADJ if (nxt in nominal or nxt_guessed) else Pos.NOUN
        elif lower in VERBS and prev in (Pos.DET, Pos.ADJ) and lower not in AUXILIARIES:
            tags[i] = Pos.NOUN
        elif lower == "to" and nxt in (Pos.DET, Pos.NUM, Pos.PROPN, Pos.ADJ):
            tags[i] = Pos.ADP
        elif tags[i] is Pos.NOUN and i and (
            texts[i - 1].lower() == "to" and tags[i - 1] is Pos.OTHER
            or texts[i - 1].lower() in _SUBJECT_PRONOUNS
            or texts[i - 1].lower() in _words("can could should would will may might must")
        ):
            tags[i] = Pos.VERB
    return [PosTaggedWord(span, pos) for span, pos in zip(spans, tags)]


# -- chunking -------------------------------------------------------------------

_MODIFIERS = (Pos.ADJ, Pos.NUM)
_HEADS = (Pos.NOUN, Pos.PROPN)


def chunk_noun_phrases(words: Sequence[PosTaggedWord]) -> list[Span]:
    """Return spans of maximal ``DET? (ADJ|NUM)* (NOUN|PROPN)+`` runs, leftmost first."""
    out: list[Span] = []
    i, n = 0, len(words)
    while i < n:
        j = i + 1 if words[i].coarse_pos is Pos.DET else i
        while j < n and words[j].coarse_pos in _MODIFIERS:
            j += 1
        k = j
        while k < n and words[k].coarse_pos in _HEADS:
            k += 1
        if k > j:
            out.append(Span(words[i].span.start, words[k - 1].span.end))
            i = k
        else:
            i += 1
    return out


# -- units ----------------------------------------------------------------------


def _check_annotations(data: bytes, spans: Iterable[Span]) -> list[Span]:
    spans = list(spans)
    for i, span in enumerate(spans):
        try:
            check_span(data, span)
        except SpanError as exc:
            raise SegmentationError(f"annotation {i}: {exc}") from exc
        if i and span.start < spans[i - 1].end:
            raise SegmentationError(f"annotation spans overlap or are unsorted at index {i}")
    return spans


def _phrase_cores(source: str, sentence: Span, annotations: Optional[list[Span]]) -> list[Span]:
    words = word_spans(source, sentence)
    if annotations is None:
        phrases = chunk_noun_phrases(tag_pos(source, words))
    else:
        phrases = []
        for ann in annotations:
            lo, hi = max(ann.start, sentence.start), min(ann.end, sentence.end)
            if lo >= hi:
                continue
            touched = [w for w in words if w.end > lo and w.start < hi]
            if touched:
                lo, hi = min(lo, touched[0].start), max(hi, touched[-1].end)
            if phrases and lo < phrases[-1].end:
                lo = phrases[-1].end
            if lo < hi:
                phrases.append(Span(lo, hi))
    cores: list[Span] = []
    p = 0
    for w in words:
        while p < len(phrases) and phrases[p].end <= w.start:
            p += 1
        if p < len(phrases) and phrases[p].start < w.end:
            if not cores or cores[-1] != phrases[p]:
                cores.append(phrases[p])
        else:
            cores.append(w)
    return cores


def _tile(sentence: Span, cores: list[Span]) -> list[Span]:
    tiles: list[Span] = []
    prev = sentence.start
    for core in cores:
        if core.end <= prev:
            continue
        tiles.append(Span(prev, core.end))
        prev = core.end
    if not tiles:
        return [sentence]
    if prev < sentence.end:
        last = tiles.pop()
        tiles.append(Span(last.start, sentence.end))
    return tiles


def segment(
    source: str,
    sentence_spans: Sequence[Span],
    kind: UnitKind,
    annotations: Optional[ChunkAnnotation] = None,
) -> list[LexicalUnit]:
    """Produce unscored lexical units that tile every sentence.

    Phrase units carry their leading whitespace so that concatenating units
    reproduces the sentence bytes. ``kind=token`` returns an empty list:
    token units are only known once provider tokens exist, see
    :func:`token_units`.
    """
    if kind is UnitKind.TOKEN:
        return []
    if kind is UnitKind.SENTENCE:
        return [LexicalUnit(UnitKind.SENTENCE, s) for s in sentence_spans]
    data = source.encode("utf-8")
    ann = _check_annotations(data, annotations.spans) if annotations is not None else None
    units: list[LexicalUnit] = []
    for sentence in sentence_spans:
        for span in _tile(sentence, _phrase_cores(source, sentence, ann)):
            units.append(LexicalUnit(UnitKind.PHRASE, span))
    return units


def token_units(tokens: Sequence[Token]) -> list[LexicalUnit]:
    return [LexicalUnit(UnitKind.TOKEN, t.span, (i, i + 1)) for i, t in enumerate(tokens)]


def align_tokens_to_units(tokens: Sequence[Token], units: Sequence[LexicalUnit]) -> list[LexicalUnit]:
    """Assign each token to the unit that holds most of its bytes.

    Ties go to the earlier unit. Units left without tokens are merged into the
    next unit of the same contiguous block (sentence), or into the previous
    one when they trail the block.
    """
    if not units:
        raise AlignmentError("no units to align against")
    owner: list[int] = []
    u = 0
    for ti, tok in enumerate(tokens):
        if len(tok.span) == 0:
            raise AlignmentError(f"token {ti} is empty")
        while u < len(units) and units[u].span.end <= tok.span.start:
            u += 1
        best, best_overlap = -1, 0
        v = u
        while v < len(units) and units[v].span.start < tok.span.end:
            ov = units[v].span.overlap(tok.span)
            if ov > best_overlap:
                best, best_overlap = v, ov
            v += 1
        if best < 0:
            raise AlignmentError(f"token {ti} {tok.span.to_list()} lies outside every unit")
        if owner and best < owner[-1]:
            raise AlignmentError(f"token {ti} is out of order")
        owner.append(best)

    counts = [0] * len(units)
    first = [-1] * len(units)
    for ti, ui in enumerate(owner):
        if first[ui] < 0:
            first[ui] = ti
        counts[ui] += 1

    # blocks of source-contiguous units
    blocks: list[list[int]] = [[0]]
    for i in range(1, len(units)):
        if units[i].span.start == units[i - 1].span.end:
            blocks[-1].append(i)
        else:
            blocks.append([i])

    merged: list[LexicalUnit] = []
    for block in blocks:
        filled = [i for i in block if counts[i]]
        if not filled:
            raise AlignmentError(f"units {block[0]}..{block[-1]} received no tokens")
        for pos, i in enumerate(filled):
            lo_unit = block[0] if pos == 0 else filled[pos - 1] + 1
            hi_unit = block[-1] if pos == len(filled) - 1 else i
            unit = units[i]
            merged.append(
                replace(
                    unit,
                    span=Span(units[lo_unit].span.start, units[hi_unit].span.end),
                    token_range=(first[i], first[i] + counts[i]),
                )
            )
    return merged
