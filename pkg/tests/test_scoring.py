import math
import threading

import mpmath
import pytest

from ctxpress.backends import BackendError, MockProvider, ProviderToken, RetryableBackendError, build_tokens
from ctxpress.model import LexicalUnit, ScoringMode, Span, Token, UnitKind, validate_document
from ctxpress.pipeline import score_document
from ctxpress.scoring import (
    ScoringError,
    aggregate_units,
    score_tokens,
    sentence_entropy,
    sentence_perplexity,
    to_bits,
)
from ctxpress.segmentation import AlignmentError, split_sentences


class ConstantProvider:
    """Every whitespace-delimited token gets the same log-probability."""

    model_id = "const"

    def __init__(self, logprob=-1.0, first=None):
        self.logprob = logprob
        self.first = first
        self.calls = 0
        self._lock = threading.Lock()

    def fetch(self, text):
        with self._lock:
            self.calls += 1
        from ctxpress.backends import mock_tokenize

        pieces = mock_tokenize(text)
        values = [self.logprob] * len(pieces)
        if self.first is not None:
            values[0] = self.first
        return build_tokens(text, pieces, values)


class ScriptedProvider:
    model_id = "scripted"

    def __init__(self, script):
        self.script = script

    def fetch(self, text):
        tokens, values = self.script[text]
        return build_tokens(text, tokens, values)


class TextKeyedProvider:
    """Value depends only on the stripped token text, never on position or context."""

    model_id = "keyed"

    def fetch(self, text):
        from ctxpress.backends import mock_tokenize

        pieces = mock_tokenize(text)
        return build_tokens(text, pieces, [-(1 + (sum(map(ord, p.strip())) % 7) / 3) for p in pieces])


def bits(values):
    return [Token(Span(i, i + 1), "x", None, v) for i, v in enumerate(values)]


# -- conversions ----------------------------------------------------------------


def test_to_bits_certain_event():
    assert to_bits(0.0) == 0.0


def test_to_bits_half():
    assert to_bits(math.log(0.5)) == pytest.approx(1.0, rel=1e-15)


def test_to_bits_against_arbitrary_precision():
    mpmath.mp.dps = 40
    expected = float(mpmath.mpf(2) / mpmath.log(2))
    assert expected == pytest.approx(2.885390, abs=1e-6)
    assert to_bits(-2.0) == pytest.approx(expected, rel=1e-12)


def test_to_bits_rejects_positive():
    with pytest.raises(ValueError):
        to_bits(0.1)


# -- entropy and perplexity -----------------------------------------------------


@pytest.mark.parametrize("values,expected", [([1, 1, 1], 1.0), ([0, 2], 1.0), ([1, 2, 3, 4], 2.5)])
def test_entropy(values, expected):
    assert sentence_entropy(bits(values)) == expected


def test_perplexity():
    assert sentence_perplexity(bits([0])) == 1.0
    assert sentence_perplexity(bits([1, 1])) == 2.0
    expected = float(mpmath.power(2, mpmath.mpf("2.5")))
    assert sentence_perplexity(bits([1, 2, 3, 4])) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(5.656854, abs=1e-6)


def test_perplexity_is_two_to_the_entropy():
    toks = bits([0.3, 1.7, 2.2, 9.1])
    assert sentence_perplexity(toks) == 2.0 ** sentence_entropy(toks)


def test_empty_sentence_is_an_error():
    with pytest.raises(ValueError):
        sentence_entropy([])
    with pytest.raises(ValueError):
        sentence_perplexity([])


# -- aggregation ----------------------------------------------------------------


@pytest.mark.parametrize("values,expected", [([1.0, 2.0], 3.0), ([0.7], 0.7), ([0.5, 0.25, 0.25], 1.0)])
def test_aggregate(values, expected):
    unit = LexicalUnit(UnitKind.PHRASE, Span(0, len(values)), (0, len(values)))
    assert aggregate_units(bits(values), [unit])[0].self_info_bits == expected


# -- score_tokens ---------------------------------------------------------------


def test_constant_backend_gives_one_over_ln2():
    text = "All tokens cost the same"
    tokens = score_tokens(text, split_sentences(text), ConstantProvider(-1.0))
    assert len(tokens) == 5
    for t in tokens:
        assert t.self_info_bits == pytest.approx(1.442695, abs=1e-6)


def test_sentence_wise_issues_one_request_per_sentence():
    text = "First sentence here. Second one follows."
    provider = ConstantProvider()
    score_tokens(text, split_sentences(text), provider, ScoringMode.SENTENCE_WISE)
    assert provider.calls == 2


def test_whole_context_issues_one_request():
    text = "First sentence here. Second one follows. Third."
    provider = ConstantProvider()
    score_tokens(text, split_sentences(text), provider, ScoringMode.WHOLE_CONTEXT)
    assert provider.calls == 1


def test_missing_first_logprob_takes_sentence_maximum():
    sentence = "Hi there friend"
    # remaining tokens: 2.0 and 4.0 bits
    script = {sentence: (["Hi", " there", " friend"], [None, -2.0 * math.log(2), -4.0 * math.log(2)])}
    tokens = score_tokens(sentence, split_sentences(sentence), ScriptedProvider(script))
    assert tokens[0].logprob_nat is None
    assert tokens[0].self_info_bits == pytest.approx(4.0)


def test_single_token_sentence_takes_document_mean():
    text = "Alpha beta gamma. Lonely."
    ln2 = math.log(2)
    script = {
        "Alpha beta gamma.": (["Alpha", " beta", " gamma."], [-1 * ln2, -2 * ln2, -6 * ln2]),
        "Lonely.": (["Lonely."], [None]),
    }
    tokens = score_tokens(text, split_sentences(text), ScriptedProvider(script), max_parallel=1)
    assert tokens[-1].self_info_bits == pytest.approx(3.0)


def test_no_known_logprob_anywhere_falls_back_to_one_bit():
    text = "Alone."
    tokens = score_tokens(text, split_sentences(text), ScriptedProvider({"Alone.": (["Alone."], [None])}))
    assert tokens[0].self_info_bits == 1.0


def test_tokens_carry_absolute_spans():
    text = "  One two.   Three four."
    tokens = score_tokens(text, split_sentences(text), ConstantProvider())
    assert [t.text for t in tokens] == ["One", " two.", "Three", " four."]
    for t in tokens:
        assert text.encode()[t.span.start : t.span.end].decode() == t.text


def test_mode_independence_of_bit_sequences():
    text = "Stable values here. Nothing depends on context! Really?"
    sentences = split_sentences(text)
    a = score_tokens(text, sentences, TextKeyedProvider(), ScoringMode.SENTENCE_WISE)
    b = score_tokens(text, sentences, TextKeyedProvider(), ScoringMode.WHOLE_CONTEXT)
    assert [t.self_info_bits for t in a] == [t.self_info_bits for t in b]
    assert [t.span for t in a] == [t.span for t in b]


def test_whole_context_token_crossing_sentences_is_counted_once():
    text = "End. Start"
    # one token spans bytes from both sentences
    script = {text: (["End", ". Start"], [-1.0, -3.0])}
    doc_sentences = split_sentences(text)
    tokens = score_tokens(text, doc_sentences, ScriptedProvider(script), ScoringMode.WHOLE_CONTEXT)
    assert [t.text for t in tokens] == ["End", ".", "Start"]
    assert math.fsum(t.self_info_bits for t in tokens) == pytest.approx(to_bits(-1.0) + to_bits(-3.0))


def test_empty_provider_tokens_are_folded():
    text = "ab cd"
    script = {text: (["ab", "", " cd"], [-1.0, -0.5, -2.0])}
    tokens = score_tokens(text, split_sentences(text), ScriptedProvider(script))
    assert [t.text for t in tokens] == ["ab", " cd"]
    assert tokens[1].logprob_nat == pytest.approx(-2.5)


def test_bad_tiling_is_an_alignment_error():
    class Broken:
        model_id = "broken"

        def fetch(self, text):
            return [ProviderToken("nope", -1.0, Span(0, 4))]

    text = "Some text."
    with pytest.raises(AlignmentError):
        score_tokens(text, split_sentences(text), Broken())


def test_backend_failure_reports_sentence_index():
    class FailsSecond:
        model_id = "fails"

        def fetch(self, text):
            if text.startswith("Second"):
                raise RetryableBackendError("down")
            return ConstantProvider().fetch(text)

    text = "First one. Second one. Third one."
    with pytest.raises(ScoringError) as info:
        score_tokens(text, split_sentences(text), FailsSecond(), max_parallel=1)
    assert info.value.sentence_index == 1


def test_parallel_and_serial_scoring_agree():
    text = " ".join(f"Sentence number {i} is here." for i in range(12))
    sentences = split_sentences(text)
    serial = score_tokens(text, sentences, MockProvider(), max_parallel=1)
    parallel = score_tokens(text, sentences, MockProvider(), max_parallel=8)
    assert serial == parallel


@pytest.mark.parametrize("kind", list(UnitKind))
@pytest.mark.parametrize("mode", list(ScoringMode))
def test_scored_documents_validate(kind, mode, sample_text):
    doc = score_document(sample_text, MockProvider(), kind, mode)
    assert validate_document(doc) == []
    assert all(t.self_info_bits >= 0 for t in doc.tokens)
    for u in doc.units:
        lo, hi = u.token_range
        total = math.fsum(t.self_info_bits for t in doc.tokens[lo:hi])
        assert abs(u.self_info_bits - total) <= 1e-9 * max(1.0, u.self_info_bits)
