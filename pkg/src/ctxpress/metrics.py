"""BLEU, ROUGE-1/2/L and a simplified METEOR, plus batch evaluation of JSONL records.

Every metric shares :func:`tokenize` so scores are comparable with each
other. METEOR here has exact and stem matching stages only (no synonymy), and
is reported as ``meteor``.
"""

from __future__ import annotations

import json
import logging
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

log = logging.getLogger(__name__)

BLEU_EPSILON = 1e-9
METRIC_ORDER = ("bleu", "meteor", "rouge1", "rouge2", "rougeL")
METRIC_NOTES = {"meteor": "meteor-simplified: exact and stem matching, no synonymy"}
TABLE_HEADERS = {"bleu": "BLEU", "meteor": "METEOR", "rouge1": "rouge1", "rouge2": "rouge2", "rougeL": "rougeL"}


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(word: str) -> str:
    lo, hi = 0, len(word)
    while lo < hi and _is_punct(word[lo]):
        lo += 1
    while hi > lo and _is_punct(word[hi - 1]):
        hi -= 1
    return word[lo:hi]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on Unicode whitespace, strip edge punctuation."""
    return [w for w in (_strip_punct(t) for t in text.lower().split()) if w]


def ngrams(words: Sequence[str], n: int) -> Counter:
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def _require(*texts: str) -> None:
    for t in texts:
        if not t or not t.strip():
            raise ValueError("metric inputs must be non-empty")


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def bleu(candidate: str, references: Sequence[str], max_n: int = 4, epsilon: float = BLEU_EPSILON) -> float:
    """Sentence BLEU with clipped n-gram precision and add-epsilon smoothing.

    Orders for which the candidate has no n-grams at all (candidates shorter
    than ``max_n``) are left out of the geometric mean.
    """
    if isinstance(references, str):
        references = [references]
    if not references:
        raise ValueError("bleu needs at least one reference")
    _require(candidate, *references)
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    if not cand or not any(refs):
        raise ValueError("metric inputs must contain words")
    log_sum, orders = 0.0, 0
    for n in range(1, max_n + 1):
        cand_counts = ngrams(cand, n)
        total = sum(cand_counts.values())
        if total == 0:
            break
        max_ref: Counter = Counter()
        for ref in refs:
            for gram, c in ngrams(ref, n).items():
                max_ref[gram] = max(max_ref[gram], c)
        clipped = sum(min(c, max_ref[g]) for g, c in cand_counts.items())
        log_sum += math.log((clipped if clipped > 0 else epsilon) / total)
        orders += 1
    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda length: (abs(length - c), length))
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / orders)


def clipped_precision(candidate: str, references: Sequence[str], n: int) -> float:
    cand_counts = ngrams(tokenize(candidate), n)
    max_ref: Counter = Counter()
    for ref in references:
        for gram, c in ngrams(tokenize(ref), n).items():
            max_ref[gram] = max(max_ref[gram], c)
    total = sum(cand_counts.values())
    return sum(min(c, max_ref[g]) for g, c in cand_counts.items()) / total if total else 0.0


def rouge_n(candidate: str, reference: str, n: int = 1) -> PRF:
    _require(candidate, reference)
    cand, ref = ngrams(tokenize(candidate), n), ngrams(tokenize(reference), n)
    overlap = sum((cand & ref).values())
    c_total, r_total = sum(cand.values()), sum(ref.values())
    p = overlap / c_total if c_total else 0.0
    r = overlap / r_total if r_total else 0.0
    return PRF(p, r, _f1(p, r))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> PRF:
    _require(candidate, reference)
    cand, ref = tokenize(candidate), tokenize(reference)
    lcs = lcs_length(cand, ref)
    p = lcs / len(cand) if cand else 0.0
    r = lcs / len(ref) if ref else 0.0
    return PRF(p, r, _f1(p, r))


# -- METEOR -----------------------------------------------------------------------


@lru_cache(maxsize=1)
def _stem_rules() -> tuple[tuple[str, str, int], ...]:
    raw = json.loads(resources.files("ctxpress.data").joinpath("stem_rules.json").read_text(encoding="utf-8"))
    return tuple((s, r, int(m)) for s, r, m in raw["rules"])


_VOWELS = frozenset("aeiouy")


def stem(word: str) -> str:
    """Suffix-stripping stemmer driven by the bundled rule table."""
    for suffix, repl, min_stem in _stem_rules():
        if word.endswith(suffix) and len(word) - len(suffix) >= min_stem:
            base = word[: len(word) - len(suffix)]
            if suffix in ("ing", "ed"):
                if not any(ch in _VOWELS for ch in base):
                    return word
                if len(base) > 2 and base[-1] == base[-2] and base[-1] not in "lsz" + "".join(_VOWELS):
                    base = base[:-1]
            return base + repl
    return word


def _align(cand: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Greedy two-stage unigram alignment (exact, then stemmed)."""
    pairs: dict[int, int] = {}
    used: set[int] = set()
    for key in (lambda w: w, stem):
        ref_keys = [key(w) for w in ref]
        for i, w in enumerate(cand):
            if i in pairs:
                continue
            k = key(w)
            for j, rk in enumerate(ref_keys):
                if j not in used and rk == k:
                    pairs[i] = j
                    used.add(j)
                    break
    return sorted(pairs.items())


def _chunks(alignment: Sequence[tuple[int, int]]) -> int:
    chunks = 0
    prev: Optional[tuple[int, int]] = None
    for i, j in alignment:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_simplified(candidate: str, reference: str) -> float:
    _require(candidate, reference)
    cand, ref = tokenize(candidate), tokenize(reference)
    alignment = _align(cand, ref)
    m = len(alignment)
    if m == 0:
        return 0.0
    p, r = m / len(cand), m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (_chunks(alignment) / m) ** 3
    return f_mean * (1 - penalty)


# -- batch evaluation ---------------------------------------------------------------

METRICS: dict[str, Callable[[str, str], float]] = {
    "bleu": lambda c, r: bleu(c, [r]),
    "meteor": meteor_simplified,
    "rouge1": lambda c, r: rouge_n(c, r, 1).f1,
    "rouge2": lambda c, r: rouge_n(c, r, 2).f1,
    "rougeL": lambda c, r: rouge_l(c, r).f1,
}


@dataclass
class EvalRecord:
    id: str
    reference: str
    candidate: str
    scores: dict[str, float] = field(default_factory=dict)


@dataclass
class EvalReport:
    metrics: tuple[str, ...]
    records: list[EvalRecord] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    @property
    def means(self) -> dict[str, float]:
        if not self.records:
            return {}
        return {m: math.fsum(r.scores[m] for r in self.records) / len(self.records) for m in self.metrics}

    def to_dict(self) -> dict:
        return {
            "metrics": list(self.metrics),
            "count": len(self.records),
            "means": self.means,
            "records": [{"id": r.id, "scores": r.scores} for r in self.records],
            "errors": self.errors,
            "notes": {m: METRIC_NOTES[m] for m in self.metrics if m in METRIC_NOTES},
        }

    def to_table(self) -> str:
        return format_table({"mean": self.means} if self.records else {}, self.metrics)


def format_table(
    rows: dict[str, dict[str, float]],
    metrics: Sequence[str] = METRIC_ORDER,
    drops: Optional[dict[str, dict[str, float]]] = None,
) -> str:
    """Aligned text table, optionally with drops shown in parentheses."""
    metrics = [m for m in METRIC_ORDER if m in metrics]
    header = ["Method"] + [TABLE_HEADERS[m] for m in metrics]
    body = []
    for name, means in rows.items():
        cells = [name]
        for m in metrics:
            cell = f"{means[m]:.3f}"
            if drops and name in drops:
                cell += f" ({drops[name][m]:.3f})"
            cells.append(cell)
        body.append(cells)
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))) for row in [header] + body]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _parse_record(line: str) -> EvalRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "reference", "candidate"):
        if not isinstance(obj.get(key), (str, int)) or (key != "id" and not str(obj[key]).strip()):
            raise ValueError(f"missing or empty field {key!r}")
    return EvalRecord(str(obj["id"]), obj["reference"], obj["candidate"])


def score_record(record: EvalRecord, metrics: Iterable[str]) -> EvalRecord:
    record.scores = {m: METRICS[m](record.candidate, record.reference) for m in metrics}
    return record


def evaluate_file(records_path: str | Path, metrics: Sequence[str] = METRIC_ORDER) -> EvalReport:
    """Score every record of a JSONL file; bad lines become error entries."""
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise ValueError(f"unknown metrics: {', '.join(unknown)}")
    report = EvalReport(tuple(metrics))
    with open(records_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                report.records.append(score_record(_parse_record(line), metrics))
            except (ValueError, TypeError) as exc:
                log.warning("%s:%d: %s", records_path, lineno, exc)
                report.errors.append({"line": lineno, "error": str(exc)})
    return report


def compare_reports(original: EvalReport, compressed: EvalReport) -> dict[str, dict[str, float]]:
    """Per-metric mean drop from the original-context run to the compressed one."""
    a, b = original.means, compressed.means
    return {m: a[m] - b[m] for m in original.metrics if m in b}
