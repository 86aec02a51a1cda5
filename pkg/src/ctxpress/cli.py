"""``ctxpress`` command line: compress, baseline, visualize, evaluate, ingest."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import __version__
from .backends import API_KEY_ENV, BackendError, HttpProvider, MockProvider, ProviderConfig, ScoreCache
from .backends.http import DEFAULT_BASE_URL
from .filtering import render_compressed
from .ingest import IngestStats, iter_dataset, truncate_at_sentence
from .metrics import METRIC_ORDER, compare_reports, evaluate_file, format_table
from .model import (
    CompressionConfig,
    Joiner,
    ScoringMode,
    UnitKind,
    document_to_dict,
    dumps,
    result_to_dict,
)
from .pipeline import score_document, select
from .scoring import ScoringError
from .segmentation import AlignmentError, ChunkAnnotation, SegmentationError
from .visualize import render_ansi, render_html

log = logging.getLogger("ctxpress")

EXIT_OK = 0
EXIT_BACKEND = 2
EXIT_INPUT = 3
EXIT_EVAL = 4

_MODES = {"sentence": ScoringMode.SENTENCE_WISE, "whole": ScoringMode.WHOLE_CONTEXT}


class InputError(Exception):
    pass


@dataclass
class RunManifest:
    config: dict
    model_id: str
    input_path: str
    started_at: str
    finished_at: str
    tool_version: str
    cache_hits: int
    cache_misses: int


def _ratio(value: str) -> float:
    try:
        r = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if not 0.0 <= r <= 1.0:
        raise argparse.ArgumentTypeError("ratio must be a fraction in [0, 1]")
    return r


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", default="-", help="UTF-8 text or .jsonl file; '-' reads stdin")
    p.add_argument("--ratio", type=_ratio, default=0.5, help="fraction of units to filter out (default 0.5)")
    p.add_argument("--unit", choices=[k.value for k in UnitKind], default="phrase")
    p.add_argument("--mode", choices=sorted(_MODES), default="sentence")
    p.add_argument("--backend", choices=["http", "mock"], default="http")
    p.add_argument("--base-url", default=DEFAULT_BASE_URL)
    p.add_argument("--model", default=None, help="scoring model id (default davinci-002, or 'mock')")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-parallel", type=_positive, default=4)
    p.add_argument("--max-chars", type=_positive, default=None)
    p.add_argument("--joiner", choices=[j.value for j in Joiner], default=Joiner.SOURCE_WHITESPACE.value)
    p.add_argument("--annotations", default=None, help='phrase sidecar JSON {"phrases": [[start, end], ...]}')
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--out", default=None, help="write the main output here instead of stdout")
    p.add_argument("--json", dest="json_path", default=None, help="write scored document and result as JSON")
    p.add_argument("--manifest", default=None, help="write a run manifest JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxpress", description="Self-information based context compression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("compress", "drop the least informative units"),
        ("baseline", "drop the same number of units at random"),
        ("visualize", "render a self-information heat map"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_pipeline_args(p)
        if name == "visualize":
            p.add_argument("--format", choices=["html", "ansi"], default="html")

    ev = sub.add_parser("evaluate", help="score candidate/reference records")
    ev.add_argument("records")
    ev.add_argument("--against", default=None, help="records produced from compressed contexts")
    ev.add_argument("--metrics", default=",".join(METRIC_ORDER))
    ev.add_argument("--out", default=None, help="write the JSON report here")

    ing = sub.add_parser("ingest", help="normalise a JSONL dataset of {id, text}")
    ing.add_argument("input")
    ing.add_argument("--max-chars", type=_positive, default=None)
    ing.add_argument("--out", default=None)
    return parser


# -- helpers ----------------------------------------------------------------------


def _read_input(path: str, stdin: TextIO) -> str:
    if path == "-":
        return stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _make_provider(args):
    if args.backend == "mock":
        return MockProvider(args.model or "mock")
    config = ProviderConfig.from_env(
        base_url=args.base_url,
        model_id=args.model or "davinci-002",
        timeout=args.timeout,
        max_parallel=args.max_parallel,
    )
    return HttpProvider(config)


def _config(args) -> CompressionConfig:
    return CompressionConfig(
        reduction_ratio_p=args.ratio * 100.0,
        unit_kind=UnitKind(args.unit),
        scoring_mode=_MODES[args.mode],
        seed=args.seed,
        joiner=Joiner(args.joiner),
    )


def _config_dict(config: CompressionConfig) -> dict:
    d = asdict(config)
    for key in ("unit_kind", "scoring_mode", "joiner"):
        d[key] = d[key].value
    return d


def _write(path: Optional[str], text: str, stdout: TextIO) -> None:
    if path is None:
        stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dataset_docs(args) -> list[tuple[str, str]]:
    stats = IngestStats()
    docs = [(d.id, d.text) for d in iter_dataset(args.input, args.max_chars, stats)]
    if not docs:
        raise InputError(f"{args.input}: no valid documents")
    return docs


def _run_pipeline(args, stdin: TextIO, stdout: TextIO) -> int:
    started = datetime.now(timezone.utc).isoformat()
    config = _config(args)
    annotations = ChunkAnnotation.load(args.annotations) if args.annotations else None
    cache = ScoreCache(args.cache_dir) if args.cache_dir else None
    baseline = args.command == "baseline"

    if args.input != "-" and args.input.endswith(".jsonl"):
        inputs = _dataset_docs(args)
        dataset = True
    else:
        text = _read_input(args.input, stdin)
        if args.max_chars is not None:
            text = truncate_at_sentence(text, args.max_chars)
        inputs = [("stdin" if args.input == "-" else args.input, text)]
        dataset = False

    provider = _make_provider(args)
    outputs: list[str] = []
    records: list[dict] = []
    try:
        for doc_id, text in inputs:
            if not text.strip():
                raise InputError(f"{doc_id}: input is empty")
            doc = score_document(
                text,
                provider,
                config.unit_kind,
                config.scoring_mode,
                annotations=annotations,
                cache=cache,
                max_parallel=args.max_parallel,
            )
            outcome = select(doc, config, baseline=baseline)
            result = render_compressed(doc.source, doc.units, outcome, config.joiner)
            records.append({"id": doc_id, "document": document_to_dict(doc), "result": result_to_dict(result)})
            if args.command == "visualize":
                outputs.append(
                    render_html(doc, outcome, result, title=doc_id)
                    if args.format == "html"
                    else render_ansi(doc, outcome)
                )
            elif dataset:
                outputs.append(dumps({"id": doc_id, "compressed_text": result.compressed_text, **result_to_dict(result)["stats"]}) + "\n")
            else:
                outputs.append(result.compressed_text + "\n")
    finally:
        if isinstance(provider, HttpProvider):
            provider.close()

    _write(args.out, "".join(outputs), stdout)
    if args.json_path:
        payload = {"config": _config_dict(config), "documents": records}
        Path(args.json_path).write_text(dumps(payload) + "\n", encoding="utf-8")
    if args.manifest:
        manifest = RunManifest(
            config=_config_dict(config),
            model_id=provider.model_id,
            input_path=args.input,
            started_at=started,
            finished_at=datetime.now(timezone.utc).isoformat(),
            tool_version=__version__,
            cache_hits=cache.hits if cache else 0,
            cache_misses=cache.misses if cache else 0,
        )
        Path(args.manifest).write_text(json.dumps(asdict(manifest), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _run_evaluate(args, stdout: TextIO) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    try:
        report = evaluate_file(args.records, metrics)
        against = evaluate_file(args.against, metrics) if args.against else None
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_EVAL
    payload = report.to_dict()
    if against is not None:
        drops = compare_reports(report, against)
        payload = {"original": report.to_dict(), "compressed": against.to_dict(), "drops": drops}
        if not report.records or not against.records:
            table = ""
        else:
            table = format_table(
                {"original": report.means, "compressed": against.means}, metrics, drops={"compressed": drops}
            )
    else:
        table = report.to_table() if report.records else ""
    stdout.write(table)
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if not report.records or (against is not None and not against.records):
        log.error("no valid records to evaluate")
        return EXIT_EVAL
    return EXIT_OK


def _run_ingest(args, stdout: TextIO) -> int:
    stats = IngestStats()
    try:
        lines = [dumps({"id": d.id, "text": d.text}) + "\n" for d in iter_dataset(args.input, args.max_chars, stats)]
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    _write(args.out, "".join(lines), stdout)
    if stats.malformed:
        log.warning("skipped %d malformed line(s)", len(stats.malformed))
    return EXIT_OK if stats.documents else EXIT_INPUT


def main(argv: Optional[Sequence[str]] = None, stdin: TextIO = None, stdout: TextIO = None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "evaluate":
        return _run_evaluate(args, stdout)
    if args.command == "ingest":
        return _run_ingest(args, stdout)
    try:
        return _run_pipeline(args, stdin, stdout)
    except (InputError, SegmentationError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (ScoringError, BackendError, AlignmentError) as exc:
        hint = f" (is {API_KEY_ENV} set?)" if args.backend == "http" else ""
        log.error("backend failure: %s%s", exc, hint)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
