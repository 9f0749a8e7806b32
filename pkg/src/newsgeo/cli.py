"""Command-line entry point.

Exit codes:

    0  success (geocode: event detected)
    1  usage or input error
    2  infrastructure error (a backend could not be reached)
    3  geocode: no event found (exhausted or no candidates)
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .benchmark import generate_benchmark
from .config import ConfigError, build_runtime, load_config
from .errors import NewsGeoError
from .extraction import ArticleRecord, read_corpus
from .manifest import compute_dataset_stats, export_manifests, import_manifests
from .pipeline import (
    DETECTED,
    INFRA_ERROR,
    METHODS,
    PipelineResult,
    build_report,
    results_path,
    run_article,
    run_batch,
)

EXIT_OK, EXIT_USAGE, EXIT_INFRA, EXIT_NOT_FOUND = 0, 1, 2, 3

log = logging.getLogger("newsgeo")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="JSON run configuration", **kw)
    p.add_argument("--seed", type=int, help="seed for synthetic backends", **kw)
    p.add_argument("--quiet", action="store_true", help="only log errors", **kw)
    p.add_argument("--pretty", action="store_true", help="human-readable tables on stderr", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="newsgeo", description="Locate news events in satellite imagery.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        _global_flags(p, suppress=True)
        return p

    p = add("geocode", help="run one method on a single article (JSON object file)")
    p.add_argument("article")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--max-attempts", type=int)

    p = add("run-batch", help="run methods over a JSONL corpus and write results + report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--methods", default=",".join(METHODS), help="comma-separated, default all")
    p.add_argument("--out", help="output directory (defaults to config output_dir)")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--manifests", action="store_true", help="also export detected sequences per method")

    p = add("report", help="recompute the comparison report from a results directory")
    p.add_argument("results_dir")

    p = add("dataset-stats", help="summary statistics of a manifest file")
    p.add_argument("manifest")
    p.add_argument("--source", default="", help="imagery source label for the table")

    p = add("gazetteer-validate", help="check a gazetteer file")
    p.add_argument("path")

    p = add("make-benchmark", help="write a synthetic planted-event benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--articles", type=int, default=100)
    return parser


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def _pretty(args, text) -> None:
    if args.pretty:
        sys.stderr.write(text)


def _read_article(path) -> ArticleRecord:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except ValueError:
        obj = json.loads(text.strip().splitlines()[0])
    return ArticleRecord.from_dict(obj)


def _cfg(args, **overrides):
    overrides = dict(overrides)
    overrides["seed"] = getattr(args, "seed", None)
    return load_config(args.config, overrides)


def cmd_geocode(args) -> int:
    cfg = _cfg(args, method=args.method, max_attempts=args.max_attempts)
    rt = build_runtime(cfg)
    article = _read_article(args.article)
    res = run_article(article, rt.config.method, rt.backends, rt.config)
    _emit(res.to_dict())
    _pretty(args, f"{article.id}: {res.status} after {res.attempts} attempt(s)"
            + (f" at {res.location_name}" if res.location_name else "") + "\n")
    if res.status == DETECTED:
        return EXIT_OK
    if res.status == INFRA_ERROR:
        return EXIT_INFRA
    return EXIT_NOT_FOUND


def _write_report(out_dir, report) -> None:
    out = Path(out_dir)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.render_table(), encoding="utf-8")


def cmd_run_batch(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ConfigError(f"unknown method(s) {', '.join(bad) or '(none)'}; expected {', '.join(METHODS)}")
    cfg = _cfg(args, concurrency=args.concurrency, max_attempts=args.max_attempts)
    out_dir = args.out or cfg["output_dir"]
    if not out_dir:
        raise ConfigError("no output directory: pass --out or set output_dir")
    rt = build_runtime(cfg)
    corpus = read_corpus(args.corpus)
    for err in corpus.errors:
        log.error("%s: %s", args.corpus, err)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    results, report = run_batch(corpus.articles, methods, rt.backends, rt.config, out_dir)
    _write_report(out_dir, report)
    if args.manifests:
        for m, rs in results.items():
            export_manifests([r for r in rs if r.status == DETECTED], Path(out_dir) / f"manifests_{m}.jsonl", cfg["imagery_source"])
    _emit(report.to_dict())
    _pretty(args, report.render_table())
    return EXIT_OK


def cmd_report(args) -> int:
    results = {}
    for m in METHODS:
        p = results_path(args.results_dir, m)
        if not p.exists():
            continue
        rows = []
        with open(p, encoding="utf-8") as f:
            for lineno, raw in enumerate(f, start=1):
                if raw.strip():
                    try:
                        rows.append(PipelineResult.from_dict(json.loads(raw)))
                    except (ValueError, KeyError, TypeError) as e:
                        raise NewsGeoError(f"{p}:{lineno}: {e}") from None
        results[m] = rows
    if not results:
        raise NewsGeoError(f"no results_*.jsonl files in {args.results_dir}")
    requeue = load_config(args.config)["requeue_infra_errors"] if args.config else False
    report = build_report(results, requeue)
    _emit(report.to_dict())
    _pretty(args, report.render_table())
    return EXIT_OK


def cmd_dataset_stats(args) -> int:
    stats = compute_dataset_stats(import_manifests(args.manifest))
    _emit(stats.to_dict())
    _pretty(args, stats.render_table(args.source))
    return EXIT_OK


def cmd_gazetteer_validate(args) -> int:
    from .extraction import load_gazetteer

    g = load_gazetteer(args.path)
    _emit({"path": str(args.path), "entries": len(g), "valid": True})
    return EXIT_OK


def cmd_make_benchmark(args) -> int:
    seed = getattr(args, "seed", None) or 0
    bench = generate_benchmark(args.articles, seed)
    paths = bench.write(args.out)
    config = {
        "gazetteer": "gazetteer.tsv",
        "planted_events": "events.json",
        "seed": seed,
        "concurrency": 4,
        "output_dir": "runs",
    }
    (Path(args.out) / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    _emit({k: str(v) for k, v in paths.items()} | {"config": str(Path(args.out) / "config.json")})
    return EXIT_OK


COMMANDS = {
    "geocode": cmd_geocode,
    "run-batch": cmd_run_batch,
    "report": cmd_report,
    "dataset-stats": cmd_dataset_stats,
    "gazetteer-validate": cmd_gazetteer_validate,
    "make-benchmark": cmd_make_benchmark,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (NewsGeoError, OSError, ValueError) as e:
        sys.stderr.write(f"newsgeo {args.command}: error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
