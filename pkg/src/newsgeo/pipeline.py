"""Per-article geocode-fetch-verify runs, batch execution and yield metrics."""

from __future__ import annotations

import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .agents import (
    GEOCODE_ERROR,
    NOT_VISIBLE,
    ArticleAgent,
    Caption,
    CaptioningAgent,
    FailureEntry,
    VerifierAgent,
)
from .centroid import weighted_centroid
from .clients import EventTimeline, Geocoder, ImageryClient, ImagerySequence
from .errors import BackendError, DegenerateCentroidError, MalformedResponseError, NewsGeoError
from .extraction import ArticleRecord, PlaceExtractor
from .geo import GeoCoordinate
from .gipsy import gipsy_locate

log = logging.getLogger(__name__)

CENTROID, GIPSY, AGENTIC = "centroid", "gipsy", "agentic"
METHODS = (CENTROID, GIPSY, AGENTIC)
METHOD_LABELS = {CENTROID: "Weighted Centroid", GIPSY: "GIPSY", AGENTIC: "Agentic Feedback"}

DETECTED = "detected"
EXHAUSTED = "exhausted"
NO_CANDIDATES = "no_candidates"
INFRA_ERROR = "infra_error"
STATUSES = (DETECTED, EXHAUSTED, NO_CANDIDATES, INFRA_ERROR)


class UndefinedBaselineError(NewsGeoError):
    pass


@dataclass
class PipelineConfig:
    max_attempts: int = 5
    method: str = AGENTIC
    concurrency: int = 1
    seed: int = 0
    timeline_pad_days: int = 30
    requeue_infra_errors: bool = False

    def __post_init__(self):
        if int(self.max_attempts) != self.max_attempts or self.max_attempts < 1:
            raise ValueError("max_attempts must be a positive integer")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")


@dataclass
class Backends:
    geocoder: Geocoder
    imagery: ImageryClient
    article_agent: ArticleAgent
    verifier: VerifierAgent
    captioner: CaptioningAgent
    extractor: PlaceExtractor


@dataclass
class PipelineResult:
    article_id: str
    method: str
    status: str
    attempts: int = 0
    failures: list[FailureEntry] = field(default_factory=list)
    location_name: str | None = None
    coordinate: GeoCoordinate | None = None
    timeline: EventTimeline | None = None
    caption: Caption | None = None
    imagery: ImagerySequence | None = None
    error: str | None = None

    @property
    def detected(self) -> bool:
        return self.status == DETECTED

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "method": self.method,
            "status": self.status,
            "attempts": self.attempts,
            "failures": [f.to_dict() for f in self.failures],
            "location_name": self.location_name,
            "coordinate": self.coordinate.to_dict() if self.coordinate else None,
            "timeline": self.timeline.to_dict() if self.timeline else None,
            "caption": self.caption.to_dict() if self.caption else None,
            "imagery": self.imagery.to_dict() if self.imagery else None,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> PipelineResult:
        return cls(
            article_id=d["article_id"],
            method=d["method"],
            status=d["status"],
            attempts=d.get("attempts", 0),
            failures=[FailureEntry.from_dict(f) for f in d.get("failures", [])],
            location_name=d.get("location_name"),
            coordinate=GeoCoordinate.from_dict(d["coordinate"]) if d.get("coordinate") else None,
            timeline=EventTimeline.from_dict(d["timeline"]) if d.get("timeline") else None,
            caption=Caption.from_dict(d["caption"]) if d.get("caption") else None,
            imagery=ImagerySequence.from_dict(d["imagery"]) if d.get("imagery") else None,
            error=d.get("error"),
        )


def run_article_agentic(article: ArticleRecord, backends: Backends, config: PipelineConfig) -> PipelineResult:
    """Iterative search and verification for one article.

    Each round asks the article agent for a new candidate (given every prior
    failure), geocodes it, fetches imagery over the proposed timeline and asks
    the verifier. A geocoding miss or a negative verdict is appended to the
    failure list and the loop continues; the first positive verdict is
    captioned and ends the search.
    """
    res = PipelineResult(article.id, AGENTIC, EXHAUSTED)
    proposed: set[str] = set()
    try:
        while res.attempts < config.max_attempts:
            try:
                proposal = backends.article_agent.propose(article, list(res.failures))
            except MalformedResponseError as e:
                res.status, res.error = NO_CANDIDATES, f"article agent: {e}"
                return res
            if proposal is None:
                res.status = NO_CANDIDATES
                return res
            candidate, timeline = proposal
            key = candidate.name.casefold()
            if key in proposed:
                res.status, res.error = NO_CANDIDATES, f"article agent repeated {candidate.name!r}"
                return res
            proposed.add(key)
            res.attempts += 1

            geo = backends.geocoder.geocode(candidate.name)
            if geo is None:
                res.failures.append(FailureEntry(candidate.name, GEOCODE_ERROR))
                continue

            imagery = backends.imagery.fetch(geo.coordinate, timeline)
            if not len(imagery):
                res.failures.append(FailureEntry(candidate.name, NOT_VISIBLE, "no imagery available for the timeline"))
                continue
            try:
                verdict = backends.verifier.verify(article, imagery, candidate.name)
            except MalformedResponseError as e:
                res.failures.append(FailureEntry(candidate.name, NOT_VISIBLE, f"malformed verifier response: {e}"))
                continue
            if not verdict.visible:
                res.failures.append(FailureEntry(candidate.name, NOT_VISIBLE, verdict.reason))
                continue

            res.caption = backends.captioner.caption(article, imagery, candidate.name)
            res.status = DETECTED
            res.location_name = candidate.name
            res.coordinate = geo.coordinate
            res.timeline = timeline
            res.imagery = imagery
            return res
    except BackendError as e:
        return _infra(res, e)
    return res


def _infra(res: PipelineResult, e: Exception) -> PipelineResult:
    log.warning("article %s (%s): backend failure: %s", res.article_id, res.method, e)
    res.status = INFRA_ERROR
    res.error = f"{type(e).__name__}: {e}"
    res.location_name = res.coordinate = res.caption = res.imagery = res.timeline = None
    return res


def run_article_traditional(article: ArticleRecord, method: str, backends: Backends, config: PipelineConfig) -> PipelineResult:
    """Geocode by weighted centroid or GIPSY, then fetch and verify once."""
    if method not in (CENTROID, GIPSY):
        raise ValueError(f"traditional method must be centroid or gipsy, got {method!r}")
    res = PipelineResult(article.id, method, EXHAUSTED)
    places = backends.extractor.extract(article)
    if not places:
        res.status = NO_CANDIDATES
        return res
    res.attempts = 1
    label = f"{METHOD_LABELS[method].lower()} of " + ", ".join(p.name for p in places)
    try:
        coord = weighted_centroid(places) if method == CENTROID else gipsy_locate(places)
    except DegenerateCentroidError as e:
        res.failures.append(FailureEntry(label, GEOCODE_ERROR, str(e)))
        return res
    timeline = EventTimeline.around(article.published, config.timeline_pad_days)
    try:
        imagery = backends.imagery.fetch(coord, timeline)
        if not len(imagery):
            res.failures.append(FailureEntry(label, NOT_VISIBLE, "no imagery available for the timeline"))
            return res
        try:
            verdict = backends.verifier.verify(article, imagery, label)
        except MalformedResponseError as e:
            res.failures.append(FailureEntry(label, NOT_VISIBLE, f"malformed verifier response: {e}"))
            return res
        if not verdict.visible:
            res.failures.append(FailureEntry(label, NOT_VISIBLE, verdict.reason))
            return res
        res.caption = backends.captioner.caption(article, imagery, label)
    except BackendError as e:
        return _infra(res, e)
    res.status = DETECTED
    res.location_name = label
    res.coordinate = coord
    res.timeline = timeline
    res.imagery = imagery
    return res


def run_article(article: ArticleRecord, method: str, backends: Backends, config: PipelineConfig) -> PipelineResult:
    if method == AGENTIC:
        return run_article_agentic(article, backends, config)
    return run_article_traditional(article, method, backends, config)


# -- metrics ----------------------------------------------------------------


def _round1(x: Decimal) -> Decimal:
    return x.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class MetricsRow:
    method: str
    detections: int
    total_articles: int
    yield_pct: float
    improvement_over_baseline: float | None = None

    @property
    def yield_display(self) -> str:
        return f"{_round1(Decimal(self.detections * 100) / Decimal(self.total_articles))}%"

    @property
    def improvement_display(self) -> str:
        if self.improvement_over_baseline is None:
            return "--"
        return f"{_round1(Decimal(repr(self.improvement_over_baseline)))}×"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "detections": self.detections,
            "total_articles": self.total_articles,
            "yield_pct": self.yield_pct,
            "improvement_over_baseline": self.improvement_over_baseline,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MetricsRow:
        return cls(d["method"], d["detections"], d["total_articles"], d["yield_pct"], d.get("improvement_over_baseline"))


def compute_metrics(detections: int, total: int, baseline_detections: int | None = None, method: str = "") -> MetricsRow:
    """Yield in percent and the ratio to a baseline's detections over the same articles."""
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= detections <= total:
        raise ValueError("detections must be between 0 and total")
    improvement = None
    if baseline_detections is not None:
        if baseline_detections == 0:
            raise UndefinedBaselineError("baseline has zero detections; improvement is undefined")
        improvement = detections / baseline_detections
    return MetricsRow(method, detections, total, 100.0 * detections / total, improvement)


@dataclass
class BatchReport:
    rows: list[MetricsRow] = field(default_factory=list)
    baseline: str = CENTROID

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "baseline": self.baseline}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> BatchReport:
        return cls([MetricsRow.from_dict(r) for r in d.get("rows", [])], d.get("baseline", CENTROID))

    def render_table(self) -> str:
        head = ("Method", "Event Detections", "Yield", "Increase over Centroid Baseline")
        body = [
            (
                METHOD_LABELS.get(r.method, r.method),
                str(r.detections),
                r.yield_display,
                "n/a" if r.method != self.baseline and r.improvement_over_baseline is None else r.improvement_display,
            )
            for r in self.rows
        ]
        widths = [max(len(row[k]) for row in [head, *body]) for k in range(4)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [head, *body]]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines) + "\n"


def build_report(results: dict[str, Sequence[PipelineResult]], requeue_infra_errors: bool = False) -> BatchReport:
    """Metrics rows in fixed order (centroid, gipsy, agentic) for the methods present."""

    def counted(rs):
        if requeue_infra_errors:
            return [r for r in rs if r.status != INFRA_ERROR]
        return list(rs)

    base = None
    if CENTROID in results:
        base = sum(r.detected for r in counted(results[CENTROID]))
    rows = []
    for m in METHODS:
        if m not in results:
            continue
        rs = counted(results[m])
        if not rs:
            continue
        det = sum(r.detected for r in rs)
        if m == CENTROID or not base:
            row = compute_metrics(det, len(rs), method=m)
        else:
            row = compute_metrics(det, len(rs), base, method=m)
        rows.append(row)
    return BatchReport(rows)


# -- batch ------------------------------------------------------------------


class ResultsSink:
    """Append-only JSONL results file; lets interrupted batches resume."""

    def __init__(self, path, requeue_infra_errors=False):
        self.path = Path(path)
        self.requeue = requeue_infra_errors
        self._lock = threading.Lock()
        self._latest: dict[str, PipelineResult] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                for lineno, raw in enumerate(f, start=1):
                    if not raw.strip():
                        continue
                    try:
                        r = PipelineResult.from_dict(json.loads(raw))
                    except (ValueError, KeyError, TypeError) as e:
                        log.warning("%s:%d: skipping unreadable result (%s)", self.path, lineno, e)
                        continue
                    self._latest[r.article_id] = r

    def completed(self) -> set[str]:
        return {k for k, r in self._latest.items() if not (self.requeue and r.status == INFRA_ERROR)}

    def get(self, article_id):
        return self._latest.get(article_id)

    def append(self, r: PipelineResult) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(r.to_json() + "\n")
                f.flush()
            self._latest[r.article_id] = r

    def finalize(self, order: Sequence[str]) -> None:
        """Rewrite the file with one line per article in corpus order."""
        with self._lock:
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            with open(tmp, "w", encoding="utf-8") as f:
                for aid in order:
                    if aid in self._latest:
                        f.write(self._latest[aid].to_json() + "\n")
            os.replace(tmp, self.path)


def results_path(out_dir, method) -> Path:
    return Path(out_dir) / f"results_{method}.jsonl"


def run_batch(
    articles: Sequence[ArticleRecord],
    methods: Iterable[str],
    backends: Backends,
    config: PipelineConfig,
    out_dir=None,
) -> tuple[dict[str, list[PipelineResult]], BatchReport]:
    """Run every method over the corpus with article-level parallelism.

    With ``out_dir``, results are appended as they finish and articles already
    present in a method's results file are skipped.
    """
    methods = [m for m in METHODS if m in set(methods)]
    order = [a.id for a in articles]
    all_results: dict[str, list[PipelineResult]] = {}
    for method in methods:
        sink = ResultsSink(results_path(out_dir, method), config.requeue_infra_errors) if out_dir else None
        done = sink.completed() if sink else set()
        todo = [a for a in articles if a.id not in done]
        if done:
            log.info("%s: resuming, %d of %d articles already done", method, len(articles) - len(todo), len(articles))

        def work(a, method=method, sink=sink):
            try:
                r = run_article(a, method, backends, config)
            except NewsGeoError as e:
                r = _infra(PipelineResult(a.id, method, INFRA_ERROR), e)
            if sink:
                sink.append(r)
            return r

        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            fresh = {r.article_id: r for r in pool.map(work, todo)}
        merged = []
        for aid in order:
            r = fresh.get(aid) or (sink.get(aid) if sink else None)
            if r is not None:
                merged.append(r)
        if sink:
            sink.finalize(order)
        all_results[method] = merged
    return all_results, build_report(all_results, config.requeue_infra_errors)
