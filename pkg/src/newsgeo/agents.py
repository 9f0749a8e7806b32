"""Article, verifier and captioning agent roles.

Two families of backends implement each role: scripted ones (fixture replay
and ground-truth oracles, fully deterministic) and a remote chat-completion
backend for live runs.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import requests

from .clients import EventTimeline, ImagerySequence, format_timestamp, parse_timestamp
from .errors import MalformedResponseError, TransportError, ValidationError
from .extraction import ArticleRecord, PlaceExtractor

log = logging.getLogger(__name__)

GEOCODE_ERROR = "geocode_error"
NOT_VISIBLE = "not_visible"
DEFAULT_TIMELINE_PAD_DAYS = 30


@dataclass(frozen=True)
class CandidateLocation:
    name: str
    rationale: str = ""

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValidationError("name", "candidate location name must be non-empty")


@dataclass(frozen=True)
class FailureEntry:
    location_name: str
    kind: str
    reason: str = ""

    def __post_init__(self):
        if self.kind not in (GEOCODE_ERROR, NOT_VISIBLE):
            raise ValidationError("kind", f"unknown failure kind {self.kind!r}")
        if self.kind == NOT_VISIBLE and not self.reason:
            raise ValidationError("reason", "not_visible failures need the verifier's reason")

    def to_dict(self) -> dict:
        return {"location_name": self.location_name, "kind": self.kind, "reason": self.reason}

    @classmethod
    def from_dict(cls, d: dict) -> FailureEntry:
        return cls(d["location_name"], d["kind"], d.get("reason", ""))


@dataclass(frozen=True)
class VerifierVerdict:
    visible: bool
    reason: str

    def __post_init__(self):
        if not self.reason:
            raise ValidationError("reason", "verdict needs a reason")


@dataclass(frozen=True)
class Caption:
    text: str
    referenced_frames: tuple[dt.datetime, ...] = ()

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValidationError("text", "caption must be non-empty")
        object.__setattr__(self, "referenced_frames", tuple(self.referenced_frames))

    def to_dict(self) -> dict:
        return {"text": self.text, "referenced_frames": [format_timestamp(t) for t in self.referenced_frames]}

    @classmethod
    def from_dict(cls, d: dict) -> Caption:
        return cls(d["text"], tuple(parse_timestamp(t) for t in d.get("referenced_frames", [])))


Proposal = tuple[CandidateLocation, EventTimeline]


def default_timeline(article: ArticleRecord) -> EventTimeline:
    return EventTimeline.around(article.published, DEFAULT_TIMELINE_PAD_DAYS)


def failed_names(failures: Sequence[FailureEntry]) -> set[str]:
    return {f.location_name.casefold() for f in failures}


class ArticleAgent(ABC):
    @abstractmethod
    def propose(self, article: ArticleRecord, failures: Sequence[FailureEntry]) -> Proposal | None:
        """Next candidate not among ``failures``, or None when out of ideas."""


class VerifierAgent(ABC):
    @abstractmethod
    def verify(self, article: ArticleRecord, imagery: ImagerySequence, location: str | None = None) -> VerifierVerdict: ...


class CaptioningAgent(ABC):
    @abstractmethod
    def caption(self, article: ArticleRecord, imagery: ImagerySequence, location: str | None = None) -> Caption: ...


# -- scripted backends ------------------------------------------------------


@dataclass(frozen=True)
class ArticleScript:
    proposals: tuple[tuple[str, dt.date | None, dt.date | None], ...] = ()
    verdicts: dict = field(default_factory=dict)
    caption_template: str | None = None


def load_fixture(path) -> dict[str, ArticleScript]:
    """Scripted fixture: ``{article_id: {proposals: [{name, start, end}], verdicts: {name: {visible, reason}}, caption_template}}``."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    return parse_fixture(raw)


def parse_fixture(raw: dict) -> dict[str, ArticleScript]:
    out = {}
    for art_id, entry in raw.items():
        props = []
        for p in entry.get("proposals", []):
            start = dt.date.fromisoformat(p["start"]) if p.get("start") else None
            end = dt.date.fromisoformat(p["end"]) if p.get("end") else None
            props.append((p["name"], start, end))
        verdicts = {
            k.casefold(): VerifierVerdict(bool(v["visible"]), v.get("reason") or ("visible" if v["visible"] else "not visible"))
            for k, v in entry.get("verdicts", {}).items()
        }
        out[art_id] = ArticleScript(tuple(props), verdicts, entry.get("caption_template"))
    return out


class ScriptedArticleAgent(ArticleAgent):
    """Replays fixture proposals, indexed by the number of failures so far."""

    def __init__(self, fixture: dict[str, ArticleScript]):
        self.fixture = fixture

    def propose(self, article, failures):
        script = self.fixture.get(article.id)
        if script is None:
            return None
        tried = failed_names(failures)
        for name, start, end in script.proposals[len(failures):]:
            if name.casefold() in tried:
                continue
            if start and end:
                tl = EventTimeline(start, end)
            else:
                tl = default_timeline(article)
            return CandidateLocation(name, "scripted"), tl
        return None


class RelevanceArticleAgent(ArticleAgent):
    """Proposes the article's gazetteer places from most to least mentioned."""

    def __init__(self, extractor: PlaceExtractor):
        self.extractor = extractor

    def propose(self, article, failures):
        tried = failed_names(failures)
        for p in self.extractor.extract(article):
            if p.name.casefold() not in tried:
                return CandidateLocation(p.name, f"mentioned {p.weight} time(s)"), default_timeline(article)
        return None


class OracleVerifier(VerifierAgent):
    """Visible iff any frame carries a planted event; fixture verdicts take precedence."""

    def __init__(self, fixture: dict[str, ArticleScript] | None = None):
        self.fixture = fixture or {}

    def verify(self, article, imagery, location=None):
        if not len(imagery):
            raise ValidationError("imagery", "cannot verify an empty sequence")
        script = self.fixture.get(article.id)
        if script is not None and location is not None and location.casefold() in script.verdicts:
            return script.verdicts[location.casefold()]
        hits = [f for f in imagery.frames if f.planted_event]
        if hits:
            label = hits[0].event_label or "planted change"
            return VerifierVerdict(
                True,
                f"{label} visible from {format_timestamp(hits[0].timestamp)} "
                f"in {len(hits)} of {len(imagery)} frames",
            )
        return VerifierVerdict(False, f"no change matching the article in {len(imagery)} frames")


DEFAULT_CAPTION_TEMPLATE = (
    "Article {article_id}: change near {location} observed across {n_frames} frames. "
    "Frames: {timestamps}."
)


class TemplateCaptioner(CaptioningAgent):
    def __init__(self, fixture: dict[str, ArticleScript] | None = None, template: str = DEFAULT_CAPTION_TEMPLATE):
        self.fixture = fixture or {}
        self.template = template

    def caption(self, article, imagery, location=None):
        script = self.fixture.get(article.id)
        template = (script.caption_template if script and script.caption_template else self.template)
        stamps = [format_timestamp(t) for t in imagery.timestamps]
        text = _fill(
            template,
            article_id=article.id,
            location=location or "the query point",
            n_frames=str(len(stamps)),
            timestamps=", ".join(stamps),
        )
        return Caption(text, tuple(imagery.timestamps))


# -- remote backend ---------------------------------------------------------


def _fill(template: str, **values: str) -> str:
    # literal replacement so JSON braces in templates survive
    for k, v in values.items():
        template = template.replace("{" + k + "}", v)
    return template


def render_failures(failures: Sequence[FailureEntry]) -> str:
    if not failures:
        return "(none)"
    lines = []
    for f in failures:
        line = f"- {f.location_name}: {f.kind}"
        if f.reason:
            line += f": {f.reason}"
        lines.append(line)
    return "\n".join(lines)


def render_frame_table(imagery: ImagerySequence) -> str:
    return "\n".join(
        f"{format_timestamp(f.timestamp)} | {f.scene_id} | {f.cloud_fraction:.3f} | {f.image_ref}" for f in imagery.frames
    )


def load_prompt(role: str, prompts_dir=None) -> str:
    if prompts_dir is not None:
        return Path(prompts_dir, f"{role}.txt").read_text(encoding="utf-8")
    return resources.files("newsgeo").joinpath("prompts", f"{role}.txt").read_text(encoding="utf-8")


class RemoteChatBackend:
    """Chat-completion style endpoint: POST ``{model, messages[, images]}``.

    The reply's ``choices[0].message.content`` must hold one JSON object.
    A schema violation is retried once, then raised as MalformedResponseError.
    """

    def __init__(self, endpoint, model, token_env="SKY_AGENT_TOKEN", timeout=60.0, retries=1,
                 max_in_flight=4, attach_images=False, prompts_dir=None, session=None):
        self.endpoint = endpoint
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.retries = retries
        self.attach_images = attach_images
        self.prompts_dir = prompts_dir
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, body: dict) -> dict:
        headers = {}
        token = os.environ.get(self.token_env) if self.token_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last = None
        for attempt in range(self.retries + 1):
            try:
                with self._slots:
                    resp = self.session.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            except requests.RequestException as e:
                last = e
                log.warning("agent request failed (attempt %d): %s", attempt + 1, e)
                continue
            if resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"agent endpoint: HTTP {resp.status_code}")
            try:
                return resp.json()
            except ValueError:
                return {"_raw": resp.text}
        raise TransportError(f"agent endpoint unreachable: {last}")

    @staticmethod
    def _content(reply: dict) -> dict:
        try:
            text = reply["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponseError("reply has no choices[0].message.content") from None
        text = text.strip()
        if text.startswith("```"):
            text = text.strip("`")
            text = text[text.find("\n") + 1:] if "\n" in text else text
        try:
            obj = json.loads(text)
        except ValueError:
            raise MalformedResponseError(f"content is not JSON: {text[:80]!r}") from None
        if not isinstance(obj, dict):
            raise MalformedResponseError("content is not a JSON object")
        return obj

    def ask(self, prompt: str, parse: Callable[[dict], object], images: Sequence[str] = ()):
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        if self.attach_images and images:
            body["images"] = list(images)
        err = None
        for _ in range(2):
            try:
                return parse(self._content(self._post(body)))
            except MalformedResponseError as e:
                err = e
                log.info("malformed agent response, retrying: %s", e)
        raise err


def _date_or_none(v):
    if v in (None, ""):
        return None
    try:
        return dt.date.fromisoformat(str(v)[:10])
    except ValueError:
        raise MalformedResponseError(f"bad date {v!r}") from None


class RemoteArticleAgent(ArticleAgent):
    def __init__(self, backend: RemoteChatBackend):
        self.backend = backend
        self.template = load_prompt("article", backend.prompts_dir)

    def propose(self, article, failures):
        prompt = _fill(
            self.template,
            article_text=article.text,
            published=article.published.isoformat(),
            failures=render_failures(failures),
        )
        tried = failed_names(failures)

        def parse(obj):
            name = obj.get("name")
            if name is None:
                return None
            if not isinstance(name, str) or not name.strip():
                raise MalformedResponseError("'name' must be a non-empty string or null")
            if name.strip().casefold() in tried:
                raise MalformedResponseError(f"agent repeated failed location {name!r}")
            start, end = _date_or_none(obj.get("start")), _date_or_none(obj.get("end"))
            if start and end:
                if start > end:
                    raise MalformedResponseError("timeline start after end")
                tl = EventTimeline(start, end)
            else:
                tl = default_timeline(article)
            return CandidateLocation(name.strip(), str(obj.get("rationale", ""))), tl

        return self.backend.ask(prompt, parse)


class RemoteVerifier(VerifierAgent):
    def __init__(self, backend: RemoteChatBackend):
        self.backend = backend
        self.template = load_prompt("verifier", backend.prompts_dir)

    def verify(self, article, imagery, location=None):
        if not len(imagery):
            raise ValidationError("imagery", "cannot verify an empty sequence")
        prompt = _fill(
            self.template,
            article_text=article.text,
            location=location or "",
            frame_table=render_frame_table(imagery),
        )

        def parse(obj):
            vis, reason = obj.get("visible"), obj.get("reason")
            if not isinstance(vis, bool) or not isinstance(reason, str) or not reason.strip():
                raise MalformedResponseError("verdict needs boolean 'visible' and non-empty 'reason'")
            return VerifierVerdict(vis, reason.strip())

        return self.backend.ask(prompt, parse, [f.image_ref for f in imagery.frames])


class RemoteCaptioner(CaptioningAgent):
    def __init__(self, backend: RemoteChatBackend):
        self.backend = backend
        self.template = load_prompt("caption", backend.prompts_dir)

    def caption(self, article, imagery, location=None):
        prompt = _fill(
            self.template,
            article_text=article.text,
            location=location or "",
            frame_table=render_frame_table(imagery),
        )
        known = set(imagery.timestamps)

        def parse(obj):
            text = obj.get("caption")
            if not isinstance(text, str) or not text.strip():
                raise MalformedResponseError("caption needs non-empty 'caption'")
            frames = []
            for raw in obj.get("frames") or []:
                try:
                    t = parse_timestamp(str(raw))
                except ValueError:
                    raise MalformedResponseError(f"bad frame timestamp {raw!r}") from None
                if t not in known:
                    raise MalformedResponseError(f"caption cites unknown frame {raw!r}")
                frames.append(t)
            return Caption(text.strip(), tuple(frames))

        return self.backend.ask(prompt, parse, [f.image_ref for f in imagery.frames])
