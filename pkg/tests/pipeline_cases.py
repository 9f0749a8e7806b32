"""Scripted agent-loop scenarios with call-recording agents."""

from __future__ import annotations

import datetime as dt

from newsgeo.agents import (
    CaptioningAgent,
    OracleVerifier,
    RelevanceArticleAgent,
    ScriptedArticleAgent,
    TemplateCaptioner,
    VerifierAgent,
    parse_fixture,
)
from newsgeo.clients import GazetteerGeocoder, PlantedEvent, SyntheticImagery
from newsgeo.extraction import ArticleRecord, Gazetteer, GazetteerExtractor
from newsgeo.geo import GeoBoundingBox, GeoCoordinate
from newsgeo.pipeline import Backends

PUBLISHED = dt.date(2024, 6, 10)

# name -> (lat, lon); "Nowhere" is deliberately missing from the gazetteer
PLACES = {
    "Alderton": (12.0, 30.0),
    "Brackwater": (14.0, 34.0),
    "Cindervale": (16.0, 38.0),
    "Dunmore": (18.0, 42.0),
    "Eastreach": (20.0, 46.0),
}


def gazetteer() -> Gazetteer:
    return Gazetteer([
        (n, GeoCoordinate(lat, lon), GeoBoundingBox(lat - 0.02, lat + 0.02, lon - 0.02, lon + 0.02))
        for n, (lat, lon) in PLACES.items()
    ])


def planted(name: str) -> PlantedEvent:
    lat, lon = PLACES[name]
    return PlantedEvent(lat, lon, PUBLISHED - dt.timedelta(days=3), PUBLISHED + dt.timedelta(days=9), f"flood at {name}")


class RecordingVerifier(VerifierAgent):
    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def verify(self, article, imagery, location=None):
        self.calls.append(location)
        return self.inner.verify(article, imagery, location)


class RecordingCaptioner(CaptioningAgent):
    def __init__(self, inner=None):
        self.inner = inner or TemplateCaptioner()
        self.calls = []

    def caption(self, article, imagery, location=None):
        self.calls.append(location)
        return self.inner.caption(article, imagery, location)


class RecordingAgent(ScriptedArticleAgent):
    def __init__(self, fixture):
        super().__init__(fixture)
        self.seen_failures = []

    def propose(self, article, failures):
        self.seen_failures.append(list(failures))
        return super().propose(article, failures)


def scenario(proposals, event_site=None, article_id="trace"):
    """Article, backends and the recording agents for one scripted run."""
    art = ArticleRecord(article_id, "An event was reported.", PUBLISHED, f"https://news.example/{article_id}")
    fx = parse_fixture({article_id: {"proposals": [{"name": n} for n in proposals]}})
    g = gazetteer()
    events = (planted(event_site),) if event_site else ()
    agent = RecordingAgent(fx)
    verifier = RecordingVerifier(OracleVerifier(fx))
    captioner = RecordingCaptioner()
    backends = Backends(GazetteerGeocoder(g), SyntheticImagery(0, events), agent, verifier, captioner, GazetteerExtractor(g))
    return art, backends, agent, verifier, captioner


IMMEDIATE = dict(proposals=["Alderton"], event_site="Alderton")
RECOVER = dict(proposals=["Nowhere", "Brackwater", "Cindervale"], event_site="Cindervale")
EXHAUST = dict(proposals=["Alderton", "Brackwater", "Cindervale", "Dunmore", "Eastreach", "Nowhere"], event_site=None)


def benchmark_backends(bench, seed=0) -> Backends:
    """Deterministic backends for a generated benchmark (relevance-ordered agent)."""
    ex = GazetteerExtractor(bench.gazetteer)
    return Backends(
        GazetteerGeocoder(bench.gazetteer),
        SyntheticImagery(seed, tuple(bench.events)),
        RelevanceArticleAgent(ex),
        OracleVerifier(),
        TemplateCaptioner(),
        ex,
    )
