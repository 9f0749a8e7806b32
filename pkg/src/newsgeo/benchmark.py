"""Synthetic planted-event benchmark: gazetteer, events table and article corpus.

Every article describes one event at a small town (the event site). Articles
fall into fixed archetypes that decide how often each place is mentioned:

========  =====  ==============================================  ===============
archetype share  mentions                                        who can detect
========  =====  ==============================================  ===============
solo      15%    site x2-3                                       all methods
quiet      5%    site x2, but no planted event                   none
region    20%    site x3, containing region x1                   gipsy, agentic
far4      20%    distant city x4, site x2, region x1             agentic
far3      25%    distant city x3, site x2, region x2             gipsy, agentic
decoy     15%    distant city x4, second city x3, site x1        agentic
========  =====  ==============================================  ===============

In the last three (60% of articles) the most-mentioned place is not the
event site. Detection truth comes from the planted-event table consumed by
:class:`~newsgeo.clients.SyntheticImagery`.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .clients import PlantedEvent, write_planted_events
from .extraction import ArticleRecord, Gazetteer, write_corpus, write_gazetteer
from .geo import GeoBoundingBox, GeoCoordinate

ARCHETYPES = (
    ("solo", 0.15),
    ("quiet", 0.05),
    ("region", 0.20),
    ("far4", 0.20),
    ("far3", 0.25),
    ("decoy", 0.15),
)
EXPECTED = {
    "solo": {"centroid", "gipsy", "agentic"},
    "quiet": set(),
    "region": {"gipsy", "agentic"},
    "far4": {"agentic"},
    "far3": {"gipsy", "agentic"},
    "decoy": {"agentic"},
}

TOWN_HALF_DEG = 0.02
REGION_HALF_DEG = 1.2
CITY_HALF_DEG = 0.05

_SYLLABLES = ["kar", "vel", "dro", "mis", "tan", "quor", "lem", "bax", "zin", "ost", "rul", "pey", "gav", "sor", "nim", "thal"]
_EVENTS = ["flood", "wildfire", "landslide", "port expansion", "dam construction", "refinery fire", "bridge collapse"]

_SITE_SENTENCES = [
    "Residents of {p} described the {e} as the worst in decades.",
    "Emergency crews reached {p} on the second day.",
    "Aerial footage showed the {e} spreading around {p}.",
    "Officials in {p} asked for outside help.",
]
_OTHER_SENTENCES = [
    "Ministers met in {p} to discuss the response.",
    "Aid flights were organised from {p}.",
    "A spokesperson speaking in {p} declined to comment.",
    "Donations poured in from {p} over the weekend.",
]
_REGION_SENTENCES = [
    "The wider {p} province was placed on alert.",
    "Authorities across {p} monitored the situation.",
]


@dataclass
class Benchmark:
    gazetteer: Gazetteer
    events: list[PlantedEvent]
    articles: list[ArticleRecord]
    archetypes: dict[str, str] = field(default_factory=dict)

    def expected_detections(self, method: str) -> int:
        return sum(method in EXPECTED[a] for a in self.archetypes.values())

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "gazetteer": out / "gazetteer.tsv",
            "planted_events": out / "events.json",
            "corpus": out / "corpus.jsonl",
            "truth": out / "truth.json",
        }
        write_gazetteer(self.gazetteer, paths["gazetteer"])
        write_planted_events(self.events, paths["planted_events"])
        write_corpus(self.articles, paths["corpus"])
        paths["truth"].write_text(json.dumps(self.archetypes, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return paths


class _Names:
    def __init__(self, rng):
        self.rng = rng
        self.used = set()

    def __call__(self) -> str:
        while True:
            n = "".join(self.rng.choice(_SYLLABLES) for _ in range(self.rng.randint(2, 3))).capitalize()
            if n.casefold() not in self.used:
                self.used.add(n.casefold())
                return n


def _allocate(n: int) -> list[str]:
    counts = [int(round(share * n)) for _, share in ARCHETYPES]
    counts[0] += n - sum(counts)
    out = []
    for (name, _), c in zip(ARCHETYPES, counts):
        out.extend([name] * max(c, 0))
    return out[:n]


def _box(lat, lon, half):
    return GeoBoundingBox(round(lat - half, 6), round(lat + half, 6), round(lon - half, 6), round(lon + half, 6))


def generate_benchmark(n_articles: int = 100, seed: int = 0) -> Benchmark:
    rng = random.Random(seed)
    names = _Names(rng)
    kinds = _allocate(n_articles)
    rng.shuffle(kinds)

    # 4 degree world cells; each site gets its own cell so articles do not interact
    cells = [(lat, lon) for lat in range(-48, 60, 4) for lon in range(-168, 168, 4)]
    rng.shuffle(cells)
    if len(cells) < 3 * n_articles:
        raise ValueError("too many articles for the synthetic world")
    cell_iter = iter(cells)

    entries = []
    events = []
    articles = []
    archetypes = {}
    base_day = dt.date(2022, 1, 1)
    for k, kind in enumerate(kinds):
        clat, clon = next(cell_iter)
        # region centred in the cell; site offset 0.6-0.9 deg from the region centre
        rlat, rlon = clat + 2.0, clon + 2.0
        off = rng.uniform(0.6, 0.9)
        ang = rng.uniform(0, 2 * math.pi)
        slat, slon = rlat + off * math.sin(ang), rlon + off * math.cos(ang)
        slat, slon = round(slat, 4), round(slon, 4)
        site, region = names(), names()
        entries.append((site, GeoCoordinate(slat, slon), _box(slat, slon, TOWN_HALF_DEG)))
        entries.append((region, GeoCoordinate(rlat, rlon), _box(rlat, rlon, REGION_HALF_DEG)))

        mentions = []
        if kind == "solo":
            mentions = [("site", site)] * rng.randint(2, 3)
        elif kind == "quiet":
            mentions = [("site", site)] * 2
        elif kind == "region":
            mentions = [("site", site)] * 3 + [("region", region)]
        else:
            dlat, dlon = next(cell_iter)
            city = names()
            entries.append((city, GeoCoordinate(dlat + 2.0, dlon + 2.0), _box(dlat + 2.0, dlon + 2.0, CITY_HALF_DEG)))
            if kind == "far4":
                mentions = [("other", city)] * 4 + [("site", site)] * 2 + [("region", region)]
            elif kind == "far3":
                mentions = [("other", city)] * 3 + [("site", site)] * 2 + [("region", region)] * 2
            else:
                elat, elon = next(cell_iter)
                second = names()
                entries.append((second, GeoCoordinate(elat + 2.0, elon + 2.0), _box(elat + 2.0, elon + 2.0, CITY_HALF_DEG)))
                mentions = [("other", city)] * 4 + [("other", second)] * 3 + [("site", site)]
        rng.shuffle(mentions)

        event = rng.choice(_EVENTS)
        sentences = [f"A {event} has been reported."]
        for role, place in mentions:
            pool = _SITE_SENTENCES if role == "site" else _REGION_SENTENCES if role == "region" else _OTHER_SENTENCES
            sentences.append(rng.choice(pool).format(p=place, e=event))
        published = base_day + dt.timedelta(days=rng.randrange(0, 1000))
        aid = f"bench-{k:04d}"
        articles.append(ArticleRecord(aid, " ".join(sentences), published, f"https://news.example/{aid}"))
        archetypes[aid] = kind
        if kind != "quiet":
            events.append(
                PlantedEvent(
                    slat, slon,
                    published - dt.timedelta(days=rng.randint(1, 10)),
                    published + dt.timedelta(days=rng.randint(5, 20)),
                    f"{event} at {site}",
                )
            )
    return Benchmark(Gazetteer(entries), events, articles, archetypes)
