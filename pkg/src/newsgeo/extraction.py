"""Gazetteer loading and weighted place extraction from article text."""

from __future__ import annotations

import datetime as dt
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Protocol

from .errors import NewsGeoError, ValidationError
from .geo import GeoBoundingBox, GeoCoordinate, WeightedPlace


class GazetteerError(NewsGeoError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class DuplicateNameError(GazetteerError):
    pass


class CorpusError(NewsGeoError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class ArticleRecord:
    id: str
    text: str
    published: dt.date
    source_url: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("id", "must be non-empty")
        if not self.text:
            raise ValidationError("text", "must be non-empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "published": self.published.isoformat(),
            "source_url": self.source_url,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ArticleRecord:
        for key in ("id", "text", "published"):
            if key not in d:
                raise ValidationError(key, "missing")
        try:
            published = dt.date.fromisoformat(str(d["published"])[:10])
        except ValueError as e:
            raise ValidationError("published", str(e)) from None
        return cls(str(d["id"]), d["text"], published, d.get("source_url"))


class Gazetteer:
    """Immutable name -> (coordinate, bbox) table with case-insensitive lookup."""

    def __init__(self, entries: Iterable[tuple[str, GeoCoordinate, GeoBoundingBox]] = ()):
        self._entries: dict[str, tuple[str, GeoCoordinate, GeoBoundingBox]] = {}
        for name, coord, bbox in entries:
            self._add(name, coord, bbox)
        self._pattern = None

    def _add(self, name, coord, bbox, line=None):
        if not name:
            raise GazetteerError("empty place name", line)
        key = name.casefold()
        if key in self._entries:
            raise DuplicateNameError(
                f"duplicate place name {name!r} (already have {self._entries[key][0]!r})", line
            )
        if not bbox.contains_coordinate(coord):
            raise GazetteerError(f"coordinate of {name!r} lies outside its bbox", line)
        self._entries[key] = (name, coord, bbox)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name.casefold() in self._entries

    def __iter__(self) -> Iterator[str]:
        return (v[0] for v in self._entries.values())

    @property
    def entries(self) -> dict[str, tuple[GeoCoordinate, GeoBoundingBox]]:
        return {name: (c, b) for name, c, b in self._entries.values()}

    def lookup(self, name: str) -> tuple[str, GeoCoordinate, GeoBoundingBox] | None:
        return self._entries.get(name.strip().casefold())

    def pattern(self) -> re.Pattern:
        if self._pattern is None:
            # longest alternatives first so the regex engine prefers them at a given start
            names = sorted((v[0] for v in self._entries.values()), key=lambda n: (-len(n), n))
            alt = "|".join(re.escape(n) for n in names)
            self._pattern = re.compile(rf"(?<!\w)(?:{alt})(?!\w)", re.IGNORECASE)
        return self._pattern


def _parse_float(raw, field_name, line):
    try:
        return float(raw)
    except ValueError:
        raise GazetteerError(f"{field_name}: not a number: {raw!r}", line) from None


def load_gazetteer(path) -> Gazetteer:
    """Read a tab-separated gazetteer: name, lat, lon, south, north, west, east."""
    g = Gazetteer()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 7:
                raise GazetteerError(f"expected 7 tab-separated fields, got {len(cols)}", lineno)
            name = cols[0].strip()
            lat, lon, south, north, west, east = (
                _parse_float(v, k, lineno)
                for v, k in zip(cols[1:], ("lat", "lon", "south", "north", "west", "east"))
            )
            try:
                coord = GeoCoordinate(lat, lon)
                bbox = GeoBoundingBox(south, north, west, east)
            except ValidationError as e:
                column = {"lat_deg": "lat", "lon_deg": "lon"}.get(e.field, e.field)
                err = GazetteerError(f"{column}: {str(e).split(': ', 1)[1]}", lineno)
                err.field = column
                raise err from None
            g._add(name, coord, bbox, lineno)
    return g


def write_gazetteer(g: Gazetteer, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("# name\tlat\tlon\tsouth\tnorth\twest\teast\n")
        for name, (c, b) in g.entries.items():
            f.write(
                "\t".join(
                    [name] + [repr(v) for v in (c.lat_deg, c.lon_deg, b.south, b.north, b.west, b.east)]
                )
                + "\n"
            )


class PlaceExtractor(Protocol):
    def extract(self, article: ArticleRecord) -> list[WeightedPlace]: ...


def count_mentions(text: str, g: Gazetteer) -> Counter:
    """Count non-overlapping, case-insensitive, whole-word matches per canonical name.

    Scanning is leftmost-first; at a given start the longest name wins.
    """
    counts: Counter = Counter()
    if not text or not len(g):
        return counts
    for m in g.pattern().finditer(text):
        entry = g.lookup(m.group(0))
        if entry is None:  # case-folding differs from re.IGNORECASE for a few code points
            entry = next(v for v in g._entries.values() if v[0].lower() == m.group(0).lower())
        counts[entry[0]] += 1
    return counts


def extract_weighted_places(article: ArticleRecord, g: Gazetteer) -> list[WeightedPlace]:
    counts = count_mentions(article.text, g)
    places = []
    for name, w in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        _, coord, bbox = g.lookup(name)
        places.append(WeightedPlace(name, coord, bbox, w))
    return places


@dataclass
class GazetteerExtractor:
    gazetteer: Gazetteer

    def extract(self, article: ArticleRecord) -> list[WeightedPlace]:
        return extract_weighted_places(article, self.gazetteer)


@dataclass
class CorpusReadResult:
    articles: list[ArticleRecord] = field(default_factory=list)
    errors: list[CorpusError] = field(default_factory=list)


def read_corpus(path) -> CorpusReadResult:
    """Parse a JSONL article corpus, collecting per-line errors instead of stopping."""
    out = CorpusReadResult()
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                if not isinstance(obj, dict):
                    raise ValidationError("record", "not a JSON object")
                art = ArticleRecord.from_dict(obj)
            except (json.JSONDecodeError, ValidationError, TypeError) as e:
                out.errors.append(CorpusError(str(e), lineno))
                continue
            if art.id in seen:
                out.errors.append(CorpusError(f"duplicate article id {art.id!r}", lineno))
                continue
            seen.add(art.id)
            out.articles.append(art)
    return out


def write_corpus(articles: Iterable[ArticleRecord], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for a in articles:
            f.write(json.dumps(a.to_dict(), ensure_ascii=False) + "\n")
