"""Service boundary: forward geocoding and satellite imagery retrieval.

Each service has a deterministic local backend (gazetteer lookup, synthetic
imagery with planted events) and a generic HTTP backend.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import math
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import requests

from .errors import MalformedResponseError, TransportError, ValidationError
from .extraction import Gazetteer
from .geo import GeoBoundingBox, GeoCoordinate, normalize_longitude

log = logging.getLogger(__name__)

DEFAULT_CADENCE_DAYS = 7
DEFAULT_EVENT_RADIUS_DEG = 0.05
DEFAULT_WINDOW_DEG = 0.05


@dataclass(frozen=True)
class EventTimeline:
    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.start > self.end:
            raise ValidationError("timeline", f"start {self.start} is after end {self.end}")

    @classmethod
    def around(cls, day: dt.date, days: int = 30) -> EventTimeline:
        pad = dt.timedelta(days=days)
        return cls(day - pad, day + pad)

    def contains(self, t: dt.date | dt.datetime) -> bool:
        d = t.date() if isinstance(t, dt.datetime) else t
        return self.start <= d <= self.end

    def overlaps(self, start: dt.date, end: dt.date) -> bool:
        return start <= self.end and end >= self.start

    def to_dict(self) -> dict:
        return {"start": self.start.isoformat(), "end": self.end.isoformat()}

    @classmethod
    def from_dict(cls, d: dict) -> EventTimeline:
        return cls(dt.date.fromisoformat(d["start"]), dt.date.fromisoformat(d["end"]))


@dataclass(frozen=True)
class GeocodeResult:
    coordinate: GeoCoordinate
    bbox: GeoBoundingBox

    def __post_init__(self):
        if not self.bbox.contains_coordinate(self.coordinate):
            raise ValidationError("coordinate", "geocoded coordinate lies outside its bbox")


def parse_timestamp(raw: str) -> dt.datetime:
    t = dt.datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if t.tzinfo is None:
        t = t.replace(tzinfo=dt.timezone.utc)
    return t.astimezone(dt.timezone.utc)


def format_timestamp(t: dt.datetime) -> str:
    return t.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ImageFrame:
    timestamp: dt.datetime
    scene_id: str
    cloud_fraction: float
    image_ref: str
    planted_event: bool | None = None
    event_label: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.cloud_fraction <= 1.0:
            raise ValidationError("cloud_fraction", f"must be in [0, 1], got {self.cloud_fraction!r}")
        if self.timestamp.tzinfo is None:
            raise ValidationError("timestamp", "must be timezone-aware")

    def to_dict(self) -> dict:
        d = {
            "timestamp": format_timestamp(self.timestamp),
            "scene_id": self.scene_id,
            "cloud_fraction": self.cloud_fraction,
            "image_ref": self.image_ref,
        }
        if self.planted_event is not None:
            d["planted_event"] = self.planted_event
        if self.event_label is not None:
            d["event_label"] = self.event_label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ImageFrame:
        return cls(
            parse_timestamp(d["timestamp"]),
            str(d["scene_id"]),
            float(d["cloud_fraction"]),
            str(d["image_ref"]),
            d.get("planted_event"),
            d.get("event_label"),
        )


@dataclass(frozen=True)
class ImagerySequence:
    frames: tuple[ImageFrame, ...]
    query_coordinate: GeoCoordinate
    timeline: EventTimeline

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        for a, b in zip(self.frames, self.frames[1:]):
            if not a.timestamp < b.timestamp:
                raise ValidationError("frames", "timestamps must be strictly ascending")
        for f in self.frames:
            if not self.timeline.contains(f.timestamp):
                raise ValidationError("frames", f"frame {f.scene_id} at {f.timestamp} is outside the timeline")

    def __len__(self):
        return len(self.frames)

    @property
    def timestamps(self) -> list[dt.datetime]:
        return [f.timestamp for f in self.frames]

    @property
    def has_planted_event(self) -> bool:
        return any(f.planted_event for f in self.frames)

    def to_dict(self) -> dict:
        return {
            "frames": [f.to_dict() for f in self.frames],
            "query_coordinate": self.query_coordinate.to_dict(),
            "timeline": self.timeline.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ImagerySequence:
        return cls(
            tuple(ImageFrame.from_dict(f) for f in d["frames"]),
            GeoCoordinate.from_dict(d["query_coordinate"]),
            EventTimeline.from_dict(d["timeline"]),
        )


@dataclass(frozen=True)
class PlantedEvent:
    lat: float
    lon: float
    start: dt.date
    end: dt.date
    label: str

    def to_dict(self) -> dict:
        return {"lat": self.lat, "lon": self.lon, "start": self.start.isoformat(), "end": self.end.isoformat(), "label": self.label}


def load_planted_events(path) -> list[PlantedEvent]:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, list):
        raise ValidationError("planted_events", "expected a JSON array")
    out = []
    for k, e in enumerate(raw):
        try:
            out.append(
                PlantedEvent(
                    float(e["lat"]), float(e["lon"]),
                    dt.date.fromisoformat(e["start"]), dt.date.fromisoformat(e["end"]),
                    str(e.get("label", "")),
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ValidationError("planted_events", f"record {k}: {err}") from None
    return out


def write_planted_events(events: Iterable[PlantedEvent], path) -> None:
    Path(path).write_text(json.dumps([e.to_dict() for e in events], indent=1) + "\n", encoding="utf-8")


def angular_distance_deg(lat1, lon1, lat2, lon2) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp, dl = p2 - p1, math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return math.degrees(2 * math.asin(min(1.0, math.sqrt(h))))


class Geocoder(Protocol):
    def geocode(self, name: str) -> GeocodeResult | None: ...


class ImageryClient(Protocol):
    def fetch(self, coordinate: GeoCoordinate, timeline: EventTimeline) -> ImagerySequence: ...


@dataclass
class GazetteerGeocoder:
    """Forward geocoding by exact (case-insensitive) gazetteer lookup."""

    gazetteer: Gazetteer

    def geocode(self, name: str) -> GeocodeResult | None:
        if not name or not name.strip():
            raise ValidationError("name", "must be non-empty")
        hit = self.gazetteer.lookup(name)
        if hit is None:
            return None
        return GeocodeResult(hit[1], hit[2])


class _HttpBase:
    def __init__(self, url, token_env, timeout, retries, max_in_flight, session):
        self.url = url
        self.token_env = token_env
        self.timeout = timeout
        self.retries = retries
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    @property
    def token(self) -> str | None:
        return os.environ.get(self.token_env) if self.token_env else None

    def _send(self, method, allow_404=False, **kwargs) -> requests.Response | None:
        last = None
        for attempt in range(self.retries + 1):
            try:
                with self._slots:
                    resp = self.session.request(method, self.url, timeout=self.timeout, **kwargs)
            except requests.RequestException as e:
                last = e
                log.warning("%s %s failed (attempt %d): %s", method, self.url, attempt + 1, e)
                continue
            if allow_404 and resp.status_code == 404:
                return None
            if resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{method} {self.url}: HTTP {resp.status_code}")
            return resp
        raise TransportError(f"{method} {self.url}: {last}")

    @staticmethod
    def _json(resp):
        try:
            return resp.json()
        except ValueError as e:
            raise MalformedResponseError(f"non-JSON response: {e}") from None


class HttpGeocoder(_HttpBase):
    """GET ``url?q=<name>``; parses the top GeoJSON feature's ``center`` and ``bbox``."""

    def __init__(self, url, token_env="SKY_GEOCODE_TOKEN", timeout=10.0, retries=1, max_in_flight=4, session=None):
        super().__init__(url, token_env, timeout, retries, max_in_flight, session)

    def geocode(self, name: str) -> GeocodeResult | None:
        if not name or not name.strip():
            raise ValidationError("name", "must be non-empty")
        params = {"q": name}
        if self.token:
            params["access_token"] = self.token
        resp = self._send("GET", allow_404=True, params=params)
        if resp is None:
            return None
        payload = self._json(resp)
        features = payload.get("features") if isinstance(payload, dict) else None
        if not features:
            return None
        return parse_geocode_feature(features[0])


def parse_geocode_feature(feat: dict) -> GeocodeResult:
    try:
        if "center" in feat:
            lon, lat = feat["center"][:2]
        else:
            lon, lat = feat["geometry"]["coordinates"][:2]
        coord = GeoCoordinate(float(lat), float(lon))
        if feat.get("bbox"):
            w, s, e, n = (float(v) for v in feat["bbox"][:4])
            bbox = GeoBoundingBox(s, n, normalize_longitude(w) if w != -180 else w, normalize_longitude(e))
        else:
            bbox = GeoBoundingBox(coord.lat_deg, coord.lat_deg, coord.lon_deg, coord.lon_deg)
        return GeocodeResult(coord, bbox)
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise MalformedResponseError(f"unparseable geocoder feature: {e}") from None


@dataclass
class SyntheticImagery:
    """Deterministic imagery: one frame per ``cadence_days`` plus the timeline end.

    Frames dated on or after the start of a planted event within
    ``radius_deg`` of the (0.01 degree rounded) query point are flagged.
    """

    seed: int = 0
    events: Sequence[PlantedEvent] = field(default_factory=tuple)
    cadence_days: int = DEFAULT_CADENCE_DAYS
    radius_deg: float = DEFAULT_EVENT_RADIUS_DEG

    def _frame_dates(self, tl: EventTimeline) -> list[dt.date]:
        step = dt.timedelta(days=self.cadence_days)
        out = []
        d = tl.start
        while d < tl.end:
            out.append(d)
            d += step
        out.append(tl.end)
        return out

    def fetch(self, coordinate: GeoCoordinate, timeline: EventTimeline) -> ImagerySequence:
        lat = round(coordinate.lat_deg, 2)
        lon = round(coordinate.lon_deg, 2)
        active = [
            e for e in self.events
            if timeline.overlaps(e.start, e.end) and angular_distance_deg(lat, lon, e.lat, e.lon) <= self.radius_deg
        ]
        frames = []
        for d in self._frame_dates(timeline):
            digest = hashlib.sha256(f"{self.seed}|{lat:.2f}|{lon:.2f}|{d.isoformat()}".encode()).hexdigest()
            scene_id = f"SYN-{digest[:16]}"
            hits = [e for e in active if d >= e.start]
            frames.append(
                ImageFrame(
                    timestamp=dt.datetime.combine(d, dt.time(10, 30), tzinfo=dt.timezone.utc),
                    scene_id=scene_id,
                    cloud_fraction=round(int(digest[16:20], 16) / 0xFFFF, 3),
                    image_ref=f"synthetic://{scene_id}.tif",
                    planted_event=bool(hits),
                    event_label=hits[0].label if hits else None,
                )
            )
        return ImagerySequence(tuple(frames), GeoCoordinate(lat, lon), timeline)


class HttpImageryCatalog(_HttpBase):
    """POST a catalog search ``{bbox, datetime, limit}``; items become frames (metadata only).

    With ``download_dir`` set, each frame's asset is downloaded there and
    ``image_ref`` points at the local file.
    """

    def __init__(self, url, token_env="SKY_IMAGERY_TOKEN", window_deg=DEFAULT_WINDOW_DEG, limit=100,
                 timeout=30.0, retries=1, max_in_flight=4, download_dir=None, session=None):
        super().__init__(url, token_env, timeout, retries, max_in_flight, session)
        self.window_deg = window_deg
        self.limit = limit
        self.download_dir = Path(download_dir) if download_dir else None

    def fetch(self, coordinate: GeoCoordinate, timeline: EventTimeline) -> ImagerySequence:
        w = self.window_deg
        body = {
            "bbox": [coordinate.lon_deg - w, coordinate.lat_deg - w, coordinate.lon_deg + w, coordinate.lat_deg + w],
            "datetime": f"{timeline.start.isoformat()}T00:00:00Z/{timeline.end.isoformat()}T23:59:59Z",
            "limit": self.limit,
        }
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        payload = self._json(self._send("POST", json=body, headers=headers))
        items = (payload.get("features") or payload.get("items") or []) if isinstance(payload, dict) else []
        frames = {}
        for item in items:
            f = parse_catalog_item(item)
            if timeline.contains(f.timestamp) and f.timestamp not in frames:
                frames[f.timestamp] = f
        ordered = [frames[t] for t in sorted(frames)]
        if self.download_dir is not None:
            ordered = [self._download(f) for f in ordered]
        return ImagerySequence(tuple(ordered), coordinate, timeline)

    def _download(self, f: ImageFrame) -> ImageFrame:
        self.download_dir.mkdir(parents=True, exist_ok=True)
        target = self.download_dir / f"{f.scene_id}.tif"
        if not target.exists():
            try:
                with self._slots:
                    resp = self.session.get(f.image_ref, timeout=self.timeout)
                resp.raise_for_status()
            except requests.RequestException as e:
                raise TransportError(f"download {f.image_ref}: {e}") from None
            target.write_bytes(resp.content)
        return ImageFrame(f.timestamp, f.scene_id, f.cloud_fraction, str(target), f.planted_event, f.event_label)


def parse_catalog_item(item: dict) -> ImageFrame:
    try:
        props = item.get("properties", {})
        ts = parse_timestamp(props.get("datetime") or item["datetime"])
        if "cloud_fraction" in props:
            cloud = float(props["cloud_fraction"])
        elif "eo:cloud_cover" in props:
            cloud = float(props["eo:cloud_cover"]) / 100.0
        else:
            cloud = 0.0
        ref = None
        for asset in (item.get("assets") or {}).values():
            if isinstance(asset, dict) and asset.get("href"):
                ref = asset["href"]
                break
        if ref is None:
            ref = next((lk["href"] for lk in item.get("links", []) if lk.get("rel") == "self"), item["id"])
        return ImageFrame(ts, str(item["id"]), min(max(cloud, 0.0), 1.0), str(ref))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise MalformedResponseError(f"unparseable catalog item: {e}") from None
