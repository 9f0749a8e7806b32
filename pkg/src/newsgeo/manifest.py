"""Dataset records for detected image sequences, and summary statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .agents import Caption
from .clients import EventTimeline, ImageFrame
from .errors import NewsGeoError, ValidationError
from .pipeline import PipelineResult


class ManifestError(NewsGeoError):
    def __init__(self, message, record=None):
        self.record = record
        prefix = f"record {record}: " if record is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SequenceManifest:
    sequence_id: str
    article_id: str
    imagery_source: str
    frames: tuple[ImageFrame, ...]
    caption: Caption
    confirmed: bool
    event_dates: EventTimeline

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValidationError("frames", "a sequence needs at least one frame")
        for a, b in zip(self.frames, self.frames[1:]):
            if not a.timestamp < b.timestamp:
                raise ValidationError("frames", "frames must be strictly time-ascending")

    def to_dict(self) -> dict:
        return {
            "sequence_id": self.sequence_id,
            "article_id": self.article_id,
            "imagery_source": self.imagery_source,
            "frames": [f.to_dict() for f in self.frames],
            "caption": self.caption.to_dict(),
            "confirmed": self.confirmed,
            "event_dates": self.event_dates.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> SequenceManifest:
        if not isinstance(d.get("confirmed"), bool):
            raise ValidationError("confirmed", "must be a boolean")
        return cls(
            str(d["sequence_id"]),
            str(d["article_id"]),
            str(d["imagery_source"]),
            tuple(ImageFrame.from_dict(f) for f in d["frames"]),
            Caption.from_dict(d["caption"]),
            d["confirmed"],
            EventTimeline.from_dict(d["event_dates"]),
        )


@dataclass(frozen=True)
class DatasetStats:
    total_sequences: int
    confirmed_events: int
    avg_images_per_sequence: float

    @property
    def avg_images_rounded(self) -> int:
        return int(Decimal(repr(self.avg_images_per_sequence)).quantize(Decimal(1), rounding=ROUND_HALF_UP))

    def row(self) -> tuple[int, int, int]:
        return self.total_sequences, self.confirmed_events, self.avg_images_rounded

    def to_dict(self) -> dict:
        return {
            "total_sequences": self.total_sequences,
            "confirmed_events": self.confirmed_events,
            "avg_images_per_sequence": self.avg_images_rounded,
        }

    def render_table(self, source: str = "") -> str:
        head = ("Imagery Source", "Total Sequences", "Confirmed Events", "Average # Images Per Sequence")
        body = (source or "-", f"{self.total_sequences:,}", f"{self.confirmed_events:,}", str(self.avg_images_rounded))
        widths = [max(len(a), len(b)) for a, b in zip(head, body)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in (head, body)]
        return "\n".join([lines[0], "-" * len(lines[0]), lines[1]]) + "\n"


def compute_dataset_stats(manifests: Sequence[SequenceManifest]) -> DatasetStats:
    n = len(manifests)
    if n == 0:
        return DatasetStats(0, 0, 0.0)
    frames = sum(len(m.frames) for m in manifests)
    return DatasetStats(n, sum(1 for m in manifests if m.confirmed), frames / n)


def manifests_from_results(results: Iterable[PipelineResult], imagery_source: str) -> list[SequenceManifest]:
    out = []
    for r in results:
        if not r.detected:
            raise ValidationError("status", f"article {r.article_id}: only detected results can be exported")
        out.append(
            SequenceManifest(
                sequence_id=f"{imagery_source}:{r.article_id}",
                article_id=r.article_id,
                imagery_source=imagery_source,
                frames=r.imagery.frames,
                caption=r.caption,
                confirmed=False,
                event_dates=r.timeline,
            )
        )
    return out


def write_manifests(manifests: Iterable[SequenceManifest], path) -> None:
    seen = set()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for k, m in enumerate(manifests, start=1):
            if m.sequence_id in seen:
                raise ManifestError(f"duplicate sequence_id {m.sequence_id!r}", k)
            seen.add(m.sequence_id)
            f.write(json.dumps(m.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def export_manifests(results: Iterable[PipelineResult], path, imagery_source: str = "synthetic") -> list[SequenceManifest]:
    """Write one manifest line per detected result; annotation starts unconfirmed."""
    ms = manifests_from_results(results, imagery_source)
    write_manifests(ms, path)
    return ms


def import_manifests(path) -> list[SequenceManifest]:
    """Read a manifest file. Record numbers in errors are 1-based line numbers."""
    out = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for k, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                d = json.loads(raw)
                if not isinstance(d, dict):
                    raise ValidationError("record", "not a JSON object")
                m = SequenceManifest.from_dict(d)
            except (ValueError, KeyError, TypeError) as e:
                detail = f"missing field {e}" if isinstance(e, KeyError) else str(e)
                raise ManifestError(detail, k) from None
            if m.sequence_id in seen:
                raise ManifestError(f"duplicate sequence_id {m.sequence_id!r}", k)
            seen.add(m.sequence_id)
            out.append(m)
    return out
