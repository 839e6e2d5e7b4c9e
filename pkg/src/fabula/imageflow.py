"""Image-side glue: style-augmented prompts, batch detection aggregation,
and the confidence-ranked keyword suggestions fed into the next turn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .backends import Detection
from .errors import InvalidArgument
from .keywords import KeywordSet

DEFAULT_SUGGESTION_LIMIT = 5


def _clean(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip()
    return value or None


@dataclass(frozen=True)
class StylePrefs:
    """Optional artist and background strings mixed into image prompts."""

    artist: str | None = None
    background: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "artist", _clean(self.artist))
        object.__setattr__(self, "background", _clean(self.background))

    def as_dict(self) -> dict:
        return {"artist": self.artist, "background": self.background}

    @classmethod
    def from_dict(cls, data: dict | None) -> "StylePrefs":
        data = data or {}
        return cls(artist=data.get("artist"), background=data.get("background"))


def augment_image_prompt(sentence: str, prefs: StylePrefs = StylePrefs()) -> str:
    """``"{sentence}, {background}, by {artist}"`` with absent parts omitted."""
    if not sentence:
        raise InvalidArgument("image prompt needs a sentence")
    parts = [sentence]
    if prefs.background:
        parts.append(prefs.background)
    if prefs.artist:
        parts.append(f"by {prefs.artist}")
    return ", ".join(parts)


@dataclass(frozen=True)
class SummaryRow:
    item: str
    count: int
    confidence: float

    def as_dict(self) -> dict:
        return {"item": self.item, "count": self.count, "confidence": self.confidence}


@dataclass(frozen=True)
class DetectionSummary:
    """Per-label rollup of a batch: occurrence count and peak confidence,
    ranked by confidence descending (label ascending on ties)."""

    rows: tuple[SummaryRow, ...] = ()

    def as_dicts(self) -> list[dict]:
        return [row.as_dict() for row in self.rows]

    @classmethod
    def from_dicts(cls, data: Iterable[dict]) -> "DetectionSummary":
        return cls(
            tuple(
                SummaryRow(str(d["item"]), int(d["count"]), float(d["confidence"]))
                for d in data
            )
        )

    def __len__(self) -> int:
        return len(self.rows)


def summarize_detections(batches: Iterable[Iterable[Detection]]) -> DetectionSummary:
    counts: dict[str, int] = {}
    peaks: dict[str, float] = {}
    for batch in batches:
        for detection in batch:
            counts[detection.label] = counts.get(detection.label, 0) + 1
            previous = peaks.get(detection.label)
            if previous is None or detection.confidence > previous:
                peaks[detection.label] = detection.confidence
    rows = [SummaryRow(label, counts[label], peaks[label]) for label in counts]
    rows.sort(key=lambda row: (-row.confidence, row.item))
    return DetectionSummary(tuple(rows))


def suggestion_keywords(
    summary: DetectionSummary, limit: int = DEFAULT_SUGGESTION_LIMIT
) -> KeywordSet:
    """Top detected labels, verbatim, in the summary's ranking order."""
    if limit < 0:
        raise InvalidArgument(f"limit must be non-negative, got {limit}")
    return KeywordSet(row.item for row in summary.rows[:limit])
