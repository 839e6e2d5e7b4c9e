"""Plutchik emotion primitives.

The eight basic emotions in canonical wheel order, bounded emotion vectors
over them, canonically-ordered label sets, and a deterministic lexicon
scorer used whenever no emotion-prediction backend is configured.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

DEFAULT_TAU = 0.5
DEFAULT_TOP_K = 3

_WORD_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")


class EmotionLabel(Enum):
    """One of the eight basic emotions, in canonical wheel order."""

    JOY = "joy"
    TRUST = "trust"
    FEAR = "fear"
    SURPRISE = "surprise"
    SADNESS = "sadness"
    DISGUST = "disgust"
    ANGER = "anger"
    ANTICIPATION = "anticipation"

    @property
    def wheel_index(self) -> int:
        return _WHEEL_INDEX[self]

    @property
    def opposite(self) -> "EmotionLabel":
        """The emotion diametrically opposed on the wheel."""
        return WHEEL_ORDER[(self.wheel_index + 4) % 8]

    @classmethod
    def from_name(cls, name: str) -> "EmotionLabel":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown emotion label: {name!r}") from None


WHEEL_ORDER: tuple[EmotionLabel, ...] = tuple(EmotionLabel)
_WHEEL_INDEX: dict[EmotionLabel, int] = {label: i for i, label in enumerate(WHEEL_ORDER)}
OPPOSITE_PAIRS: tuple[tuple[EmotionLabel, EmotionLabel], ...] = tuple(
    (WHEEL_ORDER[i], WHEEL_ORDER[i + 4]) for i in range(4)
)


@dataclass(frozen=True)
class EmotionVector:
    """An 8-component vector scoring each basic emotion in [0, 1].

    Components are indexed by canonical wheel order. Values outside the
    unit interval (including NaN) are rejected at construction.
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) != 8:
            raise ValueError(f"emotion vector needs 8 components, got {len(values)}")
        for i, v in enumerate(values):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"component {i} out of [0, 1]: {v!r}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls) -> "EmotionVector":
        return cls((0.0,) * 8)

    @classmethod
    def from_mapping(cls, scores: Mapping[EmotionLabel, float]) -> "EmotionVector":
        return cls(tuple(float(scores.get(label, 0.0)) for label in WHEEL_ORDER))

    def get(self, label: EmotionLabel) -> float:
        return self.values[label.wheel_index]

    def as_dict(self) -> dict[str, float]:
        return {label.value: self.get(label) for label in WHEEL_ORDER}

    def to_list(self) -> list[float]:
        return list(self.values)

    @classmethod
    def from_list(cls, values: Iterable[float]) -> "EmotionVector":
        return cls(tuple(values))


class EmotionLabelSet:
    """A duplicate-free set of emotion labels held in canonical wheel order."""

    __slots__ = ("_labels",)

    def __init__(self, labels: Iterable[EmotionLabel] = ()):
        unique = {label for label in labels}
        for label in unique:
            if not isinstance(label, EmotionLabel):
                raise TypeError(f"not an EmotionLabel: {label!r}")
        self._labels: tuple[EmotionLabel, ...] = tuple(
            sorted(unique, key=lambda l: l.wheel_index)
        )

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "EmotionLabelSet":
        return cls(EmotionLabel.from_name(n) for n in names)

    @classmethod
    def all(cls) -> "EmotionLabelSet":
        return cls(WHEEL_ORDER)

    @property
    def labels(self) -> tuple[EmotionLabel, ...]:
        return self._labels

    def names(self) -> tuple[str, ...]:
        return tuple(label.value for label in self._labels)

    def to_fragment(self) -> str:
        """Serialize as the comma-joined body used inside prompts."""
        return ", ".join(self.names())

    def union(self, other: "EmotionLabelSet") -> "EmotionLabelSet":
        return EmotionLabelSet((*self._labels, *other._labels))

    def __contains__(self, label: object) -> bool:
        return label in self._labels

    def __iter__(self):
        return iter(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmotionLabelSet):
            return NotImplemented
        return self._labels == other._labels

    def __hash__(self) -> int:
        return hash(self._labels)

    def __repr__(self) -> str:
        return f"EmotionLabelSet({list(self.names())})"


def threshold_labels(vector: EmotionVector, tau: float) -> EmotionLabelSet:
    """Labels whose component is at least ``tau``, in canonical order."""
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau out of [0, 1]: {tau!r}")
    return EmotionLabelSet(
        label for label in WHEEL_ORDER if vector.get(label) >= tau
    )


def top_k_labels(vector: EmotionVector, k: int) -> EmotionLabelSet:
    """The ``k`` highest-scoring labels; ties go to the earlier wheel position."""
    if not (0 <= k <= 8):
        raise ValueError(f"k out of [0, 8]: {k!r}")
    ranked = sorted(WHEEL_ORDER, key=lambda l: (-vector.get(l), l.wheel_index))
    return EmotionLabelSet(ranked[:k])


class EmotionLexicon:
    """Maps lowercase word forms to per-emotion weights in [0, 1].

    The bundled lexicon is a convenience fixture over common inflected
    forms, not a curated scientific resource.
    """

    def __init__(self, entries: Mapping[str, Mapping[EmotionLabel, float]]):
        normalized: dict[str, dict[EmotionLabel, float]] = {}
        for word, weights in entries.items():
            word = word.strip().lower()
            if not word:
                raise ValueError("empty lexicon word")
            checked: dict[EmotionLabel, float] = {}
            for label, weight in weights.items():
                weight = float(weight)
                if not (0.0 <= weight <= 1.0):
                    raise ValueError(f"weight out of [0, 1] for {word!r}: {weight!r}")
                checked[label] = weight
            normalized[word] = checked
        self._entries = normalized

    def weights_for(self, word: str) -> Mapping[EmotionLabel, float]:
        return self._entries.get(word.lower(), {})

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._entries

    @classmethod
    def parse(cls, text: str) -> "EmotionLexicon":
        """Parse ``word<TAB>label<TAB>weight`` lines; ``#`` starts a comment line."""
        entries: dict[str, dict[EmotionLabel, float]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 3 tab-separated fields")
            word, label_name, weight_text = parts
            label = EmotionLabel.from_name(label_name)
            try:
                weight = float(weight_text)
            except ValueError:
                raise ValueError(f"line {lineno}: bad weight {weight_text!r}") from None
            if not (0.0 <= weight <= 1.0):
                raise ValueError(f"line {lineno}: weight out of [0, 1]: {weight}")
            entries.setdefault(word.lower(), {})[label] = weight
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "EmotionLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


@lru_cache(maxsize=1)
def bundled_lexicon() -> EmotionLexicon:
    text = resources.files("fabula.data").joinpath("emotion_lexicon.tsv").read_text("utf-8")
    return EmotionLexicon.parse(text)


def lexicon_score(sentence: str, lexicon: EmotionLexicon | None = None) -> EmotionVector:
    """Score a sentence by taking, per emotion, the max weight over its tokens.

    Max (rather than sum) keeps every component inside [0, 1] without
    renormalization. Words absent from the lexicon contribute nothing.
    """
    if lexicon is None:
        lexicon = bundled_lexicon()
    scores = {label: 0.0 for label in WHEEL_ORDER}
    for token in _WORD_RE.findall(sentence.lower()):
        for label, weight in lexicon.weights_for(token).items():
            if weight > scores[label]:
                scores[label] = weight
    return EmotionVector.from_mapping(scores)
