"""Seeded deterministic stand-ins for the four model roles.

Every response is a pure function of (seed, request): replaying a recorded
session reproduces each artifact byte for byte, so end-to-end tests run
without any model host. Named fixtures replay the Mary story (with and
without prompting) and the roller-coaster emotion example; everything else
is filled from digest-driven templates.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from typing import Sequence

from .backends import (
    DEFAULT_DETECTION_THRESHOLD,
    Detection,
    ImageRef,
    ImageRequest,
    ModelBackends,
    lexicon_emotion_fallback,
)
from .emotion import EmotionVector
from .errors import InvalidArgument
from .prompting import GenerationConfig, PromptParseError, parse_prompt

MARY_OPENING = "Mary had been feeling depressed lately."

# Replay scripts for a story opened with MARY_OPENING: sentence i+2 keyed
# by context length i+1. One script for prompted generation (keywords or
# emotions present), one for bare-context generation.
MARY_PROMPTED = (
    "She decided to go see a psychiatrist.",
    "Psyched, her psychiatrist diagnosed her with depression and sent her to see.",
    "Medicant took her to get an antidepressant and prescribed her.",
    "Thankfully it eventually made her feel better again.",
)
MARY_BASELINE = (
    "She decided to go to a psychiatrist.",
    "She was diagnosed with schizophrenia.",
    "She was very happy.",
    "She was very happy.",
)

COASTER_SENTENCE = "He was hoping this year to be tall enough for the coaster."
COASTER_VECTOR = EmotionVector((0.9, 0.6, 0.1, 0.1, 0.1, 0.1, 0.1, 0.7))

_SUBJECTS = (
    "The traveler", "A quiet neighbor", "The young painter", "An old friend",
    "The shopkeeper", "A curious child", "The gardener", "A tired sailor",
)
_VERBS = (
    "found", "watched", "remembered", "followed", "discovered",
    "shared", "carried", "painted", "opened", "chased",
)
_OBJECTS = (
    "an old map", "a small lantern", "the garden gate", "a faded photograph",
    "a wooden boat", "the morning paper", "a stray dog", "the empty road",
    "a warm meal", "an odd letter",
)
_TAILS = (
    "near the river", "at the market", "before sunset", "without a word",
    "with great care", "by the old bridge", "under the pale sky",
    "after a long walk", "outside the station", "in the quiet town",
)

_DETECT_LABELS = (
    "person", "dog", "cat", "tree", "house", "car",
    "bird", "horse", "boat", "chair", "book", "flower",
)

# Fixture detections for beach imagery; includes person and handbag.
_BEACH_DETECTIONS = (
    Detection("person", 0.91, (0.42, 0.30, 0.18, 0.45)),
    Detection("person", 0.84, (0.10, 0.35, 0.15, 0.40)),
    Detection("handbag", 0.72, (0.55, 0.60, 0.10, 0.12)),
    Detection("boat", 0.51, (0.70, 0.20, 0.22, 0.10)),
    Detection("bird", 0.44, (0.25, 0.08, 0.06, 0.05)),
)


def write_png(width: int, height: int, rows: Sequence[Sequence[tuple[int, int, int]]]) -> bytes:
    """Encode 8-bit RGB rows as a PNG without any imaging dependency."""
    if height != len(rows) or any(len(row) != width for row in rows):
        raise InvalidArgument("row shape does not match width/height")

    def chunk(tag: bytes, payload: bytes) -> bytes:
        body = tag + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    raw = b"".join(
        b"\x00" + b"".join(struct.pack("BBB", *pixel) for pixel in row) for row in rows
    )
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(raw, 9))
        + chunk(b"IEND", b"")
    )


class MockModelBackends(ModelBackends):
    """All four roles, driven solely by a 64-bit seed."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def _digest(self, *parts: str) -> bytes:
        material = "|".join((str(self.seed), *parts))
        return hashlib.sha256(material.encode("utf-8")).digest()

    # -- text ---------------------------------------------------------------

    def generate_text(self, prompt: str, config: GenerationConfig) -> str:
        if not prompt:
            raise InvalidArgument("prompt must be non-empty")
        if not isinstance(config, GenerationConfig):
            raise InvalidArgument("config must be a GenerationConfig")
        try:
            bundle = parse_prompt(prompt)
        except PromptParseError:
            bundle = None
        if (
            bundle is not None
            and bundle.context
            and bundle.context[0] == MARY_OPENING
            and len(bundle.context) <= len(MARY_PROMPTED)
        ):
            script = MARY_PROMPTED if (len(bundle.keywords) or len(bundle.emotions)) else MARY_BASELINE
            return script[len(bundle.context) - 1]
        digest = self._digest("text", prompt)
        subject = None
        if bundle is not None and len(bundle.keywords):
            phrase = bundle.keywords.phrases[digest[4] % len(bundle.keywords)]
            subject = phrase[:1].upper() + phrase[1:]
        if subject is None:
            subject = _SUBJECTS[digest[0] % len(_SUBJECTS)]
        return (
            f"{subject} {_VERBS[digest[1] % len(_VERBS)]} "
            f"{_OBJECTS[digest[2] % len(_OBJECTS)]} {_TAILS[digest[3] % len(_TAILS)]}."
        )

    # -- emotions -----------------------------------------------------------

    def predict_next_emotions(self, context: Sequence[str]) -> EmotionVector:
        if not context:
            raise InvalidArgument("emotion prediction needs at least one sentence")
        if context[-1] == COASTER_SENTENCE:
            return COASTER_VECTOR
        return lexicon_emotion_fallback(context)

    # -- images -------------------------------------------------------------

    def _render(self, digest: bytes) -> bytes:
        size = 32
        base = (digest[0], digest[1], digest[2])
        accent = (digest[3], digest[4], digest[5])
        stripe = 2 + digest[6] % 5
        rows = [
            [accent if (x + y) % stripe == 0 else base for x in range(size)]
            for y in range(size)
        ]
        return write_png(size, size, rows)

    def generate_images(self, request: ImageRequest) -> list[ImageRef]:
        if not isinstance(request, ImageRequest):
            raise InvalidArgument("request must be an ImageRequest")
        images = []
        prefix = "beach-boy-" if "beach" in request.prompt.lower() else "img-"
        for index in range(request.n_batches):
            digest = self._digest("image", request.prompt, str(index))
            images.append(
                ImageRef(
                    id=prefix + digest[:8].hex(),
                    png=self._render(digest),
                    prompt=request.prompt,
                )
            )
        return images

    # -- detection ----------------------------------------------------------

    def detect_objects(
        self, image: ImageRef, threshold: float = DEFAULT_DETECTION_THRESHOLD
    ) -> list[Detection]:
        if not 0.0 <= threshold <= 1.0:
            raise InvalidArgument(f"threshold outside [0,1]: {threshold}")
        if image.id.startswith("beach-boy"):
            candidates = list(_BEACH_DETECTIONS)
        else:
            digest = self._digest("detect", image.id)
            count = 2 + digest[0] % 4
            candidates = []
            for i in range(count):
                label = _DETECT_LABELS[digest[1 + i] % len(_DETECT_LABELS)]
                confidence = round(0.30 + (digest[8 + i] / 255) * 0.65, 3)
                x = (digest[16 + i] % 100) / 200
                y = (digest[20 + i] % 100) / 200
                candidates.append(
                    Detection(label, confidence, (x, y, 0.2 + (i % 3) * 0.1, 0.25))
                )
        kept = [d for d in candidates if d.confidence >= threshold]
        kept.sort(key=lambda d: (-d.confidence, d.label))
        return kept
