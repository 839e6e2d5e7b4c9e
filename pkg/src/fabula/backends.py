"""Client-side interfaces to the four model roles: sentence generation,
emotion prediction, image generation, object detection.

Models run wherever the user hosts them; this module never loads weights.
One JSON-over-HTTP protocol serves all four roles, and a lexicon fallback
covers emotion prediction when no endpoint is configured.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Sequence

import requests

from .emotion import EmotionVector, lexicon_score
from .errors import (
    BackendError,
    BackendUnavailable,
    EmptyGeneration,
    InvalidArgument,
    PartialBatch,
)
from .prompting import GenerationConfig

log = logging.getLogger(__name__)

DEFAULT_DETECTION_THRESHOLD = 0.4

ENV_TEXT_URL = "FABULA_TEXT_URL"
ENV_EMOTION_URL = "FABULA_EMOTION_URL"
ENV_IMAGE_URL = "FABULA_IMAGE_URL"
ENV_DETECT_URL = "FABULA_DETECT_URL"
ENV_TOKEN = "FABULA_BACKEND_TOKEN"


@dataclass(frozen=True)
class BackendEndpoint:
    base_url: str
    timeout_ms: int = 30000
    retries: int = 1
    auth_token: str | None = None

    def __post_init__(self):
        if not self.base_url:
            raise InvalidArgument("endpoint needs a base URL")
        if self.timeout_ms <= 0:
            raise InvalidArgument(f"timeout must be positive, got {self.timeout_ms}")
        if self.retries < 0:
            raise InvalidArgument(f"retries must be non-negative, got {self.retries}")


@dataclass(frozen=True)
class ImageRequest:
    prompt: str
    clip_guidance_scale: float = 5000.0
    steps: int = 250
    n_batches: int = 3

    def __post_init__(self):
        if not self.prompt:
            raise InvalidArgument("image prompt must be non-empty")
        if self.steps < 1:
            raise InvalidArgument(f"steps must be at least 1, got {self.steps}")
        if self.n_batches < 1:
            raise InvalidArgument(f"n_batches must be at least 1, got {self.n_batches}")


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float
    box: tuple[float, float, float, float]  # x, y, w, h in image-relative units

    def __post_init__(self):
        object.__setattr__(self, "box", tuple(self.box))
        if not self.label:
            raise InvalidArgument("detection needs a label")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidArgument(f"confidence outside [0,1]: {self.confidence}")
        if len(self.box) != 4:
            raise InvalidArgument("box must be (x, y, w, h)")
        if self.box[2] <= 0 or self.box[3] <= 0:
            raise InvalidArgument(f"box needs positive extent: {self.box}")


@dataclass(frozen=True)
class ImageRef:
    """An image the pipeline produced: opaque id, PNG bytes, source prompt.

    stored_hash carries the content hash across serialization when the
    bytes themselves are not loaded; with bytes present it is ignored.
    """

    id: str
    png: bytes
    prompt: str
    stored_hash: str | None = field(default=None, compare=False, repr=False)

    @property
    def content_hash(self) -> str:
        if not self.png and self.stored_hash:
            return self.stored_hash
        return hashlib.sha256(self.png).hexdigest()


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= 1.0:
        raise InvalidArgument(f"threshold outside [0,1]: {threshold}")


class ModelBackends:
    """Interface all backend bundles implement."""

    def generate_text(self, prompt: str, config: GenerationConfig) -> str:
        raise NotImplementedError

    def predict_next_emotions(self, context: Sequence[str]) -> EmotionVector:
        raise NotImplementedError

    def generate_images(self, request: ImageRequest) -> list[ImageRef]:
        raise NotImplementedError

    def detect_objects(
        self, image: ImageRef, threshold: float = DEFAULT_DETECTION_THRESHOLD
    ) -> list[Detection]:
        raise NotImplementedError


def lexicon_emotion_fallback(context: Sequence[str]) -> EmotionVector:
    """Score the last sentence against the bundled lexicon."""
    if not context:
        raise InvalidArgument("emotion prediction needs at least one sentence")
    return lexicon_score(context[-1])


@dataclass(frozen=True)
class HttpModelBackends(ModelBackends):
    """JSON-over-HTTP adapter; each role may point at a different host.

    A missing emotion endpoint falls back to the bundled lexicon; the other
    roles are required at call time.
    """

    text: BackendEndpoint | None = None
    emotion: BackendEndpoint | None = None
    image: BackendEndpoint | None = None
    detect: BackendEndpoint | None = None
    session: requests.Session = field(default_factory=requests.Session, compare=False, repr=False)

    @classmethod
    def from_env(cls, environ=None) -> "HttpModelBackends":
        environ = os.environ if environ is None else environ
        token = environ.get(ENV_TOKEN)

        def endpoint(var: str) -> BackendEndpoint | None:
            url = environ.get(var)
            return BackendEndpoint(url, auth_token=token) if url else None

        return cls(
            text=endpoint(ENV_TEXT_URL),
            emotion=endpoint(ENV_EMOTION_URL),
            image=endpoint(ENV_IMAGE_URL),
            detect=endpoint(ENV_DETECT_URL),
        )

    def _post(self, endpoint: BackendEndpoint, path: str, payload: dict) -> dict:
        url = endpoint.base_url.rstrip("/") + path
        headers = {}
        if endpoint.auth_token:
            headers["Authorization"] = f"Bearer {endpoint.auth_token}"
        last_error: Exception | None = None
        for _ in range(endpoint.retries + 1):
            try:
                response = self.session.post(
                    url, json=payload, headers=headers, timeout=endpoint.timeout_ms / 1000
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if not 200 <= response.status_code < 300:
                raise BackendError(
                    f"{url} returned {response.status_code}", status=response.status_code
                )
            try:
                return response.json()
            except ValueError:
                raise BackendError(f"{url} returned non-JSON body") from None
        raise BackendUnavailable(f"{url} unreachable: {last_error}")

    def _require(self, endpoint: BackendEndpoint | None, role: str) -> BackendEndpoint:
        if endpoint is None:
            raise BackendUnavailable(f"no {role} backend configured")
        return endpoint

    def generate_text(self, prompt: str, config: GenerationConfig) -> str:
        if not prompt:
            raise InvalidArgument("prompt must be non-empty")
        payload = {
            "prompt": prompt,
            "max_source_length": config.max_source_length,
            "max_output_length": config.max_output_length,
            "top_k": config.top_k,
            "repetition_penalty": config.repetition_penalty,
            "length_penalty": config.length_penalty,
        }
        body = self._post(self._require(self.text, "text"), "/generate", payload)
        text = str(body.get("text", "")).strip()
        if not text:
            raise EmptyGeneration("text backend returned a blank completion")
        return text

    def predict_next_emotions(self, context: Sequence[str]) -> EmotionVector:
        if not context:
            raise InvalidArgument("emotion prediction needs at least one sentence")
        if self.emotion is None:
            return lexicon_emotion_fallback(context)
        body = self._post(self.emotion, "/emotions", {"context": list(context)})
        values = body.get("values")
        if not isinstance(values, list) or len(values) != 8:
            raise BackendError("emotion backend must return 8 values")
        clamped = []
        for value in values:
            value = float(value)
            if not 0.0 <= value <= 1.0:
                log.warning("emotion value %.3f outside [0,1]; clamped", value)
                value = min(1.0, max(0.0, value))
            clamped.append(value)
        return EmotionVector(tuple(clamped))

    def generate_images(self, request: ImageRequest) -> list[ImageRef]:
        payload = {
            "prompt": request.prompt,
            "clip_guidance_scale": request.clip_guidance_scale,
            "steps": request.steps,
            "n_batches": request.n_batches,
        }
        body = self._post(self._require(self.image, "image"), "/images", payload)
        raw = body.get("images")
        if not isinstance(raw, list):
            raise BackendError("image backend must return an images list")
        images = []
        for entry in raw:
            try:
                images.append(
                    ImageRef(
                        id=str(entry["id"]),
                        png=base64.b64decode(entry["png_base64"]),
                        prompt=request.prompt,
                    )
                )
            except (KeyError, TypeError, ValueError):
                raise BackendError("malformed image entry in response") from None
        if len(images) < request.n_batches:
            raise PartialBatch(
                f"asked for {request.n_batches} images, got {len(images)}", images
            )
        return images

    def detect_objects(
        self, image: ImageRef, threshold: float = DEFAULT_DETECTION_THRESHOLD
    ) -> list[Detection]:
        _check_threshold(threshold)
        payload = {
            "image_id": image.id,
            "png_base64": base64.b64encode(image.png).decode("ascii"),
            "threshold": threshold,
        }
        body = self._post(self._require(self.detect, "detect"), "/detect", payload)
        raw = body.get("detections")
        if not isinstance(raw, list):
            raise BackendError("detect backend must return a detections list")
        detections = []
        for entry in raw:
            try:
                detections.append(
                    Detection(
                        label=str(entry["label"]),
                        confidence=float(entry["confidence"]),
                        box=tuple(float(v) for v in entry["box"]),
                    )
                )
            except (KeyError, TypeError, ValueError, InvalidArgument):
                raise BackendError("malformed detection entry in response") from None
        kept = [d for d in detections if d.confidence >= threshold]
        kept.sort(key=lambda d: (-d.confidence, d.label))
        return kept
