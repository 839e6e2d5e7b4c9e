"""The co-creation loop: suggest, override, generate a sentence, render an
image batch, let the user pick one, detect objects, feed the next turn.

Sessions persist as JSON with images stored alongside as content-addressed
PNG files. With mock backends and a fixed seed, a session transcript is a
pure function of (first sentence, seed, user actions).
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Sequence

from .backends import DEFAULT_DETECTION_THRESHOLD, ImageRef, ImageRequest, ModelBackends
from .emotion import (
    DEFAULT_TAU,
    DEFAULT_TOP_K,
    EmotionLabelSet,
    threshold_labels,
    top_k_labels,
)
from .errors import (
    Conflict,
    InvalidArgument,
    InvalidState,
    NotFound,
    PartialBatch,
    SessionParseError,
    UnsupportedVersion,
)
from .imageflow import (
    DEFAULT_SUGGESTION_LIMIT,
    DetectionSummary,
    StylePrefs,
    augment_image_prompt,
    suggestion_keywords,
    summarize_detections,
)
from .keywords import KeywordSet, extract_keywords
from .prompting import MAX_CONTEXT_SENTENCES, GenerationConfig, build_prompt

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class SessionPhase(Enum):
    AWAITING_FIRST_SENTENCE = "AwaitingFirstSentence"
    SUGGESTIONS_READY = "SuggestionsReady"
    SENTENCE_GENERATED = "SentenceGenerated"
    IMAGES_READY = "ImagesReady"
    COMPLETED = "Completed"


# The only phase changes a session may ever exhibit. Sessions are born in
# AWAITING_FIRST_SENTENCE conceptually; start_session performs the first
# edge immediately. Disabling images collapses the image leg (see
# StoryEngine.generate_next_sentence).
LEGAL_TRANSITIONS = frozenset(
    {
        (SessionPhase.AWAITING_FIRST_SENTENCE, SessionPhase.SUGGESTIONS_READY),
        (SessionPhase.SUGGESTIONS_READY, SessionPhase.SENTENCE_GENERATED),
        (SessionPhase.SENTENCE_GENERATED, SessionPhase.IMAGES_READY),
        (SessionPhase.IMAGES_READY, SessionPhase.SUGGESTIONS_READY),
        (SessionPhase.IMAGES_READY, SessionPhase.COMPLETED),
    }
)


@dataclass(frozen=True)
class SessionOptions:
    max_sentences: int = 5
    suggestion_limit: int = DEFAULT_SUGGESTION_LIMIT
    emotion_tau: float = DEFAULT_TAU
    emotion_top_k: int = DEFAULT_TOP_K
    detection_threshold: float = DEFAULT_DETECTION_THRESHOLD
    detect_all_images: bool = True
    images_enabled: bool = True

    def __post_init__(self):
        if self.max_sentences < 2:
            raise InvalidArgument("a story needs at least 2 sentences")
        if self.suggestion_limit < 0:
            raise InvalidArgument("suggestion_limit must be non-negative")

    def as_dict(self) -> dict:
        return {
            "max_sentences": self.max_sentences,
            "suggestion_limit": self.suggestion_limit,
            "emotion_tau": self.emotion_tau,
            "emotion_top_k": self.emotion_top_k,
            "detection_threshold": self.detection_threshold,
            "detect_all_images": self.detect_all_images,
            "images_enabled": self.images_enabled,
        }

    @classmethod
    def from_dict(cls, data: dict | None) -> "SessionOptions":
        if not data:
            return cls()
        known = {k: data[k] for k in cls().as_dict() if k in data}
        return cls(**known)


@dataclass
class Turn:
    """One loop iteration; turn i produces story sentence i+1."""

    index: int
    suggested_emotions: EmotionLabelSet
    suggested_keywords: KeywordSet
    user_emotions: EmotionLabelSet
    user_keywords: KeywordSet
    prompt: str | None = None
    generated_sentence: str | None = None
    image_batch: list[ImageRef] = field(default_factory=list)
    selected_image: int | None = None
    detection_summary: DetectionSummary | None = None
    style: StylePrefs = field(default_factory=StylePrefs)


@dataclass
class StorySession:
    id: str
    seed: int
    story: list[str]
    turns: list[Turn]
    phase: SessionPhase
    options: SessionOptions
    style: StylePrefs
    created_at: str
    updated_at: str

    @property
    def current_turn(self) -> Turn:
        if not self.turns:
            raise InvalidState("session has no open turn")
        return self.turns[-1]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def sanitize_sentence(text: str) -> str:
    """Make backend output safe to embed in later prompts: collapse
    newlines, drop brackets, trim."""
    cleaned = " ".join(text.replace("[", "(").replace("]", ")").split())
    return cleaned.strip()


def deterministic_session_id(seed: int, first_sentence: str) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"fabula:{seed}:{first_sentence}"))


class StoryEngine:
    """Drives sessions against a backend bundle. Stateless besides its
    configuration; safe to share across threads when callers serialize
    mutations per session (SessionStore.lock does this)."""

    def __init__(
        self,
        backends: ModelBackends,
        options: SessionOptions | None = None,
        config: GenerationConfig | None = None,
    ):
        self.backends = backends
        self.options = options or SessionOptions()
        self.config = config or GenerationConfig()

    # -- suggestion helpers -------------------------------------------------

    def _suggest_emotions(self, session: StorySession) -> EmotionLabelSet:
        vector = self.backends.predict_next_emotions(list(session.story))
        labels = threshold_labels(vector, session.options.emotion_tau)
        if not len(labels):
            labels = top_k_labels(vector, session.options.emotion_top_k)
        return labels

    def _open_turn(self, session: StorySession, keywords: KeywordSet) -> None:
        emotions = self._suggest_emotions(session)
        session.turns.append(
            Turn(
                index=len(session.turns) + 1,
                suggested_emotions=emotions,
                suggested_keywords=keywords,
                user_emotions=emotions,
                user_keywords=keywords,
                style=session.style,
            )
        )

    # -- operations ---------------------------------------------------------

    def start_session(
        self,
        first_sentence: str,
        seed: int = 0,
        style: StylePrefs | None = None,
    ) -> StorySession:
        first_sentence = (first_sentence or "").strip()
        if not first_sentence:
            raise InvalidArgument("first sentence must be non-empty")
        if "\n" in first_sentence or "[" in first_sentence or "]" in first_sentence:
            raise InvalidArgument("first sentence may not contain newlines or brackets")
        now = _now()
        session = StorySession(
            id=deterministic_session_id(seed, first_sentence),
            seed=int(seed),
            story=[first_sentence],
            turns=[],
            phase=SessionPhase.SUGGESTIONS_READY,
            options=self.options,
            style=style or StylePrefs(),
            created_at=now,
            updated_at=now,
        )
        # No images exist yet, so the first turn's keywords come from the
        # opening sentence itself.
        self._open_turn(session, extract_keywords(first_sentence))
        return session

    def override_suggestions(
        self,
        session: StorySession,
        emotions: EmotionLabelSet | None = None,
        keywords: KeywordSet | None = None,
    ) -> StorySession:
        self._require_phase(session, SessionPhase.SUGGESTIONS_READY)
        turn = session.current_turn
        if emotions is not None:
            turn.user_emotions = emotions
        if keywords is not None:
            turn.user_keywords = keywords
        session.updated_at = _now()
        return session

    def generate_next_sentence(self, session: StorySession) -> StorySession:
        self._require_phase(session, SessionPhase.SUGGESTIONS_READY)
        if len(session.story) >= session.options.max_sentences:
            raise InvalidState("story is already at full length")
        turn = session.current_turn
        prompt = build_prompt(
            turn.user_keywords,
            session.story[-MAX_CONTEXT_SENTENCES:],
            turn.user_emotions,
        )
        sentence = sanitize_sentence(self.backends.generate_text(prompt, self.config))
        if not sentence:
            raise InvalidState("backend produced an empty sentence")
        turn.prompt = prompt
        turn.generated_sentence = sentence
        session.story.append(sentence)
        full = len(session.story) >= session.options.max_sentences
        if session.options.images_enabled:
            session.phase = SessionPhase.SENTENCE_GENERATED
        elif full:
            session.phase = SessionPhase.COMPLETED
        else:
            # Image leg disabled: go straight to the next turn's suggestions.
            self._open_turn(session, extract_keywords(sentence))
            session.phase = SessionPhase.SUGGESTIONS_READY
        session.updated_at = _now()
        return session

    def generate_turn_images(
        self, session: StorySession, prefs: StylePrefs | None = None
    ) -> StorySession:
        self._require_phase(session, SessionPhase.SENTENCE_GENERATED)
        turn = session.current_turn
        effective = prefs if prefs is not None else session.style
        request = ImageRequest(prompt=augment_image_prompt(session.story[-1], effective))
        try:
            images = self.backends.generate_images(request)
        except PartialBatch as exc:
            if not exc.images:
                raise
            log.warning("image batch incomplete: %s", exc)
            images = exc.images
        turn.style = effective
        turn.image_batch = list(images)
        session.phase = SessionPhase.IMAGES_READY
        session.updated_at = _now()
        return session

    def select_image(self, session: StorySession, index: int) -> StorySession:
        self._require_phase(session, SessionPhase.IMAGES_READY)
        turn = session.current_turn
        if not 0 <= index < len(turn.image_batch):
            raise InvalidArgument(
                f"image index {index} outside batch of {len(turn.image_batch)}"
            )
        turn.selected_image = index
        targets = (
            turn.image_batch
            if session.options.detect_all_images
            else [turn.image_batch[index]]
        )
        batches = [
            self.backends.detect_objects(image, session.options.detection_threshold)
            for image in targets
        ]
        turn.detection_summary = summarize_detections(batches)
        if len(session.story) >= session.options.max_sentences:
            session.phase = SessionPhase.COMPLETED
        else:
            detected = suggestion_keywords(
                turn.detection_summary, session.options.suggestion_limit
            )
            self._open_turn(
                session, detected.merge(extract_keywords(session.story[-1]))
            )
            session.phase = SessionPhase.SUGGESTIONS_READY
        session.updated_at = _now()
        return session

    @staticmethod
    def _require_phase(session: StorySession, expected: SessionPhase) -> None:
        if session.phase is not expected:
            raise InvalidState(
                f"operation needs phase {expected.value}, session is {session.phase.value}"
            )


# -- persistence ------------------------------------------------------------


def _image_to_dict(image: ImageRef) -> dict:
    return {"id": image.id, "hash": image.content_hash, "prompt": image.prompt}


def _turn_to_dict(turn: Turn) -> dict:
    return {
        "index": turn.index,
        "suggested_emotions": list(turn.suggested_emotions.names()),
        "suggested_keywords": list(turn.suggested_keywords.phrases),
        "user_emotions": list(turn.user_emotions.names()),
        "user_keywords": list(turn.user_keywords.phrases),
        "prompt": turn.prompt,
        "generated_sentence": turn.generated_sentence,
        "images": [_image_to_dict(image) for image in turn.image_batch],
        "selected_image": turn.selected_image,
        "detection_summary": (
            turn.detection_summary.as_dicts() if turn.detection_summary is not None else None
        ),
        "style": turn.style.as_dict(),
    }


def session_to_dict(session: StorySession, include_timestamps: bool = True) -> dict:
    data = {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "seed": session.seed,
        "phase": session.phase.value,
        "story": list(session.story),
        "turns": [_turn_to_dict(turn) for turn in session.turns],
        "options": session.options.as_dict(),
        "style": session.style.as_dict(),
    }
    if include_timestamps:
        data["created_at"] = session.created_at
        data["updated_at"] = session.updated_at
    return data


def _turn_from_dict(data: dict, images_dir: Path | None) -> Turn:
    images = []
    for entry in data.get("images", ()):
        png = b""
        if images_dir is not None:
            image_path = images_dir / f"{entry['hash']}.png"
            if image_path.is_file():
                png = image_path.read_bytes()
            else:
                log.warning("image file missing: %s", image_path)
        images.append(
            ImageRef(
                id=str(entry["id"]),
                png=png,
                prompt=str(entry["prompt"]),
                stored_hash=str(entry["hash"]),
            )
        )
    summary = data.get("detection_summary")
    return Turn(
        index=int(data["index"]),
        suggested_emotions=EmotionLabelSet.from_names(data["suggested_emotions"]),
        suggested_keywords=KeywordSet(data["suggested_keywords"]),
        user_emotions=EmotionLabelSet.from_names(data["user_emotions"]),
        user_keywords=KeywordSet(data["user_keywords"]),
        prompt=data.get("prompt"),
        generated_sentence=data.get("generated_sentence"),
        image_batch=images,
        selected_image=data.get("selected_image"),
        detection_summary=DetectionSummary.from_dicts(summary) if summary is not None else None,
        style=StylePrefs.from_dict(data.get("style")),
    )


def session_from_dict(data: dict, images_dir: Path | None = None) -> StorySession:
    if not isinstance(data, dict):
        raise InvalidArgument("session document must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersion(f"schema_version {version!r} is not supported")
    try:
        phase = SessionPhase(data["phase"])
        return StorySession(
            id=str(data["id"]),
            seed=int(data["seed"]),
            story=[str(s) for s in data["story"]],
            turns=[_turn_from_dict(t, images_dir) for t in data["turns"]],
            phase=phase,
            options=SessionOptions.from_dict(data.get("options")),
            style=StylePrefs.from_dict(data.get("style")),
            created_at=str(data.get("created_at", "")),
            updated_at=str(data.get("updated_at", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed session document: {exc}") from None


def save_session(session: StorySession, path: str | Path) -> Path:
    """Write the session JSON; image bytes go to sibling files named by
    content hash so the JSON stays stable and diffable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    for turn in session.turns:
        for image in turn.image_batch:
            if not image.png:
                continue
            image_path = path.parent / f"{image.content_hash}.png"
            if not image_path.exists():
                image_path.write_bytes(image.png)
    payload = json.dumps(session_to_dict(session), indent=2, sort_keys=True) + "\n"
    path.write_text(payload, encoding="utf-8")
    return path


def load_session(path: str | Path) -> StorySession:
    path = Path(path)
    if not path.is_file():
        raise NotFound(f"no session file at {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SessionParseError(
            f"{path} is not valid JSON at byte {exc.pos}: {exc.msg}", offset=exc.pos
        ) from None
    return session_from_dict(data, images_dir=path.parent)


class SessionStore:
    """Directory of session files with per-session mutation locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.RLock] = {}
        self._registry = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or "\\" in session_id or ".." in session_id:
            raise InvalidArgument(f"bad session id: {session_id!r}")
        return self.root / f"{session_id}.json"

    def lock(self, session_id: str, timeout: float = 30.0):
        with self._registry:
            lock = self._locks.setdefault(session_id, threading.RLock())
        return _HeldLock(lock, timeout, session_id)

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).is_file()

    def save(self, session: StorySession) -> Path:
        return save_session(session, self._path(session.id))

    def load(self, session_id: str) -> StorySession:
        return load_session(self._path(session_id))

    def image_path(self, content_hash: str) -> Path:
        if not all(c in "0123456789abcdef" for c in content_hash) or not content_hash:
            raise InvalidArgument("image hashes are lowercase hex")
        return self.root / f"{content_hash}.png"

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))


class _HeldLock:
    def __init__(self, lock: threading.RLock, timeout: float, session_id: str):
        self._lock = lock
        self._timeout = timeout
        self._session_id = session_id

    def __enter__(self):
        if not self._lock.acquire(timeout=self._timeout):
            raise Conflict(f"session {self._session_id} is busy")
        return self

    def __exit__(self, *exc_info):
        self._lock.release()
        return False


# -- action-log replay -------------------------------------------------------


def replay_actions(engine: StoryEngine, script: dict) -> StorySession:
    """Run a recorded action log, e.g. {"first_sentence": ..., "seed": ...,
    "actions": [{"action": "override", ...}, {"action": "generate"}, ...]}.
    """
    session = engine.start_session(
        script["first_sentence"],
        seed=int(script.get("seed", 0)),
        style=StylePrefs.from_dict(script.get("style")),
    )
    for step in script.get("actions", ()):
        action = step.get("action")
        if action == "override":
            emotions = step.get("emotions")
            keywords = step.get("keywords")
            engine.override_suggestions(
                session,
                emotions=EmotionLabelSet.from_names(emotions) if emotions is not None else None,
                keywords=KeywordSet(keywords) if keywords is not None else None,
            )
        elif action == "generate":
            engine.generate_next_sentence(session)
        elif action == "images":
            prefs = None
            if "artist" in step or "background" in step:
                prefs = StylePrefs(artist=step.get("artist"), background=step.get("background"))
            engine.generate_turn_images(session, prefs)
        elif action == "select":
            engine.select_image(session, int(step["index"]))
        else:
            raise InvalidArgument(f"unknown action {action!r}")
    return session
