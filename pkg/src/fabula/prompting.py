"""Structured prompt assembly for the sentence generator.

The backbone model was trained on prompts with three bracketed sections
(keywords, story context, target emotions) behind ``<extra_id_0>`` sentinel
markers. The byte layout is part of the model contract: the header keeps
its trailing space, sections are newline-joined, and empty sections render
as ``[]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .emotion import EmotionLabelSet
from .keywords import KeywordSet

PROMPT_HEADER = "Generate next sentence based on following "
SENTINEL = "<extra_id_0>"

_SECTION_NAMES = ("KEYWORDS", "CONTEXT", "EMOTION")

# Sentences in the context section are separated by a single space, so the
# split happens after a sentence terminator.
_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?]) ")

# A five-sentence story never conditions on more than four prior sentences.
MAX_CONTEXT_SENTENCES = 4


class PromptParseError(ValueError):
    """Raised when text does not follow the prompt layout."""


@dataclass(frozen=True)
class GenerationConfig:
    """Decoding settings forwarded verbatim to the text backend.

    Defaults are the tuned values the sentence generator was run with:
    top-K sampling with K=3, repetition penalty 2.6, length penalty 1.0,
    and source/output caps of 512 and 50 tokens. Truncation itself is the
    backend's job; these are passed through.
    """

    max_source_length: int = 512
    max_output_length: int = 50
    top_k: int = 3
    repetition_penalty: float = 2.6
    length_penalty: float = 1.0

    def __post_init__(self):
        for name in ("max_source_length", "max_output_length", "repetition_penalty", "length_penalty"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {self.top_k!r}")


def _check_sentence(sentence: str) -> str:
    if not sentence or sentence != sentence.strip():
        raise ValueError(f"context sentences must be trimmed and non-empty, got {sentence!r}")
    if "\n" in sentence or "[" in sentence or "]" in sentence:
        raise ValueError(f"context sentences may not contain newlines or brackets: {sentence!r}")
    return sentence


@dataclass(frozen=True)
class PromptBundle:
    """The three prompt sections in structured form."""

    keywords: KeywordSet = field(default_factory=KeywordSet)
    context: tuple[str, ...] = ()
    emotions: EmotionLabelSet = field(default_factory=EmotionLabelSet)

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if len(self.context) > MAX_CONTEXT_SENTENCES:
            raise ValueError(
                f"context holds at most {MAX_CONTEXT_SENTENCES} sentences, got {len(self.context)}"
            )
        for sentence in self.context:
            _check_sentence(sentence)


def build_prompt(
    keywords: KeywordSet | Iterable[str] = (),
    context: Sequence[str] = (),
    emotions: EmotionLabelSet | Iterable[str] = (),
) -> str:
    """Render the three sections into the exact byte layout the model expects."""
    if not isinstance(keywords, KeywordSet):
        keywords = KeywordSet(keywords)
    if not isinstance(emotions, EmotionLabelSet):
        emotions = EmotionLabelSet.from_names(emotions)
    context = tuple(_check_sentence(s) for s in context)
    if len(context) > MAX_CONTEXT_SENTENCES:
        raise ValueError(
            f"context holds at most {MAX_CONTEXT_SENTENCES} sentences, got {len(context)}"
        )
    lines = [
        PROMPT_HEADER,
        f"{SENTINEL}KEYWORDS: [{keywords.to_fragment()}]",
        f"{SENTINEL}CONTEXT: [{' '.join(context)}]",
        f"{SENTINEL}EMOTION: [{emotions.to_fragment()}]",
    ]
    return "\n".join(lines)


def bundle_to_prompt(bundle: PromptBundle) -> str:
    return build_prompt(bundle.keywords, bundle.context, bundle.emotions)


def split_context(joined: str) -> tuple[str, ...]:
    """Recover individual sentences from a space-joined context section.

    Exact only when every sentence ends with ``.``, ``!`` or ``?``, which
    the story engine guarantees for its own output.
    """
    if not joined:
        return ()
    return tuple(_SENTENCE_BOUNDARY.split(joined))


def parse_prompt(prompt: str) -> PromptBundle:
    """Inverse of ``build_prompt`` for well-formed prompts."""
    lines = prompt.split("\n")
    if len(lines) != 4:
        raise PromptParseError(f"expected 4 lines, got {len(lines)}")
    if lines[0] != PROMPT_HEADER:
        raise PromptParseError(f"bad header line: {lines[0]!r}")
    inners: list[str] = []
    for line, name in zip(lines[1:], _SECTION_NAMES):
        prefix = f"{SENTINEL}{name}: ["
        if not line.startswith(prefix) or not line.endswith("]"):
            raise PromptParseError(f"bad {name} line: {line!r}")
        inners.append(line[len(prefix) : -1])
    kw_inner, ctx_inner, emo_inner = inners
    keywords = KeywordSet.from_fragment(kw_inner)
    context = split_context(ctx_inner)
    try:
        emotions = (
            EmotionLabelSet.from_names(emo_inner.split(", ")) if emo_inner else EmotionLabelSet()
        )
    except ValueError as exc:
        raise PromptParseError(str(exc)) from None
    return PromptBundle(keywords=keywords, context=context, emotions=emotions)
