"""Rule-based entity extraction.

A coarse part-of-speech pass (bundled word list plus suffix and position
heuristics) followed by noun-phrase chunking. This stands in for a neural
scene-graph parser; only the entity slice of the graph is produced, since
keywords are all the generation pipeline consumes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

# Coarse tags. OTHER covers conjunctions, adverbs, particles and anything
# else that can never sit inside a noun phrase.
DET = "DET"
PRON = "PRON"
NOUN = "NOUN"
VERB = "VERB"
ADJ = "ADJ"
ADP = "ADP"
OTHER = "OTHER"

COARSE_TAGS = frozenset({DET, PRON, NOUN, VERB, ADJ, ADP, OTHER})

# Word characters plus word-internal apostrophes and hyphens; all other
# punctuation is dropped.
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*")


@dataclass(frozen=True)
class Token:
    surface: str
    lowercase: str
    coarse_pos: str
    index: int
    start: int  # character offset into the source sentence

    @property
    def end(self) -> int:
        return self.start + len(self.surface)


class KeywordSet:
    """Ordered, case-insensitively deduplicated entity phrases.

    First occurrence wins both the position and the casing.
    """

    __slots__ = ("_phrases",)

    def __init__(self, phrases: Iterable[str] = ()):
        seen: set[str] = set()
        kept: list[str] = []
        for phrase in phrases:
            if not isinstance(phrase, str) or not phrase.strip():
                raise ValueError(f"keyword phrases must be non-empty text, got {phrase!r}")
            key = phrase.lower()
            if key not in seen:
                seen.add(key)
                kept.append(phrase)
        self._phrases: tuple[str, ...] = tuple(kept)

    @classmethod
    def from_fragment(cls, fragment: str) -> "KeywordSet":
        """Inverse of ``to_fragment`` for phrases that contain no ", "."""
        if not fragment:
            return cls()
        return cls(fragment.split(", "))

    @property
    def phrases(self) -> tuple[str, ...]:
        return self._phrases

    def to_fragment(self) -> str:
        return ", ".join(self._phrases)

    def merge(self, other: "KeywordSet") -> "KeywordSet":
        return KeywordSet((*self._phrases, *other._phrases))

    def without_determiners(self) -> "KeywordSet":
        """A view with leading determiners stripped from each phrase."""
        dets = _determiners()
        stripped = []
        for phrase in self._phrases:
            head, _, rest = phrase.partition(" ")
            if rest and head.lower() in dets:
                stripped.append(rest)
            else:
                stripped.append(phrase)
        return KeywordSet(stripped)

    def __iter__(self):
        return iter(self._phrases)

    def __len__(self) -> int:
        return len(self._phrases)

    def __contains__(self, phrase: object) -> bool:
        return phrase in self._phrases

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeywordSet):
            return NotImplemented
        return self._phrases == other._phrases

    def __hash__(self) -> int:
        return hash(self._phrases)

    def __repr__(self) -> str:
        return f"KeywordSet({list(self._phrases)})"


@lru_cache(maxsize=1)
def _wordlist() -> dict[str, str]:
    text = resources.files("fabula.data").joinpath("wordlist.tsv").read_text("utf-8")
    table: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, tag = line.split("\t")
        except ValueError:
            raise ValueError(f"wordlist line {lineno}: expected word<TAB>POS") from None
        if tag not in COARSE_TAGS:
            raise ValueError(f"wordlist line {lineno}: unknown tag {tag!r}")
        table.setdefault(word.lower(), tag)
    return table


@lru_cache(maxsize=1)
def _determiners() -> frozenset[str]:
    return frozenset(w for w, tag in _wordlist().items() if tag == DET)


def _tag(surface: str, lowercase: str, prev_tag: str | None) -> str:
    listed = _wordlist().get(lowercase)
    if prev_tag in (DET, ADJ):
        # A content word is licensed here; a finite-verb reading is not.
        if listed in (None, VERB):
            return NOUN
        return listed
    if listed is not None:
        return listed
    if len(lowercase) >= 5 and lowercase.endswith("ly"):
        return OTHER
    if surface[:1].isupper():
        return NOUN
    if lowercase.endswith("ing") or lowercase.endswith("ed"):
        return VERB
    if prev_tag == PRON:
        return VERB
    return NOUN


def tokenize(sentence: str) -> list[Token]:
    """Split on whitespace/punctuation and assign coarse part-of-speech tags.

    Word-internal apostrophes and hyphens stay inside their token; all
    other punctuation is dropped.
    """
    tokens: list[Token] = []
    prev_tag: str | None = None
    for index, match in enumerate(_TOKEN_RE.finditer(sentence)):
        surface = match.group(0)
        lowercase = surface.lower()
        tag = _tag(surface, lowercase, prev_tag)
        tokens.append(Token(surface, lowercase, tag, index, match.start()))
        prev_tag = tag
    return tokens


def _is_subject_pronoun(tokens: list[Token], i: int) -> bool:
    if i == 0:
        return True
    return i + 1 < len(tokens) and tokens[i + 1].coarse_pos == VERB


def extract_keywords(sentence: str) -> KeywordSet:
    """Entities of a sentence: noun-phrase chunks plus subject pronouns.

    Chunks follow (DET)? (ADJ)* (NOUN)+ and keep their determiner, matching
    the style of the pipeline's training keywords. Phrases are sliced from
    the original sentence, so each one appears in it verbatim.
    """
    tokens = tokenize(sentence)
    n = len(tokens)
    phrases: list[str] = []
    i = 0
    while i < n:
        tok = tokens[i]
        if tok.coarse_pos == PRON:
            if _is_subject_pronoun(tokens, i):
                phrases.append(tok.surface)
            i += 1
            continue
        if tok.coarse_pos in (DET, ADJ, NOUN):
            j = i
            if tokens[j].coarse_pos == DET:
                j += 1
            while j < n and tokens[j].coarse_pos == ADJ:
                j += 1
            k = j
            while k < n and tokens[k].coarse_pos == NOUN:
                k += 1
            if k > j:
                phrases.append(sentence[tokens[i].start : tokens[k - 1].end])
                i = k
                continue
        i += 1
    return KeywordSet(phrases)


def keywords_to_prompt_fragment(keywords: KeywordSet) -> str:
    """Phrases joined by ", " with no trailing separator."""
    return keywords.to_fragment()
