"""Interactive visual story co-creation: emotion and keyword suggestions,
prompt-conditioned sentence generation, per-sentence illustration with
object-detection feedback, plus an evaluation suite for the text side.
"""

from .backends import (
    BackendEndpoint,
    Detection,
    HttpModelBackends,
    ImageRef,
    ImageRequest,
    ModelBackends,
)
from .emotion import (
    EmotionLabel,
    EmotionLabelSet,
    EmotionVector,
    lexicon_score,
    threshold_labels,
    top_k_labels,
)
from .errors import FabulaError
from .imageflow import (
    DetectionSummary,
    StylePrefs,
    augment_image_prompt,
    suggestion_keywords,
    summarize_detections,
)
from .keywords import KeywordSet, extract_keywords, tokenize
from .metrics import (
    bleu_avg,
    bleu_n,
    corpus_bleu,
    embed_greedy_f1,
    meteor,
    roc_auc_macro,
    run_comparison,
)
from .mock import MockModelBackends
from .prompting import GenerationConfig, PromptBundle, build_prompt, parse_prompt
from .session import (
    SessionOptions,
    SessionPhase,
    SessionStore,
    StoryEngine,
    StorySession,
    load_session,
    save_session,
)

__version__ = "0.1.0"

__all__ = [
    "BackendEndpoint",
    "Detection",
    "DetectionSummary",
    "EmotionLabel",
    "EmotionLabelSet",
    "EmotionVector",
    "FabulaError",
    "GenerationConfig",
    "HttpModelBackends",
    "ImageRef",
    "ImageRequest",
    "KeywordSet",
    "MockModelBackends",
    "ModelBackends",
    "PromptBundle",
    "SessionOptions",
    "SessionPhase",
    "SessionStore",
    "StoryEngine",
    "StorySession",
    "StylePrefs",
    "augment_image_prompt",
    "bleu_avg",
    "bleu_n",
    "build_prompt",
    "corpus_bleu",
    "embed_greedy_f1",
    "extract_keywords",
    "lexicon_score",
    "load_session",
    "meteor",
    "parse_prompt",
    "roc_auc_macro",
    "run_comparison",
    "save_session",
    "suggestion_keywords",
    "summarize_detections",
    "threshold_labels",
    "tokenize",
    "top_k_labels",
]
