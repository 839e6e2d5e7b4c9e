"""Text-generation evaluation: n-gram overlap, unigram alignment, embedding
similarity, ranking quality, and a two-system comparison runner.

All scores live in [0,1]. Functions are pure; the runner may be driven by
any object exposing ``name`` and ``hypothesis(context, reference)``.
"""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from collections import Counter, deque
from dataclasses import dataclass, field
from statistics import quantiles
from typing import Callable, Iterable, Mapping, Sequence

from .emotion import threshold_labels, lexicon_score
from .errors import AbortedRun, BackendError, BackendUnavailable, InvalidArgument
from .keywords import extract_keywords
from .prompting import GenerationConfig, build_prompt
from .stemming import stem

# Word tokens and punctuation marks become separate tokens; case is kept.
_TOKEN = re.compile(r"\w+|[^\w\s]")

# Sentence-level smoothing floor for n-gram orders with no matches.
SMOOTHING_EPS = 1e-9

BLEU_ORDERS = (1, 2, 3, 4)

METRIC_NAMES = ("bleu_1", "bleu_2", "bleu_3", "bleu_4", "bleu_avg", "meteor")


def tokenize_for_metrics(text: str) -> list[str]:
    return _TOKEN.findall(text)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(ref_tokens: Sequence[str], hyp_tokens: Sequence[str], n: int) -> tuple[int, int]:
    hyp_counts = _ngram_counts(hyp_tokens, n)
    if not hyp_counts:
        return 0, 0
    ref_counts = _ngram_counts(ref_tokens, n)
    matches = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
    return matches, sum(hyp_counts.values())


def _brevity_penalty(ref_len: int, hyp_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1 - ref_len / hyp_len)


def bleu_n(reference: str, hypothesis: str, n: int) -> float:
    """Modified n-gram precision times brevity penalty; empty hypothesis is 0."""
    if n not in BLEU_ORDERS:
        raise InvalidArgument(f"n must be 1..4, got {n}")
    ref_tokens = tokenize_for_metrics(reference)
    hyp_tokens = tokenize_for_metrics(hypothesis)
    if not hyp_tokens:
        return 0.0
    matches, total = _clipped(ref_tokens, hyp_tokens, n)
    precision = matches / total if matches > 0 else SMOOTHING_EPS
    return precision * _brevity_penalty(len(ref_tokens), len(hyp_tokens))


def bleu_avg(reference: str, hypothesis: str) -> float:
    return sum(bleu_n(reference, hypothesis, n) for n in BLEU_ORDERS) / len(BLEU_ORDERS)


def corpus_bleu(pairs: Sequence[tuple[str, str]]) -> float:
    """Corpus-pooled clipped precisions, geometric mean over the n-gram
    orders the corpus actually has, times corpus brevity penalty.

    Any pooled order with zero matches sends the score to 0 (no smoothing
    at corpus level).
    """
    if not pairs:
        raise InvalidArgument("corpus_bleu needs at least one pair")
    matches = dict.fromkeys(BLEU_ORDERS, 0)
    totals = dict.fromkeys(BLEU_ORDERS, 0)
    ref_len = 0
    hyp_len = 0
    for reference, hypothesis in pairs:
        ref_tokens = tokenize_for_metrics(reference)
        hyp_tokens = tokenize_for_metrics(hypothesis)
        ref_len += len(ref_tokens)
        hyp_len += len(hyp_tokens)
        for n in BLEU_ORDERS:
            m, t = _clipped(ref_tokens, hyp_tokens, n)
            matches[n] += m
            totals[n] += t
    orders = [n for n in BLEU_ORDERS if totals[n] > 0]
    if not orders or any(matches[n] == 0 for n in orders):
        return 0.0
    mean_log = sum(math.log(matches[n] / totals[n]) for n in orders) / len(orders)
    return _brevity_penalty(ref_len, hyp_len) * math.exp(mean_log)


def _word_tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize_for_metrics(text) if any(c.isalnum() for c in t)]


def _align(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> list[tuple[int, int]]:
    """Unigram alignment: exact stage then stem stage, each matching a
    hypothesis token to the leftmost unmatched reference token."""
    exact: dict[str, deque] = {}
    for ri, tok in enumerate(ref_tokens):
        exact.setdefault(tok, deque()).append(ri)
    pairs: dict[int, int] = {}
    taken: set[int] = set()
    for hi, tok in enumerate(hyp_tokens):
        queue = exact.get(tok)
        if queue:
            ri = queue.popleft()
            pairs[hi] = ri
            taken.add(ri)
    stems: dict[str, deque] = {}
    for ri, tok in enumerate(ref_tokens):
        if ri not in taken:
            stems.setdefault(stem(tok), deque()).append(ri)
    for hi, tok in enumerate(hyp_tokens):
        if hi in pairs:
            continue
        queue = stems.get(stem(tok))
        if queue:
            pairs[hi] = queue.popleft()
    return sorted(pairs.items())


def _chunks(alignment: Sequence[tuple[int, int]]) -> int:
    count = 0
    prev_h = prev_r = None
    for hi, ri in alignment:
        if prev_h is None or hi != prev_h + 1 or ri != prev_r + 1:
            count += 1
        prev_h, prev_r = hi, ri
    return count


def meteor(reference: str, hypothesis: str) -> float:
    """Harmonic mean weighted toward recall, discounted by a fragmentation
    penalty: score = Fmean * (1 - 0.5*(chunks/m)^3), 0 when nothing aligns.
    """
    ref_tokens = _word_tokens(reference)
    hyp_tokens = _word_tokens(hypothesis)
    if not ref_tokens or not hyp_tokens:
        return 0.0
    alignment = _align(ref_tokens, hyp_tokens)
    m = len(alignment)
    if m == 0:
        return 0.0
    precision = m / len(hyp_tokens)
    recall = m / len(ref_tokens)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (_chunks(alignment) / m) ** 3
    return fmean * (1 - penalty)


def _norm(vector: Sequence[float]) -> float:
    return math.sqrt(sum(x * x for x in vector))


def embed_greedy_f1(
    ref_embeddings: Sequence[Sequence[float]], hyp_embeddings: Sequence[Sequence[float]]
) -> float:
    """Greedy max-cosine matching in both directions, combined as F1."""
    if not ref_embeddings or not hyp_embeddings:
        raise InvalidArgument("both embedding lists must be non-empty")
    dim = len(ref_embeddings[0])
    norms_r = []
    norms_h = []
    for vector in ref_embeddings:
        if len(vector) != dim:
            raise InvalidArgument("embedding dimensions differ")
        norms_r.append(_norm(vector))
    for vector in hyp_embeddings:
        if len(vector) != dim:
            raise InvalidArgument("embedding dimensions differ")
        norms_h.append(_norm(vector))
    if any(n == 0 for n in norms_r) or any(n == 0 for n in norms_h):
        raise InvalidArgument("zero-norm embedding")
    sims = [
        [
            sum(a * b for a, b in zip(r, h)) / (norms_r[i] * norms_h[j])
            for j, h in enumerate(hyp_embeddings)
        ]
        for i, r in enumerate(ref_embeddings)
    ]
    precision = sum(max(sims[i][j] for i in range(len(ref_embeddings))) for j in range(len(hyp_embeddings)))
    precision /= len(hyp_embeddings)
    recall = sum(max(row) for row in sims) / len(ref_embeddings)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _auc_by_ranks(pairs: Sequence[tuple[bool, float]]) -> float:
    ordered = sorted(range(len(pairs)), key=lambda i: pairs[i][1])
    ranks = [0.0] * len(pairs)
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and pairs[ordered[j + 1]][1] == pairs[ordered[i]][1]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[ordered[k]] = mean_rank
        i = j + 1
    n_pos = sum(1 for truth, _ in pairs if truth)
    n_neg = len(pairs) - n_pos
    rank_sum = sum(r for r, (truth, _) in zip(ranks, pairs) if truth)
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def roc_auc_macro(labels: Mapping[str, Sequence[tuple[bool, float]]]) -> float:
    """Unweighted mean of per-class AUC; ties count one half. Classes
    missing a positive or a negative are skipped with a warning."""
    aucs = []
    for name, pairs in labels.items():
        has_pos = any(truth for truth, _ in pairs)
        has_neg = any(not truth for truth, _ in pairs)
        if not (has_pos and has_neg):
            warnings.warn(
                f"class {name!r} lacks both outcomes and is excluded", RuntimeWarning, stacklevel=2
            )
            continue
        aucs.append(_auc_by_ranks(pairs))
    if not aucs:
        raise InvalidArgument("no class has both a positive and a negative")
    return sum(aucs) / len(aucs)


@dataclass(frozen=True)
class ScoredPair:
    reference: str
    hypothesis: str
    scores: dict[str, float]


@dataclass(frozen=True)
class MetricStats:
    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float
    zero_count: int
    n: int

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MetricStats":
        if not values:
            raise InvalidArgument("no values to summarize")
        data = sorted(values)
        if len(data) == 1:
            q1 = median = q3 = data[0]
        else:
            q1, median, q3 = quantiles(data, n=4, method="inclusive")
        return cls(
            mean=sum(data) / len(data),
            median=median,
            q1=q1,
            q3=q3,
            min=data[0],
            max=data[-1],
            zero_count=sum(1 for v in data if v == 0.0),
            n=len(data),
        )

    def as_dict(self) -> dict:
        return {
            "mean": self.mean, "median": self.median, "q1": self.q1, "q3": self.q3,
            "min": self.min, "max": self.max, "zero_count": self.zero_count, "n": self.n,
        }


@dataclass(frozen=True)
class DistributionReport:
    per_metric: dict[str, MetricStats]

    @classmethod
    def from_pairs(cls, pairs: Sequence[ScoredPair]) -> "DistributionReport":
        by_metric: dict[str, list[float]] = {}
        for pair in pairs:
            for name, value in pair.scores.items():
                by_metric.setdefault(name, []).append(value)
        return cls({name: MetricStats.from_values(vals) for name, vals in by_metric.items()})

    def as_dict(self) -> dict:
        return {name: stats.as_dict() for name, stats in self.per_metric.items()}


def improvement_map(
    report_a: DistributionReport, report_b: DistributionReport
) -> dict[str, float | None]:
    """Relative mean improvement of a over b; None where b's mean is 0."""
    out: dict[str, float | None] = {}
    for name in report_a.per_metric:
        if name not in report_b.per_metric:
            continue
        mean_a = report_a.per_metric[name].mean
        mean_b = report_b.per_metric[name].mean
        out[name] = None if mean_b == 0 else (mean_a - mean_b) / mean_b
    return out


def default_scorer(reference: str, hypothesis: str) -> dict[str, float]:
    scores = {f"bleu_{n}": bleu_n(reference, hypothesis, n) for n in BLEU_ORDERS}
    scores["bleu_avg"] = sum(scores.values()) / len(BLEU_ORDERS)
    scores["meteor"] = meteor(reference, hypothesis)
    return scores


@dataclass(frozen=True)
class CorpusItem:
    context: tuple[str, ...]
    reference: str

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        if not self.reference:
            raise InvalidArgument("corpus item without a reference")


def load_corpus(path) -> list[CorpusItem]:
    """Read one {context: [...], reference: "..."} JSON object per line."""
    items = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidArgument(f"{path}:{lineno}: bad JSON ({exc.msg})") from None
            if not isinstance(record, dict) or "reference" not in record:
                raise InvalidArgument(f"{path}:{lineno}: need context and reference fields")
            items.append(
                CorpusItem(tuple(record.get("context", ())), str(record["reference"]))
            )
    return items


@dataclass(frozen=True)
class PromptedSystem:
    """Conditions generation on entities and emotions read off the
    reference sentence, mirroring how the generator was trained."""

    backend: object
    config: GenerationConfig = field(default_factory=GenerationConfig)
    name: str = "prompted"

    def hypothesis(self, context: Sequence[str], reference: str) -> str:
        prompt = build_prompt(
            extract_keywords(reference),
            tuple(context)[-4:],
            threshold_labels(lexicon_score(reference), 0.5),
        )
        return self.backend.generate_text(prompt, self.config)


@dataclass(frozen=True)
class BaselineSystem:
    """Context-only generation: keyword and emotion sections left empty."""

    backend: object
    config: GenerationConfig = field(default_factory=GenerationConfig)
    name: str = "baseline"

    def hypothesis(self, context: Sequence[str], reference: str) -> str:
        prompt = build_prompt((), tuple(context)[-4:], ())
        return self.backend.generate_text(prompt, self.config)


@dataclass(frozen=True)
class ComparisonResult:
    report_a: DistributionReport
    report_b: DistributionReport
    improvement: dict[str, float | None]
    corpus_bleu_a: float
    corpus_bleu_b: float
    pairs_a: tuple[ScoredPair, ...]
    pairs_b: tuple[ScoredPair, ...]
    name_a: str
    name_b: str
    skipped: int
    total: int

    def as_dict(self) -> dict:
        return {
            "systems": {"a": self.name_a, "b": self.name_b},
            "reports": {"a": self.report_a.as_dict(), "b": self.report_b.as_dict()},
            "improvement": self.improvement,
            "corpus_bleu": {"a": self.corpus_bleu_a, "b": self.corpus_bleu_b},
            "skipped": self.skipped,
            "total": self.total,
        }


def run_comparison(
    corpus: Iterable[CorpusItem | tuple],
    system_a,
    system_b,
    *,
    scorer: Callable[[str, str], dict[str, float]] | None = None,
    max_skip_fraction: float = 0.5,
) -> ComparisonResult:
    """Score every corpus item under both systems and compare the means.

    An item is dropped from both sides when either backend fails on it;
    more than ``max_skip_fraction`` dropped aborts the run.
    """
    items = [it if isinstance(it, CorpusItem) else CorpusItem(*it) for it in corpus]
    if not items:
        raise InvalidArgument("empty corpus")
    score = scorer or default_scorer
    pairs_a: list[ScoredPair] = []
    pairs_b: list[ScoredPair] = []
    skipped = 0
    for item in items:
        try:
            hyp_a = system_a.hypothesis(item.context, item.reference)
            hyp_b = system_b.hypothesis(item.context, item.reference)
        except (BackendError, BackendUnavailable):
            skipped += 1
            continue
        pairs_a.append(ScoredPair(item.reference, hyp_a, score(item.reference, hyp_a)))
        pairs_b.append(ScoredPair(item.reference, hyp_b, score(item.reference, hyp_b)))
    if skipped / len(items) > max_skip_fraction:
        raise AbortedRun(
            f"{skipped} of {len(items)} items failed on a backend", skipped, len(items)
        )
    report_a = DistributionReport.from_pairs(pairs_a)
    report_b = DistributionReport.from_pairs(pairs_b)
    return ComparisonResult(
        report_a=report_a,
        report_b=report_b,
        improvement=improvement_map(report_a, report_b),
        corpus_bleu_a=corpus_bleu([(p.reference, p.hypothesis) for p in pairs_a]),
        corpus_bleu_b=corpus_bleu([(p.reference, p.hypothesis) for p in pairs_b]),
        pairs_a=tuple(pairs_a),
        pairs_b=tuple(pairs_b),
        name_a=getattr(system_a, "name", "a"),
        name_b=getattr(system_b, "name", "b"),
        skipped=skipped,
        total=len(items),
    )


def write_scores_csv(result: ComparisonResult, path) -> None:
    """Per-item scores for both systems, one row per (item, system)."""
    names = sorted({n for p in (*result.pairs_a, *result.pairs_b) for n in p.scores})
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["item", "system", "reference", "hypothesis", *names])
        for system, pairs in ((result.name_a, result.pairs_a), (result.name_b, result.pairs_b)):
            for index, pair in enumerate(pairs):
                writer.writerow(
                    [index, system, pair.reference, pair.hypothesis]
                    + [pair.scores.get(n, "") for n in names]
                )
