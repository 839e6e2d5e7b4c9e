"""Brute-force reference implementations for the metric suite.

Written before the production code and kept deliberately naive: explicit
loops, no pooling tricks, no rank statistics. The test suite checks the
fast implementations against these on randomized instances.
"""

from __future__ import annotations

import math
import re

from fabula.stemming import stem

_TOKEN = re.compile(r"\w+|[^\w\s]")


def oracle_tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def oracle_clipped_matches(ref_tokens: list[str], hyp_tokens: list[str], n: int) -> tuple[int, int]:
    """(clipped match count, hypothesis n-gram count) by explicit pairing."""
    ref_grams = _ngrams(ref_tokens, n)
    hyp_grams = _ngrams(hyp_tokens, n)
    available = list(ref_grams)
    matches = 0
    for gram in hyp_grams:
        if gram in available:
            available.remove(gram)
            matches += 1
    return matches, len(hyp_grams)


def oracle_bleu_n(reference: str, hypothesis: str, n: int, eps: float = 1e-9) -> float:
    ref_tokens = oracle_tokenize(reference)
    hyp_tokens = oracle_tokenize(hypothesis)
    if not hyp_tokens:
        return 0.0
    matches, total = oracle_clipped_matches(ref_tokens, hyp_tokens, n)
    if total == 0:
        precision = eps
    elif matches == 0:
        precision = eps
    else:
        precision = matches / total
    r, h = len(ref_tokens), len(hyp_tokens)
    bp = 1.0 if h >= r else math.exp(1 - r / h)
    return precision * bp


def oracle_bleu_avg(reference: str, hypothesis: str) -> float:
    return sum(oracle_bleu_n(reference, hypothesis, n) for n in (1, 2, 3, 4)) / 4


def oracle_corpus_bleu(pairs: list[tuple[str, str]]) -> float:
    if not pairs:
        raise ValueError("empty corpus")
    total_ref = 0
    total_hyp = 0
    matches = {n: 0 for n in (1, 2, 3, 4)}
    totals = {n: 0 for n in (1, 2, 3, 4)}
    for reference, hypothesis in pairs:
        ref_tokens = oracle_tokenize(reference)
        hyp_tokens = oracle_tokenize(hypothesis)
        total_ref += len(ref_tokens)
        total_hyp += len(hyp_tokens)
        for n in (1, 2, 3, 4):
            m, t = oracle_clipped_matches(ref_tokens, hyp_tokens, n)
            matches[n] += m
            totals[n] += t
    orders = [n for n in (1, 2, 3, 4) if totals[n] > 0]
    if not orders:
        return 0.0
    if any(matches[n] == 0 for n in orders):
        return 0.0
    log_sum = sum(math.log(matches[n] / totals[n]) for n in orders) / len(orders)
    bp = 1.0 if total_hyp >= total_ref else math.exp(1 - total_ref / total_hyp)
    return bp * math.exp(log_sum)


def _word_tokens(text: str) -> list[str]:
    # The word-level metric ignores punctuation-only tokens.
    return [t.lower() for t in oracle_tokenize(text) if any(c.isalnum() for c in t)]


def oracle_meteor_alignment(ref_tokens: list[str], hyp_tokens: list[str]) -> list[tuple[int, int]]:
    """(hyp index, ref index) pairs: exact stage then stem stage, leftmost-first."""
    matched_ref: set[int] = set()
    pairs: dict[int, int] = {}
    for hi, htok in enumerate(hyp_tokens):
        for ri, rtok in enumerate(ref_tokens):
            if ri not in matched_ref and rtok == htok:
                pairs[hi] = ri
                matched_ref.add(ri)
                break
    for hi, htok in enumerate(hyp_tokens):
        if hi in pairs:
            continue
        hstem = stem(htok)
        for ri, rtok in enumerate(ref_tokens):
            if ri not in matched_ref and stem(rtok) == hstem:
                pairs[hi] = ri
                matched_ref.add(ri)
                break
    return sorted(pairs.items())


def oracle_chunk_count(alignment: list[tuple[int, int]]) -> int:
    chunks = 0
    prev: tuple[int, int] | None = None
    for hi, ri in alignment:
        if prev is None or hi != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (hi, ri)
    return chunks


def oracle_meteor(reference: str, hypothesis: str) -> float:
    ref_tokens = _word_tokens(reference)
    hyp_tokens = _word_tokens(hypothesis)
    if not ref_tokens or not hyp_tokens:
        return 0.0
    alignment = oracle_meteor_alignment(ref_tokens, hyp_tokens)
    m = len(alignment)
    if m == 0:
        return 0.0
    precision = m / len(hyp_tokens)
    recall = m / len(ref_tokens)
    fmean = 10 * precision * recall / (recall + 9 * precision)
    penalty = 0.5 * (oracle_chunk_count(alignment) / m) ** 3
    return fmean * (1 - penalty)


def _cosine(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


def oracle_embed_greedy_f1(refs: list[list[float]], hyps: list[list[float]]) -> float:
    precision = sum(max(_cosine(h, r) for r in refs) for h in hyps) / len(hyps)
    recall = sum(max(_cosine(r, h) for h in hyps) for r in refs) / len(refs)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def oracle_auc_single(pairs: list[tuple[bool, float]]) -> float:
    positives = [s for truth, s in pairs if truth]
    negatives = [s for truth, s in pairs if not truth]
    if not positives or not negatives:
        raise ValueError("class needs at least one positive and one negative")
    wins = 0.0
    for p in positives:
        for q in negatives:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(positives) * len(negatives))


def oracle_roc_auc_macro(labels: dict[str, list[tuple[bool, float]]]) -> float:
    aucs = []
    for pairs in labels.values():
        has_pos = any(t for t, _ in pairs)
        has_neg = any(not t for t, _ in pairs)
        if has_pos and has_neg:
            aucs.append(oracle_auc_single(pairs))
    if not aucs:
        raise ValueError("no class with both outcomes")
    return sum(aucs) / len(aucs)


def oracle_quartiles(values: list[float]) -> tuple[float, float, float]:
    """(q1, median, q3) by inclusive linear interpolation."""

    def at(p: float) -> float:
        data = sorted(values)
        if len(data) == 1:
            return data[0]
        h = (len(data) - 1) * p
        lo = math.floor(h)
        hi = math.ceil(h)
        return data[lo] + (data[hi] - data[lo]) * (h - lo)

    return at(0.25), at(0.5), at(0.75)
