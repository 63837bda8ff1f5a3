"""Reference-vs-hypothesis lexical scoring.

Conventions (also flagged in CLI output headers):

* exact_match: whitespace-normalized string equality, 0 or 1.
* edit_similarity: 1 - levenshtein/max-length at character level, so higher
  is better and identical strings score 1.
* bleu: sentence-level, n-gram orders 1..4 but never longer than the
  hypothesis, uniform weights, add-one smoothing on every order, times the
  standard brevity penalty. Scores sit in [0, 1].
* rouge_l: F1 of the longest common subsequence over whitespace tokens.
* chrf: character n-gram F-score, orders 1..6 on whitespace-stripped text,
  recall-weighted with beta = 2, scaled to [0, 100].

A token-frequency cosine is also provided as a cheap lexical overlap proxy;
it is not an embedding similarity and is never reported as one.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyList, EmptyReference

METRIC_FIELDS = ("exact_match", "edit_similarity", "bleu", "rouge_l", "chrf")


@dataclass(frozen=True)
class MetricBundle:
    exact_match: float
    edit_similarity: float
    bleu: float
    rouge_l: float
    chrf: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


def levenshtein(a: str, b: str) -> int:
    """Character edit distance, two-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i]
        for j, char_b in enumerate(b, start=1):
            cost = 0 if char_a == char_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for item_a in a:
        current = [0]
        for j, item_b in enumerate(b, start=1):
            if item_a == item_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def _ngram_counts(items: Sequence, n: int) -> Counter:
    return Counter(tuple(items[i : i + n]) for i in range(len(items) - n + 1))


def sentence_bleu(reference_tokens: Sequence[str], hypothesis_tokens: Sequence[str]) -> float:
    hyp_len = len(hypothesis_tokens)
    ref_len = len(reference_tokens)
    if hyp_len == 0:
        return 0.0
    log_precisions = []
    for order in range(1, min(4, hyp_len) + 1):
        hyp_counts = _ngram_counts(hypothesis_tokens, order)
        ref_counts = _ngram_counts(reference_tokens, order)
        clipped = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        total = sum(hyp_counts.values())
        log_precisions.append(math.log((clipped + 1) / (total + 1)))
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(sum(log_precisions) / len(log_precisions))


def rouge_l(reference_tokens: Sequence[str], hypothesis_tokens: Sequence[str]) -> float:
    if not reference_tokens or not hypothesis_tokens:
        return 0.0
    lcs = _lcs_length(reference_tokens, hypothesis_tokens)
    if lcs == 0:
        return 0.0
    precision = lcs / len(hypothesis_tokens)
    recall = lcs / len(reference_tokens)
    return 2.0 * precision * recall / (precision + recall)


def chrf(reference: str, hypothesis: str, max_order: int = 6, beta: float = 2.0) -> float:
    ref_chars = "".join(reference.split())
    hyp_chars = "".join(hypothesis.split())
    precisions = []
    recalls = []
    for order in range(1, max_order + 1):
        ref_counts = _ngram_counts(ref_chars, order)
        hyp_counts = _ngram_counts(hyp_chars, order)
        ref_total = sum(ref_counts.values())
        hyp_total = sum(hyp_counts.values())
        if ref_total == 0 and hyp_total == 0:
            continue
        matches = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        precisions.append(matches / hyp_total if hyp_total else 0.0)
        recalls.append(matches / ref_total if ref_total else 0.0)
    if not precisions:
        return 0.0
    mean_p = sum(precisions) / len(precisions)
    mean_r = sum(recalls) / len(recalls)
    denominator = beta * beta * mean_p + mean_r
    if denominator == 0:
        return 0.0
    return 100.0 * (1.0 + beta * beta) * mean_p * mean_r / denominator


def token_cosine(reference: str, hypothesis: str) -> float:
    """Cosine of token frequency vectors; a lexical proxy, nothing semantic."""
    ref_counts = Counter(reference.split())
    hyp_counts = Counter(hypothesis.split())
    if not ref_counts or not hyp_counts:
        return 0.0
    dot = sum(count * hyp_counts[token] for token, count in ref_counts.items())
    norm = math.sqrt(sum(c * c for c in ref_counts.values())) * math.sqrt(
        sum(c * c for c in hyp_counts.values())
    )
    return dot / norm if norm else 0.0


def evaluate_pair(reference: str, hypothesis: str) -> MetricBundle:
    """All metrics for one pair; the reference must be non-empty."""
    ref_norm = " ".join(reference.split())
    if not ref_norm:
        raise EmptyReference("reference is empty after whitespace normalization")
    hyp_norm = " ".join(hypothesis.split())
    ref_tokens = ref_norm.split()
    hyp_tokens = hyp_norm.split()
    distance = levenshtein(ref_norm, hyp_norm)
    longest = max(len(ref_norm), len(hyp_norm))
    return MetricBundle(
        exact_match=1.0 if ref_norm == hyp_norm else 0.0,
        edit_similarity=1.0 - distance / longest,
        bleu=sentence_bleu(ref_tokens, hyp_tokens),
        rouge_l=rouge_l(ref_tokens, hyp_tokens),
        chrf=chrf(ref_norm, hyp_norm),
    )


def aggregate(bundles: Sequence[MetricBundle]) -> MetricBundle:
    """Arithmetic mean per field."""
    if not bundles:
        raise EmptyList("nothing to aggregate")
    count = len(bundles)
    return MetricBundle(
        **{name: sum(getattr(b, name) for b in bundles) / count for name in METRIC_FIELDS}
    )


def aggregate_with_ci(
    bundles: Sequence[MetricBundle],
    n_resamples: int = 1000,
    seed: int = 0,
    confidence: float = 0.95,
) -> tuple[MetricBundle, dict[str, tuple[float, float]]]:
    """Means plus seeded bootstrap percentile intervals per field."""
    means = aggregate(bundles)
    rng = random.Random(seed)
    count = len(bundles)
    columns = {name: [getattr(b, name) for b in bundles] for name in METRIC_FIELDS}
    samples: dict[str, list[float]] = {name: [] for name in METRIC_FIELDS}
    for _ in range(n_resamples):
        picks = [rng.randrange(count) for _ in range(count)]
        for name, column in columns.items():
            samples[name].append(sum(column[i] for i in picks) / count)
    tail = (1.0 - confidence) / 2.0
    intervals = {}
    for name, values in samples.items():
        values.sort()
        lo_index = int(round(tail * (n_resamples - 1)))
        hi_index = int(round((1.0 - tail) * (n_resamples - 1)))
        intervals[name] = (values[lo_index], values[hi_index])
    return means, intervals
