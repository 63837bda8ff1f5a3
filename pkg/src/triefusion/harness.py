"""Prequential online loop: decode first, then learn.

Each stream item is decoded with the trie as it stands, scored against the
reference, and only then is the reference inserted. The hypothesis for item
i therefore never depends on reference i or anything later, which makes the
run leakage-free and truncation-consistent: replaying the first i items
reproduces the first i records exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .fusion import Decoder, FusionState, StepDiagnostics
from .lm import LogitProvider
from .metrics import MetricBundle, evaluate_pair
from .prior import trie_prior
from .stream import ConceptSpec, PlaceholderSpan, StreamItem
from .trie import PrefixTrie
from .vocab import TokenId, VocabRegistry, detokenize

DEFAULT_MAX_NEW_TOKENS = 64


@dataclass(frozen=True)
class ItemRecord:
    index: int
    concept_id: str
    prompt_text: str
    reference_text: str
    hypothesis_text: str
    hypothesis: tuple[TokenId, ...]
    metrics: MetricBundle
    steps: tuple[StepDiagnostics, ...]
    generated: tuple[TokenId, ...]
    # per step: the trie prior's (token, probability) support, None on bypass
    priors: tuple[tuple[tuple[TokenId, float], ...] | None, ...]
    bypass_steps: int

    def to_dict(self) -> dict:
        count = len(self.steps) or 1
        return {
            "index": self.index,
            "concept": self.concept_id,
            "prompt": self.prompt_text,
            "reference": self.reference_text,
            "hypothesis": self.hypothesis_text,
            "metrics": self.metrics.as_dict(),
            "bypass_steps": self.bypass_steps,
            "steps": len(self.steps),
            "mean_gamma": sum(s.gamma for s in self.steps) / count,
            "mean_omega": sum(s.omega for s in self.steps) / count,
        }


def decode_sequence(
    prompt: Sequence[TokenId],
    trie: PrefixTrie,
    provider: LogitProvider,
    decoder: Decoder,
    now: float,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    eos_id: TokenId | None = None,
) -> tuple[list[TokenId], list[StepDiagnostics], list[tuple[tuple[TokenId, float], ...] | None]]:
    """Extend ``prompt`` token by token until the end marker or the cap.

    The trie is read-only here; ``now`` is the decode-time clock used for
    recency scoring. Strategies that ignore the trie never query it.
    Returns the extended ids, per-step diagnostics, and per-step prior
    supports (None where no prior was consulted).
    """
    ids = list(prompt)
    steps: list[StepDiagnostics] = []
    priors: list[tuple[tuple[TokenId, float], ...] | None] = []
    state: FusionState = decoder.initial_state()
    for _ in range(max_new_tokens):
        z = provider.logits(ids)
        prior = None
        if decoder.wants_prior and ids:
            prior = trie_prior(trie, ids, now, decoder.config.weights)
        token, diagnostics, state = decoder.step(z, prior, state)
        steps.append(diagnostics)
        priors.append(tuple(sorted(prior.probs.items())) if prior is not None else None)
        ids.append(token)
        if eos_id is not None and token == eos_id:
            break
    return ids, steps, priors


def run_online(
    stream: Sequence[StreamItem],
    trie: PrefixTrie,
    provider: LogitProvider,
    decoder: Decoder,
    registry: VocabRegistry,
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS,
    eos_id: TokenId | None = None,
) -> list[ItemRecord]:
    """Strict test-then-train pass over the stream, in order."""
    records: list[ItemRecord] = []
    for item in stream:
        ids, steps, priors = decode_sequence(
            item.prompt,
            trie,
            provider,
            decoder,
            now=item.timestamp,
            max_new_tokens=max_new_tokens,
            eos_id=eos_id,
        )
        shown = ids[:-1] if (eos_id is not None and ids and ids[-1] == eos_id) else ids
        hypothesis_text = detokenize(shown, registry)
        bundle = evaluate_pair(item.reference_text, hypothesis_text)
        records.append(
            ItemRecord(
                index=item.index,
                concept_id=item.concept_id,
                prompt_text=item.prompt_text,
                reference_text=item.reference_text,
                hypothesis_text=hypothesis_text,
                hypothesis=tuple(shown),
                metrics=bundle,
                steps=tuple(steps),
                generated=tuple(ids[len(item.prompt) :]),
                priors=tuple(priors),
                bypass_steps=sum(1 for s in steps if s.bypass),
            )
        )
        observed = list(item.reference) + ([eos_id] if eos_id is not None else [])
        trie.insert_sequence(observed, item.timestamp)
    return records


def warm_start(trie: PrefixTrie, corpus: Sequence[Sequence[TokenId]], timestamp: float) -> None:
    """Pre-stream corpus insertion, e.g. the material the base model saw."""
    for sequence in corpus:
        trie.insert_sequence(sequence, timestamp)


def drifted_span_outcomes(
    item: StreamItem,
    hypothesis: Sequence[TokenId],
    baseline: ConceptSpec,
) -> list[tuple[PlaceholderSpan, bool]]:
    """Per drifted placeholder span: did the hypothesis reproduce it exactly?

    A span counts as drifted when its surface value differs from what the
    baseline concept would have put there. Matching is positional in
    reference coordinates, so a hypothesis that diverged earlier fails.
    """
    outcomes = []
    for span in item.spans:
        if baseline.substitutions.get(span.name) == span.value:
            continue
        expected = item.reference[span.start : span.end]
        matched = (
            len(hypothesis) >= span.end
            and tuple(hypothesis[span.start : span.end]) == tuple(expected)
        )
        outcomes.append((span, matched))
    return outcomes


def drift_adaptation_rate(
    stream: Sequence[StreamItem],
    records: Sequence[ItemRecord],
    baseline: ConceptSpec,
    start_index: int,
) -> tuple[int, int]:
    """(matched, total) drifted spans over items at or past ``start_index``."""
    matched = total = 0
    for item, record in zip(stream, records):
        if item.index < start_index:
            continue
        for _, ok in drifted_span_outcomes(item, record.hypothesis, baseline):
            total += 1
            matched += int(ok)
    return matched, total
