"""Next-token logit providers.

Two implementations share one interface: a built-in add-k smoothed n-gram
model (the stand-in for a fine-tuned neural model at desk scale) and a
client for an external process that speaks a line-delimited JSON protocol.

Wire protocol ``logit-stream/1``: the serving side opens with one handshake
line ``{"protocol": "logit-stream/1"}``. Each request is one line
``{"prefix": [int, ...], "vocab": int}`` and each response one line
``{"logits": [float, ...]}`` whose array length equals the requested vocab
size. One request is answered at a time per connection; a malformed,
truncated, or mis-sized response raises :class:`ProviderUnavailable`.
"""

from __future__ import annotations

import abc
import json
import socket
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCorpus, ProviderUnavailable
from .vocab import TokenId

PROTOCOL_VERSION = "logit-stream/1"


class LogitProvider(abc.ABC):
    """Deterministic map from a token-id prefix to a full-vocabulary logit row."""

    @property
    @abc.abstractmethod
    def vocab_size(self) -> int: ...

    @abc.abstractmethod
    def logits(self, prefix: Sequence[TokenId]) -> np.ndarray: ...

    def _check_prefix(self, prefix: Sequence[TokenId]) -> None:
        for token in prefix:
            if not 0 <= token < self.vocab_size:
                raise ValueError(f"prefix token {token} outside vocabulary of {self.vocab_size}")


class UniformLogitProvider(LogitProvider):
    """All-zero logits; softmax is uniform for any prefix."""

    def __init__(self, vocab_size: int):
        if vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        self._vocab_size = vocab_size

    @property
    def vocab_size(self) -> int:
        return self._vocab_size

    def logits(self, prefix: Sequence[TokenId]) -> np.ndarray:
        self._check_prefix(prefix)
        return np.zeros(self._vocab_size)


class NGramModel(LogitProvider):
    """Add-k smoothed n-gram model over the shared id space.

    Contexts are the up-to-(order-1) previous tokens; prefixes shorter than
    that fall back to the matching shorter context, which was counted during
    training. An entirely unseen context yields the uniform conditional.
    Logits are log probabilities, so softmax recovers the conditionals.
    """

    def __init__(self, order: int, smoothing_k: float, vocab_size: int):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not smoothing_k > 0:
            raise ValueError("smoothing_k must be > 0")
        if vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        self.order = order
        self.smoothing_k = float(smoothing_k)
        self._vocab_size = vocab_size
        self._counts: dict[tuple[TokenId, ...], Counter] = {}
        self._totals: dict[tuple[TokenId, ...], int] = {}

    @property
    def vocab_size(self) -> int:
        return self._vocab_size

    def _observe(self, sequence: Sequence[TokenId]) -> None:
        history = self.order - 1
        for position, token in enumerate(sequence):
            if not 0 <= token < self._vocab_size:
                raise ValueError(f"corpus token {token} outside vocabulary of {self._vocab_size}")
            context = tuple(sequence[max(0, position - history) : position])
            counter = self._counts.get(context)
            if counter is None:
                counter = self._counts[context] = Counter()
            counter[token] += 1
            self._totals[context] = self._totals.get(context, 0) + 1

    def _context(self, prefix: Sequence[TokenId]) -> tuple[TokenId, ...]:
        history = self.order - 1
        if history == 0:
            return ()
        return tuple(prefix[len(prefix) - history :]) if len(prefix) >= history else tuple(prefix)

    def probabilities(self, prefix: Sequence[TokenId]) -> np.ndarray:
        self._check_prefix(prefix)
        vocab = self._vocab_size
        counter = self._counts.get(self._context(prefix))
        if counter is None:
            return np.full(vocab, 1.0 / vocab)
        total = sum(counter.values())
        k = self.smoothing_k
        denominator = total + k * vocab
        probs = np.full(vocab, k / denominator)
        for token, count in counter.items():
            probs[token] = (count + k) / denominator
        return probs

    def logits(self, prefix: Sequence[TokenId]) -> np.ndarray:
        return np.log(self.probabilities(prefix))

    def save(self, path) -> None:
        contexts = sorted(self._counts.items())
        payload = {
            "format": "ngram-lm/1",
            "order": self.order,
            "smoothing_k": self.smoothing_k,
            "vocab_size": self._vocab_size,
            "contexts": [
                [list(context), sorted([t, c] for t, c in counter.items())]
                for context, counter in contexts
            ],
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "ngram-lm/1":
            raise ValueError(f"not an ngram-lm/1 file: {path}")
        model = cls(payload["order"], payload["smoothing_k"], payload["vocab_size"])
        for context, pairs in payload["contexts"]:
            counter = Counter({int(t): int(c) for t, c in pairs})
            key = tuple(int(t) for t in context)
            model._counts[key] = counter
            model._totals[key] = sum(counter.values())
        return model


def train_ngram(
    corpus: Iterable[Sequence[TokenId]],
    order: int,
    smoothing_k: float,
    vocab_size: int | None = None,
) -> NGramModel:
    """Count-based training; vocabulary defaults to the largest corpus id + 1."""
    sequences = [list(seq) for seq in corpus]
    if not sequences or all(not seq for seq in sequences):
        raise EmptyCorpus("training corpus is empty")
    if vocab_size is None:
        vocab_size = max(max(seq) for seq in sequences if seq) + 1
    model = NGramModel(order, smoothing_k, vocab_size)
    for seq in sequences:
        if seq:
            model._observe(seq)
    return model


class ExternalLogitProvider(LogitProvider):
    """Client for the ``logit-stream/1`` protocol over text streams."""

    def __init__(self, reader, writer, vocab_size: int):
        if vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        self._reader = reader
        self._writer = writer
        self._vocab_size = vocab_size
        self._socket = None
        handshake = self._read_line()
        try:
            announced = json.loads(handshake)
        except json.JSONDecodeError as exc:
            raise ProviderUnavailable(f"bad handshake: {handshake!r}") from exc
        if not isinstance(announced, dict) or announced.get("protocol") != PROTOCOL_VERSION:
            raise ProviderUnavailable(f"unsupported protocol announcement: {announced!r}")

    @classmethod
    def connect_tcp(
        cls, host: str, port: int, vocab_size: int, timeout: float = 10.0
    ) -> "ExternalLogitProvider":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ProviderUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        try:
            provider = cls(
                sock.makefile("r", encoding="utf-8"),
                sock.makefile("w", encoding="utf-8"),
                vocab_size,
            )
        except ProviderUnavailable:
            sock.close()
            raise
        provider._socket = sock
        return provider

    @property
    def vocab_size(self) -> int:
        return self._vocab_size

    def _read_line(self) -> str:
        try:
            line = self._reader.readline()
        except OSError as exc:
            raise ProviderUnavailable(f"read failed: {exc}") from exc
        if not line:
            raise ProviderUnavailable("provider closed the stream")
        return line

    def logits(self, prefix: Sequence[TokenId]) -> np.ndarray:
        self._check_prefix(prefix)
        request = {"prefix": [int(t) for t in prefix], "vocab": self._vocab_size}
        try:
            self._writer.write(json.dumps(request, separators=(",", ":")) + "\n")
            self._writer.flush()
        except OSError as exc:
            raise ProviderUnavailable(f"write failed: {exc}") from exc
        line = self._read_line()
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderUnavailable(f"malformed response: {line!r}") from exc
        values = payload.get("logits") if isinstance(payload, dict) else None
        if not isinstance(values, list) or len(values) != self._vocab_size:
            raise ProviderUnavailable(
                f"expected {self._vocab_size} logits, got {type(values).__name__}"
            )
        vector = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(vector)):
            raise ProviderUnavailable("response contains non-finite logits")
        return vector

    def close(self) -> None:
        for stream in (self._reader, self._writer):
            try:
                stream.close()
            except OSError:
                pass
        if self._socket is not None:
            self._socket.close()


def serve_logits(provider: LogitProvider, reader, writer) -> None:
    """Answer ``logit-stream/1`` requests from ``provider`` until EOF.

    Glue for hosts that want to expose a model over stdio or a socket; a
    vocab-size mismatch is answered with an error object, which clients
    surface as ProviderUnavailable.
    """
    writer.write(json.dumps({"protocol": PROTOCOL_VERSION}) + "\n")
    writer.flush()
    for line in reader:
        if not line.strip():
            continue
        request = json.loads(line)
        if request.get("vocab") != provider.vocab_size:
            writer.write(json.dumps({"error": "vocab size mismatch"}) + "\n")
        else:
            vector = provider.logits(request["prefix"])
            writer.write(json.dumps({"logits": [float(v) for v in vector]}) + "\n")
        writer.flush()
