"""Independent brute-force oracle for the trie -> prior pipeline.

Deliberately written against the raw corpus instead of any tree structure:
it enumerates every windowed n-gram of every stored sequence and derives
match sets, features, scores, and the top-preserving distribution from
simple dictionaries. Tests compare the production path against this.
"""

import math


class NgramScan:
    """Flat n-gram table built by rescanning the stored corpus."""

    def __init__(self, n_max):
        self.n_max = n_max
        self.rows = []  # (tokens, timestamp)
        self._cache = None

    def add(self, tokens, timestamp):
        self.rows.append((list(tokens), timestamp))
        self._cache = None

    def table(self):
        if self._cache is not None:
            return self._cache
        grams = {}
        for tokens, stamp in self.rows:
            for start in range(len(tokens)):
                for length in range(1, min(self.n_max, len(tokens) - start) + 1):
                    gram = tuple(tokens[start : start + length])
                    if gram in grams:
                        entry = grams[gram]
                        entry[0] += 1
                        entry[1] = max(entry[1], stamp)
                    else:
                        grams[gram] = [1, stamp]
        self._cache = grams
        return grams

    def node_count(self):
        return len(self.table())

    def next_tokens(self, suffix):
        """(token, frequency, depth, recency) continuations of ``suffix``."""
        suffix = tuple(suffix)
        out = {}
        for gram, (freq, stamp) in self.table().items():
            if len(gram) == len(suffix) + 1 and gram[:-1] == suffix:
                out[gram[-1]] = (freq, len(gram), stamp)
        return out

    def candidates(self, prefix):
        """(token, frequency, depth, recency, suffix_len) over all suffixes."""
        prefix = list(prefix)
        raw = []
        for length in range(len(prefix), 0, -1):
            suffix = tuple(prefix[len(prefix) - length :])
            for token, (freq, depth, stamp) in sorted(self.next_tokens(suffix).items()):
                raw.append((token, freq, depth, stamp, length))
        return raw


def bf_scores(raw, prefix_len, now, weights=(1 / 3, 1 / 3, 1 / 3)):
    """token -> best score, recomputed with plain arithmetic."""
    w_f, w_l, w_r = weights
    damped = [math.log(1 + freq) for _, freq, _, _, _ in raw]
    top = max(damped)
    gaps = [now - stamp for _, _, _, stamp, _ in raw]
    base = min(gaps)
    shifted = [g - base for g in gaps]
    widest = max(shifted)
    best = {}
    for (token, freq, depth, stamp, _), f_raw, gap in zip(raw, damped, shifted):
        f_n = f_raw / top
        l_n = min(1.0, depth / prefix_len)
        r_n = 1.0 if widest == 0 else math.exp(-gap / widest)
        score = w_f * f_n + w_l * l_n + w_r * r_n
        if token not in best or score > best[token]:
            best[token] = score
    return best


def bf_top_preserving(scores):
    """token -> probability under winner-keeps-score normalization."""
    peak = max(scores.values())
    winner = min(t for t, s in scores.items() if s == peak)
    if len(scores) == 1:
        return {winner: 1.0}
    rest = sum(s for t, s in scores.items() if t != winner)
    return {
        t: (peak if t == winner else (1.0 - peak) * scores[t] / rest)
        for t in sorted(scores)
    }
