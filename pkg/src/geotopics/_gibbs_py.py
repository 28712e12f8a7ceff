"""Pure-Python collapsed Gibbs sampling kernels.

Fallback for environments without the compiled extension. Both backends draw
from the same xoshiro256++ stream and evaluate the sampling distribution with
the same operation order, so for a given seed they produce identical counts
bit for bit (verified in tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / 9007199254740992.0  # 2 ** -53


class Xoshiro256pp:
    """xoshiro256++ with splitmix64 seeding; mirrors the C implementation."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        state = seed & _MASK64

        def splitmix():
            nonlocal state
            state = (state + 0x9E3779B97F4A7C15) & _MASK64
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            return z ^ (z >> 31)

        self.s0 = splitmix()
        self.s1 = splitmix()
        self.s2 = splitmix()
        self.s3 = splitmix()

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        tmp = (s0 + s3) & _MASK64
        result = (((tmp << 23) | (tmp >> 41)) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53


def train_gibbs(doc_ids, token_ids, n_docs, n_topics, n_words, alpha, beta, sweeps, seed):
    """Resample per-token topic assignments; returns (n_kw, n_dk) count tables.

    doc_ids/token_ids are parallel int32 arrays, one entry per token position.
    """
    doc_ids = np.ascontiguousarray(doc_ids, dtype=np.int32)
    token_ids = np.ascontiguousarray(token_ids, dtype=np.int32)
    n = token_ids.shape[0]
    rng = Xoshiro256pp(seed)

    n_kw = np.zeros((n_topics, n_words), dtype=np.int32)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int32)
    n_k = np.zeros(n_topics, dtype=np.int64)
    z = np.empty(n, dtype=np.int32)
    v_beta = n_words * beta

    for i in range(n):
        k = int(rng.next_double() * n_topics)
        if k >= n_topics:
            k = n_topics - 1
        z[i] = k
        n_kw[k, token_ids[i]] += 1
        n_dk[doc_ids[i], k] += 1
        n_k[k] += 1

    for _ in range(sweeps):
        for i in range(n):
            d = doc_ids[i]
            w = token_ids[i]
            k = z[i]
            n_kw[k, w] -= 1
            n_dk[d, k] -= 1
            n_k[k] -= 1
            p = (n_kw[:, w] + beta) / (n_k + v_beta) * (n_dk[d] + alpha)
            cum = np.cumsum(p)
            u = rng.next_double() * cum[-1]
            k = int(np.searchsorted(cum, u, side="right"))
            if k >= n_topics:
                k = n_topics - 1
            z[i] = k
            n_kw[k, w] += 1
            n_dk[d, k] += 1
            n_k[k] += 1

    return n_kw, n_dk


def infer_gibbs(token_ids, topic_word, alpha, sweeps, seed):
    """Fold a document into a fixed topic-word model.

    Resamples the document's assignments against ``topic_word`` probabilities
    and returns the doc-topic distribution averaged over the final quarter of
    sweeps.
    """
    token_ids = np.ascontiguousarray(token_ids, dtype=np.int32)
    topic_word = np.ascontiguousarray(topic_word, dtype=np.float64)
    n_topics = topic_word.shape[0]
    n = token_ids.shape[0]
    if n == 0:
        raise ValueError("infer_gibbs requires at least one token")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    rng = Xoshiro256pp(seed)

    n_dk = np.zeros(n_topics, dtype=np.int64)
    z = np.empty(n, dtype=np.int32)
    for i in range(n):
        k = int(rng.next_double() * n_topics)
        if k >= n_topics:
            k = n_topics - 1
        z[i] = k
        n_dk[k] += 1

    n_avg = max(1, sweeps // 4)
    burn = sweeps - n_avg
    acc = np.zeros(n_topics, dtype=np.float64)
    for s in range(sweeps):
        for i in range(n):
            w = token_ids[i]
            k = z[i]
            n_dk[k] -= 1
            p = topic_word[:, w] * (n_dk + alpha)
            cum = np.cumsum(p)
            u = rng.next_double() * cum[-1]
            k = int(np.searchsorted(cum, u, side="right"))
            if k >= n_topics:
                k = n_topics - 1
            z[i] = k
            n_dk[k] += 1
        if s >= burn:
            acc += n_dk + alpha

    denom = (n + n_topics * alpha) * n_avg
    return acc / denom
