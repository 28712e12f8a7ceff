"""LDA via collapsed Gibbs sampling, document folding, and topic utilities.

Training resamples per-token topic assignments over the whole corpus;
inference folds a document into a fixed topic-word model. Both run on the
kernel backend selected in :mod:`geotopics.kernels`. All randomness flows
from explicit integer seeds, so results are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .corpus import Vocabulary


class TopicModelError(ValueError):
    """Invalid model configuration or corpus."""


@dataclass
class LdaModel:
    """Trained topic-word model.

    topic_word rows are smoothed count ratios (n_kw + beta) / (n_k + V*beta)
    taken from the final sweep; each row sums to 1.
    """

    n_topics: int
    alpha: float
    beta: float
    topic_word: np.ndarray  # (K, V) float64
    vocab: Vocabulary
    seed: int
    sweeps: int

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.topic_word).tobytes())
        h.update(self.vocab.content_hash().encode())
        h.update(f"{self.n_topics}|{self.alpha}|{self.beta}|{self.seed}".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class TopicDistribution:
    """Length-K probability vector for one document or region."""

    doc_id: Optional[str]
    theta: np.ndarray
    prior_only: bool = False  # True when the doc was empty under the vocab


def default_alpha(n_topics: int) -> float:
    return 50.0 / n_topics


def _expand_bags(
    docs: Sequence[Mapping[int, int]], n_words: int
) -> tuple[np.ndarray, np.ndarray]:
    """Flatten bags into parallel (doc_id, token_id) arrays, deterministically."""
    doc_ids: list[int] = []
    token_ids: list[int] = []
    for d, bag in enumerate(docs):
        if not bag:
            raise TopicModelError(f"document {d} is empty under the model vocabulary")
        for idx in sorted(bag):
            count = bag[idx]
            if count <= 0 or idx < 0 or idx >= n_words:
                raise TopicModelError(f"document {d}: bad bag entry {idx}:{count}")
            doc_ids.extend([d] * count)
            token_ids.extend([idx] * count)
    return (
        np.asarray(doc_ids, dtype=np.int32),
        np.asarray(token_ids, dtype=np.int32),
    )


def train_lda(
    docs: Sequence[Mapping[int, int]],
    vocab: Vocabulary,
    n_topics: int,
    alpha: Optional[float] = None,
    beta: float = 0.01,
    sweeps: int = 500,
    seed: int = 0,
) -> LdaModel:
    """Train by collapsed Gibbs sampling; deterministic for a fixed seed.

    ``docs`` are bags of vocabulary indices (index -> count) and must all be
    non-empty.
    """
    if n_topics < 1:
        raise TopicModelError("n_topics must be >= 1")
    if not docs:
        raise TopicModelError("cannot train on an empty corpus")
    if sweeps < 1:
        raise TopicModelError("sweeps must be >= 1")
    if alpha is None:
        alpha = default_alpha(n_topics)
    if alpha <= 0 or beta <= 0:
        raise TopicModelError("alpha and beta must be > 0")
    n_words = len(vocab)
    if n_words == 0:
        raise TopicModelError("vocabulary is empty")
    doc_ids, token_ids = _expand_bags(docs, n_words)
    n_kw, _ = kernels.train_gibbs(
        doc_ids, token_ids, len(docs), n_topics, n_words, alpha, beta, sweeps, seed
    )
    n_k = n_kw.sum(axis=1, dtype=np.int64)
    topic_word = (n_kw + beta) / (n_k[:, None] + n_words * beta)
    return LdaModel(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        topic_word=topic_word,
        vocab=vocab,
        seed=seed,
        sweeps=sweeps,
    )


def infer_theta_ids(
    model: LdaModel, token_ids: Sequence[int], sweeps: int = 100, seed: int = 0
) -> tuple[np.ndarray, bool]:
    """Doc-topic distribution for pre-mapped token indices.

    Empty docs get the uniform (prior-only) distribution and a True flag.
    Theta is (n_dk + alpha) / (n_d + K*alpha) averaged over the final quarter
    of sweeps.
    """
    k = model.n_topics
    if len(token_ids) == 0:
        return np.full(k, 1.0 / k), True
    if k == 1:
        return np.array([1.0]), False
    theta = kernels.infer_gibbs(
        np.asarray(token_ids, dtype=np.int32),
        model.topic_word,
        model.alpha,
        sweeps,
        seed,
    )
    return theta, False


def infer_theta(
    model: LdaModel,
    tokens: Iterable[str],
    doc_id: Optional[str] = None,
    sweeps: int = 100,
    seed: int = 0,
) -> TopicDistribution:
    """Infer theta for raw tokens; out-of-vocabulary tokens are dropped."""
    ids = model.vocab.map_tokens(tokens)
    theta, prior_only = infer_theta_ids(model, ids, sweeps=sweeps, seed=seed)
    return TopicDistribution(doc_id=doc_id, theta=theta, prior_only=prior_only)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two non-negative vectors; in [0, 1] for distributions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise TopicModelError(f"shape mismatch {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise TopicModelError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def assign_unlocated(
    tokens: Iterable[str],
    model: LdaModel,
    region_thetas: Mapping[str, np.ndarray],
    sweeps: int = 100,
    seed: int = 0,
) -> Optional[str]:
    """Best-matching region for an unlocated record, by cosine similarity.

    Ties break to the lexicographically smallest region id. Returns None when
    the record is empty under the model vocabulary (record stays unassigned).
    """
    if not region_thetas:
        raise TopicModelError("region_thetas is empty")
    ids = model.vocab.map_tokens(tokens)
    if not ids:
        return None
    theta, _ = infer_theta_ids(model, ids, sweeps=sweeps, seed=seed)
    best_region: Optional[str] = None
    best_sim = -1.0
    for region_id in sorted(region_thetas):
        sim = cosine_similarity(theta, region_thetas[region_id])
        if sim > best_sim:
            best_sim = sim
            best_region = region_id
    return best_region


def perplexity(
    model: LdaModel,
    docs: Sequence[Mapping[int, int]],
    sweeps: int = 100,
    seed: int = 0,
) -> float:
    """exp(-total log-likelihood / total tokens) with per-doc folded theta."""
    total_ll = 0.0
    total_tokens = 0
    for d, bag in enumerate(docs):
        ids = [i for i in sorted(bag) for _ in range(bag[i])]
        if not ids:
            continue
        theta, _ = infer_theta_ids(model, ids, sweeps=sweeps, seed=seed + d)
        word_probs = theta @ model.topic_word[:, ids]
        total_ll += float(np.sum(np.log(word_probs)))
        total_tokens += len(ids)
    if total_tokens == 0:
        raise TopicModelError("perplexity undefined for zero tokens")
    return float(np.exp(-total_ll / total_tokens))


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """0.5 * L1 distance between two distributions."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def greedy_match_topics(
    reference: np.ndarray, candidate: np.ndarray
) -> list[tuple[int, int]]:
    """Greedy one-to-one matching of topic rows by total-variation distance.

    Downstream comparisons go through this to stay invariant to topic index
    permutation (label switching).
    """
    ref = np.asarray(reference, dtype=np.float64)
    cand = np.asarray(candidate, dtype=np.float64)
    if ref.shape != cand.shape:
        raise TopicModelError("topic matrices must have the same shape")
    k = ref.shape[0]
    dist = np.array(
        [[total_variation(ref[i], cand[j]) for j in range(k)] for i in range(k)]
    )
    pairs: list[tuple[int, int]] = []
    used_i: set[int] = set()
    used_j: set[int] = set()
    flat = sorted(
        ((dist[i, j], i, j) for i in range(k) for j in range(k)),
        key=lambda t: (t[0], t[1], t[2]),
    )
    for _, i, j in flat:
        if i in used_i or j in used_j:
            continue
        pairs.append((i, j))
        used_i.add(i)
        used_j.add(j)
        if len(pairs) == k:
            break
    return pairs


def save_model(model: LdaModel, path: str) -> None:
    """Persist to a single .npz including the vocabulary and its hash."""
    np.savez(
        path,
        n_topics=np.int64(model.n_topics),
        alpha=np.float64(model.alpha),
        beta=np.float64(model.beta),
        seed=np.uint64(model.seed),  # derived seeds use the full 64-bit range
        sweeps=np.int64(model.sweeps),
        topic_word=model.topic_word,
        vocab_tokens=np.asarray(model.vocab.tokens, dtype=np.str_),
        vocab_df=model.vocab.doc_freq,
        vocab_hash=np.str_(model.vocab.content_hash()),
    )


def load_model(path: str, vocab: Optional[Vocabulary] = None) -> LdaModel:
    """Load a saved model; verifies the stored vocabulary hash."""
    with np.load(path, allow_pickle=False) as data:
        tokens = [str(t) for t in data["vocab_tokens"]]
        df = data["vocab_df"]
        stored_hash = str(data["vocab_hash"])
        restored = Vocabulary(tokens, df)
        if restored.content_hash() != stored_hash:
            raise TopicModelError(f"vocabulary hash mismatch in {path}")
        if vocab is not None and vocab.content_hash() != stored_hash:
            raise TopicModelError(
                f"model {path} was trained on a different vocabulary"
            )
        return LdaModel(
            n_topics=int(data["n_topics"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            topic_word=np.asarray(data["topic_word"], dtype=np.float64),
            vocab=vocab if vocab is not None else restored,
            seed=int(data["seed"]),
            sweeps=int(data["sweeps"]),
        )


def write_thetas_csv(thetas: Mapping[str, np.ndarray], path: str) -> None:
    """CSV export: region_id,theta_0,...,theta_{K-1}."""
    if not thetas:
        raise TopicModelError("no theta vectors to write")
    k = len(next(iter(thetas.values())))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id"] + [f"theta_{i}" for i in range(k)])
        for region_id in sorted(thetas):
            row = thetas[region_id]
            writer.writerow([region_id] + [f"{x:.10f}" for x in row])
