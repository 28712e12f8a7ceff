# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collapsed Gibbs sampling kernels.

Must stay in lockstep with _gibbs_py.py: same xoshiro256++ stream, same
operation order in the sampling distribution, so both backends produce
identical counts for a given seed.
"""

import numpy as np

ctypedef unsigned long long u64


cdef inline u64 _rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _splitmix64(u64* state) noexcept nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef struct Xoshiro:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline void _seed_rng(Xoshiro* rng, u64 seed) noexcept nogil:
    cdef u64 sm = seed
    rng.s0 = _splitmix64(&sm)
    rng.s1 = _splitmix64(&sm)
    rng.s2 = _splitmix64(&sm)
    rng.s3 = _splitmix64(&sm)


cdef inline u64 _next_u64(Xoshiro* rng) noexcept nogil:
    cdef u64 result = _rotl(rng.s0 + rng.s3, 23) + rng.s0
    cdef u64 t = rng.s1 << 17
    rng.s2 = rng.s2 ^ rng.s0
    rng.s3 = rng.s3 ^ rng.s1
    rng.s1 = rng.s1 ^ rng.s2
    rng.s0 = rng.s0 ^ rng.s3
    rng.s2 = rng.s2 ^ t
    rng.s3 = _rotl(rng.s3, 45)
    return result


cdef inline double _next_double(Xoshiro* rng) noexcept nogil:
    return <double>(_next_u64(rng) >> 11) * (1.0 / 9007199254740992.0)


def train_gibbs(doc_ids, token_ids, int n_docs, int n_topics, int n_words,
                double alpha, double beta, int sweeps, seed):
    """Resample per-token topic assignments; returns (n_kw, n_dk) count tables."""
    doc_arr = np.ascontiguousarray(doc_ids, dtype=np.int32)
    tok_arr = np.ascontiguousarray(token_ids, dtype=np.int32)
    cdef Py_ssize_t n = tok_arr.shape[0]

    n_kw_arr = np.zeros((n_topics, n_words), dtype=np.int32)
    n_dk_arr = np.zeros((n_docs, n_topics), dtype=np.int32)
    n_k_arr = np.zeros(n_topics, dtype=np.int64)
    z_arr = np.empty(n, dtype=np.int32)
    cum_arr = np.empty(n_topics, dtype=np.float64)

    cdef int[::1] doc = doc_arr
    cdef int[::1] tok = tok_arr
    cdef int[:, ::1] n_kw = n_kw_arr
    cdef int[:, ::1] n_dk = n_dk_arr
    cdef long long[::1] n_k = n_k_arr
    cdef int[::1] z = z_arr
    cdef double[::1] cum = cum_arr

    cdef double v_beta = n_words * beta
    cdef Xoshiro rng
    _seed_rng(&rng, <u64>seed)

    cdef Py_ssize_t i
    cdef int s, k, k2, d, w
    cdef double total, u

    with nogil:
        for i in range(n):
            k = <int>(_next_double(&rng) * n_topics)
            if k >= n_topics:
                k = n_topics - 1
            z[i] = k
            n_kw[k, tok[i]] += 1
            n_dk[doc[i], k] += 1
            n_k[k] += 1

        for s in range(sweeps):
            for i in range(n):
                d = doc[i]
                w = tok[i]
                k = z[i]
                n_kw[k, w] -= 1
                n_dk[d, k] -= 1
                n_k[k] -= 1
                total = 0.0
                for k2 in range(n_topics):
                    total = total + (n_kw[k2, w] + beta) / (n_k[k2] + v_beta) * (n_dk[d, k2] + alpha)
                    cum[k2] = total
                u = _next_double(&rng) * total
                k = 0
                while k < n_topics - 1 and cum[k] <= u:
                    k += 1
                z[i] = k
                n_kw[k, w] += 1
                n_dk[d, k] += 1
                n_k[k] += 1

    return n_kw_arr, n_dk_arr


def infer_gibbs(token_ids, topic_word, double alpha, int sweeps, seed):
    """Fold a document into a fixed topic-word model; averaged final-quarter theta."""
    tok_arr = np.ascontiguousarray(token_ids, dtype=np.int32)
    phi_arr = np.ascontiguousarray(topic_word, dtype=np.float64)
    cdef int n_topics = phi_arr.shape[0]
    cdef Py_ssize_t n = tok_arr.shape[0]
    if n == 0:
        raise ValueError("infer_gibbs requires at least one token")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")

    n_dk_arr = np.zeros(n_topics, dtype=np.int64)
    z_arr = np.empty(n, dtype=np.int32)
    cum_arr = np.empty(n_topics, dtype=np.float64)
    acc_arr = np.zeros(n_topics, dtype=np.float64)

    cdef int[::1] tok = tok_arr
    cdef double[:, ::1] phi = phi_arr
    cdef long long[::1] n_dk = n_dk_arr
    cdef int[::1] z = z_arr
    cdef double[::1] cum = cum_arr
    cdef double[::1] acc = acc_arr

    cdef Xoshiro rng
    _seed_rng(&rng, <u64>seed)

    cdef Py_ssize_t i
    cdef int s, k, k2, w
    cdef int n_avg = sweeps // 4
    if n_avg < 1:
        n_avg = 1
    cdef int burn = sweeps - n_avg
    cdef double total, u, denom

    with nogil:
        for i in range(n):
            k = <int>(_next_double(&rng) * n_topics)
            if k >= n_topics:
                k = n_topics - 1
            z[i] = k
            n_dk[k] += 1

        for s in range(sweeps):
            for i in range(n):
                w = tok[i]
                k = z[i]
                n_dk[k] -= 1
                total = 0.0
                for k2 in range(n_topics):
                    total = total + phi[k2, w] * (n_dk[k2] + alpha)
                    cum[k2] = total
                u = _next_double(&rng) * total
                k = 0
                while k < n_topics - 1 and cum[k] <= u:
                    k += 1
                z[i] = k
                n_dk[k] += 1
            if s >= burn:
                for k2 in range(n_topics):
                    acc[k2] = acc[k2] + (n_dk[k2] + alpha)

    denom = (n + n_topics * alpha) * n_avg
    return acc_arr / denom
