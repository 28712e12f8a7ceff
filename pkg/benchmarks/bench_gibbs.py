#!/usr/bin/env python3
"""Benchmark the compiled Gibbs kernels against the pure-Python fallback.

Generates a synthetic flat corpus, trains both backends from the same seed,
and reports token-update throughput. Also verifies the two backends produce
bit-identical count tables, which is the property that makes the fallback a
drop-in replacement.

Usage:
    python benchmarks/bench_gibbs.py
    python benchmarks/bench_gibbs.py --docs 200 --sweeps 50 --topics 20
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from geotopics import _gibbs_py

try:
    from geotopics import _gibbs
except ImportError:
    _gibbs = None


def make_corpus(n_docs, tokens_per_doc, n_words, seed):
    rng = np.random.default_rng(seed)
    doc_ids = np.repeat(np.arange(n_docs, dtype=np.int32), tokens_per_doc)
    token_ids = rng.integers(0, n_words, size=n_docs * tokens_per_doc, dtype=np.int32)
    return doc_ids, token_ids


def run_backend(impl, doc_ids, token_ids, args):
    start = time.perf_counter()
    n_kw, n_dk = impl.train_gibbs(
        doc_ids,
        token_ids,
        args.docs,
        args.topics,
        args.vocab,
        args.alpha,
        args.beta,
        args.sweeps,
        args.seed,
    )
    elapsed = time.perf_counter() - start
    updates = token_ids.shape[0] * args.sweeps
    return n_kw, n_dk, elapsed, updates / elapsed


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=100)
    parser.add_argument("--tokens-per-doc", type=int, default=40)
    parser.add_argument("--vocab", type=int, default=500)
    parser.add_argument("--topics", type=int, default=10)
    parser.add_argument("--sweeps", type=int, default=20)
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--beta", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--skip-python", action="store_true",
                        help="time only the compiled backend (skips parity check)")
    args = parser.parse_args(argv)

    doc_ids, token_ids = make_corpus(args.docs, args.tokens_per_doc, args.vocab, args.seed)
    n_tokens = token_ids.shape[0]
    print(f"corpus: {args.docs} docs x {args.tokens_per_doc} tokens "
          f"({n_tokens} total), V={args.vocab}, K={args.topics}, "
          f"{args.sweeps} sweeps, seed={args.seed}")

    if _gibbs is None:
        print("compiled backend unavailable; timing pure Python only")
    else:
        ckw, cdk, elapsed, rate = run_backend(_gibbs, doc_ids, token_ids, args)
        print(f"cython : {elapsed:8.3f}s  {rate / 1e6:10.3f} M token-updates/s")

    if args.skip_python:
        return 0

    pkw, pdk, p_elapsed, p_rate = run_backend(_gibbs_py, doc_ids, token_ids, args)
    print(f"python : {p_elapsed:8.3f}s  {p_rate / 1e6:10.3f} M token-updates/s")

    if _gibbs is not None:
        print(f"speedup: {p_elapsed / elapsed:8.1f}x")
        same = np.array_equal(ckw, pkw) and np.array_equal(cdk, pdk)
        print(f"parity : count tables {'identical' if same else 'DIVERGED'}")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
