"""Benchmark the compiled kernels against the pure-Python fallback.

Both implementations are imported side by side (the NEWSEVENTS_PURE
switch only affects which one the package exports), timed on the same
synthetic workload, and cross-checked for identical output while at it.

Usage:
    python3 benchmarks/bench_kernels.py [--docs N] [--tokens N]
                                        [--phrases N] [--repeats N]
"""

import argparse
import sys
import time

import numpy as np

from newsevents._kernels import HAVE_SPEEDUPS, _pure

try:
    from newsevents._kernels import _speedups
except ImportError:
    _speedups = None


def make_match_workload(rng, n_docs, n_tokens, n_phrases):
    """Documents as int32 token ids with -1 sentence breaks, plus phrases
    drawn from the same vocabulary so a realistic fraction actually hits."""
    vocab = 5000
    docs = []
    for _ in range(n_docs):
        tokens = rng.integers(0, vocab, size=n_tokens).astype(np.int32)
        breaks = rng.choice(n_tokens, size=max(1, n_tokens // 18), replace=False)
        tokens[breaks] = -1
        docs.append(tokens)
    phrases = [
        rng.integers(0, vocab, size=int(rng.integers(1, 4))).astype(np.int32)
        for _ in range(n_phrases)
    ]
    return docs, phrases


def make_hinge_workload(rng, n, d, epochs=10):
    X = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    X += y[:, None] * 0.3  # make the problem mildly separable
    order = np.concatenate([rng.permutation(n) for _ in range(epochs)])
    return X, y, order.astype(np.int64)


def time_call(fn, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def check_equal(fast, pure):
    fa, fb = fast, pure
    if isinstance(fa, tuple) and len(fa) == 3:  # count_matches triples
        return all(np.array_equal(x, y) for x, y in zip(fa, fb))
    w_f, b_f = fa
    w_p, b_p = fb
    return np.allclose(w_f, w_p, atol=1e-12) and abs(b_f - b_p) <= 1e-12


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare compiled and pure-Python kernel timings")
    parser.add_argument("--docs", type=int, default=400)
    parser.add_argument("--tokens", type=int, default=600)
    parser.add_argument("--phrases", type=int, default=300)
    parser.add_argument("--hinge-n", type=int, default=2000)
    parser.add_argument("--hinge-d", type=int, default=128)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _speedups is None:
        print("compiled kernels are not built (pure fallback only); "
              "run pip install -e . first", file=sys.stderr)
        return 1
    print(f"compiled extension loaded: HAVE_SPEEDUPS={HAVE_SPEEDUPS}")

    rng = np.random.default_rng(args.seed)
    docs, phrases = make_match_workload(
        rng, args.docs, args.tokens, args.phrases)
    X, y, order = make_hinge_workload(rng, args.hinge_n, args.hinge_d)

    rows = []
    for name, fast_fn, pure_fn in [
        ("count_matches",
         lambda: _speedups.count_matches(docs, phrases),
         lambda: _pure.count_matches(docs, phrases)),
        ("hinge_sgd",
         lambda: _speedups.hinge_sgd(X, y, order, 0.01),
         lambda: _pure.hinge_sgd(X, y, order, 0.01)),
    ]:
        t_fast, r_fast = time_call(fast_fn, args.repeats)
        t_pure, r_pure = time_call(pure_fn, args.repeats)
        agree = check_equal(r_fast, r_pure)
        rows.append((name, t_fast, t_pure, t_pure / t_fast, agree))

    print(f"\nworkload: {args.docs} docs x {args.tokens} tokens, "
          f"{args.phrases} phrases; hinge {args.hinge_n} x {args.hinge_d}; "
          f"best of {args.repeats}")
    print(f"{'kernel':<16} {'compiled':>10} {'pure':>10} "
          f"{'speedup':>8} {'outputs':>8}")
    for name, t_fast, t_pure, ratio, agree in rows:
        print(f"{name:<16} {t_fast * 1e3:>8.1f}ms {t_pure * 1e3:>8.1f}ms "
              f"{ratio:>7.1f}x {'match' if agree else 'DIFFER':>8}")
    return 0 if all(r[4] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
