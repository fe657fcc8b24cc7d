"""Compare the compiled kernels against the pure-Python fallback.

Times the individual hot kernels on realistic training shapes, then a
short end-to-end training run under each backend, and prints a speedup
table.  Run from the repository root:

    python3 benchmarks/bench_backends.py [--vocab 2000] [--repeats 200]
"""

import argparse
import time

import numpy as np

from essvec.checks import random_bow
from essvec.ev import TrainingConfig, EvArchitecture, train_ev
from essvec.numerics import backend


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(vocab, hidden, embedding):
    rng = np.random.default_rng(0)
    W = rng.standard_normal((hidden, vocab))
    b = rng.standard_normal(hidden)
    x = rng.standard_normal(vocab)
    out = np.empty(hidden)
    support = max(vocab // 20, 4)
    idx = np.sort(rng.choice(vocab, size=support, replace=False)).astype(np.int64)
    val = rng.random(support)
    val /= val.sum()
    y = np.tanh(rng.standard_normal(hidden))
    delta = rng.standard_normal(hidden)
    gW = np.zeros((hidden, hidden))
    gb = np.zeros(hidden)
    gx = np.empty(vocab)
    q = rng.random(vocab)
    q /= q.sum()
    big = rng.standard_normal(hidden * vocab)
    grad = rng.standard_normal(big.size)
    m = np.zeros_like(big)
    v = np.zeros_like(big)
    kl_out = np.empty(vocab)

    def case(name, fn):
        return name, fn

    return [
        case("affine (dense)", lambda K: K.affine(W, b, x, out)),
        case("affine (sparse bow)", lambda K: K.affine_sparse(W, b, idx, val, out)),
        case("tanh grad", lambda K: K.tanh_backward(y, delta, out)),
        case("weight grad (dense)", lambda K: K.affine_backward_params(x[:hidden], delta, gW, gb)),
        case("input grad", lambda K: K.affine_backward_input(W, delta, gx)),
        case("kl divergence", lambda K: K.kl_div(idx, val, q)),
        case("softmax-kl delta", lambda K: K.softmax_kl_delta(q, idx, val, kl_out)),
        case("adam step", lambda K: K.adam_update(big, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8)),
    ]


def bench_kernels(args):
    cases = kernel_cases(args.vocab, args.hidden, args.embedding)
    rows = []
    for name, fn in cases:
        times = {}
        for backend_name in backend.available_backends():
            kernels = backend._BACKENDS[backend_name]
            times[backend_name] = time_call(lambda: fn(kernels),
                                            args.repeats)
        rows.append((name, times))
    return rows


def bench_training(args):
    rng = np.random.default_rng(1)
    corpus = [random_bow(rng, args.vocab) for _ in range(args.docs)]
    p_bg = random_bow(rng, args.vocab, min_support=args.vocab // 2)
    arch = EvArchitecture(vocab_dim=args.vocab, embedding_dim=args.embedding,
                          f_hidden=(args.hidden,), g_hidden=(args.hidden,),
                          h_hidden=(args.hidden,))
    config = TrainingConfig(epochs=2, seed=0, batch_size=16)
    times = {}
    for backend_name in backend.available_backends():
        with backend.use_backend(backend_name):
            t0 = time.perf_counter()
            train_ev(corpus, p_bg, arch, config)
            times[backend_name] = time.perf_counter() - t0
    return times


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vocab", type=int, default=2000)
    parser.add_argument("--hidden", type=int, default=256)
    parser.add_argument("--embedding", type=int, default=64)
    parser.add_argument("--docs", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=100)
    args = parser.parse_args()

    names = backend.available_backends()
    if "compiled" not in names:
        print("compiled backend unavailable; benchmarking python only")
    print(f"backends: {', '.join(names)}\n")
    header = f"{'kernel':<24}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, times in bench_kernels(args):
        row = f"{name:<24}"
        for n in names:
            row += f"{times[n] * 1e6:>12.1f}us"
        if len(names) == 2 and times[names[0]] > 0:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)
    print()
    times = bench_training(args)
    row = f"{'train 2 epochs':<24}"
    for n in names:
        row += f"{times[n]:>13.2f}s"
    if len(names) == 2:
        row += f"{times['python'] / times['compiled']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
