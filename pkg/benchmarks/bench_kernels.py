"""Compare the compiled and pure-Python training kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--large 5x100]

Times one loss/gradient evaluation and one full baseline fit on the
synthetic shape, for every available backend.
"""

import argparse
import statistics
import time

import numpy as np

from nexcv.classifier import _kernels, baseline_fit, tokenize
from nexcv.classifier.baseline import Vectorizer
from nexcv.dataset import generate_synthetic


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--large", default="5x100", help="COUNTxSIZE of large classes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    n_large, size = map(int, args.large.split("x"))

    d = generate_synthetic(n_large, size, 20, (5, 10), 20, 0.2, seed=args.seed)
    train = [(e.text, e.label) for e in d]
    toks = [tokenize(t) for t, _ in train]
    X = Vectorizer.fit(toks).transform(toks)
    labels = sorted({lab for _, lab in train})
    y = np.array([labels.index(lab) for _, lab in train], dtype=np.int64)
    rng = np.random.default_rng(args.seed)
    W = rng.normal(size=(len(labels), int(X.indices.max()) + 1))
    b = rng.normal(size=len(labels))

    print(f"{len(train)} examples, {len(labels)} classes, {W.shape[1]} features, repeat {args.repeat}")
    print(f"{'backend':<8} {'loss_grad best':>15} {'fit best':>10} {'fit median':>11}")
    results = {}
    for name, kern in _kernels.BACKENDS.items():
        grad = best_of(lambda: kern.loss_grad(X.indptr, X.indices, X.data, y, W, b), args.repeat * 4)
        fit = best_of(lambda: baseline_fit(train, backend=kern), args.repeat)
        results[name] = fit[0]
        print(f"{name:<8} {grad[0] * 1e3:>12.3f} ms {fit[0]:>8.3f} s {fit[1]:>9.3f} s")
    if len(results) == 2:
        print(f"compiled speedup on fit: {results['python'] / results['cython']:.1f}x")
    else:
        print("compiled backend not built; run `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
