"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on inputs sized like a full evaluation (about 800 training
rows by a few thousand columns) or a crowd batch (1,000 recipes, 5 workers).
The two backends' outputs are also compared, so a speedup never hides a
numerical difference.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from glyset import _pykernels

try:
    from glyset import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _inputs(seed: int = 0) -> dict[str, tuple]:
    rng = np.random.default_rng(seed)
    n, d = 800, 2000
    X = rng.normal(size=(n, d))
    ysign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    w = rng.normal(size=d) * 0.01

    n_items, n_workers, k = 1000, 5, 6
    item_idx = np.repeat(np.arange(n_items), n_workers).astype(np.int64)
    worker_idx = np.tile(np.arange(n_workers), n_items).astype(np.int64)
    obs = rng.integers(0, k, size=n_items * n_workers).astype(np.int64)
    theta = rng.dirichlet(np.ones(k), size=(n_workers, k))
    post = rng.dirichlet(np.ones(k), size=n_items)

    n_units, n_values = 1000, 5
    unit_idx = np.repeat(np.arange(n_units), 3).astype(np.int64)
    value_idx = rng.integers(0, n_values, size=n_units * 3).astype(np.int64)
    return {
        "logistic_loss_grad": (X, ysign, w, 0.1, 1.0),
        "ds_log_terms": (item_idx, worker_idx, obs, np.log(theta), n_items),
        "ds_confusion_counts": (item_idx, worker_idx, obs, post, n_workers),
        "coincidence_matrix": (unit_idx, value_idx, n_units, n_values),
    }


def _max_diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; only the fallback can be timed")
    print(f"{'kernel':<22}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}{'max |diff|':>13}")
    for name, inputs in _inputs().items():
        times = {}
        outputs = {}
        for label, mod in (("python", _pykernels), ("cython", _ckernels)):
            if mod is None:
                continue
            fn = getattr(mod, name)
            outputs[label] = fn(*inputs)
            number = 3
            best = min(timeit.repeat(lambda: fn(*inputs), number=number, repeat=args.repeat)) / number
            times[label] = best * 1e3
        if "cython" in times:
            diff = _max_diff(outputs["python"], outputs["cython"])
            speed = times["python"] / times["cython"]
            print(f"{name:<22}{times['python']:>14.3f}{times['cython']:>14.3f}{speed:>9.1f}x{diff:>13.1e}")
        else:
            print(f"{name:<22}{times['python']:>14.3f}{'-':>14}{'-':>10}{'-':>13}")


if __name__ == "__main__":
    main()
