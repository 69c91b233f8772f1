#!/usr/bin/env python3
"""Compare the compiled training kernel against the pure numpy fallback.

Trains the default 4-10-10-4 reverse model on a default-regime dataset
(562 training rows, batch 10) with each available backend and reports
epochs/second plus the projected time of the 10,000-epoch default
regime.  Both backends execute the identical batch schedule; the
test suite asserts their step-by-step agreement over short runs (long
runs decorrelate at the convergence floor through float association).

Usage: python benchmarks/bench_backends.py [--epochs N] [--rows N]
"""

import argparse
import os
import time

import numpy as np

from beamalign import dataset, mlp
from beamalign.config import load_config


def build_training_set(rows: int):
    cfg = load_config()
    cfg.noise_sigma = 0.0
    plant = cfg.make_plant()
    collected = dataset.collect_random(plant, int(rows / 0.6) + 50, rng_seed=17)
    complete = dataset.filter_complete(collected)
    complete.records = complete.records[:rows]
    return complete


def time_backend(backend: str, train_set, epochs: int):
    os.environ["BEAMALIGN_MLP_BACKEND"] = backend
    cfg = mlp.TrainConfig(epochs=epochs)
    t0 = time.perf_counter()
    result = mlp.train(train_set, cfg, seed=11)
    elapsed = time.perf_counter() - t0
    assert result.backend == backend
    return elapsed, float(result.loss_trace[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=1000)
    parser.add_argument("--rows", type=int, default=562)
    args = parser.parse_args()

    train_set = build_training_set(args.rows)
    print(f"training set: {len(train_set)} rows, batch 10, "
          f"{args.epochs} timed epochs\n")
    print(f"{'backend':>10} {'wall [s]':>10} {'epochs/s':>10} "
          f"{'10k-epoch est [s]':>18} {'final mse':>12}")

    results = {}
    for backend in mlp.available_backends():
        elapsed, loss = time_backend(backend, train_set, args.epochs)
        results[backend] = (elapsed, loss)
        print(f"{backend:>10} {elapsed:>10.2f} {args.epochs / elapsed:>10.1f} "
              f"{elapsed / args.epochs * 10_000:>18.1f} {loss:>12.3e}")

    if len(results) == 2:
        speedup = results["pure"][0] / results["compiled"][0]
        print(f"\ncompiled speedup over pure: {speedup:.1f}x")
    os.environ.pop("BEAMALIGN_MLP_BACKEND", None)


if __name__ == "__main__":
    main()
