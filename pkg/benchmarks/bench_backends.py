"""Benchmark the compiled LSTM kernels against the numpy fallback.

Times the raw sequence kernels (forward and forward+backward) on shapes the
model actually uses, then a full teacher-forced model pass with gradients.

    python benchmarks/bench_backends.py [--repeats N]
"""

import argparse
import time

import numpy as np

import slukit.kernels as kernels
from slukit import backward, recording
from slukit.data import build_vocabularies
from slukit.generator import (GeneratorConfig, default_catalog, default_tables,
                              generate_dataset)
from slukit.model import ModelConfig, SluModel
from slukit.train import joint_loss


def time_it(fn, repeats):
    fn()  # warm up
    started = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - started) / repeats


def bench_kernel(backend, T, d_in, hidden, repeats):
    kernels.use(backend)
    rng = np.random.default_rng(0)
    w = rng.normal(size=(4 * hidden, d_in))
    r = rng.normal(size=(4 * hidden, hidden))
    b = rng.normal(size=4 * hidden)
    x = rng.normal(size=(T, d_in))
    h0 = np.zeros(hidden)
    c0 = np.zeros(hidden)

    def forward():
        return kernels.lstm_forward(w, r, b, x, h0, c0)

    h, c, g = forward()
    dh = rng.normal(size=h.shape)
    dc = np.zeros(hidden)

    def backward_pass():
        kernels.lstm_backward(w, r, x, h0, c0, h, c, g, dh, dc)

    return time_it(forward, repeats), time_it(backward_pass, repeats)


def bench_model(backend, repeats):
    kernels.use(backend)
    catalog = default_catalog()
    tables = default_tables()
    splits = generate_dataset(GeneratorConfig(n_samples=48, seed=3), catalog, tables)
    samples = splits.all_samples()
    vocabs = build_vocabularies(samples)
    config = ModelConfig(up_length=catalog.schema.up_length,
                         ca_length=catalog.schema.ca_length)
    model = SluModel.create(config, vocabs, seed=1)

    def train_step():
        for sample in samples[:16]:
            with recording() as rec:
                loss = joint_loss(model.forward(sample, mode="teacher"), sample, vocabs)
            backward(loss)

    def eval_pass():
        for sample in samples[:16]:
            model.forward(sample)

    return time_it(train_step, repeats) / 16, time_it(eval_pass, repeats) / 16


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built (pip install -e . with a C compiler); "
              "benchmarking the python backend only")

    shapes = [(6, 32, 32), (12, 32, 16), (8, 160, 64)]
    print(f"{'kernel shape (T, d_in, H)':<28} " +
          " ".join(f"{b + ' fwd/bwd us':>24}" for b in backends))
    for shape in shapes:
        row = [f"T={shape[0]} d={shape[1]} H={shape[2]}".ljust(28)]
        for backend in backends:
            f, bwd = bench_kernel(backend, *shape, repeats=args.repeats * 10)
            row.append(f"{f * 1e6:>10.1f} / {bwd * 1e6:>9.1f}")
        print(" ".join(row))

    print()
    print(f"{'full model (per sample)':<28} " +
          " ".join(f"{b:>24}" for b in backends))
    train_times, eval_times = {}, {}
    for backend in backends:
        train_times[backend], eval_times[backend] = bench_model(backend, args.repeats)
    print("train fwd+bwd (ms)".ljust(28) +
          " ".join(f"{train_times[b] * 1e3:>24.3f}" for b in backends))
    print("greedy eval (ms)".ljust(28) +
          " ".join(f"{eval_times[b] * 1e3:>24.3f}" for b in backends))
    if len(backends) == 2:
        speedup = train_times["python"] / train_times["compiled"]
        print(f"\ncompiled speedup on the training step: {speedup:.2f}x")


if __name__ == "__main__":
    main()
