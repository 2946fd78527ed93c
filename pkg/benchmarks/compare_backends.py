"""Benchmark the compiled kernel extension against the pure-numpy fallback.

Backend choice happens at import time, so each backend runs in its own
subprocess and this driver collates the results.

    python benchmarks/compare_backends.py

Reports per-decision inference latency (forward + max-similarity at several
kept-set sizes), batched training-update throughput, and end-to-end
training steps/second on a small synthetic day.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np


def _worker(backend: str) -> dict:
    os.environ["CRISISLINE_BACKEND"] = backend
    from crisisline import _kernels, agent, synthgen
    from crisisline.config import SynthConfig, TrainConfig
    from crisisline.corpus import load_corpus
    from crisisline.qnetwork import AdamState, QNetwork

    assert _kernels.BACKEND_NAME == backend
    out: dict = {"backend": backend}
    rng = np.random.default_rng(0)

    net = QNetwork.create(hidden=(256, 256), seed=1)
    x = rng.normal(size=770).astype(np.float32)
    for _ in range(200):
        net.act(x)
    t0 = time.perf_counter()
    n = 3000
    for _ in range(n):
        net.act(x)
    out["act_us"] = (time.perf_counter() - t0) / n * 1e6

    kept = rng.normal(size=(300, 768)).astype(np.float32)
    norms = np.linalg.norm(kept.astype(np.float64), axis=1)
    q = rng.normal(size=768).astype(np.float32)
    for count in (20, 100, 300):
        for _ in range(100):
            _kernels.max_cosine(q, kept, norms, count)
        t0 = time.perf_counter()
        for _ in range(2000):
            _kernels.max_cosine(q, kept, norms, count)
        out[f"max_cos_{count}_us"] = (time.perf_counter() - t0) / 2000 * 1e6

    batch = rng.normal(size=(64, 770)).astype(np.float32)
    actions = rng.integers(0, 2, size=64)
    targets = rng.normal(size=64).astype(np.float32)
    small = QNetwork.create(hidden=(64, 64), seed=1)
    adam = AdamState.for_net(small)
    for _ in range(50):
        _, grads = small.loss_and_grads(batch, actions, targets)
        adam.step(small, grads)
    t0 = time.perf_counter()
    n = 500
    for _ in range(n):
        _, grads = small.loss_and_grads(batch, actions, targets)
        adam.step(small, grads)
    out["update_ms"] = (time.perf_counter() - t0) / n * 1e3

    with tempfile.TemporaryDirectory() as tmp:
        synthgen.generate(SynthConfig(n_events=1, days_per_event=2,
                                      texts_per_day=400, seed=5), tmp)
        corpus = load_corpus(tmp)
        cfg = TrainConfig(total_steps=3000, epsilon_decay_steps=2000,
                          min_replay=500, hidden=[64, 64], batch_size=64, seed=3)
        t0 = time.perf_counter()
        agent.train(corpus, cfg)
        out["train_steps_per_s"] = 3000 / (time.perf_counter() - t0)
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worker", choices=("cython", "numpy"))
    args = parser.parse_args()
    if args.worker:
        print(json.dumps(_worker(args.worker)))
        return 0

    rows = []
    for backend in ("cython", "numpy"):
        proc = subprocess.run(
            [sys.executable, str(Path(__file__).resolve()), "--worker", backend],
            capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend} backend unavailable:\n{proc.stderr}", file=sys.stderr)
            continue
        rows.append(json.loads(proc.stdout.strip().splitlines()[-1]))
    if not rows:
        return 1
    keys = ["act_us", "max_cos_20_us", "max_cos_100_us", "max_cos_300_us",
            "update_ms", "train_steps_per_s"]
    labels = {"act_us": "single forward (us)",
              "max_cos_20_us": "max-cos 20 kept (us)",
              "max_cos_100_us": "max-cos 100 kept (us)",
              "max_cos_300_us": "max-cos 300 kept (us)",
              "update_ms": "batch-64 update (ms)",
              "train_steps_per_s": "train steps/s"}
    name_w = max(len(v) for v in labels.values()) + 2
    header = " " * name_w + "".join(f"{r['backend']:>12}" for r in rows)
    print(header)
    for key in keys:
        line = f"{labels[key]:<{name_w}}"
        for r in rows:
            line += f"{r[key]:>12.2f}"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
