"""Metrics: exact bigram-F1 (ROUGE-2 style), an embedding greedy-matching
F1 labeled "semantic (proxy)", selected-count diagnostics with Pearson
correlation, and the per-decision latency benchmark.

Tokenization is fixed and documented: lowercase, split on Unicode
whitespace, strip leading/trailing punctuation per token, no stemming, no
stopword removal. Scores are self-consistent under this scheme only.
"""
from __future__ import annotations

import gc
import json
import math
import sys
import time
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .environment import StreamEnv
from .selector import select_day


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    tokens = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def bigram_counts(tokens: list[str]) -> Counter:
    return Counter(zip(tokens, tokens[1:]))


def rouge2_f1(candidate: str, reference: str) -> float:
    """Bigram-multiset F1; 0.0 when either side has no bigrams."""
    cand = bigram_counts(tokenize(candidate))
    ref = bigram_counts(tokenize(reference))
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    if n_cand == 0 or n_ref == 0:
        return 0.0
    overlap = sum((cand & ref).values())
    p = overlap / n_cand
    r = overlap / n_ref
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _greedy_side(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over rows of `a` of the max cosine to any row of `b`."""
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = np.linalg.norm(a64, axis=1)
    nb = np.linalg.norm(b64, axis=1)
    sims = a64 @ b64.T
    denom = np.outer(na, nb)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(denom > 0.0, sims / denom, 0.0)
    return float(np.clip(sims, -1.0, 1.0).max(axis=1).mean())


def semantic_score(candidate_embeddings, reference_embeddings) -> float:
    """Greedy-matching F1 in embedding space (a lightweight stand-in for
    token-level contextual-similarity metrics):
    precision, recall, then harmonic mean; 0.0 unless both sides positive."""
    cand = np.atleast_2d(np.asarray(candidate_embeddings))
    ref = np.atleast_2d(np.asarray(reference_embeddings))
    if cand.size == 0 or ref.size == 0:
        return 0.0
    p = _greedy_side(cand, ref)
    r = _greedy_side(ref, cand)
    if p <= 0.0 or r <= 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass
class MetricRow:
    event_id: str
    day: str
    kind: str
    rouge2: float
    semantic: float | None


@dataclass
class MetricReport:
    rows: list[MetricRow] = field(default_factory=list)

    def aggregates(self) -> dict:
        by_kind: dict[str, list[MetricRow]] = {}
        for row in self.rows:
            by_kind.setdefault(row.kind, []).append(row)
        out = {"per_kind": {}, "overall": None}
        for kind in sorted(by_kind):
            rows = by_kind[kind]
            sems = [r.semantic for r in rows if r.semantic is not None]
            out["per_kind"][kind] = {
                "rouge2_f1": float(np.mean([r.rouge2 for r in rows])),
                "semantic_proxy": float(np.mean(sems)) if sems else None,
                "n": len(rows),
            }
        if self.rows:
            sems = [r.semantic for r in self.rows if r.semantic is not None]
            out["overall"] = {
                "rouge2_f1": float(np.mean([r.rouge2 for r in self.rows])),
                "semantic_proxy": float(np.mean(sems)) if sems else None,
                "n": len(self.rows),
            }
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("event_id,day,kind,rouge2_f1,semantic_proxy\n")
            for r in self.rows:
                sem = "" if r.semantic is None else repr(r.semantic)
                fh.write(f"{r.event_id},{r.day},{r.kind},{repr(r.rouge2)},{sem}\n")

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.aggregates(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def pearson(xs, ys) -> float | None:
    """Pearson correlation; None when either side has zero variance."""
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    if denom == 0.0:
        return None
    return float((xc @ yc) / denom)


@dataclass
class DiagnosticsReport:
    days: list[dict]
    correlation: float | None
    correlation_defined: bool

    def to_dict(self) -> dict:
        return {"days": self.days, "correlation": self.correlation,
                "correlation_defined": self.correlation_defined}


def selection_diagnostics(selected_counts: dict, reference_counts: dict) -> DiagnosticsReport:
    """Correlate per-day selected counts with reference daily fact counts.

    Keys are (event_id, day); only days present on both sides enter the
    correlation. Zero variance on either side -> correlation undefined.
    """
    common = sorted(set(selected_counts) & set(reference_counts))
    if len(common) < 2:
        raise ValueError("need at least two days with both counts")
    sel = [selected_counts[k] for k in common]
    ref = [reference_counts[k] for k in common]
    corr = pearson(sel, ref)
    days = [{"event_id": k[0], "day": k[1], "selected": selected_counts[k],
             "reference": reference_counts[k]} for k in common]
    return DiagnosticsReport(days=days, correlation=corr,
                             correlation_defined=corr is not None)


def latency_bench(net, day_stream, query_counts, repeats: int = 3,
                  budget_max: int = 300, warmup: bool = True) -> dict:
    """Per-decision latency per query-count relabeling of the same stream.

    The stream content is identical across relabelings; only the declared
    query count changes, which the decision path never reads. Runs are
    interleaved and the within-repeat order alternates (A/B then B/A) so
    clock drift and cache warm-up hit all counts equally.
    """
    counts = list(query_counts)
    if not counts:
        raise ValueError("query_counts must be non-empty")
    if len(day_stream.items) < 100:
        print("latency_bench: stream has < 100 decisions; statistics will be "
              "noisy", file=sys.stderr)
    if warmup:
        select_day(net, day_stream, budget_max=budget_max, measure_latency=True)
    samples: dict[int, list[float]] = {q: [] for q in counts}
    # Collector pauses would land unevenly across the interleaved runs, so
    # GC is suspended while timing (same policy as the stdlib's timeit).
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for rep in range(repeats):
            order = counts if rep % 2 == 0 else list(reversed(counts))
            for q in order:
                env = StreamEnv(day_stream, q_count=q, budget_max=budget_max)
                obs = env.reset()
                while obs is not None and not env.done:
                    t0 = time.perf_counter()
                    action, _ = net.act(obs)
                    out = env.step(action)
                    samples[q].append(time.perf_counter() - t0)
                    obs = out.next_observation
    finally:
        if gc_was_enabled:
            gc.enable()
    stats = {}
    for q in counts:
        arr = np.sort(np.asarray(samples[q]))
        trim = int(0.02 * arr.size)
        trimmed = arr[trim:arr.size - trim] if arr.size > 2 * trim else arr
        stats[str(q)] = {"decisions": int(arr.size),
                         "mean_s": float(arr.mean()),
                         "std_s": float(arr.std()),
                         "p50_s": float(np.median(arr)),
                         "trimmed_mean_s": float(trimmed.mean())}
    base = stats[str(counts[0])]["mean_s"]
    ratios = {str(q): stats[str(q)]["mean_s"] / base for q in counts}
    # Scheduler/allocator stalls land on single decisions and are unrelated
    # to the query count; the trimmed ratio (2% per tail) compares the paths
    # themselves. A real query-count dependence would shift the whole
    # distribution and survive trimming.
    tbase = stats[str(counts[0])]["trimmed_mean_s"]
    trimmed_ratios = {str(q): stats[str(q)]["trimmed_mean_s"] / tbase
                      for q in counts}
    return {"per_query_count": stats, "ratio_to_first": ratios,
            "trimmed_ratio_to_first": trimmed_ratios,
            "query_counts": counts, "repeats": repeats}
