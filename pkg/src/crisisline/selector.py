"""Greedy single-pass inference over a day stream.

Decisions come solely from the observation (embedding, remaining budget,
max similarity to the kept set); the weak score never enters the decision
path, which is what makes per-decision latency independent of the number
of event queries. Importance of a kept text is Q_keep - Q_discard at
decision time.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .corpus import DayStream
from .environment import Action, StreamEnv
from .qnetwork import QNetwork


def importance(q_values) -> float:
    """Gap between the keep and discard values for one observation."""
    if len(q_values) != 2:
        raise ValueError("expected exactly 2 Q-values")
    return float(q_values[0]) - float(q_values[1])


@dataclass
class KeptText:
    text_id: str
    importance: float
    decision_index: int
    si_m: float
    embedding: np.ndarray


@dataclass
class SelectionResult:
    event_id: str
    day: str
    kept: list[KeptText]
    decisions_total: int
    forced_discards: int
    skipped: int
    latency_mean_s: float | None = None
    latency_std_s: float | None = None

    def records(self) -> list[dict]:
        return [
            {"event_id": self.event_id, "day": self.day, "text_id": k.text_id,
             "importance": k.importance, "decision_index": k.decision_index,
             "si_m": k.si_m}
            for k in self.kept
        ]


def select_day(net: QNetwork, day_stream: DayStream, budget_max: int = 300,
               measure_latency: bool = False) -> SelectionResult:
    """One greedy pass; pure function of (net, day_stream, budget_max).

    Per-decision latency (optional) times the Q-forward plus the next
    observation construction (which includes the kept-set similarity scan),
    never I/O. A text whose observation cannot be built is skipped with a
    warning count rather than aborting the day.
    """
    env = StreamEnv(day_stream, q_count=1, budget_max=budget_max)
    obs = env.reset()
    kept: list[KeptText] = []
    latencies: list[float] = []
    decision_index = 0
    forced = 0
    skipped = 0
    while not env.done:
        text = day_stream.items[decision_index + skipped]
        si_m = float(obs[-1])
        if measure_latency:
            t0 = time.perf_counter()
        try:
            action, q = net.act(obs)
        except (ValueError, FloatingPointError):
            # Unusable observation: discard without recording a decision.
            out = env.step(Action.DISCARD)
            obs = out.next_observation
            skipped += 1
            continue
        out = env.step(action)
        if measure_latency:
            latencies.append(time.perf_counter() - t0)
        if out.info.forced:
            forced += 1
        elif Action(action) == Action.KEEP:
            kept.append(KeptText(text_id=text.text_id, importance=importance(q),
                                 decision_index=decision_index, si_m=si_m,
                                 embedding=text.embedding))
        obs = out.next_observation
        decision_index += 1
    lat_mean = lat_std = None
    if measure_latency and latencies:
        lat_mean = float(np.mean(latencies))
        lat_std = float(np.std(latencies))
    return SelectionResult(event_id=day_stream.event_id, day=day_stream.day,
                           kept=kept, decisions_total=decision_index,
                           forced_discards=forced, skipped=skipped,
                           latency_mean_s=lat_mean, latency_std_s=lat_std)


def write_selection(results, path) -> None:
    """selection.jsonl: one record per kept text, deterministic order."""
    with open(path, "w", encoding="utf-8") as fh:
        for res in results:
            for rec in res.records():
                fh.write(json.dumps(rec) + "\n")


def write_latency(results, path) -> None:
    per_day = [
        {"event_id": r.event_id, "day": r.day, "decisions": r.decisions_total,
         "latency_mean_s": r.latency_mean_s, "latency_std_s": r.latency_std_s}
        for r in results if r.latency_mean_s is not None
    ]
    means = [r["latency_mean_s"] for r in per_day]
    doc = {"per_day": per_day,
           "overall_mean_s": float(np.mean(means)) if means else None}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
