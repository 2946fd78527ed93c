"""Deterministic synthetic corpus generator with planted ground truth.

Geometry: topic centers are random unit vectors in the embedding space;
the last fifth (at least one) are background centers carrying the
uninformative bulk of each day, the rest are informative topics. Texts are
unit-normalized center + noise draws, so same-topic texts are similar,
cross-topic texts near-orthogonal, and planted duplicates nearly identical
(cosine > 0.99, verified at generation time). Informative texts get their
weak score through the same dual-confidence aggregation rule the pipeline
uses, via planted per-query confidences.

Everything derives from one seeded generator: reruns are byte-identical.
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotation import ConfidencePair, aggregate_scores
from .config import SynthConfig
from .corpus import (CONFIDENCES_FILE, EVENTS_FILE, ITEMS_FILE, QUERIES_FILE,
                     REFERENCE_EMBEDDINGS_FILE, REFERENCES_FILE, TRUTH_FILE)
from .environment import Action, StreamEnv, reward_value

BASE_DAY = dt.date(2020, 3, 1)
DAY_SECONDS = 86_400
MIN_DUP_COSINE = 0.992
REFERENCE_K_FRACTION = 0.3


def _unit_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def _day_iso(event_index: int, day_index: int) -> str:
    return (BASE_DAY + dt.timedelta(days=40 * event_index + day_index)).isoformat()


def _topic_words(topic: int) -> list[str]:
    return [f"topic{topic}word{k}" for k in range(20)]


@dataclass
class _PlannedText:
    unix_ts: int
    embedding: np.ndarray
    topic: int
    informative: bool
    source_pos: int | None  # position in the day's base list when duplicate
    sc_queries: list[int]
    confs: list[tuple[float, float]]
    distractors: list[tuple[int, float, float]]
    words: str
    stream: str


def generate(config: SynthConfig, out_dir) -> Path:
    """Write the full corpus file set (plus truth and reference-embedding
    sidecars) into out_dir; returns out_dir."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dim = config.embedding_dim
    n_centers = config.n_topic_centers
    n_background = max(1, n_centers // 5)
    n_informative = max(1, n_centers - n_background)
    centers = _unit_rows(rng.standard_normal((n_centers, dim)))
    informative_centers = list(range(n_informative))
    background_centers = list(range(n_informative, n_centers))

    events = []
    queries = []
    items = []
    references = []
    ref_embeddings = []
    confidences = []
    truth = []

    streams = ("twitter", "reddit", "news")

    for ei in range(config.n_events):
        event_id = f"ev{ei:03d}"
        days = [_day_iso(ei, di) for di in range(config.days_per_event)]
        events.append({"event_id": event_id, "name": f"Synthetic Hazard {ei}",
                       "days": days})
        for qi in range(config.query_count):
            topic = qi % n_informative
            queries.append({"event_id": event_id, "query_id": f"q{qi:02d}",
                            "text": f"what is reported about {_topic_words(topic)[0]}"})

        for day in days:
            day_start = int(dt.datetime.fromisoformat(day + "T00:00:00+00:00").timestamp())
            n_texts = config.texts_per_day
            n_dup = int(round(config.duplicate_fraction * n_texts))
            n_base = n_texts - n_dup
            rate = config.informative_fraction * rng.uniform(0.5, 1.5)
            n_inf = int(np.clip(round(rate * n_base), 0, n_base))

            day_centers = _unit_rows(centers + config.center_spread
                                     * rng.standard_normal((n_centers, dim)))

            base: list[_PlannedText] = []
            flags = np.zeros(n_base, dtype=bool)
            flags[:n_inf] = True
            rng.shuffle(flags)
            ts_pool = np.sort(rng.integers(0, DAY_SECONDS - 1000, size=n_base))
            for bi in range(n_base):
                informative = bool(flags[bi])
                if informative:
                    topic = int(rng.choice(informative_centers))
                else:
                    topic = int(rng.choice(background_centers))
                emb = day_centers[topic] + config.noise_scale * rng.standard_normal(dim)
                emb = (emb / np.linalg.norm(emb)).astype(np.float32)
                sc_queries: list[int] = []
                confs: list[tuple[float, float]] = []
                if informative:
                    sc = int(rng.integers(1, min(5, config.query_count) + 1))
                    sc_queries = sorted(int(q) for q in
                                        rng.choice(config.query_count, size=sc,
                                                   replace=False))
                    confs = [(round(float(rng.uniform(0.85, 0.99)), 6),
                              round(float(rng.uniform(0.85, 0.99)), 6))
                             for _ in sc_queries]
                distractors = []
                if rng.random() < 0.1:
                    dq = int(rng.integers(config.query_count))
                    if dq not in sc_queries:
                        # One model confident, the other not: must not count.
                        distractors.append((dq,
                                            round(float(rng.uniform(0.80, 0.95)), 6),
                                            round(float(rng.uniform(0.0, 0.5)), 6)))
                words = " ".join(rng.choice(_topic_words(topic), size=10))
                base.append(_PlannedText(
                    unix_ts=day_start + int(ts_pool[bi]), embedding=emb, topic=topic,
                    informative=informative, source_pos=None, sc_queries=sc_queries,
                    confs=confs, distractors=distractors, words=words,
                    stream=streams[int(rng.integers(len(streams)))]))

            dups: list[_PlannedText] = []
            for _ in range(n_dup):
                src_pos = int(rng.integers(n_base))
                src = base[src_pos]
                src64 = src.embedding.astype(np.float64)
                while True:
                    emb = src64 + 0.003 * rng.standard_normal(dim)
                    emb = emb / np.linalg.norm(emb)
                    cos = float(emb @ src64 / np.linalg.norm(src64))
                    if cos > MIN_DUP_COSINE:
                        break
                offset = int(src.unix_ts - day_start)
                dup_ts = day_start + int(rng.integers(offset + 1, DAY_SECONDS))
                dups.append(_PlannedText(
                    unix_ts=dup_ts, embedding=emb.astype(np.float32), topic=src.topic,
                    informative=src.informative, source_pos=src_pos,
                    sc_queries=list(src.sc_queries), confs=list(src.confs),
                    distractors=[], words=src.words,
                    stream=streams[int(rng.integers(len(streams)))]))

            planned = base + dups
            order = sorted(range(len(planned)),
                           key=lambda i: (planned[i].unix_ts,
                                          planned[i].source_pos is not None, i))
            ids = [None] * len(planned)
            for rank, i in enumerate(order):
                ids[i] = f"{event_id}-{day}-t{rank:04d}"

            day_pairs: list[ConfidencePair] = []
            for i, p in enumerate(planned):
                tid = ids[i]
                for (qi, (ca, cb)) in zip(p.sc_queries, p.confs):
                    day_pairs.append(ConfidencePair(tid, f"q{qi:02d}", ca, cb))
                    confidences.append({"text_id": tid, "query_id": f"q{qi:02d}",
                                        "conf_a": ca, "conf_b": cb})
                for (qi, ca, cb) in p.distractors:
                    day_pairs.append(ConfidencePair(tid, f"q{qi:02d}", ca, cb))
                    confidences.append({"text_id": tid, "query_id": f"q{qi:02d}",
                                        "conf_a": ca, "conf_b": cb})
            table = aggregate_scores(day_pairs)

            for rank, i in enumerate(order):
                p = planned[i]
                tid = ids[i]
                items.append({
                    "text_id": tid, "event_id": event_id, "stream": p.stream,
                    "unix_ts": p.unix_ts, "day": day,
                    "text": f"{p.words} update {rank}",
                    "embedding": [float(x) for x in p.embedding],
                    "sc": table.score(tid)})
                truth.append({
                    "text_id": tid, "event_id": event_id, "day": day,
                    "informative": p.informative, "topic": p.topic,
                    "duplicate_of": None if p.source_pos is None
                    else ids[p.source_pos], "sc": table.score(tid)})

            inf_positions = [i for i, p in enumerate(base) if p.informative]
            inf_sorted = sorted(
                inf_positions,
                key=lambda i: (-len(base[i].sc_queries), base[i].unix_ts))
            k_ref = max(1, int(round(REFERENCE_K_FRACTION * max(1, n_inf))))
            chosen = inf_sorted[:k_ref] if inf_sorted else []
            sentences = [f"{base[i].words} update" for i in chosen]
            if sentences:
                references.append({
                    "event_id": event_id, "day": day, "kind": "nist",
                    "text": ". ".join(sentences) + ".",
                    "max_facts_k": k_ref})
                ref_embeddings.append({
                    "event_id": event_id, "day": day, "kind": "nist",
                    "sentences": sentences,
                    "embeddings": [[float(x) for x in base[i].embedding]
                                   for i in chosen]})

    def dump(path, rows):
        with open(out / path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")

    dump(EVENTS_FILE, events)
    dump(QUERIES_FILE, queries)
    dump(ITEMS_FILE, items)
    dump(REFERENCES_FILE, references)
    dump(CONFIDENCES_FILE, confidences)
    dump(TRUTH_FILE, truth)
    dump(REFERENCE_EMBEDDINGS_FILE, ref_embeddings)
    return out


@dataclass
class OracleResult:
    actions: list[int]
    rewards: list[float]
    kept_ids: list[str]
    total_return: float


def oracle_policy(day_stream, q_count: int, budget_max: int = 300,
                  penalty: float = 5.0, tie_eps: float = 1e-3) -> OracleResult:
    """Greedy immediate-reward reference policy over a stream with known sc.

    At each step it takes the action with the higher immediate reward given
    the current kept set; near-ties (within tie_eps, e.g. near-exact
    duplicates) resolve to discard. Greedy-immediate, not globally optimal.
    """
    env = StreamEnv(day_stream, q_count=q_count, budget_max=budget_max,
                    penalty=penalty)
    obs = env.reset()
    actions: list[int] = []
    rewards: list[float] = []
    while obs is not None and not env.done:
        text = env.current_text
        si_m = env.current_similarity
        r_keep = reward_value(text.sc, Action.KEEP, si_m, q_count, penalty)
        r_disc = reward_value(text.sc, Action.DISCARD, si_m, q_count, penalty)
        action = Action.KEEP if r_keep > r_disc + tie_eps else Action.DISCARD
        out = env.step(action)
        actions.append(int(Action.DISCARD) if out.info.forced else int(action))
        rewards.append(out.reward)
        obs = out.next_observation
    return OracleResult(actions=actions, rewards=rewards, kept_ids=env.kept_ids,
                        total_return=float(sum(rewards)))
