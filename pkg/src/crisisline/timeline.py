"""Daily fact assembly: group kept texts into facts, rank by importance,
truncate to top-k, serialize timeline records.

Two grouping modes: "flat" emits one fact per kept text; "topic" groups
kept texts by average-linkage agglomerative clustering on cosine distance
(threshold tau), standing in for heavier topic modeling. A fact's
importance is the max member importance by default (config: mean), its
representative is the highest-importance member.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

DEFAULT_TAU = 0.5


@dataclass
class Fact:
    fact_id: str
    event_id: str
    day: str
    member_ids: list[str]
    representative_id: str
    importance: float
    sources: list[str]
    streams: list[str]
    text: str


@dataclass
class Timeline:
    event_id: str
    day: str
    facts: list[Fact]
    k_used: int | None


def _cluster_labels(embeddings: np.ndarray, tau: float) -> np.ndarray:
    n = embeddings.shape[0]
    if n == 1:
        return np.zeros(1, dtype=int)
    dist = pdist(embeddings.astype(np.float64), metric="cosine")
    # Zero-norm rows make cosine undefined; treat them as maximally distant.
    dist = np.nan_to_num(dist, nan=1.0)
    return fcluster(linkage(dist, method="average"), t=tau, criterion="distance")


def cluster_facts(kept, texts_by_id, mode: str = "flat", tau: float = DEFAULT_TAU,
                  importance_agg: str = "max", join_members: bool = True) -> list[Fact]:
    """Group kept texts (selector.KeptText) into facts.

    texts_by_id maps text_id -> corpus.StreamText for text/stream lookup.
    Every kept text lands in exactly one fact.
    """
    if mode not in ("flat", "topic"):
        raise ValueError("mode must be flat or topic")
    if importance_agg not in ("max", "mean"):
        raise ValueError("importance_agg must be max or mean")
    if not kept:
        return []
    if mode == "flat":
        groups = [[k] for k in kept]
    else:
        emb = np.stack([k.embedding for k in kept])
        labels = _cluster_labels(emb, tau)
        by_label: dict[int, list] = {}
        for k, lab in zip(kept, labels):
            by_label.setdefault(int(lab), []).append(k)
        groups = [by_label[lab] for lab in sorted(by_label)]
    facts = []
    for members in groups:
        members = sorted(members, key=lambda k: (-k.importance, k.text_id))
        rep = members[0]
        if importance_agg == "max":
            imp = rep.importance
        else:
            imp = float(np.mean([m.importance for m in members]))
        in_order = sorted(members, key=lambda k: k.decision_index)
        texts = [texts_by_id[m.text_id] for m in in_order]
        fact_text = " ".join(t.text for t in texts) if join_members else (
            texts_by_id[rep.text_id].text)
        # Sources carry the representative first so downstream consumers can
        # recover it from serialized records; the rest follow decision order.
        sources = [rep.text_id] + [m.text_id for m in in_order
                                   if m.text_id != rep.text_id]
        facts.append(Fact(
            fact_id=f"fact-{rep.text_id}",
            event_id=texts[0].event_id,
            day=texts[0].day,
            member_ids=[m.text_id for m in in_order],
            representative_id=rep.text_id,
            importance=imp,
            sources=sources,
            streams=sorted({t.stream for t in texts}),
            text=fact_text,
        ))
    return facts


def emit_timeline(facts: list[Fact], k: int | None = None) -> Timeline:
    """Sort facts by importance descending (ties by representative text_id
    ascending) and truncate to the top k when given."""
    if k is not None and k <= 0:
        raise ValueError("k must be positive")
    ordered = sorted(facts, key=lambda f: (-f.importance, f.representative_id))
    if k is not None:
        ordered = ordered[:k]
    if not ordered:
        return Timeline(event_id="", day="", facts=[], k_used=k)
    return Timeline(event_id=ordered[0].event_id, day=ordered[0].day,
                    facts=ordered, k_used=k)


def timeline_records(timeline: Timeline) -> list[dict]:
    return [
        {"event_id": f.event_id, "day": f.day, "rank": rank, "fact_id": f.fact_id,
         "factText": f.text, "importance": f.importance, "sources": f.sources,
         "streams": f.streams}
        for rank, f in enumerate(timeline.facts, start=1)
    ]


def write_timelines(timelines, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tl in timelines:
            for rec in timeline_records(tl):
                fh.write(json.dumps(rec) + "\n")
