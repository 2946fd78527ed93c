"""Weak-score aggregation: per-(query, text) QA confidences -> sc.

A (text, query) pair counts toward the text's score only when BOTH model
confidences clear the threshold (inclusive, default 0.80). The mean
confidence of counting pairs is carried for diagnostics only; downstream
training consumes sc alone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_THRESHOLD = 0.80


@dataclass(frozen=True)
class ConfidencePair:
    text_id: str
    query_id: str
    conf_a: float
    conf_b: float


@dataclass
class WeakScoreTable:
    sc: dict[str, int] = field(default_factory=dict)
    # text_id -> query_id -> mean confidence, counting pairs only
    cf: dict[str, dict[str, float]] = field(default_factory=dict)

    def score(self, text_id: str) -> int:
        return self.sc.get(text_id, 0)


def aggregate_scores(pairs, threshold: float = DEFAULT_THRESHOLD) -> WeakScoreTable:
    """Count, per text, the distinct queries whose pair passes the dual
    threshold test; order of the input pairs is irrelevant."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    seen: set[tuple[str, str]] = set()
    table = WeakScoreTable()
    for p in pairs:
        if not (0.0 <= p.conf_a <= 1.0 and 0.0 <= p.conf_b <= 1.0):
            raise ValueError(f"confidence outside [0, 1] for {(p.text_id, p.query_id)}")
        key = (p.text_id, p.query_id)
        if key in seen:
            raise ValueError(f"duplicate (text_id, query_id) pair {key}")
        seen.add(key)
        table.sc.setdefault(p.text_id, 0)
        if p.conf_a >= threshold and p.conf_b >= threshold:
            table.sc[p.text_id] += 1
            table.cf.setdefault(p.text_id, {})[p.query_id] = (p.conf_a + p.conf_b) / 2.0
    return table


def read_confidences(path) -> list[ConfidencePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            pairs.append(ConfidencePair(
                text_id=str(obj["text_id"]), query_id=str(obj["query_id"]),
                conf_a=float(obj["conf_a"]), conf_b=float(obj["conf_b"])))
    return pairs


def merge_scores(items_path, confidences_path, out_path,
                 threshold: float = DEFAULT_THRESHOLD) -> int:
    """Rewrite items.jsonl with sc recomputed from confidences.jsonl.

    Texts with no counting pair get sc 0. Returns the number of items written.
    """
    table = aggregate_scores(read_confidences(confidences_path), threshold=threshold)
    n = 0
    out_path = Path(out_path)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(items_path, encoding="utf-8") as src, open(tmp, "w", encoding="utf-8") as dst:
        for line in src:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            obj["sc"] = table.score(str(obj["text_id"]))
            dst.write(json.dumps(obj) + "\n")
            n += 1
    tmp.replace(out_path)
    return n
