"""Domain data model and JSONL corpus I/O.

A corpus directory holds four required files (events.jsonl, queries.jsonl,
items.jsonl, references.jsonl), UTF-8, one object per line. Embeddings are
ingested as data (768 float32 components) and never computed here. All
iteration orders are deterministic: stream items sort by (unix_ts, text_id).
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EMBEDDING_DIM = 768
STREAMS = ("twitter", "reddit", "news")
REFERENCE_KINDS = ("nist", "ics", "wikipedia", "synthetic")

EVENTS_FILE = "events.jsonl"
QUERIES_FILE = "queries.jsonl"
ITEMS_FILE = "items.jsonl"
REFERENCES_FILE = "references.jsonl"
# Optional sidecars produced by the generator / annotation tooling.
CONFIDENCES_FILE = "confidences.jsonl"
TRUTH_FILE = "truth.jsonl"
REFERENCE_EMBEDDINGS_FILE = "reference_embeddings.jsonl"


class CorpusError(ValueError):
    """Raised on malformed corpus input, with file/line context."""

    def __init__(self, message, path=None, line=None):
        ctx = ""
        if path is not None:
            ctx = f"{path}"
            if line is not None:
                ctx += f":{line}"
            ctx += ": "
        super().__init__(ctx + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Query:
    query_id: str
    event_id: str
    text: str


@dataclass
class Event:
    event_id: str
    name: str
    day_ids: tuple[str, ...]
    query_set: tuple[Query, ...] = ()

    @property
    def query_count(self) -> int:
        return len(self.query_set)


@dataclass(eq=False)
class StreamText:
    text_id: str
    event_id: str
    stream: str
    unix_ts: int
    day: str
    text: str
    embedding: np.ndarray  # float32, shape (768,)
    sc: int


@dataclass
class DayStream:
    event_id: str
    day: str
    items: list[StreamText] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class ReferenceSummary:
    event_id: str
    day: str
    kind: str
    text: str
    max_facts_k: int | None = None


@dataclass
class Corpus:
    events: dict[str, Event]
    day_streams: dict[tuple[str, str], DayStream]
    references: list[ReferenceSummary]
    root: Path | None = None

    def day_stream(self, event_id: str, day: str) -> DayStream:
        return self.day_streams[(event_id, day)]

    def iter_day_streams(self, event_ids=None):
        """Day streams in deterministic (event_id, day) order."""
        for key in sorted(self.day_streams):
            if event_ids is None or key[0] in event_ids:
                yield self.day_streams[key]

    @property
    def total_texts(self) -> int:
        return sum(len(ds) for ds in self.day_streams.values())


def utc_day(unix_ts: int) -> str:
    """Calendar day (ISO) containing a unix timestamp, in UTC."""
    return dt.datetime.fromtimestamp(unix_ts, tz=dt.timezone.utc).date().isoformat()


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from exc
            if not isinstance(obj, dict):
                raise CorpusError("expected a JSON object", path=path, line=lineno)
            yield lineno, obj


def _require(obj, keys, path, lineno):
    for k in keys:
        if k not in obj:
            raise CorpusError(f"missing field {k!r}", path=path, line=lineno)


def load_corpus(root) -> Corpus:
    """Load and validate a corpus directory; raises CorpusError on the first
    violation. Use validate_corpus for a non-raising full report."""
    root = Path(root)
    events: dict[str, Event] = {}
    events_path = root / EVENTS_FILE
    for lineno, obj in _iter_jsonl(events_path):
        _require(obj, ("event_id", "name", "days"), events_path, lineno)
        eid = str(obj["event_id"])
        if eid in events:
            raise CorpusError(f"duplicate event_id {eid!r}", events_path, lineno)
        days = tuple(str(d) for d in obj["days"])
        if not days:
            raise CorpusError(f"event {eid!r} has no days", events_path, lineno)
        if any(b <= a for a, b in zip(days, days[1:])):
            raise CorpusError(f"event {eid!r} days not strictly increasing", events_path, lineno)
        events[eid] = Event(event_id=eid, name=str(obj["name"]), day_ids=days)

    queries: dict[str, list[Query]] = {eid: [] for eid in events}
    queries_path = root / QUERIES_FILE
    for lineno, obj in _iter_jsonl(queries_path):
        _require(obj, ("event_id", "query_id", "text"), queries_path, lineno)
        eid = str(obj["event_id"])
        if eid not in events:
            raise CorpusError(f"query references unknown event {eid!r}", queries_path, lineno)
        q = Query(query_id=str(obj["query_id"]), event_id=eid, text=str(obj["text"]))
        if any(existing.query_id == q.query_id for existing in queries[eid]):
            raise CorpusError(f"duplicate query_id {q.query_id!r} in event {eid!r}",
                              queries_path, lineno)
        queries[eid].append(q)
    for eid, qs in queries.items():
        if not qs:
            raise CorpusError(f"event {eid!r} has an empty query set", queries_path)
        events[eid].query_set = tuple(qs)

    day_streams: dict[tuple[str, str], DayStream] = {
        (eid, day): DayStream(event_id=eid, day=day)
        for eid, ev in events.items() for day in ev.day_ids
    }
    seen_text_ids: set[str] = set()
    items_path = root / ITEMS_FILE
    for lineno, obj in _iter_jsonl(items_path):
        _require(obj, ("text_id", "event_id", "stream", "unix_ts", "day", "text",
                       "embedding", "sc"), items_path, lineno)
        eid = str(obj["event_id"])
        if eid not in events:
            raise CorpusError(f"item references unknown event {eid!r}", items_path, lineno)
        tid = str(obj["text_id"])
        if tid in seen_text_ids:
            raise CorpusError(f"duplicate text_id {tid!r}", items_path, lineno)
        seen_text_ids.add(tid)
        stream = str(obj["stream"])
        if stream not in STREAMS:
            raise CorpusError(f"unknown stream {stream!r}", items_path, lineno)
        emb_raw = obj["embedding"]
        if len(emb_raw) != EMBEDDING_DIM:
            raise CorpusError(
                f"embedding length {len(emb_raw)} != {EMBEDDING_DIM} for {tid!r}",
                items_path, lineno)
        emb = np.asarray(emb_raw, dtype=np.float32)
        if not np.isfinite(emb).all():
            raise CorpusError(f"non-finite embedding component in {tid!r}", items_path, lineno)
        unix_ts = int(obj["unix_ts"])
        day = str(obj["day"])
        if utc_day(unix_ts) != day:
            raise CorpusError(
                f"{tid!r}: day {day} does not contain unix_ts {unix_ts} "
                f"(UTC day {utc_day(unix_ts)})", items_path, lineno)
        if (eid, day) not in day_streams:
            raise CorpusError(f"{tid!r}: day {day} not declared for event {eid!r}",
                              items_path, lineno)
        sc = int(obj["sc"])
        if sc < 0:
            raise CorpusError(f"{tid!r}: negative sc", items_path, lineno)
        if sc > events[eid].query_count:
            raise CorpusError(
                f"{tid!r}: sc {sc} exceeds event query count {events[eid].query_count}",
                items_path, lineno)
        day_streams[(eid, day)].items.append(StreamText(
            text_id=tid, event_id=eid, stream=stream, unix_ts=unix_ts, day=day,
            text=str(obj["text"]), embedding=emb, sc=sc))

    for ds in day_streams.values():
        ds.items.sort(key=lambda t: (t.unix_ts, t.text_id))

    references: list[ReferenceSummary] = []
    refs_path = root / REFERENCES_FILE
    if refs_path.exists():
        for lineno, obj in _iter_jsonl(refs_path):
            _require(obj, ("event_id", "day", "kind", "text"), refs_path, lineno)
            eid = str(obj["event_id"])
            if eid not in events:
                raise CorpusError(f"reference for unknown event {eid!r}", refs_path, lineno)
            kind = str(obj["kind"])
            if kind not in REFERENCE_KINDS:
                raise CorpusError(f"unknown reference kind {kind!r}", refs_path, lineno)
            k = obj.get("max_facts_k")
            if k is not None:
                k = int(k)
                if k <= 0:
                    raise CorpusError("max_facts_k must be positive", refs_path, lineno)
            if kind == "nist" and k is None:
                raise CorpusError("nist reference requires max_facts_k", refs_path, lineno)
            references.append(ReferenceSummary(event_id=eid, day=str(obj["day"]),
                                               kind=kind, text=str(obj["text"]),
                                               max_facts_k=k))
    references.sort(key=lambda r: (r.event_id, r.day, r.kind))
    return Corpus(events=events, day_streams=day_streams, references=references, root=root)


def save_corpus(corpus: Corpus, out_dir) -> None:
    """Re-serialize a corpus; load(save(load(x))) round-trips bit-exactly."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / EVENTS_FILE, "w", encoding="utf-8") as fh:
        for eid in sorted(corpus.events):
            ev = corpus.events[eid]
            fh.write(json.dumps({"event_id": ev.event_id, "name": ev.name,
                                 "days": list(ev.day_ids)}) + "\n")
    with open(out / QUERIES_FILE, "w", encoding="utf-8") as fh:
        for eid in sorted(corpus.events):
            for q in corpus.events[eid].query_set:
                fh.write(json.dumps({"event_id": q.event_id, "query_id": q.query_id,
                                     "text": q.text}) + "\n")
    with open(out / ITEMS_FILE, "w", encoding="utf-8") as fh:
        for key in sorted(corpus.day_streams):
            for t in corpus.day_streams[key].items:
                fh.write(json.dumps({
                    "text_id": t.text_id, "event_id": t.event_id, "stream": t.stream,
                    "unix_ts": t.unix_ts, "day": t.day, "text": t.text,
                    "embedding": [float(x) for x in t.embedding], "sc": t.sc}) + "\n")
    with open(out / REFERENCES_FILE, "w", encoding="utf-8") as fh:
        for r in corpus.references:
            obj = {"event_id": r.event_id, "day": r.day, "kind": r.kind, "text": r.text}
            if r.max_facts_k is not None:
                obj["max_facts_k"] = r.max_facts_k
            fh.write(json.dumps(obj) + "\n")


@dataclass
class ValidationReport:
    event_stats: dict
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "events": self.event_stats, "violations": self.violations}


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Report-only invariant check over an in-memory corpus.

    load_corpus enforces the same rules strictly; this variant exists so
    hand-built or permissively constructed corpora can be audited without
    raising, and to report per-event count statistics.
    """
    violations: list[str] = []
    stats: dict = {}
    for eid in sorted(corpus.events):
        ev = corpus.events[eid]
        if not ev.day_ids:
            violations.append(f"event {eid}: empty day_ids")
        if any(b <= a for a, b in zip(ev.day_ids, ev.day_ids[1:])):
            violations.append(f"event {eid}: day_ids not strictly increasing")
        if ev.query_count == 0:
            violations.append(f"event {eid}: empty query set")
        qids = [q.query_id for q in ev.query_set]
        if len(set(qids)) != len(qids):
            violations.append(f"event {eid}: duplicate query ids")
        per_day: dict[str, int] = {}
        sc_hist: dict[int, int] = {}
        total = 0
        for day in ev.day_ids:
            ds = corpus.day_streams.get((eid, day))
            n = len(ds) if ds else 0
            per_day[day] = n
            total += n
            if ds is None:
                continue
            last = None
            for t in ds.items:
                sc_hist[t.sc] = sc_hist.get(t.sc, 0) + 1
                if t.embedding.shape != (EMBEDDING_DIM,):
                    violations.append(f"text {t.text_id}: embedding shape {t.embedding.shape}")
                elif not np.isfinite(t.embedding).all():
                    violations.append(f"text {t.text_id}: non-finite embedding")
                if utc_day(t.unix_ts) != t.day:
                    violations.append(f"text {t.text_id}: day/unix_ts mismatch")
                if t.sc < 0 or t.sc > ev.query_count:
                    violations.append(f"text {t.text_id}: sc {t.sc} outside [0, {ev.query_count}]")
                key = (t.unix_ts, t.text_id)
                if last is not None and key < last:
                    violations.append(f"day stream {eid}/{day}: order violated at {t.text_id}")
                last = key
        stats[eid] = {
            "days": len(ev.day_ids),
            "queries": ev.query_count,
            "texts": total,
            "per_day": per_day,
            "sc_histogram": {str(k): v for k, v in sorted(sc_hist.items())},
        }
    for r in corpus.references:
        if r.kind not in REFERENCE_KINDS:
            violations.append(f"reference {r.event_id}/{r.day}: unknown kind {r.kind}")
        if r.kind == "nist" and r.max_facts_k is None:
            violations.append(f"reference {r.event_id}/{r.day}: nist without max_facts_k")
        if r.event_id not in corpus.events:
            violations.append(f"reference for unknown event {r.event_id}")
    return ValidationReport(event_stats=stats, violations=violations)


# ------------------------------------------------------- optional sidecars

def load_truth(root) -> dict[str, dict]:
    """Ground-truth sidecar from the generator: text_id -> flags."""
    path = Path(root) / TRUTH_FILE
    truth = {}
    for _, obj in _iter_jsonl(path):
        truth[str(obj["text_id"])] = obj
    return truth


def load_reference_embeddings(root) -> dict[tuple[str, str, str], dict]:
    """Per-(event, day, kind) reference sentences with their embeddings."""
    path = Path(root) / REFERENCE_EMBEDDINGS_FILE
    out = {}
    for _, obj in _iter_jsonl(path):
        key = (str(obj["event_id"]), str(obj["day"]), str(obj["kind"]))
        out[key] = {
            "sentences": [str(s) for s in obj["sentences"]],
            "embeddings": np.asarray(obj["embeddings"], dtype=np.float32),
        }
    return out
