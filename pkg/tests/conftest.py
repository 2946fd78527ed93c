import datetime as dt

import numpy as np
import pytest

from crisisline.corpus import DayStream, Event, Query, StreamText

DAY = "2021-06-01"
DAY_TS = int(dt.datetime.fromisoformat(DAY + "T00:00:00+00:00").timestamp())


def unit(dim=768, axis=0):
    v = np.zeros(dim, dtype=np.float32)
    v[axis] = 1.0
    return v


def make_text(text_id, sc=0, embedding=None, unix_ts=DAY_TS, event_id="ev", day=DAY,
              stream="twitter", text="hello world"):
    if embedding is None:
        embedding = unit()
    return StreamText(text_id=text_id, event_id=event_id, stream=stream,
                      unix_ts=unix_ts, day=day, text=text,
                      embedding=np.asarray(embedding, dtype=np.float32), sc=sc)


def make_day_stream(texts, event_id="ev", day=DAY):
    items = sorted(texts, key=lambda t: (t.unix_ts, t.text_id))
    return DayStream(event_id=event_id, day=day, items=items)


def make_event(event_id="ev", n_queries=10, days=(DAY,)):
    queries = tuple(Query(query_id=f"q{i}", event_id=event_id, text=f"query {i}")
                    for i in range(n_queries))
    return Event(event_id=event_id, name="Test Event", day_ids=tuple(days),
                 query_set=queries)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
