import numpy as np
import pytest

from crisisline.qnetwork import QNetwork
from crisisline.selector import importance, select_day

from .conftest import DAY_TS, make_day_stream, make_text, unit


def constant_net(q_keep: float, q_discard: float) -> QNetwork:
    net = QNetwork.create(hidden=(4, 4), seed=0)
    # zero every layer, then set output biases to the constant Q-values
    for p in net.params:
        p[:] = 0
    net.params[5][:] = np.array([q_keep, q_discard], dtype=np.float32)
    return net


def random_stream(rng, n=30):
    texts = []
    for i in range(n):
        emb = rng.normal(size=768)
        texts.append(make_text(f"t{i:03d}", sc=int(rng.integers(0, 3)),
                               embedding=emb, unix_ts=DAY_TS + i))
    return make_day_stream(texts)


class TestImportance:
    def test_subtraction(self):
        assert importance([2.0, 0.5]) == pytest.approx(1.5)

    def test_tie_is_zero(self):
        assert importance([0.7, 0.7]) == 0.0

    def test_negative_gap(self):
        assert importance([0.1, 0.9]) == pytest.approx(-0.8)

    def test_length_checked(self):
        with pytest.raises(ValueError):
            importance([1.0, 2.0, 3.0])


class TestSelectDay:
    def test_keep_everything_until_budget(self, rng):
        stream = random_stream(rng, n=12)
        res = select_day(constant_net(1.0, 0.0), stream, budget_max=5)
        assert len(res.kept) == 5
        assert res.forced_discards == 7
        assert res.decisions_total == 12
        assert all(k.importance == pytest.approx(1.0) for k in res.kept)

    def test_keep_nothing(self, rng):
        stream = random_stream(rng, n=12)
        res = select_day(constant_net(0.0, 1.0), stream, budget_max=5)
        assert res.kept == []
        assert res.forced_discards == 0

    def test_tie_keeps(self, rng):
        stream = random_stream(rng, n=3)
        res = select_day(constant_net(0.5, 0.5), stream, budget_max=10)
        assert len(res.kept) == 3
        assert all(k.importance == 0.0 for k in res.kept)

    def test_kept_importance_nonnegative_under_greedy(self, rng):
        net = QNetwork.create(hidden=(16, 16), seed=4)
        res = select_day(net, random_stream(rng, n=60), budget_max=50)
        for k in res.kept:
            assert k.importance >= 0.0

    def test_pure_function_repeatable(self, rng):
        net = QNetwork.create(hidden=(16, 16), seed=4)
        stream = random_stream(rng, n=40)
        r1 = select_day(net, stream, budget_max=20)
        r2 = select_day(net, stream, budget_max=20)
        assert [(k.text_id, k.importance, k.si_m) for k in r1.kept] == \
               [(k.text_id, k.importance, k.si_m) for k in r2.kept]

    def test_decisions_in_stream_order(self, rng):
        net = QNetwork.create(hidden=(16, 16), seed=4)
        res = select_day(net, random_stream(rng, n=40), budget_max=20)
        idx = [k.decision_index for k in res.kept]
        assert idx == sorted(idx)

    def test_latency_measured_when_asked(self, rng):
        net = QNetwork.create(hidden=(8, 8), seed=1)
        res = select_day(net, random_stream(rng, n=20), budget_max=10,
                         measure_latency=True)
        assert res.latency_mean_s is not None and res.latency_mean_s > 0
        assert res.latency_std_s is not None
        res2 = select_day(net, random_stream(rng, n=20), budget_max=10)
        assert res2.latency_mean_s is None

    def test_empty_stream(self):
        res = select_day(constant_net(1, 0), make_day_stream([]), budget_max=5)
        assert res.kept == [] and res.decisions_total == 0

    def test_records_schema(self, rng):
        net = QNetwork.create(hidden=(8, 8), seed=1)
        res = select_day(net, random_stream(rng, n=10), budget_max=10)
        for rec in res.records():
            assert set(rec) == {"event_id", "day", "text_id", "importance",
                                "decision_index", "si_m"}
