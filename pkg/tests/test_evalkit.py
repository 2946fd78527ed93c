import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisisline.evalkit import (MetricReport, MetricRow, latency_bench, pearson,
                                rouge2_f1, selection_diagnostics, semantic_score,
                                tokenize)
from crisisline.qnetwork import QNetwork

from .conftest import DAY_TS, make_day_stream, make_text

# Frozen via an independent naive bigram-matching oracle (exact fractions).
ROUGE_FIXTURES = [
    ("the cat sat on the mat", "the cat sat on the mat", 1.0),
    ("a b c", "a b d", 0.5),
    ("a b c d", "a b c", 0.8),
    ("a a a a", "a a", 0.5),
    ("x y", "p q", 0.0),
    ("hello", "hello", 0.0),
    ("", "a b", 0.0),
    ("The CAT sat!", "the cat sat", 1.0),
    ("a b a b", "b a b", 0.8),
    ("one two three four", "two three", 0.5),
    ("a b c", "c b a", 0.0),
    ("end. start", "end start", 1.0),
    ("fire spread north fast", "fire spread north overnight", 2 / 3),
    ("a b c d e", "c d e a b", 0.75),
]


class TestRouge2:
    @pytest.mark.parametrize("cand,ref,expected", ROUGE_FIXTURES)
    def test_hand_computed_fixtures_exact(self, cand, ref, expected):
        assert rouge2_f1(cand, ref) == expected

    def test_identical_is_exactly_one(self):
        text = "storm surge reached the harbor wall overnight"
        assert rouge2_f1(text, text) == 1.0

    @given(st.text(alphabet="abcd ", max_size=40), st.text(alphabet="abcd ", max_size=40))
    @settings(max_examples=80, deadline=None)
    def test_symmetric(self, a, b):
        assert rouge2_f1(a, b) == pytest.approx(rouge2_f1(b, a), abs=1e-12)

    @given(st.text(alphabet="abc ", max_size=40))
    @settings(max_examples=40, deadline=None)
    def test_range_and_self(self, a):
        v = rouge2_f1(a, a)
        assert v in (0.0, 1.0)  # 1.0 when there is at least one bigram
        assert 0.0 <= rouge2_f1(a, "a b c a") <= 1.0

    def test_tokenize_rules(self):
        assert tokenize("The CAT, sat!! 'on' mats.") == \
            ["the", "cat", "sat", "on", "mats"]
        assert tokenize("...") == []


E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


class TestSemanticScore:
    def test_identical_sets(self):
        assert semantic_score([E1, E2], [E1, E2]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_candidate_zero(self):
        assert semantic_score([E3], [E1, E2]) == 0.0

    def test_one_of_two_matched(self):
        # oracle: P = 1, R = (1 + 0)/2 -> F1 = 2/3
        assert semantic_score([E1], [E1, E2]) == pytest.approx(2 / 3, abs=1e-9)

    def test_forty_five_degrees(self):
        h = math.sqrt(2) / 2
        got = semantic_score([E1, E2], [np.array([h, h, 0.0])])
        assert got == pytest.approx(h, abs=1e-9)

    def test_mixed_half(self):
        assert semantic_score([E1, E3], [E1, E2]) == pytest.approx(0.5, abs=1e-9)

    def test_negative_precision_clamps_to_zero(self):
        assert semantic_score([-E1], [E1]) == 0.0

    def test_empty_side(self):
        assert semantic_score(np.zeros((0, 3)), [E1]) == 0.0

    def test_permutation_invariant(self, rng):
        cand = [rng.normal(size=8) for _ in range(5)]
        ref = [rng.normal(size=8) for _ in range(4)]
        a = semantic_score(cand, ref)
        b = semantic_score(cand[::-1], ref[::-1])
        assert a == pytest.approx(b, abs=1e-12)


class TestAggregates:
    def test_means_recompute_exactly(self):
        rows = [MetricRow("e", "d1", "nist", 0.4, 0.5),
                MetricRow("e", "d2", "nist", 0.6, 0.7),
                MetricRow("e", "d1", "ics", 0.1, None)]
        agg = MetricReport(rows=rows).aggregates()
        assert agg["per_kind"]["nist"]["rouge2_f1"] == pytest.approx(0.5)
        assert agg["per_kind"]["nist"]["semantic_proxy"] == pytest.approx(0.6)
        assert agg["per_kind"]["ics"]["semantic_proxy"] is None
        assert agg["overall"]["rouge2_f1"] == pytest.approx((0.4 + 0.6 + 0.1) / 3)

    def test_csv_written(self, tmp_path):
        rep = MetricReport(rows=[MetricRow("e", "d", "nist", 0.25, None)])
        rep.write_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "event_id,day,kind,rouge2_f1,semantic_proxy"
        assert lines[1] == "e,d,nist,0.25,"


class TestDiagnostics:
    def test_proportional_counts_correlate_perfectly(self):
        sel = {("e", f"d{i}"): 10 * (i + 1) for i in range(4)}
        ref = {("e", f"d{i}"): 3 * (i + 1) for i in range(4)}
        assert selection_diagnostics(sel, ref).correlation == pytest.approx(1.0)

    def test_anti_proportional(self):
        sel = {("e", f"d{i}"): 10 + i for i in range(4)}
        ref = {("e", f"d{i}"): 10 - i for i in range(4)}
        assert selection_diagnostics(sel, ref).correlation == pytest.approx(-1.0)

    def test_zero_variance_undefined(self):
        sel = {("e", "d1"): 5, ("e", "d2"): 5}
        ref = {("e", "d1"): 2, ("e", "d2"): 9}
        rep = selection_diagnostics(sel, ref)
        assert rep.correlation is None
        assert not rep.correlation_defined

    def test_needs_two_days(self):
        with pytest.raises(ValueError):
            selection_diagnostics({("e", "d"): 1}, {("e", "d"): 1})

    def test_pearson_matches_numpy(self, rng):
        x = rng.normal(size=30)
        y = 0.4 * x + rng.normal(size=30)
        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


class TestLatencyBench:
    def test_two_query_counts_report(self, rng):
        texts = [make_text(f"t{i:03d}", embedding=rng.normal(size=768),
                           unix_ts=DAY_TS + i) for i in range(120)]
        ds = make_day_stream(texts)
        net = QNetwork.create(hidden=(8, 8), seed=0)
        out = latency_bench(net, ds, [1, 52], repeats=1)
        assert set(out["per_query_count"]) == {"1", "52"}
        assert out["per_query_count"]["1"]["decisions"] == 120
        assert out["ratio_to_first"]["1"] == 1.0

    def test_empty_query_counts_rejected(self, rng):
        ds = make_day_stream([make_text("t")])
        net = QNetwork.create(hidden=(8, 8), seed=0)
        with pytest.raises(ValueError):
            latency_bench(net, ds, [])
