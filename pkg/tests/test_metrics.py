"""Evaluation metrics: exact small-case values, invariances, diagnostics."""

import numpy as np
import pytest

from mirank import BehaviorConfig, ModelConfig, generate_catalog, init_model
from mirank.core import MirankError, QueryRecord, Ranking, make_rng
from mirank.metrics import (
    DegenerateLabelsError,
    attention_diagnostic,
    auc,
    compare_policies,
    latency_bench,
    metric_report,
    model_policy,
    rig,
)
from conftest import random_candidates

SMALL = ModelConfig(d=3, hidden_sizes=(5, 4), lstm_hidden=4, attn_size=3, pos_size=2, max_positions=24)


class TestAuc:
    def test_hand_computed_value(self):
        # pairs: (0.9,1) beats both negatives, (0.4,1) beats one of two -> 3/4
        assert auc([0.9, 0.8, 0.4, 0.1], [1, 0, 1, 0]) == 0.75

    def test_perfect_and_inverted(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
        assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_ties_count_half(self):
        assert auc([0.5, 0.5], [1, 0]) == 0.5

    def test_invariant_under_monotone_transform(self, rng):
        preds = rng.uniform(0.01, 0.99, size=40)
        labels = rng.integers(0, 2, size=40)
        labels[0], labels[1] = 0, 1
        base = auc(preds, labels)
        assert abs(auc(np.log(preds / (1 - preds)), labels) - base) < 1e-12
        assert abs(auc(preds**3, labels) - base) < 1e-12

    def test_degenerate_labels_rejected(self):
        with pytest.raises(DegenerateLabelsError):
            auc([0.1, 0.9], [1, 1])
        with pytest.raises(DegenerateLabelsError):
            auc([], [])


class TestRig:
    def test_constant_rate_prediction_scores_zero(self):
        labels = [1, 0, 0, 1, 0]
        assert abs(rig([0.4] * 5, labels)) < 1e-12

    def test_perfect_predictions_score_near_one(self):
        assert rig([1.0, 1.0, 0.0], [1, 1, 0]) > 0.999

    def test_worse_than_constant_is_negative(self):
        assert rig([0.05, 0.95], [1, 0]) < 0.0

    def test_report_bundles_fields(self):
        report = metric_report([0.9, 0.8, 0.4, 0.1], [1, 0, 1, 0])
        assert report.auc == 0.75
        assert report.n_samples == 4
        assert report.positive_rate == 0.5


class TestComparePolicies:
    def _setup(self):
        catalog = generate_catalog(60, 3, seed=1)
        config = BehaviorConfig(price_sensitivity=2.0, position_bias_strength=1.0, base_rate=0.3, seed=2)
        return catalog, config

    def test_identical_policies_tie_exactly(self):
        catalog, config = self._setup()
        identity = lambda candidates: Ranking(tuple(range(len(candidates))))
        comparison = compare_policies(
            {"a": identity, "b": identity}, config, catalog, n_queries=15, items_per_query=6, seed=3
        )
        mean, stderr = comparison.paired_difference("a", "b")
        assert mean == 0.0 and stderr == 0.0

    def test_deterministic_and_consistent_stats(self):
        catalog, config = self._setup()
        policy = model_policy(init_model("midnn", SMALL, seed=4))
        reverse = lambda candidates: Ranking(tuple(reversed(range(len(candidates)))))
        run = lambda: compare_policies(
            {"model": policy, "reverse": reverse}, config, catalog, n_queries=10, items_per_query=6, seed=5
        )
        a, b = run(), run()
        assert np.array_equal(a.gmv, b.gmv)
        assert a.gmv.shape == (10, 2)
        mean, _ = a.paired_difference("model", "reverse")
        assert abs(mean - (a.mean("model") - a.mean("reverse"))) < 1e-9
        assert a.stderr("model") > 0.0

    def test_model_policy_covers_all_variants(self, rng):
        cs = random_candidates(rng, 5, 3)
        for variant in ("baseline", "midnn", "mirnn", "mirnn_attention"):
            policy = model_policy(init_model(variant, SMALL, seed=0), beam_size=2)
            ranking = policy(cs)
            assert sorted(ranking.order) == list(range(5))


class TestAttentionDiagnostic:
    def _records(self, length, count=3):
        rng = make_rng(9)
        records = []
        for q in range(count):
            cs = random_candidates(rng, length, 3)
            records.append(QueryRecord(f"q{q}", cs.items, tuple([1] + [0] * (length - 1))))
        return records

    def test_two_position_row_is_exactly_one(self):
        params = init_model("mirnn_attention", SMALL, seed=1)
        matrix = attention_diagnostic(params, self._records(4), size=4)
        assert matrix.n_records == 3
        assert abs(matrix.row(2)[0] - 1.0) < 1e-12

    def test_rows_sum_to_one(self):
        params = init_model("mirnn_attention", SMALL, seed=1)
        matrix = attention_diagnostic(params, self._records(6), size=6)
        for i in range(2, 7):
            assert abs(matrix.row(i).sum() - 1.0) < 1e-10

    def test_zero_score_weights_give_uniform_rows(self):
        params = init_model("mirnn_attention", SMALL, seed=1)
        params = params.with_blocks({"w_g": np.zeros_like(params.blocks["w_g"])})
        matrix = attention_diagnostic(params, self._records(5), size=5)
        for i in range(2, 6):
            assert np.allclose(matrix.row(i), 1.0 / (i - 1))

    def test_short_records_are_skipped_and_none_left_raises(self):
        params = init_model("mirnn_attention", SMALL, seed=1)
        short = self._records(3)
        with pytest.raises(MirankError, match="length"):
            attention_diagnostic(params, short, size=10)

    def test_requires_attention_variant(self):
        with pytest.raises(MirankError):
            attention_diagnostic(init_model("mirnn", SMALL, seed=0), self._records(4), size=4)


class TestLatencyBench:
    def test_profile_shape_and_slopes_present(self):
        models = {
            "midnn": init_model("midnn", SMALL, seed=0),
            "mirnn": init_model("mirnn", SMALL, seed=0),
        }
        profile = latency_bench(models, rerank_sizes=[4, 8], beam_sizes=[1, 2], repetitions=2, seed=0)
        # midnn ignores beam size (one sweep), mirnn runs both beam sizes
        assert len(profile.rows) == 2 + 4
        assert set(profile.slope_vs_n) == {"midnn", "mirnn"}
        assert set(profile.slope_vs_k) == {"mirnn"}
        for row in profile.rows:
            assert row["median_seconds"] > 0.0
