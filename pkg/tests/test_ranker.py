"""Permutation search: optimality, beam/oracle/greedy agreement, rerank guards."""

import itertools

import numpy as np
import pytest

from mirank import ModelConfig, Ranking, init_model
from mirank.core import MirankError, make_rng
from mirank.ranker import (
    MAX_ORACLE_ITEMS,
    beam_search,
    exhaustive_oracle,
    expected_gmv,
    greedy_reference,
    rank_by_baseline,
    rank_by_sort,
    rerank_top_n,
)
from conftest import random_candidates

SMALL = ModelConfig(d=3, hidden_sizes=(5, 4), lstm_hidden=4, attn_size=3, pos_size=2, max_positions=12)
RECURRENT = ("mirnn", "mirnn_attention")


class TestSortOptimality:
    def test_sort_beats_all_permutations_under_decreasing_bias(self):
        """Brute force: for order-independent probabilities, descending
        price-times-probability maximizes sum(bias[pos] * price * p) for any
        strictly decreasing positive bias."""
        for seed in range(6):
            rng = make_rng(seed)
            cs = random_candidates(rng, 5, 3)
            params = init_model("midnn", SMALL, seed=seed)
            result = rank_by_sort(params, cs)
            scores = np.array(
                [cs.prices[i] * p for i, p in zip(result.ranking.order, result.per_position_probabilities)]
            )
            item_scores = np.empty(5)
            item_scores[list(result.ranking.order)] = scores
            bias = np.sort(rng.uniform(0.05, 1.0, size=5))[::-1]
            assert np.all(np.diff(bias) < 0)
            best = max(
                float(np.sum(bias * item_scores[list(perm)]))
                for perm in itertools.permutations(range(5))
            )
            sort_value = float(np.sum(bias * item_scores[list(result.ranking.order)]))
            assert sort_value >= best - 1e-12

    def test_result_value_matches_expected_gmv(self, rng):
        cs = random_candidates(rng, 6, 3)
        params = init_model("midnn", SMALL, seed=1)
        result = rank_by_sort(params, cs)
        assert abs(result.expected_gmv - expected_gmv(params, cs, result.ranking)) < 1e-10

    def test_baseline_order_is_descending_in_score(self, rng):
        cs = random_candidates(rng, 6, 3)
        params = init_model("baseline", SMALL, seed=1)
        result = rank_by_baseline(params, cs, gamma=1.5)
        probs = result.per_position_probabilities
        scores = cs.prices[list(result.ranking.order)] ** 1.5 * probs
        assert np.all(np.diff(scores) <= 1e-12)

    def test_variant_guards(self, rng):
        cs = random_candidates(rng, 4, 3)
        with pytest.raises(MirankError):
            rank_by_sort(init_model("baseline", SMALL, seed=0), cs)
        with pytest.raises(MirankError):
            rank_by_baseline(init_model("midnn", SMALL, seed=0), cs)


class TestBeamSearch:
    @pytest.mark.parametrize("variant", RECURRENT)
    def test_wide_beam_matches_exhaustive_oracle(self, variant):
        for seed in range(4):
            cs = random_candidates(make_rng(seed), 5, 3)
            params = init_model(variant, SMALL, seed=seed)
            beam = beam_search(params, cs, k=120)
            oracle = exhaustive_oracle(params, cs)
            assert beam.ranking.order == oracle.ranking.order
            assert abs(beam.expected_gmv - oracle.expected_gmv) < 1e-9

    @pytest.mark.parametrize("variant", RECURRENT)
    def test_unit_beam_matches_greedy_reference(self, variant):
        for seed in range(4):
            cs = random_candidates(make_rng(seed + 10), 6, 3)
            params = init_model(variant, SMALL, seed=seed)
            beam = beam_search(params, cs, k=1)
            greedy = greedy_reference(params, cs)
            assert beam.ranking.order == greedy.ranking.order
            assert abs(beam.expected_gmv - greedy.expected_gmv) < 1e-9

    @pytest.mark.parametrize("variant", RECURRENT)
    def test_oracle_dominates_every_beam_width(self, variant):
        cs = random_candidates(make_rng(42), 6, 3)
        params = init_model(variant, SMALL, seed=7)
        oracle = exhaustive_oracle(params, cs)
        for k in (1, 2, 5, 20):
            result = beam_search(params, cs, k=k)
            assert result.expected_gmv <= oracle.expected_gmv + 1e-9
            assert abs(result.expected_gmv - expected_gmv(params, cs, result.ranking)) < 1e-9

    def test_beam_probabilities_match_full_recompute(self, rng):
        cs = random_candidates(rng, 5, 3)
        params = init_model("mirnn_attention", SMALL, seed=3)
        result = beam_search(params, cs, k=4)
        from mirank.features import extend_features
        from mirank.models import sequence_probabilities

        recomputed = sequence_probabilities(params, extend_features(cs), result.ranking.order)
        assert np.allclose(result.per_position_probabilities, recomputed, atol=1e-10)

    def test_input_guards(self, rng):
        cs = random_candidates(rng, 4, 3)
        recurrent = init_model("mirnn", SMALL, seed=0)
        with pytest.raises(MirankError):
            beam_search(init_model("midnn", SMALL, seed=0), cs, k=2)
        with pytest.raises(MirankError):
            beam_search(recurrent, cs, k=0)
        with pytest.raises(MirankError):
            greedy_reference(init_model("midnn", SMALL, seed=0), cs)


class TestExhaustiveOracle:
    def test_size_guard(self, rng):
        cs = random_candidates(rng, MAX_ORACLE_ITEMS + 1, 3)
        with pytest.raises(MirankError, match="limited"):
            exhaustive_oracle(init_model("mirnn", SMALL, seed=0), cs)

    def test_feedforward_oracle_agrees_with_sort(self, rng):
        cs = random_candidates(rng, 5, 3)
        params = init_model("midnn", SMALL, seed=2)
        assert abs(exhaustive_oracle(params, cs).expected_gmv - rank_by_sort(params, cs).expected_gmv) < 1e-10


class TestRerankTopN:
    @pytest.mark.parametrize("variant", ("baseline", "midnn", "mirnn", "mirnn_attention"))
    def test_suffix_is_untouched_and_prefix_is_permuted(self, variant, rng):
        cs = random_candidates(rng, 8, 3)
        params = init_model(variant, SMALL, seed=5)
        base = Ranking(tuple(make_rng(1).permutation(8)))
        out = rerank_top_n(params, base, cs, n=5, k=3)
        assert out.order[5:] == base.order[5:]
        assert sorted(out.order[:5]) == sorted(base.order[:5])

    def test_single_item_prefix_returns_base(self, rng):
        cs = random_candidates(rng, 4, 3)
        base = Ranking((3, 1, 0, 2))
        assert rerank_top_n(init_model("midnn", SMALL, seed=0), base, cs, n=1) is base

    def test_size_guards(self, rng):
        cs = random_candidates(rng, 4, 3)
        params = init_model("midnn", SMALL, seed=0)
        base = Ranking((0, 1, 2, 3))
        with pytest.raises(MirankError):
            rerank_top_n(params, base, cs, n=0)
        with pytest.raises(MirankError):
            rerank_top_n(params, base, cs, n=5)
