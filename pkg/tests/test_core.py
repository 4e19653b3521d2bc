"""Domain types: construction, immutability, and validation errors."""

import numpy as np
import pytest

from mirank import CandidateSet, Item, QueryRecord, Ranking, validate_candidate_set
from mirank.core import ValidationError, make_rng


class TestMakeRng:
    def test_deterministic(self):
        a = make_rng(7).standard_normal(5)
        b = make_rng(7).standard_normal(5)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(make_rng(1).standard_normal(5), make_rng(2).standard_normal(5))

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_rejects_out_of_range_seed(self, seed):
        with pytest.raises(ValidationError):
            make_rng(seed)

    def test_accepts_boundary_seeds(self):
        make_rng(0)
        make_rng(2**64 - 1)


class TestItem:
    def test_coerces_types(self):
        item = Item(id=np.int64(3), price=np.float64(2.5), local_features=[1, 2])
        assert isinstance(item.id, int) and isinstance(item.price, float)
        assert item.local_features.dtype == np.float64

    def test_features_are_read_only(self):
        item = Item(id=0, price=1.0, local_features=np.arange(3.0))
        with pytest.raises(ValueError):
            item.local_features[0] = 9.0


class TestCandidateSet:
    def test_prices_and_feature_matrix(self, rng):
        items = tuple(Item(id=i, price=float(i + 1), local_features=rng.standard_normal(4)) for i in range(3))
        cs = CandidateSet(items)
        assert len(cs) == 3
        assert np.array_equal(cs.prices, [1.0, 2.0, 3.0])
        assert cs.feature_matrix.shape == (3, 4)
        assert np.array_equal(cs.feature_matrix[1], items[1].local_features)


class TestRanking:
    def test_valid_permutation(self):
        r = Ranking((2, 0, 1))
        assert r.order == (2, 0, 1)
        assert len(r) == 3

    @pytest.mark.parametrize("order", [(0, 0, 1), (1, 2), (0, 1, 3)])
    def test_rejects_non_permutations(self, order):
        with pytest.raises(ValidationError):
            Ranking(order)

    def test_empty_ranking_allowed(self):
        assert Ranking(()).order == ()


class TestQueryRecord:
    def _items(self, n):
        return tuple(Item(id=i, price=1.0, local_features=np.zeros(2)) for i in range(n))

    def test_candidate_set_roundtrip(self):
        rec = QueryRecord("q1", self._items(2), (0, 1))
        assert len(rec) == 2
        assert rec.candidate_set.items == rec.displayed

    def test_label_length_mismatch(self):
        with pytest.raises(ValidationError):
            QueryRecord("q1", self._items(2), (0,))

    def test_non_binary_labels(self):
        with pytest.raises(ValidationError):
            QueryRecord("q1", self._items(2), (0, 2))

    def test_ground_truth_length_mismatch(self):
        with pytest.raises(ValidationError):
            QueryRecord("q1", self._items(2), (0, 1), ground_truth_probs=(0.5,))


class TestValidateCandidateSet:
    def test_accepts_valid_set(self, rng):
        from conftest import random_candidates

        cs = random_candidates(rng, 4, 3)
        assert validate_candidate_set(cs) is cs

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            validate_candidate_set(CandidateSet(()))

    def test_rejects_duplicate_ids(self):
        items = (Item(0, 1.0, np.zeros(2)), Item(0, 2.0, np.zeros(2)))
        with pytest.raises(ValidationError, match="duplicate"):
            validate_candidate_set(CandidateSet(items))

    def test_rejects_negative_id(self):
        with pytest.raises(ValidationError, match="non-negative"):
            validate_candidate_set(CandidateSet((Item(-1, 1.0, np.zeros(2)),)))

    @pytest.mark.parametrize("price", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_price(self, price):
        with pytest.raises(ValidationError, match="price"):
            validate_candidate_set(CandidateSet((Item(0, price, np.zeros(2)),)))

    def test_rejects_mismatched_dimensions(self):
        items = (Item(0, 1.0, np.zeros(2)), Item(1, 1.0, np.zeros(3)))
        with pytest.raises(ValidationError, match="dimension"):
            validate_candidate_set(CandidateSet(items))

    def test_rejects_non_finite_features(self):
        items = (Item(0, 1.0, np.array([1.0, np.nan])),)
        with pytest.raises(ValidationError, match="non-finite"):
            validate_candidate_set(CandidateSet(items))
