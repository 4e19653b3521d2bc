"""Shared helpers for building small random instances."""

from __future__ import annotations

import numpy as np
import pytest

from mirank import CandidateSet, Item
from mirank.core import make_rng


def random_candidates(rng: np.random.Generator, n: int, d: int) -> CandidateSet:
    """A valid random candidate set with distinct ids and positive prices."""
    items = tuple(
        Item(
            id=i,
            price=float(np.exp(rng.uniform(0.0, np.log(100.0)))),
            local_features=rng.standard_normal(d),
        )
        for i in range(n)
    )
    return CandidateSet(items)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(12345)
