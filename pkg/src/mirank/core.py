"""Shared domain types: items, candidate sets, rankings, and query records.

All types are immutable after construction and safe to share across
concurrent tasks. Positions are 1-based in docstrings (matching common
ranking terminology) and 0-based in code; the conversion happens at the
public function boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Item",
    "CandidateSet",
    "Ranking",
    "QueryRecord",
    "MirankError",
    "ValidationError",
    "make_rng",
    "validate_candidate_set",
]


class MirankError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MirankError):
    """A domain invariant was violated by user-supplied data."""


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a 64-bit seed; no global RNG state is used."""
    if not 0 <= int(seed) < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class Item:
    """One ranking unit: an id, a price, and a local feature vector.

    Attributes:
        id: Unique non-negative integer within a candidate set.
        price: Positive price in currency units.
        local_features: Float vector of fixed dimension d, identical across
            all items of one candidate set.
    """

    id: int
    price: float
    local_features: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.local_features, dtype=np.float64)
        feats.setflags(write=False)
        object.__setattr__(self, "local_features", feats)
        object.__setattr__(self, "price", float(self.price))
        object.__setattr__(self, "id", int(self.id))


@dataclass(frozen=True)
class CandidateSet:
    """The ordered list of items to be ranked for one query."""

    items: tuple[Item, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    @property
    def prices(self) -> np.ndarray:
        return np.array([item.price for item in self.items])

    @property
    def feature_matrix(self) -> np.ndarray:
        """Local features stacked row-wise, shape (N, d)."""
        return np.stack([item.local_features for item in self.items])


@dataclass(frozen=True)
class Ranking:
    """A permutation of candidate-set indices (0-based positions into the set)."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValidationError(f"order {order} is not a permutation of 0..{len(order) - 1}")
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class QueryRecord:
    """One logged impression: displayed items in display order plus purchase labels.

    Attributes:
        query_id: Identifier of the query.
        displayed: Items in the order shown to the user.
        labels: Binary purchase labels, parallel to ``displayed``.
        ground_truth_probs: Optional simulator purchase probabilities, parallel
            to ``displayed``; present for synthetic data only.
    """

    query_id: str
    displayed: tuple[Item, ...]
    labels: tuple[int, ...]
    ground_truth_probs: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "displayed", tuple(self.displayed))
        object.__setattr__(self, "labels", tuple(int(y) for y in self.labels))
        if len(self.labels) != len(self.displayed):
            raise ValidationError(
                f"record {self.query_id}: {len(self.labels)} labels for "
                f"{len(self.displayed)} items"
            )
        if any(y not in (0, 1) for y in self.labels):
            raise ValidationError(f"record {self.query_id}: labels must be 0 or 1")
        if self.ground_truth_probs is not None:
            probs = tuple(float(p) for p in self.ground_truth_probs)
            if len(probs) != len(self.displayed):
                raise ValidationError(
                    f"record {self.query_id}: {len(probs)} ground-truth probabilities "
                    f"for {len(self.displayed)} items"
                )
            object.__setattr__(self, "ground_truth_probs", probs)

    @property
    def candidate_set(self) -> CandidateSet:
        return CandidateSet(self.displayed)

    def __len__(self) -> int:
        return len(self.displayed)


def validate_candidate_set(candidates: CandidateSet) -> CandidateSet:
    """Check all candidate-set invariants and return the set unchanged.

    Raises:
        ValidationError: on duplicate ids, non-positive prices, non-finite
            feature values, or mismatched feature dimensions; the message
            names the offending item id.
    """
    if len(candidates) < 1:
        raise ValidationError("candidate set must contain at least one item")
    seen: set[int] = set()
    dim = candidates.items[0].local_features.shape[0] if candidates.items[0].local_features.ndim else -1
    for item in candidates.items:
        if item.id < 0:
            raise ValidationError(f"item {item.id}: id must be non-negative")
        if item.id in seen:
            raise ValidationError(f"duplicate item id {item.id} in candidate set")
        seen.add(item.id)
        if not (item.price > 0) or not np.isfinite(item.price):
            raise ValidationError(f"item {item.id}: price must be positive, got {item.price}")
        if item.local_features.ndim != 1 or item.local_features.shape[0] != dim:
            raise ValidationError(
                f"item {item.id}: feature dimension {item.local_features.shape} "
                f"does not match the set's dimension {dim}"
            )
        if not np.all(np.isfinite(item.local_features)):
            raise ValidationError(f"item {item.id}: local features contain non-finite values")
    return candidates
