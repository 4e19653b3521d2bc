"""Attention over previous hidden states for the recurrent ranking model.

Each ranked item gets a representation a_i = ReLU(W_a [pos_i; h_i]) built
from a learned position embedding and the current hidden vector. Pairwise
scores ReLU(w_g . [a_i; a_j]) are softmax-normalized over the predecessors
j < i, and the context is the weighted sum of their hidden vectors.
"""

from __future__ import annotations

import numpy as np

from .common import glorot_uniform


def init_attention_params(
    hidden_dim: int,
    attn_dim: int,
    pos_dim: int,
    max_positions: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    """Attention-specific blocks; combined with LSTM blocks in the full model."""
    return {
        "w_ctx": glorot_uniform(rng, (hidden_dim,)),
        "W_a": glorot_uniform(rng, (attn_dim, pos_dim + hidden_dim)),
        "w_g": glorot_uniform(rng, (2 * attn_dim,)),
        "pos_emb": rng.uniform(-0.05, 0.05, size=(max_positions, pos_dim)),
    }


def position_row(params: dict[str, np.ndarray], position_index: int) -> int:
    """0-based embedding row for a 1-based position; indices beyond the table clamp."""
    if position_index < 1:
        raise ValueError(f"position_index must be >= 1, got {position_index}")
    return min(position_index, params["pos_emb"].shape[0]) - 1


def make_item_representation(
    params: dict[str, np.ndarray],
    position_index: int,
    hidden: np.ndarray,
) -> np.ndarray:
    """a_i = ReLU(W_a [pos_embedding(position_index); hidden]); position is 1-based."""
    pos = params["pos_emb"][position_row(params, position_index)]
    return np.maximum(params["W_a"] @ np.concatenate([pos, hidden]), 0.0)


def attention_scores(
    params: dict[str, np.ndarray],
    a_i: np.ndarray,
    cached_reps: np.ndarray,
) -> np.ndarray:
    """ReLU pair scores of a_i against each cached predecessor representation."""
    attn_dim = a_i.shape[-1]
    own = cached_reps @ params["w_g"][attn_dim:]
    return np.maximum(a_i @ params["w_g"][:attn_dim] + own, 0.0)


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = scores - scores.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def attention_context(
    params: dict[str, np.ndarray],
    cached_reps,
    a_i: np.ndarray,
    hidden_history,
) -> tuple[np.ndarray, np.ndarray]:
    """Context vector and attention weights over the i-1 predecessors.

    Returns (context, weights): weights are the softmax of the ReLU pair
    scores, nonnegative and summing to 1; context is the weight-averaged sum
    of the predecessor hidden vectors.
    """
    reps = np.atleast_2d(np.asarray(cached_reps, dtype=np.float64))
    history = np.atleast_2d(np.asarray(hidden_history, dtype=np.float64))
    if reps.shape[0] != history.shape[0]:
        raise ValueError(
            f"{reps.shape[0]} cached representations for {history.shape[0]} hidden vectors"
        )
    if reps.shape[0] < 1:
        raise ValueError("attention needs at least one predecessor")
    weights = softmax(attention_scores(params, a_i, reps))
    context = weights @ history
    return context, weights
