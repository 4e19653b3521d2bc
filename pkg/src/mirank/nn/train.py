"""Training loop: mini-batch Adam over items (feed-forward) or sequences (recurrent)."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np

from ..configs import ModelConfig, ModelParams, TrainConfig, VARIANTS
from ..core import MirankError, QueryRecord, make_rng
from ..features import extend_feature_matrix
from .attention import init_attention_params
from .common import cross_entropy_batch
from .lstm import init_lstm_params
from .mlp import init_mlp_params, mlp_backward, mlp_forward_batch
from .optim import AdamState, adam_step
from .recurrent import sequence_backward, sequence_forward


class TrainingDiverged(MirankError):
    """Training hit a non-finite loss; message carries epoch and step."""


def init_blocks(variant: str, config: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Freshly initialized parameter blocks for a variant."""
    if variant not in VARIANTS:
        raise MirankError(f"unknown model variant {variant!r}")
    input_dim = config.input_dim(variant)
    if variant in ("baseline", "midnn"):
        return init_mlp_params(input_dim, config.hidden_sizes, rng)
    blocks = init_lstm_params(input_dim, config.lstm_hidden, rng)
    if variant == "mirnn_attention":
        blocks.update(
            init_attention_params(
                config.lstm_hidden, config.attn_size, config.pos_size, config.max_positions, rng
            )
        )
    return blocks


def batch_loss_and_grads(variant: str, blocks: dict[str, np.ndarray], x: np.ndarray, labels: np.ndarray):
    """Summed cross-entropy and its gradients for one batch.

    Feed-forward variants take (n, F) items; recurrent variants take
    (B, T, F) sequences with (B, T) labels. The logit gradient is the usual
    prediction-minus-label, exact wherever the probability clamp is inactive.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if variant in ("baseline", "midnn"):
        probs, caches = mlp_forward_batch(blocks, x)
        loss = cross_entropy_batch(probs, labels)
        grads = mlp_backward(blocks, caches, probs - labels)
    else:
        probs, caches = sequence_forward(blocks, x)
        loss = cross_entropy_batch(probs.ravel(), labels.ravel())
        grads = sequence_backward(blocks, caches, probs - labels)
    return loss, grads


def _item_arrays(variant: str, records: Sequence[QueryRecord]):
    xs, ys = [], []
    for record in records:
        feats = np.stack([item.local_features for item in record.displayed])
        if variant != "baseline":
            feats = extend_feature_matrix(feats)
        xs.append(feats)
        ys.append(np.array(record.labels, dtype=np.float64))
    return np.vstack(xs), np.concatenate(ys)


def _sequence_buckets(records: Sequence[QueryRecord]):
    """Group records by length so each mini-batch stacks into one (B, T, F) array."""
    buckets: dict[int, list[tuple[np.ndarray, np.ndarray]]] = defaultdict(list)
    for record in records:
        feats = extend_feature_matrix(
            np.stack([item.local_features for item in record.displayed])
        )
        buckets[len(record)].append((feats, np.array(record.labels, dtype=np.float64)))
    return buckets


def train(
    variant: str,
    records: Sequence[QueryRecord],
    model_config: ModelConfig,
    train_config: TrainConfig,
    seed: int,
) -> tuple[ModelParams, list[float]]:
    """Train a variant on query records; deterministic for a fixed seed.

    Returns the trained parameters and the per-epoch mean per-item training
    loss. Raises TrainingDiverged with epoch/step context if the loss goes
    non-finite.
    """
    if not records:
        raise MirankError("cannot train on an empty dataset")
    rng = make_rng(seed)
    blocks = init_blocks(variant, model_config, rng)
    state = AdamState()
    recurrent = variant in ("mirnn", "mirnn_attention")
    curve: list[float] = []

    if recurrent:
        buckets = _sequence_buckets(records)
        for epoch in range(train_config.epochs):
            total_loss, total_items, step = 0.0, 0, 0
            for length in sorted(buckets):
                entries = buckets[length]
                order = rng.permutation(len(entries))
                for start in range(0, len(entries), train_config.sequence_batch_size):
                    chosen = order[start : start + train_config.sequence_batch_size]
                    x = np.stack([entries[i][0] for i in chosen])
                    y = np.stack([entries[i][1] for i in chosen])
                    loss, grads = batch_loss_and_grads(variant, blocks, x, y)
                    if not np.isfinite(loss):
                        raise TrainingDiverged(
                            f"non-finite loss at epoch {epoch}, step {step} ({variant})"
                        )
                    adam_step(
                        blocks, grads, state,
                        train_config.learning_rate, train_config.beta1, train_config.beta2,
                    )
                    total_loss += loss
                    total_items += x.shape[0] * x.shape[1]
                    step += 1
            curve.append(total_loss / total_items)
    else:
        x_all, y_all = _item_arrays(variant, records)
        for epoch in range(train_config.epochs):
            order = rng.permutation(x_all.shape[0])
            total_loss, step = 0.0, 0
            for start in range(0, x_all.shape[0], train_config.batch_size):
                chosen = order[start : start + train_config.batch_size]
                loss, grads = batch_loss_and_grads(variant, blocks, x_all[chosen], y_all[chosen])
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}, step {step} ({variant})"
                    )
                adam_step(
                    blocks, grads, state,
                    train_config.learning_rate, train_config.beta1, train_config.beta2,
                )
                total_loss += loss
                step += 1
            curve.append(total_loss / x_all.shape[0])

    return ModelParams(variant=variant, config=model_config, blocks=blocks), curve
