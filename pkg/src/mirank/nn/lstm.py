"""LSTM cell, standard formulation (no peepholes), forget-gate bias 1.0.

The four gates are stacked into single matrices in the order
input / forget / output / candidate, so one matmul computes all
pre-activations. Blocks: ``Wx`` (4H, F), ``Wh`` (4H, H), ``b`` (4H,), and
the scalar output projection ``w_out`` (H,).
"""

from __future__ import annotations

import numpy as np

from .common import glorot_uniform, sigmoid


def init_lstm_params(
    input_dim: int,
    hidden_dim: int,
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    h = hidden_dim
    params = {
        "Wx": glorot_uniform(rng, (4 * h, input_dim)),
        "Wh": glorot_uniform(rng, (4 * h, h)),
        "b": np.zeros(4 * h),
        "w_out": glorot_uniform(rng, (h,)),
    }
    params["b"][h : 2 * h] = 1.0  # forget gate open at init
    return params


def hidden_dim(params: dict[str, np.ndarray]) -> int:
    return params["Wh"].shape[1]


def lstm_step_batch(
    params: dict[str, np.ndarray],
    hidden: np.ndarray,
    cell: np.ndarray,
    x: np.ndarray,
):
    """One recurrence step over a (B, F) batch of inputs.

    ``hidden`` and ``cell`` may be (B, H) or a single (H,) state broadcast to
    every row. Returns (hidden', cell', cache).
    """
    h_dim = hidden_dim(params)
    x = np.atleast_2d(x)
    hidden = np.broadcast_to(np.atleast_2d(hidden), (x.shape[0], h_dim))
    cell = np.broadcast_to(np.atleast_2d(cell), (x.shape[0], h_dim))
    z = x @ params["Wx"].T + hidden @ params["Wh"].T + params["b"]
    i = sigmoid(z[:, :h_dim])
    f = sigmoid(z[:, h_dim : 2 * h_dim])
    o = sigmoid(z[:, 2 * h_dim : 3 * h_dim])
    g = np.tanh(z[:, 3 * h_dim :])
    cell_new = f * cell + i * g
    tanh_cell = np.tanh(cell_new)
    hidden_new = o * tanh_cell
    cache = (x, hidden, cell, i, f, o, g, tanh_cell)
    return hidden_new, cell_new, cache


def lstm_step(
    params: dict[str, np.ndarray],
    hidden: np.ndarray,
    cell_memory: np.ndarray,
    x: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-vector recurrence step; pure, returns (hidden', cell_memory')."""
    h_new, c_new, _ = lstm_step_batch(params, hidden, cell_memory, np.asarray(x)[None, :])
    return h_new[0], c_new[0]


def lstm_step_backward(
    params: dict[str, np.ndarray],
    cache,
    dhidden: np.ndarray,
    dcell: np.ndarray,
    grads: dict[str, np.ndarray],
):
    """Backward through one batched step.

    Accumulates into ``grads`` and returns (dhidden_prev, dcell_prev). The
    gradient with respect to the step input x is not needed by any caller
    (features are data, not parameters) and is not computed.
    """
    x, hidden_prev, cell_prev, i, f, o, g, tanh_cell = cache
    do = dhidden * tanh_cell
    dcell_total = dcell + dhidden * o * (1.0 - tanh_cell**2)
    di = dcell_total * g
    df = dcell_total * cell_prev
    dg = dcell_total * i
    dcell_prev = dcell_total * f
    dz = np.hstack(
        [
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g**2),
        ]
    )
    grads["Wx"] += dz.T @ x
    grads["Wh"] += dz.T @ hidden_prev
    grads["b"] += dz.sum(axis=0)
    dhidden_prev = dz @ params["Wh"]
    return dhidden_prev, dcell_prev
