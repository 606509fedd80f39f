"""Sequence encoding: a bidirectional LSTM over per-token feature rows,
followed by learned self-attention pooling.

`encode` returns both the per-position representation matrix (one row per
token, forward and backward states concatenated) and the attention-pooled
summary vector, which lies in the convex hull of the rows.

Dropout on the encoder input is variational by default: one mask per
sequence, shared across every timestep, supplied by the caller so that all
pairs scored against the same turn see the same mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat, dropout, gather, matmul, softmax, transpose

HIDDEN = 125


def input_dropout_mask(m: int, d: int, rate: float, variational: bool,
                       rng: np.random.Generator) -> np.ndarray | None:
    """Sample a {0,1} keep-mask for an [m, d] input. Variational sampling
    draws one d-vector and repeats it across all m timesteps; the ablated
    variant draws every timestep independently."""
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return None
    if variational:
        row = (rng.random(d) >= rate).astype(np.float64)
        return np.tile(row, (m, 1))
    return (rng.random((m, d)) >= rate).astype(np.float64)


@dataclass
class Encoded:
    rows: Tensor    # [m, 2*hidden] per-position states
    pooled: Tensor  # [2*hidden] attention-weighted summary
    attn: Tensor    # [m] attention distribution (sums to 1)


class SeqEncoder:
    """BiLSTM encoder with self-attention pooling. Each direction owns one
    combined gate matrix [(d_in + hidden), 4*hidden]; forget-gate biases
    start at 1 so early training does not erase state."""

    def __init__(self, name: str, d_in: int, hidden: int = HIDDEN, *,
                 rng: np.random.Generator):
        if d_in < 1 or hidden < 1:
            raise ValueError(f"SeqEncoder: bad dims d_in={d_in} hidden={hidden}")
        self.name = name
        self.d_in = d_in
        self.hidden = hidden
        fan = d_in + hidden

        def gate_bias():
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = 1.0
            return b

        bound = 1.0 / np.sqrt(fan)
        self.fwd_W = Tensor(rng.uniform(-bound, bound, (fan, 4 * hidden)),
                            requires_grad=True)
        self.fwd_b = Tensor(gate_bias(), requires_grad=True)
        self.bwd_W = Tensor(rng.uniform(-bound, bound, (fan, 4 * hidden)),
                            requires_grad=True)
        self.bwd_b = Tensor(gate_bias(), requires_grad=True)
        abound = 1.0 / np.sqrt(2 * hidden)
        self.attn_w = Tensor(rng.uniform(-abound, abound, 2 * hidden),
                             requires_grad=True)
        self.attn_b = Tensor(0.0, requires_grad=True)

    @property
    def d_out(self) -> int:
        return 2 * self.hidden

    def _run_direction(self, X: Tensor, order, W: Tensor, b: Tensor) -> list:
        from .autodiff import lstm_cell

        h = Tensor(np.zeros((1, self.hidden)))
        c = Tensor(np.zeros((1, self.hidden)))
        states = [None] * X.shape[0]
        for t in order:
            x_t = gather(X, np.array([t]))
            h, c = lstm_cell(x_t, h, c, W, b)
            states[t] = h
        return states

    def encode(self, X: Tensor, dropout_mask: np.ndarray | None = None,
               keep: float = 1.0) -> Encoded:
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise ValueError(
                f"{self.name}: expected [m, {self.d_in}] input, got {X.shape}")
        m = X.shape[0]
        if m == 0:
            raise ValueError(f"{self.name}: cannot encode an empty sequence")
        if dropout_mask is not None:
            X = dropout(X, dropout_mask, keep)
        fwd = self._run_direction(X, range(m), self.fwd_W, self.fwd_b)
        bwd = self._run_direction(X, range(m - 1, -1, -1), self.bwd_W, self.bwd_b)
        rows = concat([concat([fwd[t], bwd[t]], axis=1) for t in range(m)], axis=0)
        attn = softmax(matmul(rows, self.attn_w) + self.attn_b)
        pooled = matmul(transpose(rows), attn)
        return Encoded(rows=rows, pooled=pooled, attn=attn)

    def parameters(self) -> dict:
        return {
            f"{self.name}.fwd.W": self.fwd_W,
            f"{self.name}.fwd.b": self.fwd_b,
            f"{self.name}.bwd.W": self.bwd_W,
            f"{self.name}.bwd.b": self.bwd_b,
            f"{self.name}.attn.w": self.attn_w,
            f"{self.name}.attn.b": self.attn_b,
        }

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())
