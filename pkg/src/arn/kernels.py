"""Neural kernels built on the tape: LSTM, BiLSTM, MLP, softmax, 1-D convolution, bilinear form.

LSTM cell (fixed convention used everywhere in this package)::

    z_t = W @ [x_t; h_{t-1}] + b          W: (4H, D+H), rows ordered i, f, o, g
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
    g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

with h_0 = c_0 = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Node, ShapeError, Tape, _sigmoid, add, concat, matmul, tanh

GATES = ("input", "forget", "output", "candidate")


@dataclass
class LstmParams:
    """One LSTM direction: stacked gate weights ``W`` (4H, D+H) and bias ``b`` (4H,)."""

    W: Node
    b: Node

    @classmethod
    def from_tape(cls, tape: Tape, prefix: str) -> "LstmParams":
        return cls(tape.param(prefix + ".W"), tape.param(prefix + ".b"))

    @property
    def hidden_size(self) -> int:
        return self.W.value.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.W.value.shape[1] - self.hidden_size

    def gate(self, name: str) -> np.ndarray:
        """Weight block of one gate, shape (H, D+H)."""
        H = self.hidden_size
        k = GATES.index(name)
        return self.W.value[k * H:(k + 1) * H]


def lstm_init(rng: np.random.Generator, input_size: int, hidden_size: int, scale: float):
    W = rng.uniform(-scale, scale, size=(4 * hidden_size, input_size + hidden_size))
    b = np.zeros(4 * hidden_size)
    # forget-gate bias 1.0 keeps early gradients flowing through the cell
    b[hidden_size:2 * hidden_size] = 1.0
    return W, b


def lstm_scan(x: Node, W: Node, b: Node, mask: Optional[np.ndarray] = None) -> Node:
    """Run one LSTM direction over ``x`` of shape (T, B, D); returns (T, B, H).

    With ``mask`` (T, B), steps where the mask is 0 carry the previous state
    through unchanged, so the last output row holds each sequence's final
    state for right-padded batches.
    """
    X, Wv, bv = x.value, W.value, b.value
    if X.ndim != 3:
        raise ShapeError(f"lstm_scan expects (T, B, D) input, got {X.shape}")
    T, B, D = X.shape
    H = Wv.shape[0] // 4
    if Wv.shape != (4 * H, D + H) or bv.shape != (4 * H,):
        raise ShapeError(f"LSTM weights {Wv.shape} do not match input size {D}")
    if T == 0:
        raise ShapeError("empty sequence")
    M = None if mask is None else np.asarray(mask, dtype=np.float64)[:, :, None]

    dt = np.result_type(X, Wv)
    hs = np.zeros((T + 1, B, H), dtype=dt)
    cs = np.zeros((T + 1, B, H), dtype=dt)
    cache = []
    for t in range(T):
        inp = np.concatenate([X[t], hs[t]], axis=1)
        z = inp @ Wv.T + bv
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        o = _sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c = f * cs[t] + i * g
        tc = np.tanh(c)
        h = o * tc
        if M is not None:
            m = M[t]
            c = m * c + (1.0 - m) * cs[t]
            h = m * h + (1.0 - m) * hs[t]
        hs[t + 1] = h
        cs[t + 1] = c
        cache.append((inp, i, f, o, g, tc))

    def fn(gH):
        dX = np.zeros_like(X)
        dW = np.zeros_like(Wv)
        db = np.zeros_like(bv)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            inp, i, f, o, g, tc = cache[t]
            dh = gH[t] + dh_next
            dc = dc_next
            if M is not None:
                m = M[t]
                dh_new, dc_new = m * dh, m * dc
                carry_h, carry_c = (1.0 - m) * dh, (1.0 - m) * dc
            else:
                dh_new, dc_new = dh, dc
                carry_h = carry_c = 0.0
            dc_new = dc_new + dh_new * o * (1.0 - tc * tc)
            dz = np.concatenate([
                dc_new * g * i * (1.0 - i),
                dc_new * cs[t] * f * (1.0 - f),
                dh_new * tc * o * (1.0 - o),
                dc_new * i * (1.0 - g * g),
            ], axis=1)
            dW += dz.T @ inp
            db += dz.sum(axis=0)
            dinp = dz @ Wv
            dX[t] = dinp[:, :D]
            dh_next = dinp[:, D:] + carry_h
            dc_next = dc_new * f + carry_c
        return dX, dW, db

    return x.tape.record("lstm", (x, W, b), hs[1:], fn)


def forward_lstm(seq: Node, params: LstmParams, reverse: bool = False) -> Node:
    """Hidden states (T, H) of one LSTM direction over ``seq`` (T, D).

    With ``reverse`` the cell runs right-to-left; the output stays aligned
    with the input positions.
    """
    if seq.value.ndim != 2 or seq.value.shape[0] == 0:
        raise ShapeError(f"expected a nonempty (T, D) sequence, got {seq.value.shape}")
    if seq.value.shape[1] != params.input_size:
        raise ShapeError(f"input size {seq.value.shape[1]} != LSTM input size {params.input_size}")
    T = seq.value.shape[0]
    order = np.arange(T)[::-1].copy() if reverse else None
    x = seq[order] if reverse else seq
    x3 = _reshape(x, (T, 1, params.input_size))
    h = _reshape(lstm_scan(x3, params.W, params.b), (T, params.hidden_size))
    return h[order] if reverse else h


def bilstm(seq: Node, fwd: LstmParams, bwd: LstmParams) -> Node:
    """Per-position concatenation [forward; backward], shape (T, 2H)."""
    return concat([forward_lstm(seq, fwd), forward_lstm(seq, bwd, reverse=True)], axis=1)


def _reshape(a: Node, shape) -> Node:
    old = a.value.shape
    return a.tape.record("reshape", (a,), a.value.reshape(shape), lambda g: (g.reshape(old),))


def mlp(x: Node, layers: Sequence[tuple[Node, Node, str]]) -> Node:
    """Apply affine layers ``x @ W.T + b`` row-wise.

    ``activation`` is "tanh" or "linear"; the last layer is always linear so
    the output is raw scores.
    """
    h = x
    for k, (W, b, activation) in enumerate(layers):
        if h.value.shape[-1] != W.value.shape[1]:
            raise ShapeError(f"layer {k}: input {h.value.shape} incompatible with W {W.value.shape}")
        h = add(matmul(h, _transpose(W)), b)
        if k < len(layers) - 1 and activation == "tanh":
            h = tanh(h)
    return h


def _transpose(a: Node) -> Node:
    return a.tape.record("transpose", (a,), a.value.T, lambda g: (g.T,))


def softmax(scores: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def windows(h: Node, k: int) -> Node:
    """Rows ``[h_{i-k}; ...; h_{i+k}]`` with zero vectors past either edge; shape (n, (2k+1)D)."""
    v = h.value
    n, D = v.shape
    padded = np.zeros((n + 2 * k, D), dtype=v.dtype)
    padded[k:k + n] = v
    out = np.concatenate([padded[d:d + n] for d in range(2 * k + 1)], axis=1)

    def fn(g):
        gp = np.zeros((n + 2 * k, D))
        for d in range(2 * k + 1):
            gp[d:d + n] += g[:, d * D:(d + 1) * D]
        return (gp[k:k + n],)

    return h.tape.record("windows", (h,), out, fn)


def conv1d(seq: Node, kernel: Node, bias: Node, k: int) -> Node:
    """``r_i = tanh(W [h_{i-k}; ...; h_{i+k}] + b)`` for every position, zero-padded."""
    if seq.value.shape[0] < 1:
        raise ShapeError("conv1d needs at least one position")
    D = seq.value.shape[1]
    if kernel.value.shape[1] != (2 * k + 1) * D:
        raise ShapeError(f"kernel {kernel.value.shape} does not match window {(2 * k + 1)} x {D}")
    return tanh(add(matmul(windows(seq, k), _transpose(kernel)), bias))


def bilinear(a: Node, M: Node, b: Node) -> Node:
    """``a^T M b``; with ``a`` of shape (n, P) returns the n row values."""
    return matmul(a, matmul(M, b))
