"""Minimal reverse-mode automatic differentiation over numpy arrays.

A :class:`Tape` is an append-only list of records. Each record holds the
forward value of one operation, the indices of its parents and a closure
that maps the gradient of the output to gradients of the parents. Parents
always precede children, so a single reversed sweep is a valid
topological order for the backward pass.
"""
from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

import numpy as np

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class ShapeError(ValueError):
    pass


class Node:
    """Handle to one value recorded on a tape."""

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape: "Tape", index: int, value: np.ndarray):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Node(#{self.index}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


class Tape:
    """Append-only computation record for one sentence.

    ``params`` maps stable names to arrays. :meth:`param` turns a name into
    a leaf node (once per tape); :func:`backward` returns gradients keyed by
    the same names.
    """

    def __init__(self, params: Optional[Mapping[str, np.ndarray]] = None, dtype=np.float64):
        self.params = params if params is not None else {}
        self.dtype = dtype
        self.values: list[np.ndarray] = []
        self.parents: list[tuple[int, ...]] = []
        self.ops: list[str] = []
        self.backward_fns: list[Optional[BackwardFn]] = []
        self._param_nodes: dict[str, Node] = {}

    def __len__(self):
        return len(self.values)

    def record(self, op: str, parents: Sequence[Node], value, backward_fn: Optional[BackwardFn]) -> Node:
        value = np.asarray(value, dtype=self.dtype)
        idx = len(self.values)
        self.values.append(value)
        self.parents.append(tuple(p.index for p in parents))
        self.ops.append(op)
        self.backward_fns.append(backward_fn)
        return Node(self, idx, value)

    def constant(self, value) -> Node:
        return self.record("const", (), np.array(value, dtype=self.dtype), None)

    def param(self, name: str) -> Node:
        node = self._param_nodes.get(name)
        if node is None:
            if name not in self.params:
                raise KeyError(f"unknown parameter {name!r}")
            node = self.record("param", (), self.params[name], None)
            self._param_nodes[name] = node
        return node

    def param_names(self) -> dict[str, int]:
        return {name: node.index for name, node in self._param_nodes.items()}


def backward(tape: Tape, loss: Node) -> dict[str, np.ndarray]:
    """Gradient of scalar ``loss`` with respect to every parameter of the tape.

    Parameters the loss does not depend on receive exact zeros.
    """
    if loss.tape is not tape:
        raise ValueError("loss node belongs to a different tape")
    if loss.value.size != 1:
        raise ShapeError(f"loss must be scalar, got shape {loss.value.shape}")
    grads: list[Optional[np.ndarray]] = [None] * len(tape.values)
    grads[loss.index] = np.ones_like(loss.value)
    for idx in range(loss.index, -1, -1):
        g = grads[idx]
        fn = tape.backward_fns[idx]
        if g is None or fn is None:
            continue
        for pidx, pg in zip(tape.parents[idx], fn(g)):
            if pg is None:
                continue
            if grads[pidx] is None:
                grads[pidx] = np.array(pg, dtype=np.float64)
            else:
                grads[pidx] = grads[pidx] + pg
    out = {}
    used = tape.param_names()
    for name, value in tape.params.items():
        idx = used.get(name)
        g = grads[idx] if idx is not None else None
        out[name] = np.zeros_like(value, dtype=np.float64) if g is None else g.reshape(value.shape)
    return out


def grad_check(
    loss_fn: Callable[[Tape], Node],
    params: dict[str, np.ndarray],
    epsilon: float = 1e-5,
    names: Optional[Sequence[str]] = None,
    fd_dtype=np.longdouble,
) -> float:
    """Worst elementwise relative error between analytic and central-difference gradients.

    ``loss_fn`` builds the loss on whatever tape it is given. The analytic
    gradient is taken in float64 on ``params``; the finite differences
    ``(f(p + eps) - f(p - eps)) / 2 eps`` are evaluated on a copy of the
    parameters in ``fd_dtype`` (extended precision where the platform has
    it) so that cancellation noise stays far below the gradients under test.
    The relative error uses the denominator ``max(|analytic|, |numeric|, 1e-8)``.
    """
    tape = Tape(params)
    analytic = backward(tape, loss_fn(tape))
    probe = {k: np.array(v, dtype=fd_dtype) for k, v in params.items()}
    worst = 0.0
    for name in names if names is not None else list(params):
        flat = probe[name].reshape(-1)
        grad = analytic[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            f_plus = loss_fn(Tape(probe, fd_dtype)).value
            flat[k] = orig - epsilon
            f_minus = loss_fn(Tape(probe, fd_dtype)).value
            flat[k] = orig
            numeric = float((f_plus - f_minus) / (2 * epsilon))
            err = abs(grad[k] - numeric) / max(abs(grad[k]), abs(numeric), 1e-8)
            worst = max(worst, float(err))
    return worst


# -- elementary operations -------------------------------------------------


def _as_node(tape: Tape, x) -> Node:
    return x if isinstance(x, Node) else tape.constant(x)


def _tape_of(*xs) -> Tape:
    for x in xs:
        if isinstance(x, Node):
            return x.tape
    raise TypeError("at least one argument must be a Node")


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _as_node(tape, a), _as_node(tape, b)
    sa, sb = a.value.shape, b.value.shape
    return tape.record(
        "add", (a, b), a.value + b.value,
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
    )


def sub(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _as_node(tape, a), _as_node(tape, b)
    sa, sb = a.value.shape, b.value.shape
    return tape.record(
        "sub", (a, b), a.value - b.value,
        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
    )


def mul(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _as_node(tape, a), _as_node(tape, b)
    av, bv = a.value, b.value
    return tape.record(
        "mul", (a, b), av * bv,
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def neg(a: Node) -> Node:
    return a.tape.record("neg", (a,), -a.value, lambda g: (-g,))


def matmul(a, b) -> Node:
    """``a @ b`` for 1-D and 2-D operands."""
    tape = _tape_of(a, b)
    a, b = _as_node(tape, a), _as_node(tape, b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1-D/2-D operands, got {av.shape} @ {bv.shape}")
    if av.shape[-1] != bv.shape[0]:
        raise ShapeError(f"matmul shape mismatch {av.shape} @ {bv.shape}")

    def fn(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2:
            return np.outer(g, bv), av.T @ g
        if bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        return g * bv, g * av

    return tape.record("matmul", (a, b), av @ bv, fn)


def tanh(a: Node) -> Node:
    y = np.tanh(a.value)
    return a.tape.record("tanh", (a,), y, lambda g: (g * (1.0 - y * y),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a: Node) -> Node:
    y = _sigmoid(a.value)
    return a.tape.record("sigmoid", (a,), y, lambda g: (g * y * (1.0 - y),))


def exp(a: Node) -> Node:
    y = np.exp(a.value)
    return a.tape.record("exp", (a,), y, lambda g: (g * y,))


def log(a: Node) -> Node:
    x = a.value
    return a.tape.record("log", (a,), np.log(x), lambda g: (g / x,))


def relu(a: Node) -> Node:
    mask = (a.value > 0).astype(np.float64)
    return a.tape.record("relu", (a,), a.value * mask, lambda g: (g * mask,))


def total(a: Node) -> Node:
    shape = a.value.shape
    return a.tape.record("sum", (a,), a.value.sum(), lambda g: (np.broadcast_to(g, shape).copy(),))


def reduce_max(a: Node) -> Node:
    """Maximum of all entries; the gradient flows to the first maximiser."""
    flat = a.value.reshape(-1)
    if flat.size == 0:
        raise ShapeError("max of an empty array")
    k = int(np.argmax(flat))
    shape = a.value.shape

    def fn(g):
        out = np.zeros(flat.size)
        out[k] = g
        return (out.reshape(shape),)

    return a.tape.record("max", (a,), flat[k], fn)


def getitem(a: Node, idx) -> Node:
    shape = a.value.shape
    fancy = isinstance(idx, np.ndarray) or (
        isinstance(idx, tuple) and any(isinstance(i, np.ndarray) for i in idx)
    )

    def fn(g):
        out = np.zeros(shape)
        if fancy:
            np.add.at(out, idx, g)
        else:
            out[idx] = g
        return (out,)

    return a.tape.record("getitem", (a,), a.value[idx], fn)


def take_rows(table: Node, ids) -> Node:
    """Embedding lookup: rows of ``table`` at integer ``ids``."""
    ids = np.asarray(ids, dtype=np.intp)
    return getitem(table, ids)


def concat(xs: Sequence[Node], axis: int = -1) -> Node:
    tape = xs[0].tape
    values = [x.value for x in xs]
    out = np.concatenate(values, axis=axis)
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]
    return tape.record("concat", xs, out, lambda g: np.split(g, splits, axis=axis))


def stack(xs: Sequence[Node]) -> Node:
    tape = xs[0].tape
    out = np.stack([x.value for x in xs])
    return tape.record("stack", xs, out, lambda g: list(g))


def log_softmax(a: Node) -> Node:
    """Row-wise log-softmax over the last axis, max-subtracted."""
    x = a.value
    shifted = x - x.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    p = np.exp(y)
    return a.tape.record(
        "log_softmax", (a,), y,
        lambda g: (g - p * g.sum(axis=-1, keepdims=True),),
    )


def logsumexp(a: Node) -> Node:
    x = a.value
    m = x.max()
    s = np.exp(x - m)
    y = m + np.log(s.sum())
    p = s / s.sum()
    return a.tape.record("logsumexp", (a,), y, lambda g: (g * p,))
