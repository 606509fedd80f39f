"""Dense float64 tensors with reverse-mode automatic differentiation.

Deliberately minimal: exactly the primitives the tracker's forward pass
needs (matmul, elementwise arithmetic, concat/stack/slice, sigmoid, tanh,
softmax, embedding lookup, 1-d convolution, max-over-time pooling,
dropout with an externally supplied mask, and an LSTM cell built from
those pieces). Everything is float64; gradients accumulate additively
when a node feeds several consumers.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ShapeError",
    "Tensor",
    "concat",
    "stack",
    "slice_cols",
    "softmax",
    "gather",
    "conv1d",
    "max_over_time",
    "dropout",
    "lstm_cell",
    "reset_grads",
    "grad_check",
]


class ShapeError(ValueError):
    """Raised when an operation receives tensors of incompatible shapes."""


def _wrap(x) -> "Tensor":
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A node in the computation graph: a float64 array plus backward plumbing.

    `grad` stays None until a backward pass (or an accumulation) touches it,
    so untouched parameters read as zero gradient. The graph is implicit in
    `_parents`; each op installs a `_backward` rule mapping the output
    gradient to per-parent gradients.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward = None
        self._op = "leaf"

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph walking ----------------------------------------------------

    def _toposort(self) -> list:
        """Iterative post-order over the (acyclic) parent graph."""
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> None:
        """Backpropagate from a scalar: fills `grad` on every reachable node
        that requires gradients."""
        if self.shape != ():
            raise ShapeError(f"backward: loss must be scalar-shaped, got {self.shape}")
        self.grad = np.ones((), dtype=np.float64)
        for node in reversed(self._toposort()):
            if node._backward is None or node.grad is None:
                continue
            parent_grads = node._backward(node.grad)
            for parent, g in zip(node._parents, parent_grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(other, mul(self, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def sigmoid(self):
        return sigmoid(self)

    def tanh(self):
        return tanh(self)

    def log(self):
        return log(self)

    def sum(self):
        return total(self)


def _make(data: np.ndarray, parents: tuple, rule, op: str) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = parents
        out._backward = rule
    out._op = op
    return out


# -- primitives -----------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}") from None

    def rule(g):
        return (
            _unbroadcast(g, a.shape) if a.requires_grad else None,
            _unbroadcast(g, b.shape) if b.requires_grad else None,
        )

    return _make(data, (a, b), rule, "add")


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: cannot broadcast {a.shape} with {b.shape}") from None

    def rule(g):
        return (
            _unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
            _unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
        )

    return _make(data, (a, b), rule, "mul")


def matmul(a, b) -> Tensor:
    """Matrix/vector product, dispatching on dimensionality like numpy `@`:
    2d@2d, 2d@1d, 1d@2d and 1d@1d (inner product) are supported."""
    a, b = _wrap(a), _wrap(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul: only 1-d/2-d operands, got {a.shape} @ {b.shape}")
    try:
        data = a.data @ b.data
    except ValueError:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}") from None

    def rule(g):
        if a.ndim == 2 and b.ndim == 2:
            ga = g @ b.data.T
            gb = a.data.T @ g
        elif a.ndim == 2 and b.ndim == 1:
            ga = np.outer(g, b.data)
            gb = a.data.T @ g
        elif a.ndim == 1 and b.ndim == 2:
            ga = b.data @ g
            gb = np.outer(a.data, g)
        else:  # 1d @ 1d -> scalar
            ga = g * b.data
            gb = g * a.data
        return (ga if a.requires_grad else None, gb if b.requires_grad else None)

    return _make(data, (a, b), rule, "matmul")


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got {a.shape}")

    def rule(g):
        return (g.T,)

    return _make(a.data.T, (a,), rule, "transpose")


def concat(tensors, axis: int = -1) -> Tensor:
    """Concatenate 1-d or 2-d tensors along `axis` (0 or the last axis)."""
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: empty input list")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(
            f"concat: incompatible shapes {[t.shape for t in tensors]} along axis {axis}"
        ) from None
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def rule(g):
        pieces = []
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if not t.requires_grad:
                pieces.append(None)
            elif axis in (0,) and g.ndim >= 1:
                pieces.append(g[lo:hi])
            else:
                pieces.append(g[..., lo:hi])
        return tuple(pieces)

    return _make(data, tuple(tensors), rule, "concat")


def stack(tensors) -> Tensor:
    """Stack k same-shape tensors along a new leading axis (scalars -> vector,
    vectors -> matrix)."""
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeError("stack: empty input list")
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack: mixed shapes {sorted(shapes)}")
    data = np.stack([t.data for t in tensors])

    def rule(g):
        return tuple(g[i] if t.requires_grad else None for i, t in enumerate(tensors))

    return _make(data, tuple(tensors), rule, "stack")


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    """Take columns [start, stop) of a matrix (or entries of a vector)."""
    if a.ndim not in (1, 2):
        raise ShapeError(f"slice_cols: expected 1-d/2-d input, got {a.shape}")
    if not (0 <= start < stop <= a.shape[-1]):
        raise ShapeError(f"slice_cols: range [{start}, {stop}) out of bounds for {a.shape}")
    data = a.data[..., start:stop]

    def rule(g):
        full = np.zeros_like(a.data)
        full[..., start:stop] = g
        return (full,)

    return _make(data, (a,), rule, "slice_cols")


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    data = np.empty_like(a.data)
    pos = a.data >= 0
    data[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ez = np.exp(a.data[~pos])
    data[~pos] = ez / (1.0 + ez)

    def rule(g):
        return (g * data * (1.0 - data),)

    return _make(data, (a,), rule, "sigmoid")


def tanh(a) -> Tensor:
    a = _wrap(a)
    data = np.tanh(a.data)

    def rule(g):
        return (g * (1.0 - data * data),)

    return _make(data, (a,), rule, "tanh")


def log(a) -> Tensor:
    a = _wrap(a)
    data = np.log(a.data)

    def rule(g):
        return (g / a.data,)

    return _make(data, (a,), rule, "log")


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values into [lo, hi]; gradient passes through unclipped entries."""
    data = np.clip(a.data, lo, hi)
    passthrough = (a.data >= lo) & (a.data <= hi)

    def rule(g):
        return (g * passthrough,)

    return _make(data, (a,), rule, "clip")


def total(a: Tensor) -> Tensor:
    """Sum all entries down to a scalar."""
    data = np.asarray(a.data.sum())

    def rule(g):
        return (np.full_like(a.data, float(g)),)

    return _make(data, (a,), rule, "sum")


def softmax(a: Tensor) -> Tensor:
    """Softmax over a vector (or over each row of a matrix)."""
    a = _wrap(a)
    if a.size == 0:
        raise ShapeError("softmax: empty input")
    if a.ndim not in (1, 2):
        raise ShapeError(f"softmax: expected 1-d/2-d input, got {a.shape}")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)

    def rule(g):
        inner = (g * data).sum(axis=-1, keepdims=True)
        return (data * (g - inner),)

    return _make(data, (a,), rule, "softmax")


def gather(table: Tensor, indices) -> Tensor:
    """Row lookup: indices into a [V, d] table produce a [len(indices), d]
    matrix. Backward scatter-adds into the table rows."""
    if table.ndim != 2:
        raise ShapeError(f"gather: table must be 2-d, got {table.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError(f"gather: indices must be a non-empty 1-d sequence, got {idx.shape}")
    if idx.min() < 0 or idx.max() >= table.shape[0]:
        raise ShapeError(
            f"gather: index out of range for table with {table.shape[0]} rows"
        )
    data = table.data[idx]

    def rule(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    return _make(data, (table,), rule, "gather")


def conv1d(x: Tensor, weights: Tensor, bias: Tensor, window: int) -> Tensor:
    """Valid 1-d convolution over a [T, C] sequence with filters laid out as
    a [window*C, F] matrix; output is [T-window+1, F]."""
    if x.ndim != 2:
        raise ShapeError(f"conv1d: input must be [T, C], got {x.shape}")
    t, c = x.shape
    if t < window:
        raise ShapeError(f"conv1d: sequence length {t} shorter than window {window}")
    if weights.shape != (window * c, weights.shape[-1]):
        raise ShapeError(
            f"conv1d: filter shape {weights.shape} does not match window {window} x channels {c}"
        )
    n_out = t - window + 1
    cols = np.empty((n_out, window * c), dtype=np.float64)
    for w in range(window):
        cols[:, w * c : (w + 1) * c] = x.data[w : w + n_out]
    data = cols @ weights.data + bias.data

    def rule(g):
        gx = gw = gb = None
        if x.requires_grad:
            gcols = g @ weights.data.T
            gx = np.zeros_like(x.data)
            for w in range(window):
                gx[w : w + n_out] += gcols[:, w * c : (w + 1) * c]
        if weights.requires_grad:
            gw = cols.T @ g
        if bias.requires_grad:
            gb = g.sum(axis=0)
        return (gx, gw, gb)

    return _make(data, (x, weights, bias), rule, "conv1d")


def max_over_time(x: Tensor) -> Tensor:
    """Per-channel max over the time axis of a [T, C] matrix; gradient flows
    to the (first) argmax position of each channel."""
    if x.ndim != 2 or x.shape[0] == 0:
        raise ShapeError(f"max_over_time: expected a non-empty [T, C] input, got {x.shape}")
    arg = x.data.argmax(axis=0)
    data = x.data[arg, np.arange(x.shape[1])]

    def rule(g):
        full = np.zeros_like(x.data)
        full[arg, np.arange(x.shape[1])] = g
        return (full,)

    return _make(data, (x,), rule, "max_over_time")


def dropout(x: Tensor, mask: np.ndarray, keep: float) -> Tensor:
    """Inverted dropout with an externally supplied {0,1} mask: x * mask / keep.
    The mask is data, not a graph node, so repeated backward passes with the
    same mask are bit-identical."""
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != x.shape:
        raise ShapeError(f"dropout: mask shape {mask.shape} != input shape {x.shape}")
    if not (0.0 < keep <= 1.0):
        raise ValueError(f"dropout: keep probability must be in (0, 1], got {keep}")
    scaled = mask / keep
    data = x.data * scaled

    def rule(g):
        return (g * scaled,)

    return _make(data, (x,), rule, "dropout")


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor, weights: Tensor, bias: Tensor):
    """One step of a 4-gate LSTM over a [batch, d_in] slab. A single combined
    weight matrix [(d_in + hidden), 4*hidden] acts on [x; h_prev]; gate order
    is input, forget, candidate, output. Returns (h, c)."""
    hidden = h_prev.shape[-1]
    if weights.shape != (x.shape[-1] + hidden, 4 * hidden):
        raise ShapeError(
            f"lstm_cell: weights {weights.shape} do not match input {x.shape} "
            f"and hidden size {hidden}"
        )
    z = concat([x, h_prev], axis=-1) @ weights + bias
    i = slice_cols(z, 0, hidden).sigmoid()
    f = slice_cols(z, hidden, 2 * hidden).sigmoid()
    g = slice_cols(z, 2 * hidden, 3 * hidden).tanh()
    o = slice_cols(z, 3 * hidden, 4 * hidden).sigmoid()
    c = f * c_prev + i * g
    h = o * c.tanh()
    return h, c


# -- verification ----------------------------------------------------------


def reset_grads(root: Tensor) -> None:
    """Clear gradients on every node reachable from `root`."""
    for node in root._toposort():
        node.grad = None


def grad_check(f, theta: Tensor, eps: float = 1e-6, max_coords: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Compare the analytic gradient of scalar-valued `f` w.r.t. `theta`
    against central finite differences.

    Returns the worst relative error |analytic - numeric| / max(1, |analytic|,
    |numeric|) over the checked coordinates (all of them unless `max_coords`
    caps a seeded random sample). `f` must be deterministic: any dropout masks
    have to be frozen, which is probed by evaluating twice.
    """
    if not (1e-7 <= eps <= 1e-4):
        raise ValueError(f"grad_check: eps must be in [1e-7, 1e-4], got {eps}")
    probe_a = float(f().data)
    probe_b = float(f().data)
    if probe_a != probe_b:
        raise RuntimeError(
            "grad_check: f is not deterministic (freeze dropout masks / rng first)"
        )

    theta.grad = None
    loss = f()
    loss.backward()
    analytic = theta.grad if theta.grad is not None else np.zeros_like(theta.data)
    flat = theta.data.reshape(-1)
    ana = np.asarray(analytic, dtype=np.float64).reshape(-1)

    coords = np.arange(flat.size)
    if max_coords is not None and flat.size > max_coords:
        rng = rng if rng is not None else np.random.default_rng(0)
        coords = rng.choice(flat.size, size=max_coords, replace=False)

    worst = 0.0
    for i in coords:
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = float(f().data)
        flat[i] = orig - eps
        f_minus = float(f().data)
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        err = abs(ana[i] - numeric) / max(1.0, abs(ana[i]), abs(numeric))
        worst = max(worst, err)
    return worst
