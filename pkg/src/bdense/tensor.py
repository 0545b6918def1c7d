"""Dense float32 tensors with a reverse-mode gradient tape.

The engine is deliberately small: only the operations needed to train MLP
denoising networks are provided (matrix products, a handful of elementwise
ops, column slicing/concatenation for branched output heads, and the two
training losses). Graphs are recorded define-by-run on a thread-local tape;
``backward`` walks the recorded nodes in reverse order and accumulates
gradients into every ``requires_grad`` ancestor.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, DimensionError

__all__ = [
    "Tensor",
    "Tape",
    "no_grad",
    "active_tape",
    "clear_tape",
    "backward",
    "as_tensor",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "silu",
    "relu",
    "add_bias",
    "slice_cols",
    "concat_cols",
    "reduce_loss",
]


def _as_f32(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim == 0:
        return arr  # 0-d scalars are trivially contiguous
    return np.ascontiguousarray(arr)


class Tensor:
    """A contiguous float32 array, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_node")

    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None):
        self.data = _as_f32(values)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._node: Optional[Node] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        """Return the underlying array (no copy)."""
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() requires a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def sum(self) -> "Tensor":
        out = Tensor(self.data.sum(dtype=np.float32))
        return _record(out, (self,), lambda g: (np.full_like(self.data, 1.0) * g,))

    def backward(self) -> None:
        backward(self)

    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"


def as_tensor(value) -> Tensor:
    """Wrap arrays/scalars as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Node:
    """One recorded operation: output, inputs, and the backward rule."""

    __slots__ = ("out", "inputs", "backward_fn")

    def __init__(self, out: Tensor, inputs: tuple, backward_fn: Callable):
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of operations; inputs always precede their consumers."""

    def __init__(self):
        self.nodes: list[Node] = []
        # When set to a list, backward() appends the tape index of every node
        # it visits, in visit order. Used by tests to audit traversal order.
        self.trace: Optional[list[int]] = None

    def clear(self) -> None:
        for node in self.nodes:
            node.out._node = None
        self.nodes.clear()


_local = threading.local()


def active_tape() -> Tape:
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


def clear_tape() -> None:
    active_tape().clear()


def _recording() -> bool:
    return getattr(_local, "grad_enabled", True)


class no_grad:
    """Context manager that disables tape recording on this thread."""

    def __enter__(self):
        self._prev = getattr(_local, "grad_enabled", True)
        _local.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _local.grad_enabled = self._prev
        return False


def _record(out: Tensor, inputs: tuple, backward_fn: Callable) -> Tensor:
    if _recording() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        node = Node(out, inputs, backward_fn)
        out._node = node
        active_tape().nodes.append(node)
    return out


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every requires_grad ancestor of a scalar loss.

    Repeated calls accumulate; callers zero gradients between updates.
    """
    if not isinstance(loss, Tensor):
        raise ContractError("backward() expects a Tensor")
    if loss.data.size != 1:
        raise ContractError(f"backward() requires a scalar loss, got shape {loss.shape}")
    root = loss._node
    if root is None:
        return  # constant with no recorded parents: nothing to propagate

    tape = active_tape()
    ancestors: set[int] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in ancestors:
            continue
        ancestors.add(id(node))
        for t in node.inputs:
            if t._node is not None:
                stack.append(t._node)

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    holders: dict[int, Tensor] = {id(loss): loss}
    for idx in range(len(tape.nodes) - 1, -1, -1):
        node = tape.nodes[idx]
        if id(node) not in ancestors:
            continue
        g = pending.get(id(node.out))
        if g is None:
            continue
        if tape.trace is not None:
            tape.trace.append(idx)
        grads = node.backward_fn(g)
        for t, gi in zip(node.inputs, grads):
            if gi is None or not (t.requires_grad or t._node is not None):
                continue
            key = id(t)
            if key in pending:
                pending[key] = pending[key] + gi
            else:
                pending[key] = gi
                holders[key] = t

    for key, t in holders.items():
        if not t.requires_grad:
            continue
        g = pending[key].astype(np.float32, copy=False)
        if t.grad is not None:
            t.grad = t.grad + g
        else:
            # Leaf gradients get a private buffer; intermediate outputs may
            # share the pending array (it is not referenced elsewhere).
            t.grad = g.copy() if t._node is None else g


def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    return g.sum(dtype=np.float32).reshape(shape)


def _check_elementwise(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape or a.size == 1 or b.size == 1:
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable "
                         "(only equal shapes or scalar-with-tensor are supported)")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(f"matmul requires 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dimensions disagree for {a.shape} and {b.shape}")
    out = Tensor(a.data @ b.data)

    def bw(g):
        return g @ b.data.T, a.data.T @ g

    return _record(out, (a, b), bw)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "add")
    out = Tensor(a.data + b.data)

    def bw(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _record(out, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "sub")
    out = Tensor(a.data - b.data)

    def bw(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return _record(out, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_elementwise(a, b, "mul")
    out = Tensor(a.data * b.data)

    def bw(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _record(out, (a, b), bw)


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a python scalar."""
    s = float(s)
    out = Tensor(a.data * s)
    return _record(out, (a,), lambda g: (g * s,))


def affine_pair(a: Tensor, b: Tensor, ca: float, cb: float) -> Tensor:
    """ca*a + cb*b with float64 accumulation, rounded to float32 once.

    Used for parameterization conversions, where chained float32 rounding
    with large coefficients would otherwise dominate the error budget.
    """
    if a.shape != b.shape:
        raise DimensionError(f"affine_pair: shapes {a.shape} and {b.shape} differ")
    ca, cb = float(ca), float(cb)
    out64 = ca * a.data.astype(np.float64) + cb * b.data.astype(np.float64)
    out = Tensor(out64.astype(np.float32))

    def bw(g):
        return g * ca, g * cb

    return _record(out, (a, b), bw)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp of -|z| never overflows; both branches share it.
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def silu(a: Tensor) -> Tensor:
    s = _sigmoid(a.data)
    out = Tensor(a.data * s)

    def bw(g):
        return (g * (s * (1.0 + a.data * (1.0 - s))),)

    return _record(out, (a,), bw)


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0))

    def bw(g):
        return (g * (a.data > 0.0).astype(np.float32),)

    return _record(out, (a,), bw)


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Row-broadcast bias add for affine layers: (m, n) + (n,)."""
    if x.data.ndim != 2 or b.data.ndim != 1 or x.shape[1] != b.shape[0]:
        raise DimensionError(f"add_bias: incompatible shapes {x.shape} and {b.shape}")
    out = Tensor(x.data + b.data)

    def bw(g):
        return g, g.sum(axis=0, dtype=np.float32)

    return _record(out, (x, b), bw)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"slice_cols requires a 2-D tensor, got {x.shape}")
    if not (0 <= start < stop <= x.shape[1]):
        raise ContractError(f"slice_cols: [{start}, {stop}) out of range for width {x.shape[1]}")
    out = Tensor(x.data[:, start:stop].copy())

    def bw(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        return (full,)

    return _record(out, (x,), bw)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = tuple(parts)
    if not parts:
        raise ContractError("concat_cols needs at least one tensor")
    rows = parts[0].shape[0]
    for p in parts:
        if p.data.ndim != 2 or p.shape[0] != rows:
            raise DimensionError(f"concat_cols: incompatible part shape {p.shape}")
    widths = [p.shape[1] for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=1))

    def bw(g):
        grads = []
        col = 0
        for w in widths:
            grads.append(g[:, col:col + w])
            col += w
        return tuple(grads)

    return _record(out, parts, bw)


def reduce_loss(kind: str, pred: Tensor, target: Tensor, weight: float) -> Tensor:
    """Weighted mean distance: weight * mean(|pred - target|^p), p in {1, 2}."""
    if kind not in ("mse", "l1"):
        raise ContractError(f"unknown loss kind {kind!r} (expected 'mse' or 'l1')")
    if pred.shape != target.shape:
        raise DimensionError(f"reduce_loss: shapes {pred.shape} and {target.shape} differ")
    weight = float(weight)
    if weight < 0:
        raise ContractError(f"reduce_loss: weight must be non-negative, got {weight}")
    diff = pred.data - target.data
    n = diff.size
    if kind == "mse":
        out = Tensor(weight * np.mean(diff * diff, dtype=np.float32))

        def bw(g):
            gp = g * ((2.0 * weight / n) * diff)
            return gp, -gp
    else:
        out = Tensor(weight * np.mean(np.abs(diff), dtype=np.float32))

        def bw(g):
            gp = g * ((weight / n) * np.sign(diff))
            return gp, -gp

    return _record(out, (pred, target), bw)
