"""
Tensor Engine - dense float64 tensors with define-by-run reverse-mode gradients

Responsibilities:
- Immutable numpy-backed Tensor values
- A GradTape that records every primitive applied to tensors requiring grad
- One reverse sweep over the tape producing exact gradients for the leaves
- A central finite-difference oracle used by the test-suite

Usage:
from core.tensor import Tensor, GradTape, backward, matmul, square, tsum
w = Tensor([1.0, 2.0], requires_grad=True)
with GradTape():
    loss = tsum(square(w))
grads = backward(loss)
print(grads[w])  # [2. 4.]
"""

from __future__ import annotations

import contextvars
from typing import Callable, Mapping, Sequence

import numpy as np

from core.errors import ContractError, DimensionError, LabelIndexError, NonFiniteError, OracleError

_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("active_tape", default=None)


class Tensor:
    """
    Immutable dense float64 array.

    Leaves are tensors created directly; every other tensor is the output of a
    primitive recorded on the active GradTape.
    """

    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar; all routes through the recorded primitives below
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

    def __getitem__(self, index):
        return take(self, index)

    @property
    def T(self):
        return transpose(self)


class _Node:
    __slots__ = ("op", "inputs", "output", "vjp")

    def __init__(self, op: str, inputs: tuple, output: Tensor, vjp: Callable):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.vjp = vjp


class GradTape:
    """
    Ordered record of primitives for a single reverse sweep.

    Creation order is a topological order, so walking the list backwards visits
    every node after all of its consumers.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self._token = None

    def __enter__(self) -> "GradTape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, node: _Node):
        self.nodes.append(node)


def active_tape() -> GradTape | None:
    return _ACTIVE_TAPE.get()


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(op: str, data: np.ndarray, inputs: tuple, vjp: Callable) -> Tensor:
    needs_grad = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs_grad)
    tape = _ACTIVE_TAPE.get()
    if needs_grad and tape is not None:
        tape.record(_Node(op, inputs, out, vjp))
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sums a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def _require_same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} must match exactly")


# ---------- Linear algebra ----------

def matmul(a, b) -> Tensor:
    """C = A·B for 2-D operands; dA = dC·Bᵀ, dB = Aᵀ·dC."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    A, B = a.data, b.data

    def vjp(g):
        return (g @ B.T if a.requires_grad else None,
                A.T @ g if b.requires_grad else None)

    return _emit("matmul", A @ B, (a, b), vjp)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.data.ndim != 2:
        raise DimensionError(f"transpose: expected a 2-D tensor, got {a.shape}")
    return _emit("transpose", a.data.T, (a,), lambda g: (g.T,))


# ---------- Elementwise ----------

def add(a, b) -> Tensor:
    """Broadcasting sum (bias rows, scalar offsets)."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    """Broadcasting product; use `hadamard` when shapes must match exactly."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)
    A, B = a.data, b.data

    def vjp(g):
        return (_unbroadcast(g * B, a.shape) if a.requires_grad else None,
                _unbroadcast(g * A, b.shape) if b.requires_grad else None)

    return _emit("mul", A * B, (a, b), vjp)


def hadamard(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _require_same_shape("hadamard", a, b)
    return mul(a, b)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # tanh form stays finite for large |x|
    y = 0.5 * (np.tanh(0.5 * a.data) + 1.0)
    return _emit("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _emit("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0.0
    return _emit("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def square(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    return _emit("square", x * x, (a,), lambda g: (2.0 * x * g,))


_ELEMENTWISE = {
    "sigmoid": (1, sigmoid),
    "tanh": (1, tanh),
    "square": (1, square),
    "hadamard": (2, hadamard),
    "add": (2, None),
}


def elementwise(op: str, *args) -> Tensor:
    """
    Dispatches the pointwise primitives by name.

    Args:
        op (str): One of sigmoid, tanh, hadamard, add, square.
        *args: Operand tensors; binary ops require identical shapes.

    Returns:
        Tensor: Pointwise result.
    """
    if op not in _ELEMENTWISE:
        raise ContractError(f"Unknown elementwise op '{op}'")
    arity, fn = _ELEMENTWISE[op]
    if len(args) != arity:
        raise ContractError(f"{op} takes {arity} operand(s), got {len(args)}")
    if op == "add":
        a, b = as_tensor(args[0]), as_tensor(args[1])
        _require_same_shape("add", a, b)
        return add(a, b)
    return fn(*args)


# ---------- Reductions and reshaping ----------

def tsum(a) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return _emit("sum", np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a) -> Tensor:
    a = as_tensor(a)
    shape, n = a.shape, max(a.size, 1)
    return _emit("mean", np.asarray(a.data.mean()), (a,),
                 lambda g: (np.broadcast_to(g / n, shape).copy(),))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    if int(np.prod(shape, dtype=np.int64)) != a.size:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    src = a.shape
    return _emit("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(src),))


def take(a, index) -> Tensor:
    """Basic indexing (ints and slices); the gradient scatters into zeros."""
    a = as_tensor(a)
    src = a.shape

    def vjp(g):
        full = np.zeros(src)
        full[index] = g
        return (full,)

    return _emit("take", a.data[index], (a,), vjp)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = [t.shape for t in tensors]
        raise DimensionError(f"concat: incompatible shapes {shapes} along axis {axis}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", data, tensors, vjp)


def tile_rows(a, n: int) -> Tensor:
    """Stacks a 1-D tensor `n` times into an (n, d) matrix."""
    a = as_tensor(a)
    if a.data.ndim != 1:
        raise DimensionError(f"tile_rows: expected a 1-D tensor, got {a.shape}")
    return _emit("tile_rows", np.tile(a.data, (n, 1)), (a,), lambda g: (g.sum(axis=0),))


# ---------- Losses ----------

def log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """
    Mean negative log-likelihood of integer labels under softmax(logits).

    Args:
        logits (Tensor): Shape (B, K).
        labels (array-like of int): Shape (B,), values in [0, K).

    Returns:
        Tensor: Scalar loss.
    """
    logits = as_tensor(logits)
    if logits.data.ndim != 2:
        raise DimensionError(f"softmax_cross_entropy: logits must be (B, K), got {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    batch, k = logits.shape
    if labels.shape[0] != batch:
        raise DimensionError(f"softmax_cross_entropy: {labels.shape[0]} labels for {batch} rows")
    bad = (labels < 0) | (labels >= k)
    if bad.any():
        raise LabelIndexError(f"label {int(labels[bad][0])} outside [0, {k})")

    logp = log_softmax_rows(logits.data)
    rows = np.arange(batch)
    loss = -logp[rows, labels].mean()

    def vjp(g):
        grad = np.exp(logp)
        grad[rows, labels] -= 1.0
        return (grad * (g / batch),)

    return _emit("softmax_cross_entropy", np.asarray(loss), (logits,), vjp)


# ---------- Reverse sweep ----------

class GradientMap(Mapping):
    """Gradients keyed by leaf tensor; leaves off the tape read as zeros."""

    def __init__(self, grads: dict[int, np.ndarray], leaves: dict[int, Tensor]):
        self._grads = grads
        self._leaves = leaves

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        grad = self._grads.get(id(tensor))
        if grad is None:
            return np.zeros(tensor.shape)
        return grad

    def __contains__(self, tensor) -> bool:
        return isinstance(tensor, Tensor) and id(tensor) in self._grads

    def __iter__(self):
        return iter(self._leaves.values())

    def __len__(self):
        return len(self._leaves)


def backward(loss: Tensor, tape: GradTape | None = None) -> GradientMap:
    """
    Runs one reverse sweep from a scalar loss.

    Args:
        loss (Tensor): Single-element, finite.
        tape (GradTape): Tape the loss was recorded on (defaults to the active one).

    Returns:
        GradientMap: d loss / d leaf for every requires_grad leaf reached.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not np.all(np.isfinite(loss.data)):
        raise NonFiniteError(f"backward called on non-finite loss {loss.data}")
    tape = tape or _ACTIVE_TAPE.get()
    if tape is None:
        raise ContractError("backward needs the GradTape the loss was recorded on")

    produced = {id(node.output) for node in tape.nodes}
    grads: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
    leaves: dict[int, Tensor] = {}
    if loss.requires_grad and id(loss) not in produced:
        leaves[id(loss)] = loss
    for node in reversed(tape.nodes):
        g = grads.get(id(node.output))
        if g is None:
            continue
        for inp, inp_grad in zip(node.inputs, node.vjp(g)):
            if inp_grad is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + inp_grad
            else:
                grads[key] = np.asarray(inp_grad, dtype=np.float64)
            if key not in produced:
                leaves[key] = inp
        if id(node.output) not in leaves:
            grads.pop(id(node.output), None)
    leaf_grads = {k: grads[k] for k in leaves if k in grads}
    return GradientMap(leaf_grads, leaves)


# ---------- Finite-difference oracle ----------

def finite_difference_check(f: Callable[[dict], Tensor], params: Mapping[str, np.ndarray] | np.ndarray,
                            eps: float = 1e-6) -> float:
    """
    Compares reverse-mode gradients against central differences.

    Args:
        f: Maps a dict of Tensors (same keys as `params`) to a scalar Tensor.
        params: Point of evaluation; a bare array is treated as {"x": array}.
        eps (float): Central-difference step.

    Returns:
        float: max |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
    """
    if isinstance(params, np.ndarray) or not isinstance(params, Mapping):
        bare = True
        params = {"x": np.asarray(params, dtype=np.float64)}
    else:
        bare = False
        params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def call(values: dict[str, np.ndarray], grad: bool):
        tensors = {k: Tensor(v, requires_grad=grad) for k, v in values.items()}
        arg = tensors["x"] if bare else tensors
        return f(arg), tensors

    with GradTape() as tape:
        out, leaves = call(params, True)
        if out.size != 1 or not np.all(np.isfinite(out.data)):
            raise OracleError(f"oracle needs a finite scalar, got {out.data}")
        grads = backward(out, tape)

    worst = 0.0
    for key, base in params.items():
        analytic = grads[leaves[key]]
        for idx in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[idx] += eps
            minus[idx] -= eps
            f_plus = call({**params, key: plus}, False)[0].data
            f_minus = call({**params, key: minus}, False)[0].data
            if not (np.isfinite(f_plus).all() and np.isfinite(f_minus).all()):
                raise OracleError(f"non-finite evaluation perturbing {key}{list(idx)}")
            numeric = float((f_plus - f_minus).reshape(()) / (2.0 * eps))
            a = float(analytic[idx])
            err = abs(a - numeric) / (abs(a) + abs(numeric) + 1e-12)
            worst = max(worst, err)
    return worst
