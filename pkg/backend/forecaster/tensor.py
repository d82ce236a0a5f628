# forecaster/tensor.py
# ─────────────────────────────────────────────────────
# Dense fp64 values with a reverse-mode differentiation tape.
#
# Every primitive returns a Node holding its value, references
# to its parent nodes, and a backward rule. Node ids grow
# monotonically, so sorting reachable nodes by id gives the
# tape order (parents always precede children).
#
# Rules that hold for every primitive:
# - values are float64 numpy arrays
# - a non-finite result raises NonFiniteError on the spot
# - no implicit broadcasting, except add() of a 1-D bias
#   along the last axis
# ─────────────────────────────────────────────────────

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from forecaster.errors import DimensionError, GradientError, NonFiniteError

_node_ids = itertools.count()

Backward = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Node:
    __slots__ = ("id", "value", "grad", "parents", "op", "requires_grad", "name", "_backward")

    def __init__(
        self,
        value:         np.ndarray,
        parents:       Sequence["Node"] = (),
        op:            str = "leaf",
        backward:      Backward | None = None,
        requires_grad: bool = False,
        name:          str | None = None,
    ):
        self.id            = next(_node_ids)
        self.value         = value
        self.grad: np.ndarray | None = None
        self.parents       = tuple(parents)
        self.op            = op
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)
        self.name          = name
        self._backward     = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = None

    def grad_or_zeros(self) -> np.ndarray:
        return self.grad if self.grad is not None else np.zeros_like(self.value)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Node({self.op}{label}, shape={self.shape})"


def _as_array(x) -> np.ndarray:
    return np.array(x, dtype=np.float64)


def constant(x, name: str | None = None) -> Node:
    value = _as_array(x)
    _check_finite("constant", value)
    return Node(value, name=name)


def parameter(x, name: str | None = None) -> Node:
    value = _as_array(x)
    _check_finite("parameter", value)
    return Node(value, requires_grad=True, name=name)


def _check_finite(op: str, value: np.ndarray) -> None:
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{op} produced non-finite values")


def _result(op: str, value: np.ndarray, parents: Sequence[Node], backward: Backward) -> Node:
    _check_finite(op, value)
    return Node(value, parents=parents, op=op, backward=backward)


# ── Linear algebra ────────────────────────────────────

def matmul(a: Node, b: Node) -> Node:
    """
    Matrix product.

    Accepted shapes:
      [p,q]   × [q,r]   → [p,r]
      [B,p,q] × [q,r]   → [B,p,r]   (one right operand shared by the batch)
      [B,p,q] × [B,q,r] → [B,p,r]   (equal batch extents)
    """
    sa, sb = a.shape, b.shape
    if len(sa) == 2 and len(sb) == 2 and sa[1] == sb[0]:
        kind = "plain"
    elif len(sa) == 3 and len(sb) == 2 and sa[2] == sb[0]:
        kind = "shared"
    elif len(sa) == 3 and len(sb) == 3 and sa[0] == sb[0] and sa[2] == sb[1]:
        kind = "batched"
    else:
        raise DimensionError(f"matmul: cannot multiply {sa} by {sb}")

    av, bv = a.value, b.value

    def backward(g):
        if kind == "plain":
            return g @ bv.T, av.T @ g
        if kind == "shared":
            return g @ bv.T, np.tensordot(av, g, axes=([0, 1], [0, 1]))
        return g @ np.swapaxes(bv, -1, -2), np.swapaxes(av, -1, -2) @ g

    return _result("matmul", np.matmul(av, bv), (a, b), backward)


def transpose(a: Node) -> Node:
    if a.value.ndim < 2:
        raise DimensionError(f"transpose: needs at least 2 axes, got {a.shape}")
    return _result(
        "transpose",
        np.swapaxes(a.value, -1, -2).copy(),
        (a,),
        lambda g: (np.swapaxes(g, -1, -2),),
    )


# ── Elementwise ───────────────────────────────────────

def _same_shape(op: str, a: Node, b: Node) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Node, b: Node) -> Node:
    # b may be a 1-D bias added along the last axis of a
    if b.value.ndim == 1 and a.value.ndim > 1 and a.shape[-1] == b.shape[0]:
        width = b.shape[0]
        return _result(
            "add",
            a.value + b.value,
            (a, b),
            lambda g: (g, g.reshape(-1, width).sum(axis=0)),
        )
    _same_shape("add", a, b)
    return _result("add", a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: Node, b: Node) -> Node:
    _same_shape("sub", a, b)
    return _result("sub", a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: Node, b: Node) -> Node:
    _same_shape("mul", a, b)
    av, bv = a.value, b.value
    return _result("mul", av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Node, factor: float) -> Node:
    factor = float(factor)
    return _result("scale", a.value * factor, (a,), lambda g: (g * factor,))


def tanh(a: Node) -> Node:
    y = np.tanh(a.value)
    return _result("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Node) -> Node:
    x = a.value
    e = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _result("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def relu(a: Node) -> Node:
    x = a.value
    return _result("relu", np.maximum(x, 0.0), (a,), lambda g: (g * (x > 0),))


def absolute(a: Node) -> Node:
    # subgradient 0 at 0
    x = a.value
    return _result("abs", np.abs(x), (a,), lambda g: (g * np.sign(x),))


_BINARY = {"add": add, "sub": sub, "mul": mul}
_UNARY = {"tanh": tanh, "sigmoid": sigmoid, "relu": relu, "abs": absolute}


def elementwise(kind: str, *operands: Node) -> Node:
    if kind in _BINARY:
        if len(operands) != 2:
            raise DimensionError(f"{kind} takes 2 operands, got {len(operands)}")
        return _BINARY[kind](*operands)
    if kind in _UNARY:
        if len(operands) != 1:
            raise DimensionError(f"{kind} takes 1 operand, got {len(operands)}")
        return _UNARY[kind](operands[0])
    raise ValueError(f"unknown elementwise op {kind!r}")


# ── Normalisation ─────────────────────────────────────

def softmax(x: Node) -> Node:
    """Softmax along the last axis, with max-subtraction."""
    if x.value.ndim == 0 or x.shape[-1] == 0:
        raise DimensionError(f"softmax: empty input {x.shape}")
    shifted = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _result("softmax", y, (x,), backward)


# ── Structure ─────────────────────────────────────────

def _axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"{op}: axis {axis} out of range for {ndim} axes")
    return axis % ndim


def concat(parts: Sequence[Node], axis: int = 0) -> Node:
    if not parts:
        raise DimensionError("concat: no parts")
    ndim = parts[0].value.ndim
    if ndim == 0:
        raise DimensionError("concat: cannot concatenate scalars")
    axis = _axis(axis, ndim, "concat")
    ref = parts[0].shape
    for p in parts[1:]:
        if p.value.ndim != ndim or any(
            p.shape[i] != ref[i] for i in range(ndim) if i != axis
        ):
            raise DimensionError(f"concat: incompatible shapes {ref} and {p.shape} on axis {axis}")
    sizes = [p.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _result("concat", np.concatenate([p.value for p in parts], axis=axis), parts, backward)


def stack(parts: Sequence[Node], axis: int = 0) -> Node:
    if not parts:
        raise DimensionError("stack: no parts")
    ref = parts[0].shape
    for p in parts[1:]:
        if p.shape != ref:
            raise DimensionError(f"stack: shapes {ref} and {p.shape} differ")
    axis = _axis(axis, len(ref) + 1, "stack")

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return _result("stack", np.stack([p.value for p in parts], axis=axis), parts, backward)


def reshape(a: Node, shape: Sequence[int]) -> Node:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.value.size:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    source = a.shape
    return _result("reshape", a.value.reshape(shape), (a,), lambda g: (g.reshape(source),))


def expand(a: Node, axis: int, count: int) -> Node:
    """Repeat `a` count times along a new axis. Explicit, so backward sums it away."""
    axis = _axis(axis, a.value.ndim + 1, "expand")
    value = np.repeat(np.expand_dims(a.value, axis), count, axis=axis)
    return _result("expand", value, (a,), lambda g: (g.sum(axis=axis),))


def take(a: Node, start: int, stop: int, axis: int = -1) -> Node:
    """Contiguous slice [start, stop) along one axis."""
    axis = _axis(axis, a.value.ndim, "take")
    extent = a.shape[axis]
    if not 0 <= start < stop <= extent:
        raise DimensionError(f"take: slice [{start}, {stop}) outside extent {extent} of {a.shape}")
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    source = a.shape

    def backward(g):
        full = np.zeros(source)
        full[index] = g
        return (full,)

    return _result("take", a.value[index].copy(), (a,), backward)


# ── Reductions ────────────────────────────────────────

def total(a: Node) -> Node:
    source = a.shape
    return _result(
        "sum",
        np.array(a.value.sum()),
        (a,),
        lambda g: (np.full(source, float(g)),),
    )


def mean(a: Node) -> Node:
    if a.value.size == 0:
        raise DimensionError("mean: empty input")
    return scale(total(a), 1.0 / a.value.size)


# ── Backward ──────────────────────────────────────────

def _reachable(loss: Node) -> list[Node]:
    seen: dict[int, Node] = {}
    pending = [loss]
    while pending:
        node = pending.pop()
        if node.id in seen or not node.requires_grad:
            continue
        seen[node.id] = node
        pending.extend(node.parents)
    return sorted(seen.values(), key=lambda n: n.id, reverse=True)


def backward(loss: Node) -> None:
    """
    Accumulate d(loss)/d(node) into .grad of every node that needs it.

    Gradients from one call are computed in a private buffer and then
    added to .grad, so calling twice without zero_grad gives exactly
    twice the single-call gradient.
    """
    if loss.value.ndim != 0:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    order = _reachable(loss)
    if not order:
        return

    local: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.value)}
    for node in order:
        g = local.get(node.id)
        if g is None or node._backward is None:
            continue
        for parent, pg in zip(node.parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if parent.id in local:
                local[parent.id] = local[parent.id] + pg
            else:
                local[parent.id] = np.array(pg, dtype=np.float64)

    for node in order:
        g = local.get(node.id)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g


def zero_grad(nodes: Iterable[Node]) -> None:
    for node in nodes:
        node.zero_grad()


def tape_leaves(loss: Node) -> list[Node]:
    """Gradient-bearing leaves reachable from loss, in tape order."""
    return [n for n in reversed(_reachable(loss)) if not n.parents and n.requires_grad]


# ── Finite-difference oracle ──────────────────────────

def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def finite_diff_check(
    f:     Callable[[Node], Node],
    point,
    eps:   float = 1e-5,
    floor: float = 1e-8,
) -> float:
    """
    Compare the tape gradient of a scalar map with central differences.

    f receives a Node and must return a scalar Node; it is called once
    on a parameter node for the tape gradient and twice per coordinate
    on constant nodes for (f(x+eps·e_i) − f(x−eps·e_i)) / 2eps.
    Returns the worst per-coordinate relative error.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = _as_array(point)
    x = parameter(base.copy())
    backward(f(x))
    analytic = x.grad_or_zeros()

    numeric = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        plus = base.copy()
        plus[idx] += eps
        minus = base.copy()
        minus[idx] -= eps
        numeric[idx] = (float(f(constant(plus)).value) - float(f(constant(minus)).value)) / (2 * eps)

    if base.size == 0:
        return 0.0
    return float(relative_error(analytic, numeric, floor).max())


@dataclass
class GradientReport:
    max_error:   float
    worst_param: str
    worst_index: tuple[int, ...]
    checked:     int


def check_parameter_gradients(
    loss_fn: Callable[[], Node],
    params:  Mapping[str, Node],
    eps:     float = 1e-5,
    floor:   float = 1e-8,
) -> GradientReport:
    """
    Run the finite-difference oracle over every entry of every parameter.

    loss_fn rebuilds the forward pass from the current parameter values.
    Parameters are perturbed in place and restored afterwards.
    """
    zero_grad(params.values())
    backward(loss_fn())
    analytic = {name: p.grad_or_zeros().copy() for name, p in params.items()}

    report = GradientReport(0.0, "", (), 0)
    for name, p in params.items():
        for idx in np.ndindex(p.shape):
            original = p.value[idx]
            p.value[idx] = original + eps
            up = float(loss_fn().value)
            p.value[idx] = original - eps
            down = float(loss_fn().value)
            p.value[idx] = original
            numeric = (up - down) / (2 * eps)
            err = float(relative_error(np.array(analytic[name][idx]), np.array(numeric), floor))
            report.checked += 1
            if err > report.max_error:
                report.max_error, report.worst_param, report.worst_index = err, name, idx
    zero_grad(params.values())
    return report
