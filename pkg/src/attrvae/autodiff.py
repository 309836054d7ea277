"""Reverse-mode automatic differentiation on f64 numpy arrays.

A :class:`Tensor` wraps an ``np.float64`` array and remembers how it was
produced (parent tensors plus one vector-Jacobian callback per parent).
Creation order is a topological order of the graph; :func:`backward` walks the
graph from a scalar loss in reverse topological order, visiting each node once
and accumulating gradients for every tensor on a differentiable path.
Parameters the loss never touches get an explicit zero gradient so optimizer
steps stay well-defined.

All arithmetic is float64 end to end; identical inputs and seeds give
bit-identical values and gradients.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import DomainError, FormatError, ShapeError
from .rng import SeededRng

# scale constants for the scaled exponential linear unit
_SELU_LAMBDA = 1.0507009873554804934193349852946
_SELU_ALPHA = 1.6732632423543772848170429916717


def _as_f64(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not np.issubdtype(arr.dtype, np.floating):  # pragma: no cover - asarray guarantees
        raise TypeError("tensor values must be convertible to float64")
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad over axes that numpy broadcasting introduced or stretched."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """f64 array node in a recorded computation graph."""

    __slots__ = ("data", "requires_grad", "_parents", "_vjps")

    def __init__(self, values, requires_grad: bool = False):
        self.data = _as_f64(values)
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._vjps: tuple = ()

    # -- construction of derived nodes ------------------------------------

    @staticmethod
    def _derived(data: np.ndarray, parents, vjps) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        tracked = tuple(p.requires_grad for p in parents)
        out.requires_grad = any(tracked)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._vjps = tuple(vjps)
        else:
            # detached subgraph: no reason to keep history alive
            out._parents = ()
            out._vjps = ()
        return out

    # -- basic introspection ----------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def __add__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data + other.data
        return Tensor._derived(
            data,
            (self, other),
            (lambda g: _unbroadcast(g, self.data.shape),
             lambda g: _unbroadcast(g, other.data.shape)),
        )

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data - other.data
        return Tensor._derived(
            data,
            (self, other),
            (lambda g: _unbroadcast(g, self.data.shape),
             lambda g: _unbroadcast(-g, other.data.shape)),
        )

    def __rsub__(self, other) -> "Tensor":
        return self._coerce(other).__sub__(self)

    def __mul__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data * other.data
        return Tensor._derived(
            data,
            (self, other),
            (lambda g: _unbroadcast(g * other.data, self.data.shape),
             lambda g: _unbroadcast(g * self.data, other.data.shape)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not an op; multiply by a reciprocal")
        return self * (1.0 / float(other))

    def __neg__(self) -> "Tensor":
        return Tensor._derived(-self.data, (self,), (lambda g: -g,))

    def scale(self, c: float) -> "Tensor":
        """Multiply by a python scalar constant."""
        c = float(c)
        return Tensor._derived(self.data * c, (self,), (lambda g: g * c,))

    def matmul(self, other: "Tensor") -> "Tensor":
        other = self._coerce(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeError(f"matmul needs 2-d operands, got {self.shape} @ {other.shape}")
        if self.data.shape[1] != other.data.shape[0]:
            raise ShapeError(f"matmul inner dimensions differ: {self.shape} @ {other.shape}")
        a, b = self.data, other.data
        return Tensor._derived(
            a @ b,
            (self, other),
            (lambda g: g @ b.T, lambda g: a.T @ g),
        )

    __matmul__ = matmul

    # -- elementwise nonlinearities ---------------------------------------

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)
        return Tensor._derived(y, (self,), (lambda g: g * (1.0 - y * y),))

    def sigmoid(self) -> "Tensor":
        x = self.data
        y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        return Tensor._derived(y, (self,), (lambda g: g * y * (1.0 - y),))

    def relu(self) -> "Tensor":
        x = self.data
        return Tensor._derived(np.maximum(x, 0.0), (self,), (lambda g: g * (x > 0.0),))

    def selu(self) -> "Tensor":
        x = self.data
        pos = x > 0.0
        y = _SELU_LAMBDA * np.where(pos, x, _SELU_ALPHA * np.expm1(x))
        dy = _SELU_LAMBDA * np.where(pos, 1.0, _SELU_ALPHA * np.exp(x))
        return Tensor._derived(y, (self,), (lambda g: g * dy,))

    def exp(self) -> "Tensor":
        y = np.exp(self.data)
        return Tensor._derived(y, (self,), (lambda g: g * y,))

    def log(self) -> "Tensor":
        x = self.data
        if np.any(x <= 0.0):
            raise DomainError("log of a non-positive value")
        return Tensor._derived(np.log(x), (self,), (lambda g: g / x,))

    def abs(self) -> "Tensor":
        x = self.data
        s = np.sign(x)  # subgradient 0 at 0
        return Tensor._derived(np.abs(x), (self,), (lambda g: g * s,))

    # -- reductions and reshaping -----------------------------------------

    def _check_axis(self, axis):
        if axis is not None and not (-self.data.ndim <= axis < self.data.ndim):
            raise ShapeError(f"axis {axis} out of range for shape {self.shape}")

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        self._check_axis(axis)
        shape = self.data.shape
        y = self.data.sum(axis=axis, keepdims=keepdims)

        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, shape).copy()

        return Tensor._derived(np.asarray(y, dtype=np.float64), (self,), (vjp,))

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        self._check_axis(axis)
        shape = self.data.shape
        count = self.data.size if axis is None else shape[axis]
        y = self.data.mean(axis=axis, keepdims=keepdims)

        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, shape) / count

        return Tensor._derived(np.asarray(y, dtype=np.float64), (self,), (vjp,))

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        y = self.data.reshape(shape)
        return Tensor._derived(y, (self,), (lambda g: g.reshape(old),))

    def __getitem__(self, key) -> "Tensor":
        _check_basic_index(key)
        shape = self.data.shape
        y = self.data[key]

        def vjp(g):
            full = np.zeros(shape, dtype=np.float64)
            full[key] = g
            return full

        return Tensor._derived(np.asarray(y, dtype=np.float64), (self,), (vjp,))


def _check_basic_index(key):
    parts = key if isinstance(key, tuple) else (key,)
    for p in parts:
        if not isinstance(p, (int, np.integer, slice)):
            raise TypeError("only basic int/slice indexing is differentiable here")


def gaussian_sample(mu: Tensor, logvar: Tensor, rng: SeededRng) -> Tensor:
    """Reparameterized draw z = mu + exp(logvar/2) * eps, eps ~ N(0, I).

    Gradients flow to mu and logvar; eps is a constant of the graph.
    """
    if mu.shape != logvar.shape:
        raise ShapeError(f"mu/logvar shapes differ: {mu.shape} vs {logvar.shape}")
    eps = Tensor(rng.normal(mu.shape))
    return mu + logvar.scale(0.5).exp() * eps


def _topo_order(root: Tensor) -> list:
    """Parents-first ordering of every node reachable from root."""
    order: list = []
    visited: set = set()
    stack: list = [(root, False)]
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


def _graph_gradients(loss: Tensor) -> dict:
    """Map id(tensor) -> gradient array for every tensor on a tracked path."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict = {id(loss): np.ones_like(loss.data)}
    order = _topo_order(loss)
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, vjp in zip(node._parents, node._vjps):
            if not parent.requires_grad:
                continue
            contrib = vjp(g)
            prev = grads.get(id(parent))
            # out-of-place accumulation: vjp outputs may alias upstream grads
            grads[id(parent)] = contrib if prev is None else prev + contrib
    return grads


def gradients(loss: Tensor, wrt: Iterable[Tensor]) -> list:
    """Gradient arrays of a scalar loss for each listed tensor (zeros if unreachable)."""
    gmap = _graph_gradients(loss)
    return [gmap.get(id(t), np.zeros_like(t.data)) for t in wrt]


def backward(loss: Tensor, params: "ParameterSet") -> dict:
    """Gradient of a scalar loss for every named parameter.

    Parameters the loss does not depend on map to zero arrays.
    """
    gmap = _graph_gradients(loss)
    return {name: gmap.get(id(t), np.zeros_like(t.data)) for name, t in params.items()}


class ParameterSet:
    """Ordered name -> leaf tensor map with deterministic iteration."""

    def __init__(self):
        self._params: dict = {}

    def add(self, name: str, values) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        if " " in name or "\n" in name:
            raise ValueError(f"parameter name must not contain whitespace: {name!r}")
        t = values if isinstance(values, Tensor) else Tensor(values, requires_grad=True)
        t.requires_grad = True
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def items(self):
        return self._params.items()

    def total_size(self) -> int:
        return sum(t.data.size for t in self._params.values())


# -- parameter checkpoint file --------------------------------------------
#
#   AVPARAMS 1\n
#   count <n>\n
#   <name> <dim0> <dim1> ...\n      (one line per parameter, dims may be empty)
#   data\n
#   <row-major little-endian f64 payload, parameters in listed order>

_CKPT_MAGIC = b"AVPARAMS 1"


def save_parameters(params: ParameterSet, path) -> None:
    lines = [_CKPT_MAGIC.decode(), f"count {len(params)}"]
    for name, t in params.items():
        dims = " ".join(str(d) for d in t.data.shape)
        lines.append(f"{name} {dims}".rstrip())
    lines.append("data")
    header = ("\n".join(lines) + "\n").encode("ascii")
    payload = b"".join(np.ascontiguousarray(t.data, dtype="<f8").tobytes() for _, t in params.items())
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_parameters(path) -> ParameterSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        header_end = blob.index(b"\ndata\n") + len(b"\ndata\n")
    except ValueError:
        raise FormatError(f"{path}: missing data marker") from None
    lines = blob[: header_end - 1].decode("ascii").splitlines()
    if not lines or lines[0] != _CKPT_MAGIC.decode():
        raise FormatError(f"{path}: bad magic line {lines[:1]!r}")
    if len(lines) < 2 or not lines[1].startswith("count "):
        raise FormatError(f"{path}: missing count line")
    n = int(lines[1].split()[1])
    entries = []
    for line in lines[2 : 2 + n]:
        parts = line.split()
        name, shape = parts[0], tuple(int(d) for d in parts[1:])
        entries.append((name, shape))
    if len(entries) != n:
        raise FormatError(f"{path}: header lists {len(entries)} parameters, count says {n}")

    payload = blob[header_end:]
    params = ParameterSet()
    offset = 0
    for name, shape in entries:
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = size * 8
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise FormatError(f"{path}: payload truncated at parameter {name!r}")
        params.add(name, np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(shape))
        offset += nbytes
    if offset != len(payload):
        raise FormatError(f"{path}: {len(payload) - offset} trailing payload bytes")
    return params
