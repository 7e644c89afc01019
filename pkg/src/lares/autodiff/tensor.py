"""Dense-tensor reverse-mode autodiff on numpy arrays.

Tensors wrap a row-major ndarray (f32 or f64) and record their producing
operation so that ``backward()`` on a scalar populates ``.grad`` on every
tracked leaf. Graphs are single-use: the tape is released as it is replayed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf as _erf

from lares.errors import (
    ContractError,
    DimensionError,
    GraphReleasedError,
    MissingGradientError,
)

_ALLOWED_DTYPES = (np.float32, np.float64)

_grad_enabled = True


class no_grad:
    """Context manager that suspends graph recording."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev


def _check_dtype(arr: np.ndarray) -> np.ndarray:
    if arr.dtype.type not in _ALLOWED_DTYPES:
        raise ContractError(f"unsupported dtype {arr.dtype}; use f32 or f64")
    return arr


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to ``shape``."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Tensor:
    """N-dimensional array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp", "_released", "_gbuf")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype.type not in _ALLOWED_DTYPES:
            arr = arr.astype(np.float32)
        self.data = _check_dtype(np.ascontiguousarray(arr))
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None
        self._released = False
        self._gbuf = None

    # -- construction -----------------------------------------------------

    @staticmethod
    def _from_op(data: np.ndarray, parents, vjp) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out._gbuf = None
        out._released = False
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._vjp = vjp
        else:
            out.requires_grad = False
            out._parents = ()
            out._vjp = None
        return out

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    # -- introspection ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError("item() needs a single-element tensor")
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        grad = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{grad})"

    # -- backward ---------------------------------------------------------

    def backward(self):
        """Populate ``.grad`` on every tracked leaf reachable from this scalar."""
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.data.shape}")
        if not self.requires_grad:
            raise MissingGradientError("loss does not depend on any tracked tensor")
        tape = Tape(self)
        tape.run(np.ones_like(self.data))

    def zero_grad(self):
        self.grad = None

    # -- coercion ---------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if other.dtype != self.dtype:
                raise ContractError(f"dtype mismatch: {self.dtype} vs {other.dtype}")
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    # -- elementwise arithmetic -------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self, other
        out = a.data + b.data
        return Tensor._from_op(out, (a, b), lambda g: (
            _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)))

    __radd__ = __add__

    def __neg__(self):
        a = self
        return Tensor._from_op(-a.data, (a,), lambda g: (-g,))

    def __sub__(self, other):
        other = self._coerce(other)
        a, b = self, other
        out = a.data - b.data
        return Tensor._from_op(out, (a, b), lambda g: (
            _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)))

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        a, b = self, other
        out = a.data * b.data
        return Tensor._from_op(out, (a, b), lambda g: (
            _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        a, b = self, other
        out = a.data / b.data
        return Tensor._from_op(out, (a, b), lambda g: (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)))

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise ContractError("only scalar exponents are supported")
        a = self
        out = a.data ** exponent
        return Tensor._from_op(out, (a,), lambda g: (
            g * exponent * a.data ** (exponent - 1),))

    def __matmul__(self, other):
        other = self._coerce(other)
        a, b = self, other
        if a.ndim < 2 or b.ndim != 2:
            raise DimensionError(f"matmul needs (..., M, K) @ (K, N); got {a.shape} @ {b.shape}")
        if a.shape[-1] != b.shape[0]:
            raise DimensionError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
        out = a.data @ b.data

        def vjp(g):
            ga = g @ b.data.T
            gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            return ga, gb

        return Tensor._from_op(out, (a, b), vjp)

    # -- elementwise functions ----------------------------------------------

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor._from_op(out, (a,), lambda g: (g * out,))

    def log(self):
        a = self
        return Tensor._from_op(np.log(a.data), (a,), lambda g: (g / a.data,))

    def sqrt(self):
        a = self
        out = np.sqrt(a.data)
        return Tensor._from_op(out, (a,), lambda g: (g * (0.5 / out),))

    def abs(self):
        a = self
        return Tensor._from_op(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))

    def relu(self):
        a = self
        out = np.maximum(a.data, 0)
        return Tensor._from_op(out, (a,), lambda g: (g * (a.data > 0),))

    def sigmoid(self):
        a = self
        out = 1.0 / (1.0 + np.exp(-a.data))
        return Tensor._from_op(out, (a,), lambda g: (g * out * (1.0 - out),))

    def gelu(self):
        """Exact Gaussian-CDF GeLU: x * Phi(x), with Phi via erf."""
        a = self
        x = a.data
        phi = 0.5 * (1.0 + _erf(x * 0.7071067811865476))
        out = x * phi

        def vjp(g):
            pdf = 0.3989422804014327 * np.exp(-0.5 * x * x)
            return (g * (phi + x * pdf),)

        return Tensor._from_op(out, (a,), vjp)

    # -- reductions ---------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self
        out = a.data.sum(axis=axis, keepdims=keepdims)

        def vjp(g):
            if axis is None:
                return (np.broadcast_to(g, a.data.shape).astype(a.dtype, copy=False),)
            gg = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gg, a.data.shape).astype(a.dtype, copy=False),)

        return Tensor._from_op(np.asarray(out, dtype=a.dtype), (a,), vjp)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[ax] for ax in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # -- shape manipulation ---------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.data.shape
        out = np.ascontiguousarray(a.data.reshape(shape))
        return Tensor._from_op(out, (a,), lambda g: (g.reshape(old),))

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        a = self
        inv = np.argsort(axes)
        out = np.ascontiguousarray(a.data.transpose(axes))
        return Tensor._from_op(out, (a,), lambda g: (np.ascontiguousarray(g.transpose(inv)),))

    def __getitem__(self, key):
        a = self
        out = np.ascontiguousarray(a.data[key])

        def vjp(g):
            full = np.zeros_like(a.data)
            np.add.at(full, key, g)
            return (full,)

        return Tensor._from_op(out, (a,), vjp)


class Tape:
    """Reverse-topological replay of the op graph below a root tensor.

    Replaying runs each node's vector-Jacobian product exactly once, in
    reverse topological order, then releases the closures; a second replay
    of any node raises ``GraphReleasedError``.
    """

    def __init__(self, root: Tensor):
        self.root = root
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.order = order  # parents before children

    def run(self, seed: np.ndarray):
        root = self.root
        if root._released:
            raise GraphReleasedError("backward() already consumed this graph; rebuild it")
        root._gbuf = seed
        reached_leaf = False
        for node in reversed(self.order):
            g = node._gbuf
            node._gbuf = None
            if g is None:
                continue
            if node._vjp is None:
                if node._parents:
                    raise GraphReleasedError(
                        "graph section already consumed by an earlier backward()")
                reached_leaf = True
                node.grad = g if node.grad is None else node.grad + g
                continue
            grads = node._vjp(g)
            node._vjp = None
            node._released = True
            for parent, pg in zip(node._parents, grads):
                if pg is None or not parent.requires_grad:
                    continue
                parent._gbuf = pg if parent._gbuf is None else parent._gbuf + pg
        root._released = True
        if not reached_leaf:
            raise MissingGradientError("no tracked leaf reachable from the loss")


# -- functional aliases ---------------------------------------------------

def tensor(data, requires_grad: bool = False, dtype=None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)


def ones(shape, dtype=np.float32, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)


def exp(x: Tensor) -> Tensor:
    return x.exp()


def log(x: Tensor) -> Tensor:
    return x.log()


def relu(x: Tensor) -> Tensor:
    return x.relu()


def gelu(x: Tensor) -> Tensor:
    return x.gelu()


def sigmoid(x: Tensor) -> Tensor:
    return x.sigmoid()


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate tensors along ``axis``."""
    parts = list(tensors)
    if not parts:
        raise DimensionError("concat needs at least one tensor")
    datas = [p.data for p in parts]
    out = np.concatenate(datas, axis=axis)
    splits = np.cumsum([d.shape[axis] for d in datas])[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(piece) for piece in np.split(g, splits, axis=axis))

    return Tensor._from_op(out, tuple(parts), vjp)


def pad2d(x: Tensor, pad_h: int, pad_w: int, axes: tuple[int, int]) -> Tensor:
    """Zero-pad two axes of ``x`` by the given amounts on both sides."""
    a = x
    widths = [(0, 0)] * a.ndim
    widths[axes[0]] = (pad_h, pad_h)
    widths[axes[1]] = (pad_w, pad_w)
    out = np.pad(a.data, widths)
    sl = [slice(None)] * a.ndim
    sl[axes[0]] = slice(pad_h, pad_h + a.data.shape[axes[0]])
    sl[axes[1]] = slice(pad_w, pad_w + a.data.shape[axes[1]])
    sl = tuple(sl)
    return Tensor._from_op(out, (a,), lambda g: (np.ascontiguousarray(g[sl]),))
