"""Reverse-mode automatic differentiation on dense float64 arrays.

A DiffTensor wraps a numpy array together with a gradient buffer and,
when produced by an operation, a vector-Jacobian closure.  Calling
:func:`backward` on a scalar tensor sweeps the graph in reverse
topological order and accumulates gradients into every reachable
tensor that has ``requires_grad`` set.
"""

from __future__ import annotations

import contextlib

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an operation."""


_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (pure evaluation)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class DiffTensor:
    """n-dimensional float64 value grid participating in reverse-mode AD."""

    __slots__ = ("values", "_grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=np.float64)
        self._grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._vjp = None

    # -- gradient buffer ------------------------------------------------

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.zeros_like(self.values)
        return self._grad

    def zero_grad(self) -> None:
        self._grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self._grad is None:
            self._grad = np.zeros_like(self.values)
        self._grad += g

    # -- basic introspection --------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a scalar, got shape {self.shape}")
        return float(self.values.reshape(()))

    def __repr__(self) -> str:
        return f"DiffTensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        return _binary(self, other, np.add, lambda g, a, b: (g, g))

    __radd__ = __add__

    def __sub__(self, other):
        return _binary(self, other, np.subtract, lambda g, a, b: (g, -g))

    def __rsub__(self, other):
        return _binary(self, other, lambda a, b: b - a, lambda g, a, b: (-g, g))

    def __mul__(self, other):
        return _binary(self, other, np.multiply, lambda g, a, b: (g * b, g * a))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _binary(
            self, other, np.divide, lambda g, a, b: (g / b, -g * a / (b * b))
        )

    def __rtruediv__(self, other):
        return _binary(
            self, other, lambda a, b: b / a, lambda g, a, b: (-g * b / (a * a), g / a)
        )

    def __neg__(self):
        return from_op(-self.values, (self,), lambda g: (-g,))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        c = float(exponent)
        vals = self.values
        return from_op(
            vals**c, (self,), lambda g: (g * c * vals ** (c - 1.0),)
        )

    # -- elementwise / structural helpers ---------------------------------

    def exp(self):
        out_vals = np.exp(self.values)
        return from_op(out_vals, (self,), lambda g: (g * out_vals,))

    def log(self):
        vals = self.values
        return from_op(np.log(vals), (self,), lambda g: (g / vals,))

    def clamp(self, lo: float, hi: float):
        vals = self.values
        mask = (vals > lo) & (vals < hi)
        return from_op(np.clip(vals, lo, hi), (self,), lambda g: (g * mask,))

    def sum(self):
        shape = self.shape
        return from_op(
            np.asarray(self.values.sum()),
            (self,),
            lambda g: (np.full(shape, float(g)),),
        )

    def mean(self):
        n = self.size
        shape = self.shape
        return from_op(
            np.asarray(self.values.mean()),
            (self,),
            lambda g: (np.full(shape, float(g) / n),),
        )

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.shape
        return from_op(
            self.values.reshape(shape), (self,), lambda g: (g.reshape(old),)
        )

    def slice1d(self, start: int, stop: int):
        if self.values.ndim != 1:
            raise ShapeError("slice1d is defined for vectors only")
        n = self.size

        def vjp(g):
            full = np.zeros(n)
            full[start:stop] = g
            return (full,)

        return from_op(self.values[start:stop].copy(), (self,), vjp)


def as_tensor(x) -> DiffTensor:
    """Wrap arrays/scalars as constant DiffTensors; pass DiffTensors through."""
    if isinstance(x, DiffTensor):
        return x
    return DiffTensor(np.asarray(x, dtype=np.float64))


def from_op(values, parents, vjp) -> DiffTensor:
    """Build an op output node, attaching the vjp only when grads are needed."""
    out = DiffTensor(values)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _binary(a: DiffTensor, other, fwd, vjp_pair) -> DiffTensor:
    if isinstance(other, DiffTensor):
        if other.shape != a.shape and other.size != 1 and a.size != 1:
            raise ShapeError(
                f"operand shapes differ: {a.shape} vs {other.shape}"
            )
        av, bv = a.values, other.values

        def vjp(g):
            ga, gb = vjp_pair(g, av, bv)
            # A size-1 operand broadcast against an array reduces to a sum.
            if ga.shape != av.shape:
                ga = np.asarray(ga.sum()).reshape(av.shape)
            if gb.shape != bv.shape:
                gb = np.asarray(gb.sum()).reshape(bv.shape)
            return ga, gb

        return from_op(fwd(av, bv), (a, other), vjp)

    b = float(other)
    av = a.values

    def vjp_const(g):
        ga, _ = vjp_pair(g, av, b)
        return (ga,)

    return from_op(fwd(av, b), (a,), vjp_const)


def backward(loss: DiffTensor) -> None:
    """Reverse sweep from a scalar loss, accumulating into .grad buffers.

    Fan-out contributions add; intermediate graph links are released at
    the end so closures (and the arrays they capture) can be collected.
    """
    if loss.values.size != 1:
        raise ShapeError(f"backward needs a scalar root, got shape {loss.shape}")

    # Iterative topological order over the subgraph that requires grad.
    topo: list[DiffTensor] = []
    visited: set[int] = set()
    stack: list[tuple[DiffTensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    loss._accumulate(np.ones_like(loss.values))
    for node in reversed(topo):
        if node._vjp is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if parent.requires_grad and g is not None:
                parent._accumulate(g)

    for node in topo:
        if node._vjp is not None:
            node._parents = ()
            node._vjp = None
