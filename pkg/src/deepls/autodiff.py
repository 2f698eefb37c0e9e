"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a float64 ndarray and records the operations applied to
it.  Calling :meth:`Tensor.backward` on a scalar result walks the recorded
graph in reverse topological order and accumulates gradients into every
node's ``grad`` field.  Only the handful of operations needed by the network
and loss evaluations are implemented.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor"]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting expanded to reach ``shape``."""
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
    """Array-valued node in a reverse-mode computation graph."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    # Make numpy defer mixed ndarray/Tensor arithmetic to the Tensor side.
    __array_priority__ = 1000

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward

    # ------------------------------------------------------------------
    # introspection

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"

    def _accumulate(self, g: np.ndarray) -> None:
        g = _unbroadcast(np.asarray(g, dtype=np.float64), self.data.shape)
        self.grad = g if self.grad is None else self.grad + g

    # ------------------------------------------------------------------
    # arithmetic

    def __add__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.data + other.data, (self, other))

            def backward(g):
                self._accumulate(g)
                other._accumulate(g)

        else:
            out = Tensor(self.data + other, (self,))

            def backward(g):
                self._accumulate(g)

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, (self,))
        out._backward = lambda g: self._accumulate(-g)
        return out

    def __sub__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.data - other.data, (self, other))

            def backward(g):
                self._accumulate(g)
                other._accumulate(-g)

        else:
            out = Tensor(self.data - other, (self,))

            def backward(g):
                self._accumulate(g)

        out._backward = backward
        return out

    def __rsub__(self, other):
        out = Tensor(other - self.data, (self,))
        out._backward = lambda g: self._accumulate(-g)
        return out

    def __mul__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.data * other.data, (self, other))

            def backward(g):
                self._accumulate(g * other.data)
                other._accumulate(g * self.data)

        else:
            const = np.asarray(other, dtype=np.float64)
            out = Tensor(self.data * const, (self,))

            def backward(g):
                self._accumulate(g * const)

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.data / other.data, (self, other))

            def backward(g):
                self._accumulate(g / other.data)
                other._accumulate(-g * self.data / other.data**2)

        else:
            const = np.asarray(other, dtype=np.float64)
            out = Tensor(self.data / const, (self,))

            def backward(g):
                self._accumulate(g / const)

        out._backward = backward
        return out

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("Tensor ** exponent requires a constant exponent")
        p = float(exponent)
        out = Tensor(self.data**p, (self,))
        out._backward = lambda g: self._accumulate(g * p * self.data ** (p - 1.0))
        return out

    def __matmul__(self, other):
        if isinstance(other, Tensor):
            out = Tensor(self.data @ other.data, (self, other))

            def backward(g):
                self._accumulate(g @ other.data.T)
                other._accumulate(self.data.T @ g)

        else:
            const = np.asarray(other, dtype=np.float64)
            out = Tensor(self.data @ const, (self,))

            def backward(g):
                self._accumulate(g @ const.T)

        out._backward = backward
        return out

    def __rmatmul__(self, other):
        const = np.asarray(other, dtype=np.float64)
        out = Tensor(const @ self.data, (self,))
        out._backward = lambda g: self._accumulate(const.T @ g)
        return out

    # ------------------------------------------------------------------
    # shape manipulation

    @property
    def T(self) -> "Tensor":
        out = Tensor(self.data.T, (self,))
        out._backward = lambda g: self._accumulate(g.T)
        return out

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), (self,))
        out._backward = lambda g: self._accumulate(g.reshape(self.data.shape))
        return out

    def __getitem__(self, idx) -> "Tensor":
        out = Tensor(self.data[idx], (self,))

        def backward(g):
            full = np.zeros_like(self.data)
            full[idx] = g
            self._accumulate(full)

        out._backward = backward
        return out

    def sum(self) -> "Tensor":
        out = Tensor(self.data.sum(), (self,))
        out._backward = lambda g: self._accumulate(np.broadcast_to(g, self.data.shape))
        return out

    # ------------------------------------------------------------------
    # fused layer primitive

    def affine(self, weights: "Tensor", biases: "Tensor") -> "Tensor":
        """Rows-of-samples layer application: self @ weights.T + biases.

        Fusing the transpose, product, and broadcast add into one node keeps
        graphs for wide batched evaluations short.
        """
        w, b = weights.data, biases.data
        z = self.data @ w.T
        z += b
        out = Tensor(z, (self, weights, biases))

        def backward(g):
            self._accumulate(g @ w)
            weights._accumulate(g.T @ self.data)
            biases._accumulate(g.sum(axis=0))

        out._backward = backward
        return out

    # ------------------------------------------------------------------
    # nonlinearities

    def leaky_relu(self, slope: float = 0.01) -> "Tensor":
        d = self.data
        out = Tensor(np.where(d > 0, d, slope * d), (self,))
        out._backward = lambda g: self._accumulate(g * np.where(d > 0, 1.0, slope))
        return out

    def sigmoid(self) -> "Tensor":
        s = _stable_sigmoid(self.data)
        out = Tensor(s, (self,))

        def backward(g):
            local = 1.0 - s
            local *= s
            local *= g
            self._accumulate(local)

        out._backward = backward
        return out

    # ------------------------------------------------------------------
    # reverse pass

    def backward(self) -> None:
        """Accumulate gradients of this scalar into every graph node."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar Tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, children_done = stack.pop()
            if children_done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-x)); exp overflow saturates cleanly to 0."""
    out = np.empty_like(x, dtype=np.float64)
    np.negative(x, out=out)
    with np.errstate(over="ignore"):
        np.exp(out, out=out)
    out += 1.0
    np.divide(1.0, out, out=out)
    return out
