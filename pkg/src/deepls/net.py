"""Two-branch fully connected networks and parameter-space gradients.

The approximate solution of a second-order problem is carried by a pair of
scalar networks sharing no parameters: an upper branch for the primal
variable ``u`` and a lower branch for the flux ``sigma``.  All parameters
live in one flat float64 vector; a layout table maps layers to slices of it
so optimizers never need to know the architecture.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .autodiff import Tensor, _stable_sigmoid

__all__ = [
    "Activation",
    "LayerParams",
    "TwoBranchNet",
    "init_network",
    "forward",
    "leaky_relu",
    "sigmoid",
    "fd_derivative",
    "fd_second_derivative",
    "param_gradient",
    "value_and_grad",
]

LEAKY_SLOPE = 0.01


class Activation(Enum):
    """Hidden-layer activation choices (output layers are always identity)."""

    LEAKY_RELU = "leaky-relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"

    @property
    def smooth(self) -> bool:
        return self is not Activation.LEAKY_RELU

    def apply(self, z):
        """Apply elementwise to a numpy array or a graph Tensor."""
        if self is Activation.IDENTITY:
            return z
        if isinstance(z, Tensor):
            return z.leaky_relu(LEAKY_SLOPE) if self is Activation.LEAKY_RELU else z.sigmoid()
        return leaky_relu(z) if self is Activation.LEAKY_RELU else sigmoid(z)


def leaky_relu(x):
    """max(x, 0) + 0.01 * min(x, 0); the x = 0 tie takes the 0.01 slope side."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)), overflow-safe."""
    return _stable_sigmoid(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class LayerParams:
    """One affine layer: ``weights`` of shape (out, in) and ``biases`` of shape (out,)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ValueError("weights must be a matrix and biases a vector")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError("weights and biases disagree on the output width")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ValueError("layer parameters must be finite")


@dataclass(frozen=True)
class _Slot:
    """Where one layer's weights and biases live inside the flat vector."""

    w_slice: slice
    b_slice: slice
    out_width: int
    in_width: int


def _branch_slots(widths: Sequence[int], offset: int) -> tuple[list[_Slot], int]:
    slots = []
    dims = [1, *widths]
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        w = slice(offset, offset + n_out * n_in)
        offset = w.stop
        b = slice(offset, offset + n_out)
        offset = b.stop
        slots.append(_Slot(w, b, n_out, n_in))
    return slots, offset


def _forward_chain(layers, activation: Activation, h):
    """Shared forward pass over (weights, biases) pairs of arrays or Tensors."""
    traced = isinstance(h, Tensor)
    for weights, biases in layers[:-1]:
        z = h.affine(weights, biases) if traced else h @ weights.T + biases
        h = activation.apply(z)
    weights, biases = layers[-1]
    return h.affine(weights, biases) if traced else h @ weights.T + biases


class TwoBranchNet:
    """Pair of scalar fully connected networks over one flat parameter vector.

    ``upper_widths`` and ``lower_widths`` list the output width of every
    layer in each branch; the input width is always 1 and the final width
    must be 1.  Hidden layers use ``activation``, output layers are linear.
    """

    def __init__(
        self,
        upper_widths: Sequence[int],
        lower_widths: Sequence[int],
        activation: Activation,
        params: np.ndarray,
        init_seed: int | None = None,
    ):
        upper_widths = tuple(int(w) for w in upper_widths)
        lower_widths = tuple(int(w) for w in lower_widths)
        for widths in (upper_widths, lower_widths):
            if len(widths) == 0:
                raise ValueError("each branch needs at least one layer")
            if any(w <= 0 for w in widths):
                raise ValueError("layer widths must be positive")
            if widths[-1] != 1:
                raise ValueError("each branch must end in a width-1 output layer")
        self.upper_widths = upper_widths
        self.lower_widths = lower_widths
        self.activation = activation
        self.init_seed = init_seed
        self._upper_slots, split = _branch_slots(upper_widths, 0)
        self._lower_slots, total = _branch_slots(lower_widths, split)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (total,):
            raise ValueError(f"expected a flat parameter vector of length {total}")
        if not np.isfinite(params).all():
            raise ValueError("parameters must be finite")
        self.params = params

    # ------------------------------------------------------------------

    @property
    def param_count(self) -> int:
        return self.params.size

    def _layers(self, slots):
        return [
            (
                self.params[s.w_slice].reshape(s.out_width, s.in_width),
                self.params[s.b_slice],
            )
            for s in slots
        ]

    @property
    def upper(self) -> list[LayerParams]:
        return [LayerParams(w, b) for w, b in self._layers(self._upper_slots)]

    @property
    def lower(self) -> list[LayerParams]:
        return [LayerParams(w, b) for w, b in self._layers(self._lower_slots)]

    def with_params(self, params: np.ndarray) -> "TwoBranchNet":
        """Same architecture, new flat parameter vector."""
        return TwoBranchNet(
            self.upper_widths, self.lower_widths, self.activation, params, self.init_seed
        )

    # ------------------------------------------------------------------

    def _eval(self, slots, x):
        x = np.asarray(x, dtype=np.float64)
        scalar = x.ndim == 0
        out = _forward_chain(self._layers(slots), self.activation, x.reshape(-1, 1))
        out = out.reshape(-1)
        return float(out[0]) if scalar else out

    def u(self, x):
        """Upper-branch value(s) at scalar or 1D array ``x``."""
        return self._eval(self._upper_slots, x)

    def sigma(self, x):
        """Lower-branch value(s) at scalar or 1D array ``x``."""
        return self._eval(self._lower_slots, x)


def forward(net, x):
    """Evaluate both branches at ``x``, returning ``(u_hat, sigma_hat)``."""
    return net.u(x), net.sigma(x)


def init_network(
    upper_widths: Sequence[int],
    lower_widths: Sequence[int],
    activation: Activation,
    seed: int,
) -> TwoBranchNet:
    """Build a two-branch network with seeded, breakpoint-spread parameters.

    Hidden weights are drawn uniformly from [-r, r] with r = 1/sqrt(n_in).
    First hidden-layer biases are chosen so each neuron's activation
    breakpoint -b/w lands in its own cell of a uniform grid over [-1, 1]
    (stratified jitter within the cell); this keeps the initial function's
    features spread across the domain instead of clustered by the luck of
    the draw.  The output layer starts at exactly zero, so every seed
    begins from the zero function and the same loss value.  Biases of the
    remaining hidden layers are zero for piecewise-linear activations and
    uniform draws for smooth ones (an all-zero-bias sigmoid layer saturates
    every unit at 1/2, erasing feature diversity).  The same seed always
    yields the same parameter vector.
    """
    probe = TwoBranchNet(
        upper_widths, lower_widths, activation, np.zeros(_total_size(upper_widths, lower_widths))
    )
    rng = np.random.default_rng(seed)
    params = np.zeros(probe.param_count)
    for slots in (probe._upper_slots, probe._lower_slots):
        last = len(slots) - 1
        for i, s in enumerate(slots):
            if i == last:
                continue
            r = 1.0 / np.sqrt(s.in_width)
            w = rng.uniform(-r, r, s.w_slice.stop - s.w_slice.start)
            params[s.w_slice] = w
            if i == 0:
                m = s.out_width
                centers = -1.0 + 2.0 * (np.arange(m) + rng.uniform(0.0, 1.0, m)) / m
                params[s.b_slice] = -w * centers
            elif activation.smooth:
                params[s.b_slice] = rng.uniform(-r, r, s.out_width)
    return TwoBranchNet(upper_widths, lower_widths, activation, params, init_seed=seed)


def _total_size(upper_widths, lower_widths) -> int:
    _, split = _branch_slots(tuple(upper_widths), 0)
    _, total = _branch_slots(tuple(lower_widths), split)
    return total


# ----------------------------------------------------------------------
# finite differences


def fd_derivative(g: Callable, x, tau):
    """Backward-offset difference quotient (g(x) - g(x - tau)) / tau."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    return (g(x) - g(x - tau)) / tau


def fd_second_derivative(g: Callable, x, tau):
    """Central second difference (g(x + tau) - 2 g(x) + g(x - tau)) / tau**2."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    return (g(x + tau) - 2.0 * g(x) + g(x - tau)) / tau**2


# ----------------------------------------------------------------------
# parameter gradients


class _TracedNet:
    """Duck-typed stand-in for a TwoBranchNet whose layers are graph Tensors."""

    def __init__(self, net: TwoBranchNet):
        self.activation = net.activation
        self.param_count = net.param_count
        self._slots = list(net._upper_slots) + list(net._lower_slots)
        self.leaves = [
            (
                Tensor(net.params[s.w_slice].reshape(s.out_width, s.in_width)),
                Tensor(net.params[s.b_slice]),
            )
            for s in self._slots
        ]
        n_upper = len(net._upper_slots)
        self._upper = self.leaves[:n_upper]
        self._lower = self.leaves[n_upper:]

    def _eval(self, layers, x):
        h = Tensor(np.asarray(x, dtype=np.float64).reshape(-1, 1))
        return _forward_chain(layers, self.activation, h).reshape(-1)

    def u(self, x):
        return self._eval(self._upper, x)

    def sigma(self, x):
        return self._eval(self._lower, x)

    def flat_grad(self) -> np.ndarray:
        grad = np.zeros(self.param_count)
        for s, (w, b) in zip(self._slots, self.leaves):
            if w.grad is not None:
                grad[s.w_slice] = w.grad.reshape(-1)
            if b.grad is not None:
                grad[s.b_slice] = b.grad
        return grad


def value_and_grad(loss: Callable, net: TwoBranchNet) -> tuple[float, np.ndarray]:
    """Evaluate ``loss(net)`` and its gradient with respect to ``net.params``.

    ``loss`` must build its value from the network's ``u``/``sigma``
    evaluations using arithmetic the graph records; anything constant in the
    parameters contributes zero gradient.
    """
    traced = _TracedNet(net)
    out = loss(traced)
    if isinstance(out, Tensor):
        value = out.item()
        if not np.isfinite(value):
            return value, np.full(net.param_count, np.nan)
        out.backward()
        return value, traced.flat_grad()
    value = float(out)
    return value, np.zeros(net.param_count)


def param_gradient(loss: Callable, net: TwoBranchNet) -> np.ndarray:
    """Gradient of the scalar ``loss(net)`` with respect to the flat parameters."""
    return value_and_grad(loss, net)[1]
