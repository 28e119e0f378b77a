"""Small neural embedding networks with hand-written backpropagation.

Everything here is plain float64 numpy: dense layers, ReLU, a vanilla
tanh recurrent layer, and Adam. Gradients are accumulated into per-layer
buffers by ``backward`` calls and consumed by the optimizer; callers zero
them between steps. The networks map a gap vector of length L to an
embedding of dimension M.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def init_weight(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric uniform init scaled by fan-in."""
    limit = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Dense:
    """Affine layer Y = X W + b with cached input for the backward pass."""

    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator | None = None):
        if rng is not None:
            self.W = init_weight(fan_in, fan_out, rng)
        else:
            self.W = np.zeros((fan_in, fan_out))
        self.b = np.zeros(fan_out)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward before forward")
        self.dW += self._x.T @ dy
        self.db += dy.sum(axis=0)
        return dy @ self.W.T


class EmbeddingNet:
    """Common surface of the two embedding architectures."""

    arch: str = ""
    in_dim: int = 0
    out_dim: int = 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dz: np.ndarray) -> None:
        raise NotImplementedError

    def params(self) -> list[np.ndarray]:
        raise NotImplementedError

    def grads(self) -> list[np.ndarray]:
        raise NotImplementedError

    def decay_mask(self) -> list[bool]:
        """True for parameters weight decay should touch (matrices, not biases)."""
        return [p.ndim > 1 for p in self.params()]

    def zero_grads(self) -> None:
        for g in self.grads():
            g[:] = 0.0

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Embed a batch (or a single vector) without keeping caches."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        z = self.forward(x[None, :] if single else x)
        return z[0] if single else z


class FCN(EmbeddingNet):
    """Stack of dense layers with ReLU between them, linear output.

    ``dims`` lists every layer width including input and output, so the
    default drift-signature embedder is dims=(L, 128, 64, 32, M).
    """

    arch = "fcn"

    def __init__(self, dims: Sequence[int], rng: np.random.Generator | None = None):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 2:
            raise ValueError("dims needs at least input and output sizes")
        self.dims = dims
        self.in_dim = dims[0]
        self.out_dim = dims[-1]
        self.layers = [Dense(a, b, rng) for a, b in zip(dims, dims[1:])]
        self._relu_masks: list[np.ndarray] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self._relu_masks = []
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            h = layer.forward(h)
            if i < last:
                mask = h > 0.0
                self._relu_masks.append(mask)
                h = h * mask
        return h

    def backward(self, dz: np.ndarray) -> None:
        d = dz
        last = len(self.layers) - 1
        for i in range(last, -1, -1):
            if i < last:
                d = d * self._relu_masks[i]
            d = self.layers[i].backward(d)

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.dW, layer.db))
        return out


class RNN(EmbeddingNet):
    """Single tanh recurrent layer read out from its last hidden state.

    The input vector is consumed as a sequence of L scalars. Only the
    final hidden state feeds the linear head, so backpropagation unrolls
    once from the end of the sequence to the start.
    """

    arch = "rnn"

    def __init__(self, in_dim: int, hidden: int = 32, out_dim: int = 16,
                 rng: np.random.Generator | None = None):
        self.in_dim = int(in_dim)
        self.hidden = int(hidden)
        self.out_dim = int(out_dim)
        if rng is not None:
            self.Wx = init_weight(1, hidden, rng)
            self.Wh = init_weight(hidden, hidden, rng)
        else:
            self.Wx = np.zeros((1, hidden))
            self.Wh = np.zeros((hidden, hidden))
        self.bh = np.zeros(hidden)
        self.head = Dense(hidden, out_dim, rng)
        self.dWx = np.zeros_like(self.Wx)
        self.dWh = np.zeros_like(self.Wh)
        self.dbh = np.zeros_like(self.bh)
        self._x: np.ndarray | None = None
        self._states: list[np.ndarray] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.in_dim:
            raise ValueError(f"expected sequences of length {self.in_dim}")
        self._x = x
        batch = x.shape[0]
        h = np.zeros((batch, self.hidden))
        self._states = [h]
        for t in range(self.in_dim):
            pre = x[:, t : t + 1] @ self.Wx + h @ self.Wh + self.bh
            h = np.tanh(pre)
            self._states.append(h)
        return self.head.forward(h)

    def backward(self, dz: np.ndarray) -> None:
        if self._x is None:
            raise RuntimeError("backward before forward")
        dh = self.head.backward(dz)
        for t in range(self.in_dim - 1, -1, -1):
            h = self._states[t + 1]
            dpre = dh * (1.0 - h * h)
            self.dWx += self._x[:, t : t + 1].T @ dpre
            self.dWh += self._states[t].T @ dpre
            self.dbh += dpre.sum(axis=0)
            dh = dpre @ self.Wh.T

    def params(self) -> list[np.ndarray]:
        return [self.Wx, self.Wh, self.bh, self.head.W, self.head.b]

    def grads(self) -> list[np.ndarray]:
        return [self.dWx, self.dWh, self.dbh, self.head.dW, self.head.db]


def make_net(arch: str, in_dim: int, out_dim: int = 16,
             hidden: Sequence[int] = (128, 64, 32), rnn_hidden: int = 32,
             rng: np.random.Generator | None = None) -> EmbeddingNet:
    if arch == "fcn":
        return FCN((in_dim, *hidden, out_dim), rng)
    if arch == "rnn":
        return RNN(in_dim, hidden=rnn_hidden, out_dim=out_dim, rng=rng)
    raise ValueError(f"unknown architecture {arch!r}; choose 'fcn' or 'rnn'")


class Adam:
    """Adam with bias correction; state is kept per parameter array.

    ``weight_decay`` is decoupled (applied directly to the parameters,
    not mixed into the moment estimates).
    """

    def __init__(self, params: Sequence[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0,
                 decay_mask: Sequence[bool] | None = None):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.decay_mask = (list(decay_mask) if decay_mask is not None
                           else [True] * len(self.params))
        if len(self.decay_mask) != len(self.params):
            raise ValueError("decay mask does not match parameter list")
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v, decay in zip(self.params, grads, self.m, self.v,
                                     self.decay_mask):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            if decay and self.weight_decay:
                p -= self.lr * self.weight_decay * p
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
