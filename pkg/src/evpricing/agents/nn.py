"""Minimal fully connected networks with manual backprop, Adam and target blending."""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from ..errors import ArchitectureMismatch, ShapeMismatch

Activation = Literal["identity", "sigmoid"]


def sigmoid(x):
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Mlp:
    """Dense network: ReLU hidden layers and an identity or sigmoid output.

    Inputs are batch-first ``(n, in)`` arrays; a 1-D input is treated as a
    batch of one and the output is returned 1-D as well.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        output: Activation = "identity",
        rng: np.random.Generator | int | None = None,
    ):
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError("need at least an input and an output layer of positive width")
        if output not in ("identity", "sigmoid"):
            raise ValueError(f"unknown output activation {output!r}")
        self.sizes = tuple(int(s) for s in sizes)
        self.output = output
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.params: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def weights(self, layer: int) -> tuple[np.ndarray, np.ndarray]:
        return self.params[2 * layer], self.params[2 * layer + 1]

    def forward(self, x):
        """Return ``(output, cache)``; the cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ShapeMismatch(f"expected input width {self.sizes[0]}, got shape {np.shape(x)}")
        acts = [x]
        h = x
        for i in range(self.n_layers):
            W, b = self.weights(i)
            z = h @ W + b
            if i < self.n_layers - 1:
                h = np.maximum(z, 0.0)
            else:
                h = sigmoid(z) if self.output == "sigmoid" else z
            acts.append(h)
        out = h[0] if squeeze else h
        return out, (acts, squeeze)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        """Reverse-mode pass: gradients w.r.t. all params and w.r.t. the input."""
        acts, squeeze = cache
        g = np.asarray(grad_out, dtype=float)
        if squeeze:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ShapeMismatch("output gradient does not match the cached forward pass")
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        last = self.n_layers - 1
        for i in range(last, -1, -1):
            out = acts[i + 1]
            if i == last:
                if self.output == "sigmoid":
                    g = g * out * (1.0 - out)
            else:
                g = g * (out > 0)
            W, _ = self.weights(i)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ W.T
        return grads, (g[0] if squeeze else g)

    # -- utilities ------------------------------------------------------------
    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes, clone.output = self.sizes, self.output
        clone.params = [p.copy() for p in self.params]
        return clone

    def same_architecture(self, other: "Mlp") -> bool:
        return self.sizes == other.sizes and self.output == other.output

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "output": self.output,
            "params": [p.tolist() for p in self.params],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mlp":
        net = cls.__new__(cls)
        net.sizes = tuple(int(s) for s in data["sizes"])
        net.output = data["output"]
        net.params = [np.asarray(p, dtype=float) for p in data["params"]]
        for i, (a, b) in enumerate(zip(net.sizes[:-1], net.sizes[1:])):
            if net.params[2 * i].shape != (a, b) or net.params[2 * i + 1].shape != (b,):
                raise ArchitectureMismatch("stored parameters do not match layer sizes")
        return net


class Adam:
    """Bias-corrected Adam over a list of arrays, updated in place."""

    def __init__(self, params: Sequence[np.ndarray], lr: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        if len(params) != len(self.m):
            raise ShapeMismatch("parameter list does not match optimizer state")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ShapeMismatch("gradient shape does not match parameter")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def to_dict(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t,
                "m": [a.tolist() for a in self.m], "v": [a.tolist() for a in self.v]}

    def load_dict(self, data: dict) -> None:
        self.lr, self.beta1, self.beta2, self.eps = data["lr"], data["beta1"], data["beta2"], data["eps"]
        self.t = int(data["t"])
        self.m = [np.asarray(a, dtype=float).reshape(m.shape) for a, m in zip(data["m"], self.m)]
        self.v = [np.asarray(a, dtype=float).reshape(v.shape) for a, v in zip(data["v"], self.v)]


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    """theta' <- tau * theta + (1 - tau) * theta', in place."""
    if not target.same_architecture(online):
        raise ArchitectureMismatch(f"{target.sizes}/{target.output} vs {online.sizes}/{online.output}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for t, o in zip(target.params, online.params):
        t *= 1.0 - tau
        t += tau * o


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_grad_norm(grads: Sequence[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Rescale ``grads`` jointly so their global L2 norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if norm > max_norm > 0:
        scale = max_norm / norm
        return [g * scale for g in grads], norm
    return list(grads), norm
