"""Feed-forward regression baseline on the agents' network core."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from ..agents.nn import Adam, Mlp
from ..errors import EmptyData, ShapeMismatch


@dataclass
class MlpRegressor:
    """Squared-loss MLP with L2 weight decay and minibatch Adam.

    Targets are standardized internally and mapped back on prediction.
    ``learning_rate="adaptive"`` divides the step size by 5 whenever the
    epoch loss fails to improve twice in a row; ``"constant"`` keeps it.
    """

    hidden: tuple[int, ...] = (16, 8, 4)
    l2: float = 1e-3
    learning_rate: Literal["constant", "adaptive"] = "constant"
    lr: float = 1e-3
    epochs: int = 200
    batch_size: int = 200
    seed: int = 0
    net: Mlp | None = field(default=None, repr=False)
    y_mean: float = 0.0
    y_std: float = 1.0
    loss_curve: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if isinstance(self.hidden, int):
            self.hidden = (self.hidden,)
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.learning_rate not in ("constant", "adaptive"):
            raise ValueError("learning_rate must be 'constant' or 'adaptive'")

    def loss_and_grads(self, X, y_std):
        """Objective 0.5 * mean(err^2) + 0.5 * l2 * sum(W^2) / n and its gradients."""
        n = X.shape[0]
        out, cache = self.net.forward(X)
        err = out[:, 0] - y_std
        weights = self.net.params[0::2]
        loss = 0.5 * float(np.mean(err ** 2)) + 0.5 * self.l2 * sum(float(np.sum(W * W)) for W in weights) / n
        grads, _ = self.net.backward(cache, (err / n)[:, None])
        for k in range(0, len(grads), 2):
            grads[k] = grads[k] + self.l2 * self.net.params[k] / n
        return loss, grads

    def fit(self, X, y) -> "MlpRegressor":
        X = np.asarray(getattr(X, "values", X), dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ShapeMismatch("X must be 2-D with one row per target")
        if y.size == 0:
            raise EmptyData("cannot fit on an empty dataset")
        rng = np.random.default_rng(self.seed)
        self.net = Mlp((X.shape[1], *self.hidden, 1), "identity", rng)
        self.y_mean = float(y.mean())
        self.y_std = float(y.std()) or 1.0
        ys = (y - self.y_mean) / self.y_std
        opt = Adam(self.net.params, self.lr)
        best, stall = np.inf, 0
        self.loss_curve = []
        for _ in range(self.epochs):
            perm = rng.permutation(y.size)
            total = 0.0
            for s in range(0, y.size, self.batch_size):
                idx = perm[s:s + self.batch_size]
                loss, grads = self.loss_and_grads(X[idx], ys[idx])
                opt.step(self.net.params, grads)
                total += loss * idx.size
            epoch_loss = total / y.size
            self.loss_curve.append(epoch_loss)
            if epoch_loss < best - 1e-4:
                best, stall = epoch_loss, 0
            else:
                stall += 1
                if self.learning_rate == "adaptive" and stall >= 2:
                    opt.lr /= 5.0
                    stall = 0
        return self

    def predict(self, X) -> np.ndarray:
        if self.net is None:
            raise RuntimeError("model is not fitted")
        X = np.asarray(getattr(X, "values", X), dtype=float)
        return self.net(X)[:, 0] * self.y_std + self.y_mean

    def to_dict(self) -> dict:
        return {"hidden": list(self.hidden), "l2": self.l2, "learning_rate": self.learning_rate,
                "lr": self.lr, "epochs": self.epochs, "batch_size": self.batch_size, "seed": self.seed,
                "y_mean": self.y_mean, "y_std": self.y_std, "net": self.net.to_dict() if self.net else None}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpRegressor":
        model = cls(hidden=tuple(d["hidden"]), l2=d["l2"], learning_rate=d["learning_rate"], lr=d["lr"],
                    epochs=d["epochs"], batch_size=d["batch_size"], seed=d["seed"])
        model.y_mean, model.y_std = float(d["y_mean"]), float(d["y_std"])
        model.net = Mlp.from_dict(d["net"]) if d["net"] else None
        return model


def fit_mlp(X, y, hidden: Sequence[int] | int = (16, 8, 4), l2: float = 1e-3,
            learning_rate: str = "constant", epochs: int = 200, seed: int = 0) -> MlpRegressor:
    return MlpRegressor(hidden=hidden, l2=l2, learning_rate=learning_rate, epochs=epochs, seed=seed).fit(X, y)
