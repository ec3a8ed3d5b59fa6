"""Feed-forward imitator: torch for training, numpy for per-step inference."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import ConfigurationError, NumericalError, UsageError


@dataclass
class ModelConfig:
    hidden: tuple = (100, 100, 10)
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 5
    mode: str = "regression"  # or "classification"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.mode not in ("regression", "classification"):
            raise ConfigurationError(f"unknown model mode {self.mode!r}")


def _mlp(n_in: int, hidden, n_out: int) -> nn.Sequential:
    layers, width = [], n_in
    for h in hidden:
        layers += [nn.Linear(width, h), nn.ReLU()]
        width = h
    layers.append(nn.Linear(width, n_out))
    return nn.Sequential(*layers).double()


class PolicyModel:
    """Maps an encoded augmented state to an action vector (regression) or
    class scores (classification). Regression outputs live in the scaled
    action space [-1, 1] and are clamped there on query."""

    def __init__(self, input_size: int, output_size: int, config: ModelConfig = ModelConfig(), seed=0):
        self.input_size = int(input_size)
        self.output_size = int(output_size)
        self.config = config
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        torch.manual_seed(int(ss.generate_state(1)[0]))
        self.net = _mlp(self.input_size, config.hidden, self.output_size)
        self.optimizer = torch.optim.Adam(self.net.parameters(), lr=config.lr)
        self.train_loss = float("nan")
        self._sync()

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.net.parameters())

    def _sync(self):
        linear = [m for m in self.net if isinstance(m, nn.Linear)]
        self._layers = [(m.weight.detach().numpy().copy(), m.bias.detach().numpy().copy()) for m in linear]

    def forward(self, X) -> np.ndarray:
        h = np.asarray(X, dtype=float)
        for W, b in self._layers[:-1]:
            h = np.maximum(h @ W.T + b, 0.0)
        W, b = self._layers[-1]
        return h @ W.T + b

    def predict(self, x) -> np.ndarray:
        """Clamped action (regression) or class probabilities (classification)."""
        out = self.forward(x)
        if self.config.mode == "regression":
            return np.clip(out, -1.0, 1.0)
        z = np.exp(out - out.max(-1, keepdims=True))
        return z / z.sum(-1, keepdims=True)

    def fit(self, X, Y, epochs: int | None = None, seed=0, shuffle: bool = True) -> float:
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise UsageError("cannot train on an empty dataset")
        if X.shape[1] != self.input_size:
            raise ConfigurationError(f"inputs have width {X.shape[1]}, model expects {self.input_size}")
        xt = torch.from_numpy(X)
        if self.config.mode == "regression":
            yt = torch.from_numpy(np.asarray(Y, dtype=float).reshape(len(X), self.output_size))
            loss_fn = nn.MSELoss()
        else:
            yt = torch.from_numpy(np.asarray(Y, dtype=np.int64).reshape(len(X)))
            loss_fn = nn.CrossEntropyLoss()
        rng = np.random.default_rng(seed)
        bs = self.config.batch_size
        epochs = self.config.epochs if epochs is None else epochs
        n = len(X)
        for epoch in range(epochs):
            order = rng.permutation(n) if shuffle else np.arange(n)
            total = 0.0
            for start in range(0, n, bs):
                idx = torch.from_numpy(order[start:start + bs])
                self.optimizer.zero_grad()
                loss = loss_fn(self.net(xt[idx]), yt[idx])
                value = float(loss.detach())
                if not math.isfinite(value):
                    raise NumericalError(
                        f"training loss became {value} (epoch {epoch}, batch starting at {start}, "
                        f"{n} samples, lr {self.config.lr})"
                    )
                loss.backward()
                self.optimizer.step()
                total += value * len(idx)
            self.train_loss = total / n
        self._sync()
        return self.train_loss

    def evaluate_loss(self, X, Y) -> float:
        with torch.no_grad():
            out = self.net(torch.from_numpy(np.asarray(X, dtype=float)))
            if self.config.mode == "regression":
                y = torch.from_numpy(np.asarray(Y, dtype=float).reshape(out.shape))
                return float(nn.functional.mse_loss(out, y))
            y = torch.from_numpy(np.asarray(Y, dtype=np.int64))
            return float(nn.functional.cross_entropy(out, y))

    # -- checkpoints ---------------------------------------------------------
    def save(self, path) -> None:
        """First line: JSON layout header; then one parameter per line."""
        layout = [[name, list(p.shape)] for name, p in self.net.named_parameters()]
        header = {"input_size": self.input_size, "output_size": self.output_size,
                  "config": asdict(self.config), "layout": layout, "train_loss": self.train_loss}
        flat = torch.cat([p.detach().reshape(-1) for p in self.net.parameters()]).numpy()
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            fh.write("\n".join(repr(float(v)) for v in flat) + "\n")

    @classmethod
    def load(cls, path) -> "PolicyModel":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0])
        model = cls(header["input_size"], header["output_size"], ModelConfig(**header["config"]))
        flat = np.array([float(v) for v in lines[1:]])
        offset = 0
        with torch.no_grad():
            for (name, shape), p in zip(header["layout"], model.net.parameters()):
                size = int(np.prod(shape))
                p.copy_(torch.from_numpy(flat[offset:offset + size].reshape(shape)))
                offset += size
        if offset != flat.size:
            raise ConfigurationError(f"checkpoint holds {flat.size} values, layout needs {offset}")
        model.train_loss = header.get("train_loss", float("nan"))
        model._sync()
        return model


__all__ = ["ModelConfig", "PolicyModel"]
