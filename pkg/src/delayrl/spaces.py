from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Discrete:
    n: int

    @property
    def dim(self) -> int:
        return 1

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))

    def clip(self, a):
        a = int(a)
        if not 0 <= a < self.n:
            raise ConfigurationError(f"action {a} outside Discrete({self.n})")
        return a

    def contains(self, a) -> bool:
        return isinstance(a, (int, np.integer)) and 0 <= a < self.n


@dataclass(frozen=True)
class Box:
    """Bounded real actions; ``low``/``high`` are scalars or per-dimension arrays."""

    low: float | tuple
    high: float | tuple
    dim: int = 1

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.low, float), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.high, float), (self.dim,)).copy()
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    def _bounds(self):
        return self._lo, self._hi

    def sample(self, rng: np.random.Generator):
        lo, hi = self._bounds()
        a = rng.uniform(lo, hi)
        return float(a[0]) if self.dim == 1 else a

    def clip(self, a):
        lo, hi = self._bounds()
        if self.dim == 1:
            a = float(a) if isinstance(a, (float, int)) else float(np.asarray(a).reshape(-1)[0])
            return min(max(a, float(lo[0])), float(hi[0]))
        return np.clip(np.asarray(a, float), lo, hi)

    def scale(self, a) -> np.ndarray:
        """Affine map of the bounds onto [-1, 1]."""
        return (2.0 * (np.asarray(a, float).reshape(self.dim) - self._lo) / (self._hi - self._lo)) - 1.0

    def unscale(self, z) -> np.ndarray:
        lo, hi = self._bounds()
        return lo + (np.asarray(z, float).reshape(self.dim) + 1.0) * 0.5 * (hi - lo)
