"""Action-noise generators for the stochastic pendulum.

Additive noises draw eta from a base distribution and perturb the action by
``scale * (eta + shift)``. For the beta family the tabulated shift of 0.5 is
applied with a negative sign by default, which makes the symmetric members
zero-mean; ``literal=True`` restores ``eta + 0.5``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

_KINDS = ("beta", "triangular", "lognormal", "uniform-override")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    params: tuple = ()
    shift: float = 0.0
    scale: float = 1.0
    p: float = 0.1
    literal: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown noise kind {self.kind!r}; expected one of {_KINDS}")
        if not 0 <= self.p <= 1:
            raise ConfigurationError("override probability must lie in [0, 1]")

    def offset(self) -> float:
        if self.kind == "beta" and not self.literal:
            return -self.shift
        return self.shift

    def sample_eta(self, rng: np.random.Generator, size=None):
        if self.kind == "beta":
            return rng.beta(*self.params, size=size)
        if self.kind == "triangular":
            return rng.triangular(*self.params, size=size)
        if self.kind == "lognormal":
            return rng.lognormal(*self.params, size=size)
        raise ConfigurationError("uniform-override has no additive component")

    def sample(self, rng: np.random.Generator, size=None):
        """Additive perturbation epsilon."""
        return self.scale * (self.sample_eta(rng, size) + self.offset())

    def moments(self) -> tuple[float, float]:
        """Analytic mean and variance of epsilon."""
        if self.kind == "beta":
            a, b = self.params
            m, v = a / (a + b), a * b / ((a + b) ** 2 * (a + b + 1))
        elif self.kind == "triangular":
            lo, mode, hi = self.params
            m = (lo + mode + hi) / 3
            v = (lo**2 + mode**2 + hi**2 - lo * mode - lo * hi - mode * hi) / 18
        elif self.kind == "lognormal":
            mu, s = self.params
            m = np.exp(mu + s**2 / 2)
            v = (np.exp(s**2) - 1) * np.exp(2 * mu + s**2)
        else:
            raise ConfigurationError("uniform-override has no additive component")
        return float(self.scale * (m + self.offset())), float(self.scale**2 * v)


NOISE_PRESETS = {
    "beta(8,2)": NoiseSpec("beta", (8.0, 2.0), shift=0.5, scale=2.0),
    "beta(2,2)": NoiseSpec("beta", (2.0, 2.0), shift=0.5, scale=2.0),
    "beta(0.5,0.5)": NoiseSpec("beta", (0.5, 0.5), shift=0.5, scale=2.0),
    "triangular": NoiseSpec("triangular", (-2.0, 1.0, 2.0), shift=0.0, scale=1.0),
    "lognormal(1)": NoiseSpec("lognormal", (0.0, 1.0), shift=-1.0, scale=1.0),
    "lognormal(0.1)": NoiseSpec("lognormal", (0.0, 0.1), shift=-1.0, scale=1.0),
    "uniform": NoiseSpec("uniform-override", p=0.1),
}


def noise_from_name(name: str, literal: bool = False) -> NoiseSpec:
    try:
        spec = NOISE_PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown noise {name!r}; known: {sorted(NOISE_PRESETS)}") from None
    if literal:
        spec = NoiseSpec(spec.kind, spec.params, spec.shift, spec.scale, spec.p, literal=True)
    return spec


def apply_noise(spec: NoiseSpec | None, a: float, rng: np.random.Generator,
                low: float = -2.0, high: float = 2.0) -> float:
    if spec is None:
        return float(min(max(a, low), high))
    if spec.kind == "uniform-override":
        if rng.random() < spec.p:
            a = rng.uniform(low, high)
    elif spec.scale != 0.0:
        a = a + float(spec.sample(rng))
    return float(min(max(a, low), high))
