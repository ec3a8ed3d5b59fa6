"""Linear-Gaussian walk on the real line used for the delayed lower bound.

s' = s + a / L_pi + N(0, sigma^2),  r(s, a) = -L_Q L_pi |s + a / L_pi|.
The optimal undelayed policy a = -L_pi s earns zero reward at every step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..mdp import Env
from ..spaces import Box

STATE_CLIP = 50.0


@dataclass(frozen=True)
class GaussianWalkParams:
    l_pi: float = 1.0
    l_q: float = 1.0
    sigma: float = 0.1
    gamma: float = 0.9

    def __post_init__(self):
        if self.l_pi <= 0 or self.l_q <= 0 or self.sigma < 0 or not 0 <= self.gamma < 1:
            raise ConfigurationError(f"invalid gaussian-walk parameters {self}")

    @property
    def l_r(self) -> float:
        return self.l_q * self.l_pi


def gaussian_walk_step(s: float, a: float, params: GaussianWalkParams, rng):
    mean = s + a / params.l_pi
    r = -params.l_r * abs(mean)
    noise = params.sigma * rng.standard_normal() if (rng is not None and params.sigma > 0) else 0.0
    return float(np.clip(mean + noise, -STATE_CLIP, STATE_CLIP)), float(r)


class GaussianWalkEnv(Env):
    observation_size = 1

    def __init__(self, params: GaussianWalkParams = GaussianWalkParams(), init_scale: float = 1.0,
                 episode_length: int | None = None, action_bound: float = 10.0):
        super().__init__()
        self.params = params
        self.init_scale = init_scale
        self.episode_length = episode_length
        self.action_space = Box(-action_bound, action_bound)

    def initial_state(self, rng):
        return float(rng.uniform(-self.init_scale, self.init_scale))

    def _coerce(self, state):
        return float(state)

    def advance(self, state, action, fraction, rng):
        # Substeps split drift and diffusion proportionally.
        p = self.params
        mean = state + fraction * action / p.l_pi
        r = -p.l_r * abs(state + action / p.l_pi) * fraction
        if rng is not None and p.sigma > 0:
            mean += p.sigma * np.sqrt(fraction) * rng.standard_normal()
        return float(np.clip(mean, -STATE_CLIP, STATE_CLIP)), float(r)

    def step(self, action):
        self.state, r = gaussian_walk_step(self.state, float(action), self.params, self.rng)
        return self.state, r, False, {}
