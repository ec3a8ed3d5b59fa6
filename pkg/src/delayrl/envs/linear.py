"""Integrator s_dot = a with unit step length; exact under any step split."""
from __future__ import annotations

import numpy as np

from ..mdp import Env
from ..spaces import Box


class LinearSystemEnv(Env):
    observation_size = 1

    def __init__(self, bound: float = 1.0, episode_length: int | None = None):
        super().__init__()
        self.action_space = Box(-bound, bound)
        self.episode_length = episode_length

    def initial_state(self, rng):
        return 0.0

    def _coerce(self, state):
        return float(state)

    def advance(self, state, action, fraction, rng=None):
        a = float(np.asarray(action).reshape(-1)[0])
        return float(state) + fraction * a, -abs(float(state)) * fraction

    def step(self, action):
        self.state, r = self.advance(self.state, action, 1.0)
        return self.state, r, False, {}
