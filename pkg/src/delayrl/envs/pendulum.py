"""Pendulum swing-up with the usual gym constants.

State is ``(theta, theta_dot)`` with theta wrapped to (-pi, pi] and 0 upright.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..mdp import Env
from ..spaces import Box
from .noise import NoiseSpec, apply_noise

G, MASS, LENGTH, DT = 10.0, 1.0, 1.0, 0.05
MAX_TORQUE, MAX_SPEED = 2.0, 8.0
EPISODE_LENGTH = 200


@njit(cache=True)
def wrap_angle(th):
    th = ((th + math.pi) % (2.0 * math.pi)) - math.pi
    if th == -math.pi:
        th = math.pi
    return th


@njit(cache=True)
def physics_step(th, thdot, u, fraction):
    """Semi-implicit Euler over ``fraction * DT``; reward uses the pre-step state."""
    u = min(max(u, -MAX_TORQUE), MAX_TORQUE)
    thn = wrap_angle(th)
    reward = -(thn * thn + 0.1 * thdot * thdot + 0.001 * u * u) * fraction
    h = DT * fraction
    acc = 3.0 * G / (2.0 * LENGTH) * math.sin(th) + 3.0 / (MASS * LENGTH * LENGTH) * u
    thdot = min(max(thdot + acc * h, -MAX_SPEED), MAX_SPEED)
    th = wrap_angle(th + thdot * h)
    return th, thdot, reward


def pendulum_step(state, torque: float, dt_fraction: float = 1.0):
    th, thdot, r = physics_step(float(state[0]), float(state[1]), float(torque), float(dt_fraction))
    return np.array([th, thdot]), r


def energy(state) -> float:
    """Mechanical energy scaled so the upright rest state has energy 5."""
    return float(state[1]) ** 2 / 6.0 + 5.0 * math.cos(float(state[0]))


class PendulumEnv(Env):
    action_space = Box(-MAX_TORQUE, MAX_TORQUE)
    observation_size = 3

    def __init__(self, noise: NoiseSpec | None = None, episode_length: int | None = EPISODE_LENGTH):
        super().__init__()
        self.noise = noise
        self.episode_length = episode_length

    def initial_state(self, rng):
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])

    def _coerce(self, state):
        s = np.asarray(state, dtype=float).reshape(2).copy()
        s[0] = wrap_angle(s[0])
        s[1] = min(max(s[1], -MAX_SPEED), MAX_SPEED)
        return s

    def advance(self, state, action, fraction: float, rng):
        """Pure partial step; ``rng=None`` disables action noise."""
        u = float(np.asarray(action).reshape(-1)[0])
        if rng is not None and self.noise is not None:
            u = apply_noise(self.noise, u, rng, -MAX_TORQUE, MAX_TORQUE)
        return pendulum_step(state, u, fraction)

    def step(self, action):
        self.state, r = self.advance(self.state, action, 1.0, self.rng)
        return self.state, r, False, {}

    def encode_state(self, state) -> np.ndarray:
        th, thdot = float(state[0]), float(state[1])
        return np.array([math.cos(th), math.sin(th), thdot / MAX_SPEED])

    def state_distance(self, s1, s2) -> float:
        dth = abs(wrap_angle(float(s1[0]) - float(s2[0])))
        return math.hypot(dth, float(s1[1]) - float(s2[1]))
