"""Undelayed expert policies: analytic swing-up control, value-iteration greedy
policies on finite MDPs, and the optimal policy of the Gaussian walk."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .envs.pendulum import MAX_TORQUE, wrap_angle
from .errors import ConfigurationError, NumericalError
from .mdp import FiniteMdp
from .wasserstein import pairwise_w1


class TabularPolicy:
    """Stochastic policy table ``probs[s, a]``; deterministic rows act greedily."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.ndim != 2 or np.max(np.abs(self.probs.sum(1) - 1)) > 1e-9:
            raise ConfigurationError("policy table rows must be probability vectors")
        self._cdf = np.cumsum(self.probs, axis=1)

    @classmethod
    def deterministic(cls, actions, n_actions: int) -> "TabularPolicy":
        return cls(np.eye(n_actions)[np.asarray(actions, dtype=int)])

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.probs.max(1), 1.0)))

    @property
    def actions(self) -> np.ndarray:
        return np.argmax(self.probs, axis=1)

    def __call__(self, s, rng=None):
        s = int(s)
        if rng is None or self.probs[s].max() == 1.0:
            return int(np.argmax(self.probs[s]))
        return int(min(np.searchsorted(self._cdf[s], rng.random(), side="right"), self.probs.shape[1] - 1))

    def lipschitz(self, mdp: FiniteMdp) -> float:
        """max W1(pi(.|s), pi(.|s')) / |e_s - e_s'| using the action embedding."""
        w = pairwise_w1(self.probs[:, None, :], self.probs[None, :, :], mdp.action_embedding)
        d = np.abs(mdp.state_embedding[:, None] - mdp.state_embedding[None, :])
        off = ~np.eye(mdp.n_states, dtype=bool)
        if np.any((d[off] == 0) & (w[off] > 0)):
            return float("inf")
        mask = off & (d > 0)
        return float(np.max(w[mask] / d[mask], initial=0.0))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"probs": self.probs.tolist()}))

    @classmethod
    def load(cls, path) -> "TabularPolicy":
        return cls(np.array(json.loads(Path(path).read_text())["probs"]))


def value_iteration_expert(mdp: FiniteMdp, tol: float = 1e-8, max_iter: int = 100_000) -> TabularPolicy:
    """Greedy policy of the optimal value; near-ties (within ``tol``) go to the lowest index."""
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    v = np.zeros(mdp.n_states)
    # Stop once the greedy policy is within tol of optimal in sup norm.
    stop = tol * (1 - mdp.gamma) / (2 * max(mdp.gamma, 1e-12))
    for _ in range(max_iter):
        q = mdp.r + mdp.gamma * mdp.p @ v
        v_new = q.max(1)
        if np.max(np.abs(v_new - v)) <= stop:
            v = v_new
            break
        v = v_new
    else:
        raise NumericalError(f"value iteration did not converge in {max_iter} sweeps")
    q = mdp.r + mdp.gamma * mdp.p @ v
    best = np.argmax(q >= q.max(1, keepdims=True) - tol, axis=1)
    return TabularPolicy.deterministic(best, mdp.n_actions)


class PendulumEnergyExpert:
    """Energy pumping far from upright blended smoothly into PD stabilization.

    The blend weight is a smoothstep in cos(theta) between ``c0`` and ``c1`` so
    the control law is continuous (and Lipschitz) everywhere. ``l_pi`` is a
    finite-difference Lipschitz audit with a safety margin.
    """

    def __init__(self, ke=1.0, kp=10.0, kd=2.0, c0=0.5, c1=0.95, audit_pairs=10_000, seed=0):
        self.ke, self.kp, self.kd, self.c0, self.c1 = ke, kp, kd, c0, c1
        self.audit = self.lipschitz_audit(audit_pairs, seed)
        self.l_pi = 1.25 * self.audit

    def torque(self, th, thdot):
        th = np.asarray(th, float)
        thdot = np.asarray(thdot, float)
        th = np.mod(th + np.pi, 2 * np.pi) - np.pi
        e = thdot**2 / 6.0 + 5.0 * np.cos(th)
        pump = self.ke * thdot * (5.0 - e)
        pd = -self.kp * th - self.kd * thdot
        z = np.clip((np.cos(th) - self.c0) / (self.c1 - self.c0), 0.0, 1.0)
        w = z * z * (3.0 - 2.0 * z)
        return np.clip((1.0 - w) * pump + w * pd, -MAX_TORQUE, MAX_TORQUE)

    def __call__(self, state, rng=None) -> float:
        return float(self.torque(wrap_angle(float(state[0])), float(state[1])))

    def lipschitz_audit(self, n_pairs: int, seed=0, eps: float = 1e-3) -> float:
        rng = np.random.default_rng(seed)
        th = rng.uniform(-np.pi, np.pi, n_pairs)
        thdot = rng.uniform(-8.0, 8.0, n_pairs)
        direction = rng.standard_normal((n_pairs, 2))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        d_th, d_thdot = eps * direction[:, 0], eps * direction[:, 1]
        du = np.abs(self.torque(th + d_th, thdot + d_thdot) - self.torque(th, thdot))
        return float(np.max(du) / eps)


class GaussianOptimalExpert:
    def __init__(self, l_pi: float = 1.0):
        self.l_pi = float(l_pi)

    def __call__(self, s, rng=None) -> float:
        return gaussian_optimal_expert(s, self.l_pi)


def gaussian_optimal_expert(s: float, l_pi: float) -> float:
    return -l_pi * float(s)


def make_expert(name: str, env=None, **params):
    if name == "pendulum-energy":
        return PendulumEnergyExpert(**params)
    if name == "gaussian-optimal":
        l_pi = params.get("l_pi", getattr(getattr(env, "params", None), "l_pi", 1.0))
        return GaussianOptimalExpert(l_pi)
    if name == "value-iteration":
        mdp = getattr(env, "mdp", None)
        if mdp is None:
            raise ConfigurationError("value-iteration expert needs a finite environment")
        return value_iteration_expert(mdp, **params)
    raise ConfigurationError(f"unknown expert {name!r} (key: expert.name)")


EXPERT_NAMES = ("pendulum-energy", "gaussian-optimal", "value-iteration")

__all__ = ["EXPERT_NAMES", "GaussianOptimalExpert", "PendulumEnergyExpert", "TabularPolicy",
           "gaussian_optimal_expert", "make_expert", "value_iteration_expert"]
