"""Finite 1-D chain MDPs with measurable Lipschitz constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..errors import ConfigurationError
from ..mdp import FiniteMdp, FiniteMdpEnv
from ..wasserstein import pairwise_w1

ACTION_EMBEDDING = np.array([-1.0, 0.0, 1.0])  # left, stay, right


def make_chain_mdp(n_states: int, slip: float, state_cost=None, action_cost: float = 0.1,
                   gamma: float = 0.9, mu=None) -> FiniteMdp:
    """Chain with left/stay/right moves that fail (stay put) with probability ``slip``.

    Reward is -(state_cost[s] + action_cost * |move|); the default state cost
    is the distance to the right end. Moves off the ends are blocked.
    """
    if n_states < 2:
        raise ConfigurationError("a chain needs at least two states")
    if not 0.0 <= slip <= 1.0:
        raise ConfigurationError(f"slip must lie in [0, 1], got {slip}")
    if state_cost is None:
        state_cost = np.abs(np.arange(n_states) - (n_states - 1), dtype=float)
    state_cost = np.asarray(state_cost, dtype=float)
    if state_cost.shape != (n_states,):
        raise ConfigurationError("state_cost needs one entry per state")
    p = np.zeros((n_states, 3, n_states))
    for s in range(n_states):
        for a, move in enumerate((-1, 0, 1)):
            dest = min(max(s + move, 0), n_states - 1)
            p[s, a, s] += slip
            p[s, a, dest] += 1.0 - slip
    r = -(state_cost[:, None] + action_cost * np.abs(ACTION_EMBEDDING)[None, :])
    return FiniteMdp(p, r, gamma, mu=mu, action_embedding=ACTION_EMBEDDING.copy())


@dataclass(frozen=True)
class LipschitzConstants:
    l_p: float
    l_r: float
    l_t: float


def measure_constants(mdp: FiniteMdp) -> LipschitzConstants:
    """Exact maxima over all state-action pairs with W1 on the embeddings."""
    S, A = mdp.n_states, mdp.n_actions
    e, g = mdp.state_embedding, mdp.action_embedding
    rows = mdp.p.reshape(S * A, S)
    dist = (np.abs(e[:, None, None, None] - e[None, None, :, None])
            + np.abs(g[None, :, None, None] - g[None, None, None, :])).reshape(S * A, S * A)
    w = pairwise_w1(rows[:, None, :], rows[None, :, :], e)
    dr = np.abs(mdp.r.reshape(-1)[:, None] - mdp.r.reshape(-1)[None, :])
    off = ~np.eye(S * A, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_p = _ratio_max(w[off], dist[off])
        l_r = _ratio_max(dr[off], dist[off])
    l_t = float(np.max(np.einsum("sat,st->sa", mdp.p, np.abs(e[None, :] - e[:, None]))))
    return LipschitzConstants(l_p, l_r, l_t)


def _ratio_max(num, den) -> float:
    pos = den > 0
    if np.any(num[~pos] > 1e-15):
        return float("inf")
    return float(np.max(num[pos] / den[pos], initial=0.0))


class GeneratorChainEnv(FiniteMdpEnv):
    """Finite MDP whose kernels come from per-action rate matrices.

    P_t[a] = expm(t * rates[a]) so substep kernels compose exactly:
    P_f[a] @ P_{1-f}[a] = P_1[a].
    """

    def __init__(self, rates, r, gamma: float = 0.9, episode_length: int | None = None):
        self.rates = np.asarray(rates, dtype=float)
        if np.max(np.abs(self.rates.sum(-1))) > 1e-10:
            raise ConfigurationError("rate matrix rows must sum to zero")
        super().__init__(FiniteMdp(self.substep_kernel(1.0), r, gamma), episode_length)
        self._cache: dict[float, np.ndarray] = {}

    def substep_kernel(self, fraction: float) -> np.ndarray:
        k = np.stack([expm(fraction * q) for q in self.rates], axis=1)
        k = np.clip(k, 0.0, None)
        return k / k.sum(-1, keepdims=True)

    def advance(self, state, action, fraction, rng):
        key = round(float(fraction), 12)
        if key not in self._cache:
            self._cache[key] = np.cumsum(self.substep_kernel(fraction), axis=-1)
        reward = float(self.mdp.r[int(state), int(action)]) * fraction
        if rng is None:  # most likely successor
            cdf = self._cache[key][int(state), int(action)]
            return int(np.argmax(np.diff(cdf, prepend=0.0))), reward
        cdf = self._cache[key][int(state), int(action)]
        return int(min(np.searchsorted(cdf, rng.random(), side="right"), self.mdp.n_states - 1)), reward


def random_rates(n_states: int, n_actions: int, rng, scale: float = 1.0) -> np.ndarray:
    q = rng.uniform(0, scale, size=(n_actions, n_states, n_states))
    for a in range(n_actions):
        np.fill_diagonal(q[a], 0.0)
        q[a][np.diag_indices(n_states)] = -q[a].sum(-1)
    return q
