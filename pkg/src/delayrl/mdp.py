"""Environment abstraction, trajectories, returns and exact solvers for finite MDPs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalError
from .spaces import Discrete

Policy = Callable[..., Any]


class Env:
    """Episodic environment with an explicit, inspectable state.

    ``step`` returns ``(obs, reward, terminal, info)``; ``terminal`` flags true
    absorbing states only. Episode time limits are enforced by the driver
    (``rollout``, ``DelayedEnv``) through ``episode_length``.
    """

    action_space: Any
    observation_size: int = 1
    episode_length: int | None = None

    def __init__(self):
        self.state = None
        self.rng = np.random.default_rng()

    def seed(self, seed) -> None:
        self.rng = np.random.default_rng(seed)

    def reset(self, seed=None, state=None):
        if seed is not None:
            self.seed(seed)
        self.state = self.initial_state(self.rng) if state is None else self._coerce(state)
        return self.observe()

    def observe(self):
        return self.state

    def _coerce(self, state):
        return state

    def initial_state(self, rng):
        raise NotImplementedError

    def step(self, action):
        raise NotImplementedError

    # Encodings consumed by function approximators (see dida.encode_augmented).
    def encode_state(self, state) -> np.ndarray:
        return np.atleast_1d(np.asarray(state, dtype=float))

    def encode_action(self, action) -> np.ndarray:
        if isinstance(self.action_space, Discrete):
            z = np.zeros(self.action_space.n)
            z[int(action)] = 1.0
            return z
        return self.action_space.scale(action)

    def state_distance(self, s1, s2) -> float:
        return float(np.linalg.norm(np.atleast_1d(np.asarray(s1, float) - np.asarray(s2, float))))


@dataclass
class Transition:
    t: int
    state: Any
    action: Any
    reward: float
    next_state: Any


@dataclass
class Trajectory:
    transitions: list[Transition] = field(default_factory=list)
    terminal: bool = False

    def __len__(self):
        return len(self.transitions)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([tr.reward for tr in self.transitions], dtype=float)

    @property
    def states(self) -> list:
        return [tr.state for tr in self.transitions]

    @property
    def actions(self) -> list:
        return [tr.action for tr in self.transitions]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s", "a", "r"])
            for tr in self.transitions:
                w.writerow([tr.t, _flat(tr.state), _flat(tr.action), repr(float(tr.reward))])


def _flat(v) -> str:
    if hasattr(v, "base_state"):  # augmented observation
        v = v.flat()
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.size == 1:
        x = arr[0]
        return str(int(x)) if float(x).is_integer() and not isinstance(v, float) else repr(float(x))
    return " ".join(repr(float(x)) for x in arr)


def call_policy(policy: Policy, obs, rng):
    try:
        return policy(obs, rng)
    except TypeError:
        return policy(obs)


def rollout(env: Env, policy: Policy, horizon: int, seed=None, start=None) -> Trajectory:
    """Run one episode of at most ``horizon`` steps.

    The same seed drives both the environment and the policy's sampling, so
    equal seeds give identical trajectories.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    want = getattr(policy, "input_size", None)
    if want is not None and want != env.observation_size:
        raise ConfigurationError(
            f"policy expects inputs of size {want}, environment produces {env.observation_size}"
        )
    rng = np.random.default_rng(seed)
    obs = env.reset(seed=rng.integers(2**63), state=start)
    traj = Trajectory()
    limit = horizon if env.episode_length is None else min(horizon, env.episode_length)
    for t in range(limit):
        a = call_policy(policy, obs, rng)
        nxt, r, terminal, _ = env.step(a)
        if not math.isfinite(r):
            raise NumericalError(f"non-finite reward {r} at t={t}")
        traj.transitions.append(Transition(t, obs, a, float(r), nxt))
        obs = nxt
        if terminal:
            traj.terminal = True
            break
    return traj


def discounted_return(traj: Trajectory | Sequence[float], gamma: float) -> float:
    """Sum of gamma**t * r_t with t the environment time of each record."""
    if isinstance(traj, Trajectory):
        times = np.array([tr.t for tr in traj.transitions], dtype=float)
        rewards = traj.rewards
    else:
        rewards = np.asarray(traj, dtype=float)
        times = np.arange(len(rewards), dtype=float)
    if rewards.size == 0:
        return 0.0
    return float(np.sum(rewards * np.power(gamma, times)))


def truncation_horizon(gamma: float, r_max: float, tol: float = 1e-6) -> int:
    """Smallest H with gamma**H * r_max / (1 - gamma) <= tol."""
    if r_max <= 0 or gamma == 0:
        return 1
    return max(1, math.ceil(math.log(tol * (1 - gamma) / r_max) / math.log(gamma)))


@dataclass
class FiniteMdp:
    """Explicit-tensor MDP: ``p[s, a, s']``, mean reward ``r[s, a]``.

    States and actions carry real embeddings so Lipschitz constants and
    Wasserstein distances are defined on the real line.
    """

    p: np.ndarray
    r: np.ndarray
    gamma: float
    mu: np.ndarray | None = None
    state_embedding: np.ndarray | None = None
    action_embedding: np.ndarray | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.p.ndim != 3 or self.p.shape[0] != self.p.shape[2]:
            raise ConfigurationError(f"transition tensor must be (S, A, S), got {self.p.shape}")
        S, A, _ = self.p.shape
        if self.r.shape != (S, A):
            raise ConfigurationError(f"reward table must be ({S}, {A}), got {self.r.shape}")
        if np.any(self.p < 0) or np.max(np.abs(self.p.sum(-1) - 1)) > 1e-12:
            raise ConfigurationError("transition rows must be probability vectors")
        if not 0 <= self.gamma < 1:
            raise ConfigurationError(f"discount must lie in [0, 1), got {self.gamma}")
        self.mu = np.full(S, 1.0 / S) if self.mu is None else np.asarray(self.mu, dtype=float)
        if self.state_embedding is None:
            self.state_embedding = np.arange(S, dtype=float)
        if self.action_embedding is None:
            self.action_embedding = np.arange(A, dtype=float)
        self.state_embedding = np.asarray(self.state_embedding, dtype=float)
        self.action_embedding = np.asarray(self.action_embedding, dtype=float)
        if not (np.all(np.isfinite(self.state_embedding)) and np.all(np.isfinite(self.action_embedding))):
            raise ConfigurationError("embeddings must be finite")

    @property
    def n_states(self) -> int:
        return self.p.shape[0]

    @property
    def n_actions(self) -> int:
        return self.p.shape[1]

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "p": self.p.tolist(),
            "r": self.r.tolist(),
            "mu": self.mu.tolist(),
            "state_embedding": self.state_embedding.tolist(),
            "action_embedding": self.action_embedding.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMdp":
        return cls(
            p=np.array(d["p"]),
            r=np.array(d["r"]),
            gamma=d["gamma"],
            mu=np.array(d["mu"]),
            state_embedding=np.array(d["state_embedding"]),
            action_embedding=np.array(d["action_embedding"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "FiniteMdp":
        return cls.from_dict(json.loads(Path(path).read_text()))


class FiniteMdpEnv(Env):
    """Sampling environment over a ``FiniteMdp`` (rewards are the mean table)."""

    def __init__(self, mdp: FiniteMdp, episode_length: int | None = None, terminal_states=()):
        super().__init__()
        self.mdp = mdp
        self.action_space = Discrete(mdp.n_actions)
        self.observation_size = mdp.n_states
        self.episode_length = episode_length
        self.terminal_states = frozenset(terminal_states)
        self._cdf = np.cumsum(mdp.p, axis=-1)

    def initial_state(self, rng):
        return int(rng.choice(self.mdp.n_states, p=self.mdp.mu))

    def _coerce(self, state):
        return int(state)

    def sample_next(self, s: int, a: int, rng) -> int:
        return int(min(np.searchsorted(self._cdf[s, a], rng.random(), side="right"), self.mdp.n_states - 1))

    def step(self, action):
        s, a = self.state, int(action)
        r = float(self.mdp.r[s, a])
        self.state = self.sample_next(s, a, self.rng)
        return self.state, r, self.state in self.terminal_states, {}

    def encode_state(self, state) -> np.ndarray:
        z = np.zeros(self.mdp.n_states)
        z[int(state)] = 1.0
        return z

    def state_distance(self, s1, s2) -> float:
        e = self.mdp.state_embedding
        return float(abs(e[int(s1)] - e[int(s2)]))


def policy_matrix(mdp: FiniteMdp, policy) -> np.ndarray:
    """Accept an (S, A) probability table or a vector of deterministic actions."""
    pi = np.asarray(getattr(policy, "probs", policy), dtype=float)
    if pi.ndim == 1:
        pi = np.eye(mdp.n_actions)[pi.astype(int)]
    if pi.shape != (mdp.n_states, mdp.n_actions):
        raise ConfigurationError(f"policy table must be {(mdp.n_states, mdp.n_actions)}, got {pi.shape}")
    if np.max(np.abs(pi.sum(1) - 1)) > 1e-9 or np.any(pi < 0):
        raise ConfigurationError("policy rows must sum to 1")
    return pi


def solve_v_exact(mdp: FiniteMdp, policy) -> np.ndarray:
    """Solve (I - gamma P^pi) V = r^pi with a dense LU factorization."""
    pi = policy_matrix(mdp, policy)
    P_pi = np.einsum("sa,sat->st", pi, mdp.p)
    r_pi = np.einsum("sa,sa->s", pi, mdp.r)
    A = np.eye(mdp.n_states) - mdp.gamma * P_pi
    try:
        v = np.linalg.solve(A, r_pi)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - impossible for gamma < 1
        raise NumericalError(f"policy evaluation system is singular: {exc}") from exc
    return v


def solve_q_exact(mdp: FiniteMdp, policy) -> np.ndarray:
    v = solve_v_exact(mdp, policy)
    return mdp.r + mdp.gamma * mdp.p @ v


def occupancy(P_pi: np.ndarray, gamma: float, start: np.ndarray) -> np.ndarray:
    """Discounted state distribution (1 - gamma) * start^T (I - gamma P_pi)^-1."""
    n = P_pi.shape[0]
    return (1 - gamma) * np.linalg.solve((np.eye(n) - gamma * P_pi).T, start)


def mc_value_estimate(env: Env, policy: Policy, start, n_episodes: int, horizon: int,
                      gamma: float, seed=None) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the discounted return from ``start``."""
    if n_episodes < 2:
        raise ConfigurationError("need at least two episodes for a standard error")
    seeds = np.random.SeedSequence(seed).spawn(n_episodes)
    returns = np.array([
        discounted_return(rollout(env, policy, horizon, seed=ss, start=start), gamma) for ss in seeds
    ])
    return float(returns.mean()), float(returns.std(ddof=1) / math.sqrt(n_episodes))
