"""Constant integer and fractional delay wrappers, augmented states and exact beliefs.

Convention: a delay of ``delay`` means the observation lags ``delay`` true steps
and the augmented state carries exactly ``delay`` pending actions, oldest first.
The oldest queued action is the one that was applied at the observed state.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import CapabilityError, ConfigurationError, StateError
from .mdp import Env, FiniteMdp
from .spaces import Discrete


@dataclass(frozen=True)
class AugmentedState:
    base_state: Any
    queue: tuple = ()

    def flat(self) -> np.ndarray:
        parts = [np.atleast_1d(np.asarray(self.base_state, dtype=float))]
        parts += [np.atleast_1d(np.asarray(a, dtype=float)) for a in self.queue]
        return np.concatenate(parts)

    def __eq__(self, other):
        if not isinstance(other, AugmentedState) or len(self.queue) != len(other.queue):
            return False
        return np.array_equal(self.flat(), other.flat())

    def __hash__(self):
        return hash(self.flat().tobytes())


class DelayedEnv(Env):
    """Observation/reward-collection delay of ``delay`` steps around ``env``.

    ``step`` returns the reward realized at the true state, so returns are
    computed on true environment time. ``info["observed_reward"]`` carries the
    reward the agent is allowed to see now, r(s_{t-delay}, a_{t-delay}); it is
    what tabular learners consume.
    """

    def __init__(self, env: Env, delay: int, seed=None):
        super().__init__()
        if delay < 0 or int(delay) != delay:
            raise ConfigurationError(f"delay must be a nonnegative integer, got {delay}")
        self.env = env
        self.delay = int(delay)
        self.action_space = env.action_space
        self.episode_length = env.episode_length
        self.rng = np.random.default_rng(seed)
        self._states: deque | None = None
        self._rewards: deque | None = None
        self._queue: tuple = ()
        self.t = 0

    @property
    def queue_length(self) -> int:
        return self.delay

    @property
    def observation_size(self) -> int:
        space = self.action_space
        per_action = space.n if isinstance(space, Discrete) else space.dim
        return self.env.observation_size + self.queue_length * per_action

    # -- lifecycle ---------------------------------------------------------
    def reset(self, seed=None, state=None, queue=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.env.reset(seed=int(self.rng.integers(2**63)), state=state)
        if queue is None:
            queue = tuple(self.action_space.sample(self.rng) for _ in range(self.queue_length))
        else:
            queue = tuple(self.action_space.clip(a) for a in queue)
            if len(queue) != self.queue_length:
                raise ConfigurationError(f"queue must hold {self.queue_length} actions, got {len(queue)}")
        self._queue = queue
        self._states = deque([self.env.state], maxlen=self.delay + 1)
        self._rewards = deque()
        self.t = 0
        self._prefix()
        return self.observe()

    def _prefix(self):
        # Push the hidden state forward through the initial queue; these
        # rewards are pending observations, not part of the agent's return.
        for a in self._queue[: self.delay]:
            s, r, _, _ = self.env.step(a)
            self._states.append(s)
            self._rewards.append(r)

    def observe(self) -> AugmentedState:
        if self._states is None:
            raise StateError("environment must be reset before use")
        return AugmentedState(self._states[0], self._queue)

    @property
    def true_state(self):
        if self._states is None:
            raise StateError("environment must be reset before use")
        return self._states[-1]

    def expert_state(self):
        """State at which the next chosen action starts acting."""
        return self.true_state

    def _advance_true(self, a):
        return self.env.step(a)

    def step(self, action):
        if self._states is None:
            raise StateError("step called before reset")
        a = self.action_space.clip(action)
        s, r, terminal, info = self._advance_true(a)
        self._states.append(s)
        self._rewards.append(r)
        observed = self._rewards.popleft()
        self._queue = (self._queue + (a,))[1:] if self.queue_length else ()
        self.t += 1
        info = dict(info)
        info.update(observed_reward=observed, true_state=s, executed_action=a)
        return self.observe(), r, terminal, info


class FractionalDelayedEnv(DelayedEnv):
    """Delay ``n + f`` with ``0 < f < 1``: observation lag ``n``, execution lag ``f``.

    The queue holds ``n + 1`` actions; its newest entry is the action in
    effect at the true current state. Each unit step integrates ``f`` of the
    step under that action and ``1 - f`` under the new one. When both are
    equal the step is taken in one piece, so a constant action reproduces the
    undelayed trajectory exactly.
    """

    def __init__(self, env: Env, delay: float, seed=None):
        if not hasattr(env, "advance"):
            raise CapabilityError(f"{type(env).__name__} cannot advance by a fraction of a step")
        n = math.floor(delay)
        f = float(delay) - n
        if delay < 0 or not 0 < f < 1:
            raise ConfigurationError(f"fractional delay needs a non-integer delay > 0, got {delay}")
        super().__init__(env, n, seed)
        self.fraction = f
        self.total_delay = float(delay)

    @property
    def queue_length(self) -> int:
        return self.delay + 1

    def _split(self, s, prev, a, rng):
        if _same_action(prev, a):
            return self.env.advance(s, a, 1.0, rng)
        mid, r1 = self.env.advance(s, prev, self.fraction, rng)
        nxt, r2 = self.env.advance(mid, a, 1.0 - self.fraction, rng)
        return nxt, r1 + r2

    def _prefix(self):
        q = self._queue
        for k in range(self.delay):
            s, r = self._split(self.env.state, q[k], q[k + 1], self.env.rng)
            self.env.state = s
            self._states.append(s)
            self._rewards.append(r)

    def _advance_true(self, a):
        s, r = self._split(self.env.state, self._queue[-1], a, self.env.rng)
        self.env.state = s
        return s, r, False, {}

    def expert_state(self):
        s, _ = self.env.advance(self.true_state, self._queue[-1], self.fraction, None)
        return s


def _same_action(a, b) -> bool:
    return bool(np.array_equal(np.asarray(a), np.asarray(b)))


def wrap_delayed(env: Env, delay: int, seed=None) -> DelayedEnv:
    return DelayedEnv(env, delay, seed)


def wrap_fractional(env: Env, delay: float, seed=None) -> DelayedEnv:
    """Integer part becomes the queue, the remainder an execution substep."""
    if float(delay).is_integer():
        return DelayedEnv(env, int(delay), seed)
    return FractionalDelayedEnv(env, delay, seed)


def belief_exact(mdp: FiniteMdp, x: AugmentedState, delay: int | None = None) -> np.ndarray:
    """Push a Dirac at the observed state through the queued action kernels."""
    if delay is not None and len(x.queue) != delay:
        raise ConfigurationError(f"queue length {len(x.queue)} does not match delay {delay}")
    s = int(x.base_state)
    if not 0 <= s < mdp.n_states:
        raise ConfigurationError(f"base state {s} out of range")
    b = np.zeros(mdp.n_states)
    b[s] = 1.0
    for a in x.queue:
        if not 0 <= int(a) < mdp.n_actions:
            raise ConfigurationError(f"queued action {a} out of range")
        b = b @ mdp.p[:, int(a), :]
    return b


@dataclass
class CompositionReport:
    max_deviation: float
    confidence_bound: float
    exact_deviation: float
    n_samples: int
    passed: bool


def check_fractional_composition(target, sub_first, sub_second, n_samples: int, seed=None,
                                 confidence: float = 0.999, states=None) -> CompositionReport:
    """Compare the (first, then second) substep composition with the one-step kernel.

    Finite form: ``target`` is an (S, A, S) kernel and ``sub_first``/``sub_second``
    the substep kernels of the same shape. Each (s, a) row is estimated from
    ``n_samples`` sampled two-stage transitions; the confidence bound is a
    Hoeffding bound with a union over cells.

    Deterministic form: ``target``/``sub_first``/``sub_second`` are callables
    ``f(s, a) -> s'``; ``states`` is an iterable of (s, a) pairs to probe.
    """
    rng = np.random.default_rng(seed)
    if callable(target):
        dev = 0.0
        for s, a in states:
            got = sub_second(sub_first(s, a), a)
            dev = max(dev, float(np.max(np.abs(np.asarray(got, float) - np.asarray(target(s, a), float)))))
        return CompositionReport(dev, 0.0, dev, len(states), dev <= 1e-12)

    P = np.asarray(target, float)
    B1 = np.asarray(sub_first, float)
    B2 = np.asarray(sub_second, float)
    S, A, _ = P.shape
    exact = float(np.max(np.abs(np.einsum("saz,zat->sat", B1, B2) - P)))
    c1 = np.cumsum(B1, axis=-1)
    c2 = np.cumsum(B2, axis=-1)
    worst = 0.0
    for s in range(S):
        for a in range(A):
            z = np.minimum(np.searchsorted(c1[s, a], rng.random(n_samples), side="right"), S - 1)
            u = rng.random(n_samples)
            nxt = np.empty(n_samples, dtype=int)
            for zz in np.unique(z):
                m = z == zz
                nxt[m] = np.minimum(np.searchsorted(c2[zz, a], u[m], side="right"), S - 1)
            freq = np.bincount(nxt, minlength=S) / n_samples
            worst = max(worst, float(np.max(np.abs(freq - P[s, a]))))
    cells = S * A * S
    bound = math.sqrt(math.log(2 * cells / (1 - confidence)) / (2 * n_samples))
    return CompositionReport(worst, bound, exact, n_samples, worst <= bound)
