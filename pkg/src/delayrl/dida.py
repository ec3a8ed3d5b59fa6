"""Imitation of an undelayed expert by a delayed policy with dataset aggregation.

Each iteration rolls out a mixture of expert and imitator on the delayed
environment. The expert labels every step using the hidden current state; the
imitator is trained on the augmented state it would have observed.

Augmented-state encoding layout: ``env.encode_state(base_state)`` followed by
``env.encode_action(a)`` for each queued action, oldest first. For the
pendulum this is (cos theta, sin theta, theta_dot / 8, a_1 / 2, ..., a_n / 2);
for finite MDPs a one-hot state followed by one-hot actions.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .delay import AugmentedState, DelayedEnv, wrap_fractional
from .errors import ConfigurationError, UsageError
from .mdp import Env
from .model import ModelConfig, PolicyModel
from .spaces import Box, Discrete


def encode_augmented(x: AugmentedState, env: Env, delay: int | None = None) -> np.ndarray:
    if delay is not None and len(x.queue) != delay:
        raise ConfigurationError(f"augmented state holds {len(x.queue)} actions, expected {delay}")
    parts = [env.encode_state(x.base_state)]
    parts += [env.encode_action(a) for a in x.queue]
    return np.concatenate(parts)


@dataclass(frozen=True)
class BetaSchedule:
    """Mixing weight of the expert during data collection.

    ``first-only``: beta_1 = ``first`` and 0 afterwards; ``constant``: always
    ``value``; ``exponential``: ``first * decay ** (i - 1)``.
    """

    rule: str = "first-only"
    first: float = 1.0
    value: float = 0.0
    decay: float = 0.5

    def __post_init__(self):
        if self.rule not in ("first-only", "constant", "exponential"):
            raise ConfigurationError(f"unknown beta rule {self.rule!r}")


def beta_weight(schedule: BetaSchedule, i: int) -> float:
    if i < 1:
        raise ConfigurationError("iterations are numbered from 1")
    if schedule.rule == "constant":
        return float(schedule.value)
    if schedule.rule == "exponential":
        return float(schedule.first * schedule.decay ** (i - 1))
    return float(schedule.first) if i == 1 else 0.0


class ImitationDataset:
    """Per-iteration buckets of (encoded augmented state, expert label); keeps the last ``retention``."""

    def __init__(self, retention: int = 10):
        if retention < 1:
            raise ConfigurationError("retention must be >= 1")
        self.retention = retention
        self.buckets: deque = deque(maxlen=retention)

    def new_bucket(self):
        self.buckets.append(([], []))

    def add(self, x_enc: np.ndarray, label) -> None:
        if not self.buckets:
            self.new_bucket()
        xs, ys = self.buckets[-1]
        xs.append(x_enc)
        ys.append(label)

    def __len__(self):
        return sum(len(b[0]) for b in self.buckets)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        xs = [x for b in self.buckets for x in b[0]]
        ys = [y for b in self.buckets for y in b[1]]
        if not xs:
            raise UsageError("the dataset is empty")
        return np.asarray(xs, dtype=float), np.asarray(ys)


def action_label(space, a):
    """Training target of an expert action: scaled vector for boxes, index for discrete."""
    if isinstance(space, Discrete):
        return space.clip(a)
    return space.scale(space.clip(a))


class ImitatorPolicy:
    """Greedy delayed policy backed by a ``PolicyModel``."""

    def __init__(self, model: PolicyModel, env: DelayedEnv, action_values=None):
        self.model = model
        self.env = env
        self.input_size = model.input_size
        self.action_values = None if action_values is None else np.asarray(action_values, float)

    def __call__(self, x: AugmentedState, rng=None):
        out = self.model.predict(encode_augmented(x, self.env.env))
        space = self.env.action_space
        if isinstance(space, Box):
            a = space.unscale(out)
            return float(a[0]) if space.dim == 1 else a
        if self.model.config.mode == "classification":
            return int(np.argmax(out))
        # Regression on embedded discrete actions: nearest embedding.
        return int(np.argmin(np.abs(self.action_values - float(out[0]))))


@dataclass
class IterationStats:
    steps: int
    episodes: int
    expert_steps: int
    pairs_added: int


def dida_iteration(env: DelayedEnv, expert, imitator, beta: float, n_steps: int,
                   dataset: ImitationDataset, rng: np.random.Generator, label=None) -> IterationStats:
    """Collect ``n_steps`` labelled steps; the executed action is the expert's
    with probability ``beta`` and the imitator's otherwise."""
    space = env.action_space
    label = label or (lambda a: action_label(space, a))
    inner = env.env
    limit = env.episode_length
    dataset.new_bucket()
    x = env.reset(seed=int(rng.integers(2**63)))
    _check_expert(expert, env, space)
    t = episodes = from_expert = 0
    for _ in range(n_steps):
        a_e = expert(env.expert_state())
        use_expert = beta >= 1.0 or (beta > 0.0 and rng.random() < beta)
        a = a_e if use_expert or imitator is None else imitator(x)
        from_expert += bool(use_expert or imitator is None)
        dataset.add(encode_augmented(x, inner), label(a_e))
        x, _, terminal, _ = env.step(a)
        t += 1
        if terminal or (limit is not None and t >= limit):
            episodes += 1
            x = env.reset(seed=int(rng.integers(2**63)))
            t = 0
    return IterationStats(n_steps, episodes, from_expert, n_steps)


def _check_expert(expert, env, space):
    a = expert(env.expert_state())
    if isinstance(space, Discrete):
        if not isinstance(a, (int, np.integer)) or not 0 <= a < space.n:
            raise ConfigurationError(f"expert returned {a!r}, environment expects a discrete action < {space.n}")
    elif np.size(a) != space.dim or not np.all(np.isfinite(a)):
        raise ConfigurationError(f"expert returned {a!r}, environment expects {space.dim} real value(s)")


def train_imitator(dataset: ImitationDataset, model: PolicyModel, epochs: int | None = None,
                   seed=0, shuffle: bool = True) -> PolicyModel:
    """Fit (warm-starting) ``model`` on the aggregated dataset."""
    if len(dataset) == 0:
        raise UsageError("cannot train on an empty dataset")
    X, Y = dataset.arrays()
    model.fit(X, Y, epochs=epochs, seed=seed, shuffle=shuffle)
    return model


def evaluate_policy(env: DelayedEnv, policy, total_steps: int = 1000, seed=None) -> tuple[float, float]:
    """Undiscounted episode returns over ``total_steps`` interaction steps."""
    rng = np.random.default_rng(seed)
    limit = env.episode_length or total_steps
    returns = []
    steps = 0
    while steps < total_steps:
        env.reset(seed=int(rng.integers(2**63)))
        x, total = env.observe(), 0.0
        for _ in range(min(limit, total_steps - steps)):
            x, r, terminal, _ = env.step(policy(x))
            total += r
            steps += 1
            if terminal:
                break
        returns.append(total)
    returns = np.array(returns)
    return float(returns.mean()), float(returns.std())


@dataclass
class DidaParams:
    delay: float = 5
    iterations: int = 50
    steps_per_iteration: int = 2000
    retention: int = 10
    eval_steps: int = 1000
    beta: BetaSchedule = field(default_factory=BetaSchedule)
    model: ModelConfig = field(default_factory=ModelConfig)
    expert_steps: int = 0  # added to the step axis when counting expert training


@dataclass
class DidaResult:
    curve: list[dict]
    model: PolicyModel
    policy: ImitatorPolicy


def run_dida(params: DidaParams, env: Env, expert, seed=0, config_hash: str = "",
             label=None, output_size: int | None = None, action_values=None) -> DidaResult:
    ss = np.random.SeedSequence(seed)
    s_env, s_model, s_loop, s_eval = ss.spawn(4)
    denv = wrap_fractional(env, params.delay, seed=s_env)
    space = env.action_space
    config = params.model
    if isinstance(space, Discrete) and action_values is None and config.mode == "regression":
        # Discrete labels are class indices; score them with cross-entropy.
        config = replace(config, mode="classification")
    if output_size is None:
        if not isinstance(space, Discrete):
            output_size = space.dim
        else:
            output_size = 1 if action_values is not None else space.n
    model = PolicyModel(denv.observation_size, output_size, config, seed=s_model)
    policy = ImitatorPolicy(model, denv, action_values)
    dataset = ImitationDataset(params.retention)
    rng = np.random.default_rng(s_loop)
    eval_seed = int(np.random.default_rng(s_eval).integers(2**63))
    curve = []
    for i in range(1, params.iterations + 1):
        beta = beta_weight(params.beta, i)
        dida_iteration(denv, expert, policy, beta, params.steps_per_iteration,
                       dataset, rng, label)
        train_imitator(dataset, model, seed=int(rng.integers(2**63)))
        mean, std = evaluate_policy(denv, policy, params.eval_steps, seed=eval_seed)
        curve.append({
            "iteration": i,
            "env_steps": params.expert_steps + i * params.steps_per_iteration,
            "mean_return": mean,
            "std_return": std,
            "train_loss": model.train_loss,
            "seed": seed,
            "config_hash": config_hash,
        })
    return DidaResult(curve, model, policy)
