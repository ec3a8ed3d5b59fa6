"""Tabular delayed baselines: memoryless SARSA(lambda), dSARSA and SARSA on the
augmented (observation, action-queue) space.

All three share one eligibility-trace update. They differ only in which pair
receives credit for a step:

* memoryless: (last observed state, action chosen now), observed reward;
* dSARSA: (last observed state, oldest queued action), i.e. the action that was
  actually applied at the observed state, observed reward;
* augmented: (observed state + queue, action chosen now), realized reward.

At delay 0 all three coincide update for update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .delay import DelayedEnv
from .envs.pendulum import MAX_SPEED, MAX_TORQUE, physics_step
from .errors import CapabilityError, ConfigurationError, StateError
from .mdp import FiniteMdpEnv

VARIANTS = {"sarsa": 0, "dsarsa": 1, "aug-sarsa": 2}
TRACE_TOL = 1e-8


@njit(cache=True)
def _sarsa_update(q, e, active, n_active, s, a, r, s2, a2, alpha, gamma, lam, terminal, tol):
    n_act = q.shape[1]
    target = r if terminal else r + gamma * q[s2, a2]
    delta = target - q[s, a]
    if e[s, a] == 0.0:
        active[n_active] = s * n_act + a
        n_active += 1
    e[s, a] += 1.0
    decay = gamma * lam
    i = 0
    while i < n_active:
        k = active[i]
        ss = k // n_act
        aa = k % n_act
        q[ss, aa] += alpha * delta * e[ss, aa]
        e[ss, aa] *= decay
        if e[ss, aa] < tol:
            e[ss, aa] = 0.0
            n_active -= 1
            active[i] = active[n_active]
        else:
            i += 1
    return n_active


@njit(cache=True)
def _greedy(q, row):
    best = 0
    for a in range(1, q.shape[1]):
        if q[row, a] > q[row, best]:
            best = a
    return best


@njit(cache=True)
def _eps_greedy(q, row, eps, rng):
    if rng.random() < eps:
        return rng.integers(0, q.shape[1])
    return _greedy(q, row)


class TabularQ:
    """Q table with an eligibility-trace table and a sparse list of live traces."""

    def __init__(self, n_rows: int, n_actions: int, memory_cap: int | None = None):
        if memory_cap is not None and n_rows * n_actions > memory_cap:
            raise CapabilityError(
                f"table needs {n_rows} rows x {n_actions} actions = {n_rows * n_actions} entries, "
                f"over the cap of {memory_cap}"
            )
        self.q = np.zeros((n_rows, n_actions))
        self.e = np.zeros((n_rows, n_actions))
        self.active = np.zeros(n_rows * n_actions, dtype=np.int64)
        self.n_active = 0

    @property
    def shape(self):
        return self.q.shape

    def reset_traces(self):
        self.e[:] = 0.0
        self.n_active = 0

    def check(self, *pairs):
        R, A = self.q.shape
        for s, a in pairs:
            if not (0 <= s < R and 0 <= a < A):
                raise ConfigurationError(f"index ({s}, {a}) outside table of shape {self.q.shape}")

    def greedy(self, row: int) -> int:
        return int(_greedy(self.q, row))

    def act(self, row: int, eps: float, rng) -> int:
        return int(_eps_greedy(self.q, row, eps, rng))


def sarsa_lambda_step(tab: TabularQ, s: int, a: int, r: float, s2: int, a2: int,
                      alpha: float, gamma: float, lam: float, terminal: bool = False) -> TabularQ:
    """Accumulating-trace SARSA(lambda) update crediting (s, a)."""
    tab.check((s, a), (s2, a2))
    tab.n_active = _sarsa_update(tab.q, tab.e, tab.active, tab.n_active, int(s), int(a), float(r),
                                 int(s2), int(a2), alpha, gamma, lam, terminal, TRACE_TOL)
    return tab


def dsarsa_step(tab: TabularQ, s: int, queue, r: float, s2: int, queue2,
                alpha: float, gamma: float, lam: float, terminal: bool = False) -> TabularQ:
    """Credit (s, oldest queued action); bootstrap on (s2, its oldest queued action).

    ``queue``/``queue2`` include the action chosen at that step as their last
    entry, so at delay 0 they hold exactly the executed actions.
    """
    if len(queue) == 0 or len(queue2) == 0:
        raise StateError("dSARSA needs the executed action at the end of each queue")
    return sarsa_lambda_step(tab, s, queue[0], r, s2, queue2[0], alpha, gamma, lam, terminal)


@dataclass(frozen=True)
class Discretizer:
    """Uniform bins per state dimension and a finite action grid."""

    lows: tuple
    highs: tuple
    bins: tuple
    action_values: tuple

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.bins))

    @property
    def n_actions(self) -> int:
        return len(self.action_values)

    def index(self, state) -> int:
        idx = 0
        for v, lo, hi, n in zip(np.atleast_1d(np.asarray(state, float)), self.lows, self.highs, self.bins):
            k = min(max(int((v - lo) / (hi - lo) * n), 0), n - 1)
            idx = idx * n + k
        return idx

    def action(self, i: int):
        return self.action_values[int(i)]


def pendulum_discretizer(bins: int = 15) -> Discretizer:
    return Discretizer((-math.pi, -MAX_SPEED), (math.pi, MAX_SPEED), (bins, bins),
                       (-MAX_TORQUE, 0.0, MAX_TORQUE))


@dataclass
class SarsaParams:
    variant: str = "sarsa"
    delay: int = 0
    alpha: float = 0.1
    gamma: float = 0.99
    lam: float = 0.9
    eps: float = 0.2
    iterations: int = 50
    steps_per_iteration: int = 20_000
    eval_steps: int = 1000
    bins: int = 15
    memory_cap: int = 20_000_000

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown tabular variant {self.variant!r}; expected one of {list(VARIANTS)}")
        if self.delay < 0 or int(self.delay) != self.delay:
            raise ConfigurationError("tabular baselines need a nonnegative integer delay")


def table_rows(n_cells: int, n_actions: int, delay: int, variant: str) -> int:
    return n_cells * n_actions ** delay if variant == "aug-sarsa" else n_cells


# -- pendulum kernel ---------------------------------------------------------

@njit(cache=True)
def _cell(th, thd, bins):
    i = int((th + math.pi) / (2.0 * math.pi) * bins)
    j = int((thd + MAX_SPEED) / (2.0 * MAX_SPEED) * bins)
    return min(max(i, 0), bins - 1) * bins + min(max(j, 0), bins - 1)


@njit(cache=True)
def _queue_code(queue, n_act):
    c = 0
    for k in range(queue.shape[0]):
        c = c * n_act + queue[k]
    return c


@njit(cache=True)
def _row(variant, cell, queue, n_act):
    if variant == 2:
        return cell * n_act ** queue.shape[0] + _queue_code(queue, n_act)
    return cell


@njit(cache=True)
def _pendulum_episode(q, e, active, variant, delay, ep_len, alpha, gamma, lam, eps, bins,
                      torques, learn, rng):
    """One delayed pendulum episode; returns the realized undiscounted return."""
    n_act = torques.shape[0]
    n_active = 0
    th = rng.uniform(-math.pi, math.pi)
    thd = rng.uniform(-1.0, 1.0)
    queue = np.empty(delay, dtype=np.int64)
    for k in range(delay):
        queue[k] = rng.integers(0, n_act)
    hist_th = np.empty(delay + 1)
    hist_thd = np.empty(delay + 1)
    pend_r = np.empty(delay + 1)
    hist_th[0] = th
    hist_thd[0] = thd
    for k in range(delay):
        th, thd, r = physics_step(th, thd, torques[queue[k]], 1.0)
        hist_th[k + 1] = th
        hist_thd[k + 1] = thd
        pend_r[k] = r
    cell = _cell(hist_th[0], hist_thd[0], bins)
    row = _row(variant, cell, queue, n_act)
    a = _eps_greedy(q, row, eps if learn else 0.0, rng)
    total = 0.0
    queue2 = np.empty(delay, dtype=np.int64)
    for t in range(ep_len):
        th, thd, r_real = physics_step(hist_th[delay], hist_thd[delay], torques[a], 1.0)
        total += r_real
        pend_r[delay] = r_real
        r_obs = pend_r[0]
        for k in range(delay):
            hist_th[k] = hist_th[k + 1]
            hist_thd[k] = hist_thd[k + 1]
            pend_r[k] = pend_r[k + 1]
        hist_th[delay] = th
        hist_thd[delay] = thd
        for k in range(delay - 1):
            queue2[k] = queue[k + 1]
        if delay > 0:
            queue2[delay - 1] = a
        cell2 = _cell(hist_th[0], hist_thd[0], bins)
        row2 = _row(variant, cell2, queue2, n_act)
        a2 = _eps_greedy(q, row2, eps if learn else 0.0, rng)
        if learn:
            if variant == 0:
                n_active = _sarsa_update(q, e, active, n_active, cell, a, r_obs, cell2, a2,
                                         alpha, gamma, lam, False, TRACE_TOL)
            elif variant == 1:
                c1 = queue[0] if delay > 0 else a
                c2 = queue2[0] if delay > 0 else a2
                n_active = _sarsa_update(q, e, active, n_active, cell, c1, r_obs, cell2, c2,
                                         alpha, gamma, lam, False, TRACE_TOL)
            else:
                n_active = _sarsa_update(q, e, active, n_active, row, a, r_real, row2, a2,
                                         alpha, gamma, lam, False, TRACE_TOL)
        for k in range(delay):
            queue[k] = queue2[k]
        cell, row, a = cell2, row2, a2
    for i in range(n_active):
        k = active[i]
        e[k // n_act, k % n_act] = 0.0
    return total


@njit(cache=True)
def _pendulum_episodes(q, e, active, variant, delay, n_episodes, ep_len, alpha, gamma, lam, eps,
                       bins, torques, learn, rng):
    out = np.empty(n_episodes)
    for i in range(n_episodes):
        out[i] = _pendulum_episode(q, e, active, variant, delay, ep_len, alpha, gamma, lam, eps,
                                   bins, torques, learn, rng)
    return out


def run_pendulum_tabular(params: SarsaParams, seed=0, episode_length: int = 200,
                         config_hash: str = "") -> tuple[list[dict], TabularQ]:
    """Tabular learner on the deterministic delayed pendulum (compiled loop)."""
    disc = pendulum_discretizer(params.bins)
    rows = table_rows(disc.n_cells, disc.n_actions, params.delay, params.variant)
    tab = TabularQ(rows, disc.n_actions, params.memory_cap)
    torques = np.asarray(disc.action_values, dtype=float)
    train_ss, eval_ss = np.random.SeedSequence(seed).spawn(2)
    train_rng = np.random.default_rng(train_ss)
    eval_seed = int(np.random.default_rng(eval_ss).integers(2**63))
    variant = VARIANTS[params.variant]
    n_train = max(1, params.steps_per_iteration // episode_length)
    n_eval = max(1, math.ceil(params.eval_steps / episode_length))
    curve = []
    for i in range(1, params.iterations + 1):
        _pendulum_episodes(tab.q, tab.e, tab.active, variant, params.delay, n_train, episode_length,
                           params.alpha, params.gamma, params.lam, params.eps, params.bins, torques,
                           True, train_rng)
        returns = _pendulum_episodes(tab.q, tab.e, tab.active, variant, params.delay, n_eval,
                                     episode_length, 0.0, params.gamma, 0.0, 0.0, params.bins,
                                     torques, False, np.random.default_rng(eval_seed))
        curve.append({
            "iteration": i,
            "env_steps": i * n_train * episode_length,
            "mean_return": float(returns.mean()),
            "std_return": float(returns.std()),
            "train_loss": float("nan"),
            "seed": seed,
            "config_hash": config_hash,
        })
    return curve, tab


# -- generic driver for finite or discretized environments --------------------

def _observation_index(obs_state, disc: Discretizer | None) -> int:
    return int(obs_state) if disc is None else disc.index(obs_state)


class GreedyTabularPolicy:
    def __init__(self, tab: TabularQ, variant: str, n_actions: int, disc: Discretizer | None = None):
        self.tab, self.variant, self.n_actions, self.disc = tab, variant, n_actions, disc

    def row(self, x) -> int:
        cell = _observation_index(x.base_state, self.disc)
        if self.variant != "aug-sarsa":
            return cell
        code = 0
        for a in x.queue:
            code = code * self.n_actions + self._action_index(a)
        return cell * self.n_actions ** len(x.queue) + code

    def _action_index(self, a) -> int:
        if self.disc is None:
            return int(a)
        return int(np.argmin(np.abs(np.asarray(self.disc.action_values) - float(a))))

    def action(self, i: int):
        return int(i) if self.disc is None else self.disc.action(i)

    def __call__(self, x, rng=None):
        return self.action(self.tab.greedy(self.row(x)))


def _make_table(env: DelayedEnv, params: SarsaParams, disc: Discretizer | None):
    if disc is None and not isinstance(env.env, FiniteMdpEnv):
        raise ConfigurationError("non-finite environments need a discretizer")
    n_actions = disc.n_actions if disc is not None else env.action_space.n
    n_cells = disc.n_cells if disc is not None else env.env.mdp.n_states
    rows = table_rows(n_cells, n_actions, env.delay, params.variant)
    tab = TabularQ(rows, n_actions, params.memory_cap)
    return tab, GreedyTabularPolicy(tab, params.variant, n_actions, disc)


def run_tabular(env: DelayedEnv, params: SarsaParams, n_steps: int, seed=0,
                disc: Discretizer | None = None, alpha_schedule=None,
                tab: TabularQ | None = None, rng=None) -> TabularQ:
    """Generic (uncompiled) driver on any delayed environment.

    ``alpha_schedule(t)`` optionally replaces the constant step size. Passing
    ``tab``/``rng`` continues training an existing table.
    """
    fresh, pol = _make_table(env, params, disc)
    if tab is None:
        tab = fresh
    pol.tab = tab
    rng = np.random.default_rng(seed) if rng is None else rng
    limit = env.episode_length
    if params.variant == "aug-sarsa":
        act_row = pol.row
    else:
        def act_row(x):
            return _observation_index(x.base_state, disc)
    t_global = 0
    while t_global < n_steps:
        x = env.reset(seed=int(rng.integers(2**63)))
        tab.reset_traces()
        a = tab.act(act_row(x), params.eps, rng)
        t = 0
        while t_global < n_steps:
            x2, r_real, terminal, info = env.step(pol.action(a))
            a2 = tab.act(act_row(x2), params.eps, rng)
            alpha = params.alpha if alpha_schedule is None else alpha_schedule(t_global)
            r_obs = info["observed_reward"]
            if params.variant == "sarsa":
                sarsa_lambda_step(tab, act_row(x), a, r_obs, act_row(x2), a2, alpha, params.gamma,
                                  params.lam, terminal)
            elif params.variant == "dsarsa":
                q1 = [pol._action_index(b) for b in x.queue] + [a]
                q2 = [pol._action_index(b) for b in x2.queue] + [a2]
                dsarsa_step(tab, act_row(x), q1, r_obs, act_row(x2), q2, alpha, params.gamma,
                            params.lam, terminal)
            else:
                sarsa_lambda_step(tab, pol.row(x), a, r_real, pol.row(x2), a2, alpha, params.gamma,
                                  params.lam, terminal)
            x, a = x2, a2
            t += 1
            t_global += 1
            if terminal or (limit is not None and t >= limit):
                break
    return tab


def tabular_curve(env: DelayedEnv, params: SarsaParams, seed=0, disc: Discretizer | None = None,
                  config_hash: str = "") -> tuple[list[dict], TabularQ]:
    """Learning curve of the generic driver, evaluated greedily after each iteration."""
    from .dida import evaluate_policy

    tab, pol = _make_table(env, params, disc)
    train_ss, eval_ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(train_ss)
    eval_seed = int(np.random.default_rng(eval_ss).integers(2**63))
    curve = []
    for i in range(1, params.iterations + 1):
        run_tabular(env, params, params.steps_per_iteration, disc=disc, tab=tab, rng=rng)
        mean, std = evaluate_policy(env, pol, params.eval_steps, seed=eval_seed)
        curve.append({"iteration": i, "env_steps": i * params.steps_per_iteration,
                      "mean_return": mean, "std_return": std, "train_loss": float("nan"),
                      "seed": seed, "config_hash": config_hash})
    return curve, tab


__all__ = [
    "Discretizer", "GreedyTabularPolicy", "SarsaParams", "TabularQ", "dsarsa_step", "pendulum_discretizer", "run_pendulum_tabular", "run_tabular",
    "sarsa_lambda_step", "table_rows", "tabular_curve",
]
