"""Exact and Monte Carlo checks of delayed performance bounds.

Finite checks build the augmented MDP over X = S x A^delay explicitly and use
dense linear solves. Sampled checks run on the Gaussian walk, where the belief
of the hidden state given an augmented state is Gaussian with variance
``delay * sigma**2`` around the noise-free forward image of the queue.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .envs.chain import make_chain_mdp, measure_constants
from .envs.gaussian_walk import STATE_CLIP, GaussianWalkParams
from .errors import CapabilityError, ConfigurationError
from .experts import TabularPolicy, value_iteration_expert
from .mdp import FiniteMdp, occupancy, policy_matrix, solve_q_exact, solve_v_exact
from .wasserstein import w1_to_dirac, wasserstein_1d

DEFAULT_CAP = 2000


# -- augmented MDP -----------------------------------------------------------

@dataclass
class AugmentedMdp:
    """Finite MDP over (observed state, queue) with the index codec
    x = s * A**delay + sum_i a_i * A**(delay - i), oldest action most significant."""

    mdp: FiniteMdp
    base: FiniteMdp
    delay: int
    beliefs: np.ndarray  # (X, S)

    @property
    def n_states(self) -> int:
        return self.mdp.n_states

    def encode(self, s: int, queue) -> int:
        A = self.base.n_actions
        if len(queue) != self.delay:
            raise ConfigurationError(f"queue length {len(queue)} does not match delay {self.delay}")
        code = 0
        for a in queue:
            code = code * A + int(a)
        return int(s) * A**self.delay + code

    def decode(self, x: int) -> tuple[int, tuple]:
        A = self.base.n_actions
        s, code = divmod(int(x), A**self.delay)
        queue = []
        for _ in range(self.delay):
            code, a = divmod(code, A)
            queue.append(a)
        return s, tuple(reversed(queue))


def _belief_table(mdp: FiniteMdp, delay: int) -> np.ndarray:
    S, A = mdp.n_states, mdp.n_actions
    B = np.eye(S)[:, None, :]  # (S, codes, S)
    for _ in range(delay):
        # Appending action a to every code: code * A + a.
        B = np.einsum("scz,zat->scat", B, mdp.p).reshape(S, -1, S)
    return B.reshape(-1, S)


def build_augmented_mdp(mdp: FiniteMdp, delay: int, cap: int = DEFAULT_CAP) -> AugmentedMdp:
    if delay < 0:
        raise ConfigurationError("delay must be nonnegative")
    S, A = mdp.n_states, mdp.n_actions
    X = S * A**delay
    if X > cap:
        raise CapabilityError(f"augmented space needs {X} states (|S||A|^delay), cap is {cap}")
    if delay == 0:
        return AugmentedMdp(mdp, mdp, 0, np.eye(S))
    beliefs = _belief_table(mdp, delay)
    n_codes = A**delay
    p = np.zeros((X, A, X))
    xs = np.arange(X)
    s1, code = np.divmod(xs, n_codes)
    a1 = code // A ** (delay - 1)
    rest = code % A ** (delay - 1)  # a_2..a_delay
    for a in range(A):
        new_code = rest * A + a
        for s2 in range(S):
            p[xs, a, s2 * n_codes + new_code] += mdp.p[s1, a1, s2]
    r = beliefs @ mdp.r
    mu = np.repeat(mdp.mu, n_codes) / n_codes
    aug = FiniteMdp(p, r, mdp.gamma, mu=mu,
                    state_embedding=np.repeat(mdp.state_embedding, n_codes),
                    action_embedding=mdp.action_embedding)
    return AugmentedMdp(aug, mdp, delay, beliefs)


def belief_policy(expert, aug: AugmentedMdp) -> np.ndarray:
    """pi_b(a | x) = sum_s b(s | x) pi_E(a | s)."""
    return aug.beliefs @ policy_matrix(aug.base, expert)


def delayed_policy_value(aug: AugmentedMdp, pi_tilde) -> float:
    return float(aug.mdp.mu @ solve_v_exact(aug.mdp, pi_tilde))


def memoryless_policy_values(mdp: FiniteMdp, delay: int) -> tuple[np.ndarray, np.ndarray]:
    """Values (under the augmented start distribution) of every deterministic
    policy that only looks at the observed state."""
    aug = build_augmented_mdp(mdp, delay)
    base_of_x = np.repeat(np.arange(mdp.n_states), mdp.n_actions**delay)
    policies = np.array(list(itertools.product(range(mdp.n_actions), repeat=mdp.n_states)))
    values = np.array([delayed_policy_value(aug, pol[base_of_x]) for pol in policies])
    return policies, values


def augmented_optimal_value(mdp: FiniteMdp, delay: int) -> float:
    aug = build_augmented_mdp(mdp, delay)
    pol = value_iteration_expert(aug.mdp, tol=1e-10)
    return delayed_policy_value(aug, pol)


# -- reports -----------------------------------------------------------------

@dataclass
class CheckRecord:
    name: str
    fixture: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    extra: dict = field(default_factory=dict)


@dataclass
class Report:
    suite: str
    records: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def add(self, name, fixture, lhs, rhs, slack, passed, **extra):
        self.records.append(CheckRecord(name, str(fixture), float(lhs), float(rhs), float(slack),
                                        bool(passed), extra))

    def worst(self, name: str | None = None) -> CheckRecord:
        recs = [r for r in self.records if name is None or r.name == name]
        return min(recs, key=lambda r: r.slack)

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")

    def summary(self) -> str:
        names = sorted({r.name for r in self.records})
        lines = [f"{'check':<28}{'n':>6}{'fails':>7}{'worst slack':>14}"]
        for n in names:
            recs = [r for r in self.records if r.name == n]
            fails = sum(not r.passed for r in recs)
            lines.append(f"{n:<28}{len(recs):>6}{fails:>7}{min(r.slack for r in recs):>14.3e}")
        lines.append(f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# -- performance difference identity -----------------------------------------

@dataclass
class _Solved:
    aug: AugmentedMdp
    v_e: np.ndarray
    q_e: np.ndarray
    v_tilde: np.ndarray
    occ: np.ndarray  # row x: discounted occupancy started at x


def _solve(mdp: FiniteMdp, expert, pi_tilde, delay: int, aug: AugmentedMdp | None = None) -> _Solved:
    aug = aug or build_augmented_mdp(mdp, delay)
    pi_t = policy_matrix(aug.mdp, pi_tilde)
    v_e = solve_v_exact(mdp, expert)
    q_e = solve_q_exact(mdp, expert)
    v_t = solve_v_exact(aug.mdp, pi_t)
    P = np.einsum("xa,xay->xy", pi_t, aug.mdp.p)
    g = mdp.gamma
    occ = (1 - g) * np.linalg.inv(np.eye(aug.n_states) - g * P)
    return _Solved(aug, v_e, q_e, v_t, occ)


def perf_diff_terms(mdp: FiniteMdp, expert, pi_tilde, delay: int, aug=None):
    """Both sides of the delayed performance-difference identity for every x."""
    sol = _solve(mdp, expert, pi_tilde, delay, aug)
    B = sol.aug.beliefs
    pi_t = policy_matrix(sol.aug.mdp, pi_tilde)
    lhs = B @ sol.v_e - sol.v_tilde
    inner = B @ sol.v_e - np.einsum("xs,xa,sa->x", B, pi_t, sol.q_e)
    rhs = sol.occ @ inner / (1 - mdp.gamma)
    return lhs, rhs, sol


def perf_diff_check(mdp: FiniteMdp, expert, pi_tilde, delay: int, x: int) -> tuple[float, float, float]:
    lhs, rhs, _ = perf_diff_terms(mdp, expert, pi_tilde, delay)
    return float(lhs[x]), float(rhs[x]), float(abs(lhs[x] - rhs[x]))


# -- sigma_b and Lipschitz constants ------------------------------------------

def belief_dispersion(aug: AugmentedMdp) -> np.ndarray:
    """E|s - s'| for s, s' i.i.d. from b(.|x), per augmented state."""
    e = aug.base.state_embedding
    D = np.abs(e[:, None] - e[None, :])
    return np.einsum("xs,st,xt->x", aug.beliefs, D, aug.beliefs)


def belief_std(aug: AugmentedMdp) -> np.ndarray:
    e = aug.base.state_embedding
    m = aug.beliefs @ e
    return np.sqrt(np.maximum(aug.beliefs @ e**2 - m**2, 0.0))


def sigma_b(mdp: FiniteMdp, pi_tilde, delay: int, start=None, aug=None) -> np.ndarray | float:
    """Occupancy-averaged belief dispersion.

    ``start=None`` returns the vector over all Dirac starts x; an int selects
    one x; an array is used as the start distribution rho over X.
    """
    aug = aug or build_augmented_mdp(mdp, delay)
    pi_t = policy_matrix(aug.mdp, pi_tilde)
    P = np.einsum("xa,xay->xy", pi_t, aug.mdp.p)
    disp = belief_dispersion(aug)
    if start is None:
        occ = (1 - mdp.gamma) * np.linalg.inv(np.eye(aug.n_states) - mdp.gamma * P)
        return occ @ disp
    if np.isscalar(start):
        rho = np.zeros(aug.n_states)
        rho[int(start)] = 1.0
    else:
        rho = np.asarray(start, float)
    return float(occupancy(P, mdp.gamma, rho) @ disp)


@dataclass
class LipschitzReport:
    l_p: float
    l_r: float
    l_t: float
    l_pi: float
    l_q: float  # measured in the action argument
    l_q_joint: float  # measured in (state, action)
    l_q_formula: float | None


def q_lipschitz_action(mdp: FiniteMdp, q: np.ndarray) -> float:
    g = mdp.action_embedding
    dg = np.abs(g[:, None] - g[None, :])
    dq = np.abs(q[:, :, None] - q[:, None, :])
    mask = dg > 0
    return float(np.max(dq[:, mask] / dg[mask], initial=0.0))


def q_lipschitz_joint(mdp: FiniteMdp, q: np.ndarray) -> float:
    e, g = mdp.state_embedding, mdp.action_embedding
    d = (np.abs(e[:, None, None, None] - e[None, None, :, None])
         + np.abs(g[None, :, None, None] - g[None, None, None, :]))
    dq = np.abs(q[:, :, None, None] - q[None, None, :, :])
    mask = d > 0
    return float(np.max(dq[mask] / d[mask], initial=0.0))


def lipschitz_report(mdp: FiniteMdp, expert) -> LipschitzReport:
    c = measure_constants(mdp)
    pol = expert if isinstance(expert, TabularPolicy) else TabularPolicy(policy_matrix(mdp, expert))
    l_pi = pol.lipschitz(mdp)
    q = solve_q_exact(mdp, pol)
    cond = mdp.gamma * c.l_p * (1 + l_pi)
    formula = c.l_r / (1 - cond) if cond < 1 else None
    return LipschitzReport(c.l_p, c.l_r, c.l_t, l_pi, q_lipschitz_action(mdp, q),
                           q_lipschitz_joint(mdp, q), formula)


# -- bound checks on finite fixtures ------------------------------------------

TOL = 1e-9


def check_dispersion_bound(mdp: FiniteMdp, expert, delay: int, report: Report | None = None,
                     fixture: str = "") -> Report:
    report = report or Report("thm2")
    aug = build_augmented_mdp(mdp, delay)
    pi_b = belief_policy(expert, aug)
    lip = lipschitz_report(mdp, expert)
    lhs, _, sol = perf_diff_terms(mdp, expert, pi_b, delay, aug)
    sig = sol.occ @ belief_dispersion(aug)
    bound = lip.l_q * lip.l_pi * sig / (1 - mdp.gamma)
    k = int(np.argmin(bound - lhs))
    report.add("dispersion-bound", fixture, lhs[k], bound[k], bound[k] - lhs[k], bool(np.all(lhs <= bound + TOL)),
               delay=delay, n_x=aug.n_states, l_q=lip.l_q, l_pi=lip.l_pi)
    return report


def check_time_lipschitz_bound(mdp: FiniteMdp, expert, delay: int, report: Report | None = None,
                     fixture: str = "") -> Report:
    report = report or Report("cor3")
    aug = build_augmented_mdp(mdp, delay)
    pi_b = belief_policy(expert, aug)
    lip = lipschitz_report(mdp, expert)
    lhs, _, sol = perf_diff_terms(mdp, expert, pi_b, delay, aug)
    bound = 2 * delay * lip.l_t * lip.l_q * lip.l_pi / (1 - mdp.gamma)
    worst = float(np.max(lhs))
    report.add("time-lipschitz-bound", fixture, worst, bound, bound - worst, worst <= bound + TOL, delay=delay,
               l_t=lip.l_t)
    sig = sol.occ @ belief_dispersion(aug)
    report.add("sigma_b<=2*delay*L_T", fixture, float(np.max(sig)), 2 * delay * lip.l_t,
               2 * delay * lip.l_t - float(np.max(sig)), bool(np.all(sig <= 2 * delay * lip.l_t + TOL)))
    return report


def random_chain(rng: np.random.Generator, gamma: float = 0.9) -> FiniteMdp:
    n = int(rng.integers(3, 7))
    slip = float(rng.uniform(0, 1))
    cost = np.cumsum(rng.uniform(-1, 1, n))
    cost -= cost.min()
    return make_chain_mdp(n, slip, state_cost=cost, action_cost=float(rng.uniform(0, 0.5)), gamma=gamma)


def random_finite_mdp(rng, n_states, n_actions, gamma=0.9) -> FiniteMdp:
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    r = rng.uniform(-1, 1, (n_states, n_actions))
    return FiniteMdp(p, r, gamma, state_embedding=np.sort(rng.uniform(0, n_states, n_states)))


# -- suites --------------------------------------------------------------------

def suite_perf_difference(n_fixtures: int = 100, seed=0) -> Report:
    rng = np.random.default_rng(seed)
    report = Report("lemma1")
    for i in range(n_fixtures):
        S, A, delay = int(rng.integers(2, 6)), int(rng.integers(1, 4)), int(rng.integers(0, 4))
        mdp = random_finite_mdp(rng, S, A)
        expert = rng.dirichlet(np.ones(A), size=S)
        aug = build_augmented_mdp(mdp, delay)
        pi_t = rng.dirichlet(np.ones(A), size=aug.n_states)
        lhs, rhs, _ = perf_diff_terms(mdp, expert, pi_t, delay, aug)
        res = np.abs(lhs - rhs)
        k = int(np.argmax(res))
        report.add("perf-difference", f"random-{i}(S={S},A={A},delay={delay})", lhs[k], rhs[k], 1e-6 - res[k],
                   bool(res[k] <= 1e-6), residual=float(res[k]))
    return report


def suite_dispersion_bound(n_fixtures: int = 50, seed=0) -> Report:
    rng = np.random.default_rng(seed)
    report = Report("thm2")
    for i in range(n_fixtures):
        mdp = random_chain(rng)
        delay = int(rng.integers(1, 4))
        check_dispersion_bound(mdp, value_iteration_expert(mdp), delay, report, f"chain-{i}")
    for slip in (0.0, 1.0):
        mdp = make_chain_mdp(4, slip)
        check_dispersion_bound(mdp, value_iteration_expert(mdp), 2, report, f"deterministic-slip{slip}")
    return report


def suite_time_lipschitz_bound(n_fixtures: int = 50, seed=0) -> Report:
    rng = np.random.default_rng(seed)
    report = Report("cor3")
    for i in range(n_fixtures):
        mdp = random_chain(rng)
        expert = value_iteration_expert(mdp)
        bounds = []
        for delay in (1, 2, 3):
            check_time_lipschitz_bound(mdp, expert, delay, report, f"chain-{i}")
            bounds.append(report.records[-2].rhs)
        ratio_err = max(abs(bounds[1] - 2 * bounds[0]), abs(bounds[2] - 3 * bounds[0]))
        report.add("time-lipschitz-linear-in-delay", f"chain-{i}", bounds[2], 3 * bounds[0],
                   1e-9 * max(1.0, bounds[2]) - ratio_err, ratio_err <= 1e-9 * max(1.0, bounds[2]))
    return report


def suite_wasserstein_facts(n_fixtures: int = 50, seed=0) -> Report:
    rng = np.random.default_rng(seed)
    report = Report("appendixA")
    for i in range(200):
        n = int(rng.integers(1, 8))
        support = rng.normal(0, 3, n)
        p, q = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        if i % 10 == 0:  # point masses: the equality case
            p, q = np.eye(n)[rng.integers(n)], np.eye(n)[rng.integers(n)]
        w = wasserstein_1d(p, q, support)
        dm = abs(p @ support - q @ support)
        report.add("mean-gap<=W1", f"dist-{i}", dm, w, w - dm, dm <= w + TOL)
    for i in range(n_fixtures):
        mdp = random_chain(rng)
        l_t = measure_constants(mdp).l_t
        expert = value_iteration_expert(mdp)
        for delay in (1, 2, 3):
            aug = build_augmented_mdp(mdp, delay)
            e = mdp.state_embedding
            base = np.repeat(np.arange(mdp.n_states), mdp.n_actions**delay)
            w = np.array([w1_to_dirac(b, e, e[s]) for b, s in zip(aug.beliefs, base)])
            worst = float(np.max(w))
            report.add("W1(b,dirac)<=delay*L_T", f"chain-{i}-d{delay}", worst, delay * l_t,
                       delay * l_t - worst, worst <= delay * l_t + TOL)
            pi_b = belief_policy(expert, aug)
            sig_x = sigma_b(mdp, pi_b, delay, aug=aug)
            sig_rho = sigma_b(mdp, pi_b, delay, start=aug.mdp.mu, aug=aug)
            worst = float(max(sig_x.max(), sig_rho))
            report.add("sigma_b<=2*delay*L_T", f"chain-{i}-d{delay}", worst, 2 * delay * l_t,
                       2 * delay * l_t - worst, worst <= 2 * delay * l_t + TOL)
            # Euclidean bound in the scalar case: E|s - s'| <= sqrt(2) sqrt(Var).
            disp, sd = belief_dispersion(aug), math.sqrt(2) * belief_std(aug)
            P = np.einsum("xa,xay->xy", pi_b, aug.mdp.p)
            occ = (1 - mdp.gamma) * np.linalg.inv(np.eye(aug.n_states) - mdp.gamma * P)
            lhs, rhs = occ @ disp, occ @ sd
            k = int(np.argmin(rhs - lhs))
            report.add("sigma_b<=sqrt2*E[std_b]", f"chain-{i}-d{delay}", lhs[k], rhs[k], rhs[k] - lhs[k],
                       bool(np.all(lhs <= rhs + TOL)))
    det = make_chain_mdp(4, 0.0)
    aug = build_augmented_mdp(det, 2)
    zero = float(np.max(belief_dispersion(aug)) + np.max(belief_std(aug)))
    report.add("deterministic-zero", "chain-slip0", zero, 0.0, -zero, zero <= TOL)
    return report


# -- Gaussian walk (Monte Carlo) ----------------------------------------------

def forward_image(s_obs, queue, l_pi: float):
    """Noise-free prediction of the current state from an augmented state."""
    return np.asarray(s_obs, float) + np.sum(np.asarray(queue, float), axis=-1) / l_pi


def belief_mean_policy(params: GaussianWalkParams):
    def pol(s_obs, queue, rng):
        return -params.l_pi * forward_image(s_obs, queue, params.l_pi)
    return pol


def belief_sample_policy(params: GaussianWalkParams, delay: int):
    """Mixture policy: act optimally for a state drawn from the belief."""
    def pol(s_obs, queue, rng):
        s = forward_image(s_obs, queue, params.l_pi)
        s = s + params.sigma * math.sqrt(delay) * rng.standard_normal(s.shape)
        return -params.l_pi * s
    return pol


def memoryless_policy(params: GaussianWalkParams):
    def pol(s_obs, queue, rng):
        return -params.l_pi * np.asarray(s_obs, float)
    return pol


def model_policy(model, action_bound: float):
    """Vectorized adapter for a trained imitator on the walk (layout: s, a_i / bound)."""
    def pol(s_obs, queue, rng):
        X = np.column_stack([np.asarray(s_obs, float), np.asarray(queue, float) / action_bound])
        return action_bound * model.predict(X)[:, 0]
    return pol


def simulate_walk(params: GaussianWalkParams, delay: int, policy, n_chains: int, n_steps: int,
                  seed=None, start_scale: float = 1.0, action_bound: float = 10.0,
                  queue_scale: float = 1.0):
    """Run ``n_chains`` delayed walks in parallel; returns rewards (n_steps, n_chains)."""
    rng = np.random.default_rng(seed)
    hist = np.empty((delay + 1, n_chains))
    hist[0] = rng.uniform(-start_scale, start_scale, n_chains)
    queue = rng.uniform(-queue_scale, queue_scale, (n_chains, delay))
    s = hist[0].copy()
    for k in range(delay):
        s = np.clip(s + queue[:, k] / params.l_pi + params.sigma * rng.standard_normal(n_chains),
                    -STATE_CLIP, STATE_CLIP)
        hist[k + 1] = s
    rewards = np.empty((n_steps, n_chains))
    for t in range(n_steps):
        a = np.clip(policy(hist[0], queue, rng), -action_bound, action_bound)
        mean = s + a / params.l_pi
        rewards[t] = -params.l_r * np.abs(mean)
        s = np.clip(mean + params.sigma * rng.standard_normal(n_chains), -STATE_CLIP, STATE_CLIP)
        hist = np.roll(hist, -1, axis=0)
        hist[-1] = s
        if delay:
            queue = np.column_stack([queue[:, 1:], a])
    return rewards


def stationary_gap(params: GaussianWalkParams, delay: int, policy, n_samples: int, seed=None,
                   burn_in: int = 50, n_chains: int = 100) -> tuple[float, float]:
    """Long-run per-step regret over (1 - gamma) with a standard error (V* = 0)."""
    steps = burn_in + math.ceil(n_samples / n_chains)
    r = simulate_walk(params, delay, policy, n_chains, steps, seed)[burn_in:]
    per_chain = -r.mean(axis=0) / (1 - params.gamma)
    return float(per_chain.mean()), float(per_chain.std(ddof=1) / math.sqrt(n_chains))


def discounted_gap(params: GaussianWalkParams, delay: int, policy, n_episodes: int, seed=None,
                   horizon: int | None = None) -> tuple[float, float]:
    """-V(x) from random starts (V* = 0), estimated from truncated discounted returns."""
    horizon = horizon or math.ceil(math.log(1e-8) / math.log(max(params.gamma, 1e-3)))
    r = simulate_walk(params, delay, policy, n_episodes, horizon, seed)
    ret = -(params.gamma ** np.arange(horizon)) @ r
    return float(ret.mean()), float(ret.std(ddof=1) / math.sqrt(n_episodes))


def gaussian_sigma_b_mc(params: GaussianWalkParams, delay: int, n_samples: int, seed=None) -> float:
    """E|s - s'| for two independent continuations of the same augmented state."""
    rng = np.random.default_rng(seed)
    if delay == 0 or params.sigma == 0:
        return 0.0
    inc = params.sigma * rng.standard_normal((2, n_samples, delay)).sum(-1)
    return float(np.mean(np.abs(inc[0] - inc[1])))


def walk_gap_lower_bound(params: GaussianWalkParams, delay: float) -> float:
    return math.sqrt(2 / math.pi) * params.l_q * params.l_pi * math.sqrt(delay) * params.sigma / (1 - params.gamma)


def walk_gap_upper_bound(params: GaussianWalkParams, delay: float) -> float:
    return 2 * params.l_q * params.l_pi * math.sqrt(delay) * params.sigma / (1 - params.gamma)


def check_walk_upper_bound(params: GaussianWalkParams, delay: int, n_samples: int = 100_000, seed=0,
                        report: Report | None = None) -> Report:
    report = report or Report("cor4")
    rhs = walk_gap_upper_bound(params, delay)
    for name, pol in (("belief-mean", belief_mean_policy(params)),
                      ("belief-sample", belief_sample_policy(params, delay))):
        gap, se = stationary_gap(params, delay, pol, n_samples, seed)
        report.add("walk-upper-bound", f"walk-delay{delay}-{name}", gap, rhs, rhs - gap, gap <= rhs + 3 * se,
                   stderr=se, sigma_b_mc=gaussian_sigma_b_mc(params, delay, n_samples, seed),
                   sigma_b_exact=2 * params.sigma * math.sqrt(delay / math.pi))
    return report


def check_walk_lower_bound(params: GaussianWalkParams, delay: int, n_samples: int = 100_000, seed=0,
                           extra_policies: dict | None = None, report: Report | None = None) -> Report:
    report = report or Report("thm5")
    ss = np.random.SeedSequence(seed).spawn(3)
    # (a) the undelayed optimum earns exactly zero.
    zero = GaussianWalkParams(params.l_pi, params.l_q, 0.0, params.gamma)
    r0 = simulate_walk(zero, 0, belief_mean_policy(zero), 100, 50, ss[0])
    v_star = float(np.max(np.abs(r0)))
    report.add("walk-vstar-zero", "walk-sigma0", v_star, 0.0, -v_star, v_star == 0.0)
    # (b) the best delayed policy attains the analytic gap.
    expected = walk_gap_lower_bound(params, delay)
    gap, se = stationary_gap(params, delay, belief_mean_policy(params), n_samples, ss[1])
    rel = abs(gap - expected) / expected if expected > 0 else abs(gap)
    report.add("walk-optimal-gap", f"walk-delay{delay}", gap, expected, 0.02 - rel, rel <= 0.02,
               stderr=se, relative_error=rel)
    # (c) no delayed policy beats the lower bound.
    policies = {"belief-mean": belief_mean_policy(params),
                "belief-sample": belief_sample_policy(params, delay),
                "memoryless": memoryless_policy(params)}
    policies.update(extra_policies or {})
    for k, (name, pol) in enumerate(policies.items()):
        g, e = discounted_gap(params, delay, pol, max(200, n_samples // 100), ss[2].spawn(k + 1)[-1])
        report.add("walk-lower-bound", f"walk-delay{delay}-{name}", g, expected, g - expected + 3 * e,
                   g >= expected - 3 * e, stderr=e)
    return report


def suite_walk_upper_bound(seed=0, n_samples=100_000) -> Report:
    report = Report("cor4")
    params = GaussianWalkParams(1.0, 1.0, 0.1, 0.9)
    for delay in (1, 4):
        check_walk_upper_bound(params, delay, n_samples, seed, report)
    z = GaussianWalkParams(1.0, 1.0, 0.0, 0.9)
    gap, _ = stationary_gap(z, 1, belief_mean_policy(z), 10_000, seed)
    report.add("walk-upper-bound", "walk-sigma0", gap, walk_gap_upper_bound(z, 1), -gap, gap == 0.0)
    return report


def suite_walk_lower_bound(seed=0, n_samples=100_000, extra_policies=None) -> Report:
    report = Report("thm5")
    params = GaussianWalkParams(1.0, 1.0, 0.1, 0.9)
    for delay in (1, 4):
        check_walk_lower_bound(params, delay, n_samples, seed, (extra_policies or {}).get(delay), report)
    return report


def suite_fractional(seed=0, n_samples=20_000) -> Report:
    from .delay import check_fractional_composition
    from .envs.chain import GeneratorChainEnv, random_rates
    from .envs.linear import LinearSystemEnv

    rng = np.random.default_rng(seed)
    report = Report("fractional")
    for i in range(5):
        S, A = int(rng.integers(2, 5)), int(rng.integers(1, 3))
        env = GeneratorChainEnv(random_rates(S, A, rng), rng.uniform(-1, 1, (S, A)))
        for frac in (0.25, 0.5, 0.75):
            rep = check_fractional_composition(env.mdp.p, env.substep_kernel(frac),
                                               env.substep_kernel(1 - frac), n_samples,
                                               seed=int(rng.integers(2**63)))
            report.add("composition-finite", f"generator-{i}-f{frac}", rep.max_deviation,
                       rep.confidence_bound, rep.confidence_bound - rep.max_deviation, rep.passed,
                       exact_deviation=rep.exact_deviation)
    lin = LinearSystemEnv()
    for frac in (0.0, 0.3, 0.5):
        pairs = [(float(s), float(a)) for s, a in rng.uniform(-1, 1, (20, 2))]
        rep = check_fractional_composition(
            lambda s, a: lin.advance(s, a, 1.0)[0],
            lambda s, a, f=frac: lin.advance(s, a, f)[0],
            lambda s, a, f=frac: lin.advance(s, a, 1 - f)[0], 0, states=pairs)
        report.add("composition-deterministic", f"linear-f{frac}", rep.max_deviation, 0.0,
                   -rep.max_deviation, rep.passed)
    return report


SUITES = {
    "lemma1": suite_perf_difference,
    "thm2": suite_dispersion_bound,
    "cor3": suite_time_lipschitz_bound,
    "cor4": suite_walk_upper_bound,
    "thm5": suite_walk_lower_bound,
    "appendixA": suite_wasserstein_facts,
    "fractional": suite_fractional,
}

__all__ = [
    "AugmentedMdp", "CheckRecord", "LipschitzReport", "Report", "SUITES", "augmented_optimal_value",
    "belief_policy", "build_augmented_mdp", "check_time_lipschitz_bound", "check_walk_upper_bound",
    "check_dispersion_bound", "check_walk_lower_bound", "delayed_policy_value", "lipschitz_report",
    "memoryless_policy_values", "perf_diff_check", "sigma_b", "wasserstein_1d",
]
