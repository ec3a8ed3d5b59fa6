import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayrl.delay import AugmentedState, DelayedEnv, belief_exact
from delayrl.envs import GaussianWalkParams, make_chain_mdp
from delayrl.errors import CapabilityError
from delayrl.experts import value_iteration_expert
from delayrl.mdp import FiniteMdpEnv, discounted_return, policy_matrix, solve_v_exact, truncation_horizon
from delayrl.theory import (SUITES, Report, belief_dispersion, belief_mean_policy, belief_policy,
                            walk_gap_upper_bound, build_augmented_mdp, check_time_lipschitz_bound, check_dispersion_bound,
                            delayed_policy_value, gaussian_sigma_b_mc, walk_gap_lower_bound,
                            memoryless_policy, memoryless_policy_values, perf_diff_terms,
                            stationary_gap)

from conftest import random_mdp


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 3), st.data())
def test_codec_roundtrip(n_states, n_actions, delay, data):
    aug = build_augmented_mdp(random_mdp(np.random.default_rng(0), n_states, n_actions), delay)
    x = data.draw(st.integers(0, aug.n_states - 1))
    s, q = aug.decode(x)
    assert aug.encode(s, q) == x and len(q) == delay


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3))
def test_augmented_mdp_is_consistent(seed, delay):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, 3, 2)
    aug = build_augmented_mdp(mdp, delay)
    np.testing.assert_allclose(aug.mdp.p.sum(-1), 1.0, atol=1e-12)
    assert abs(aug.mdp.mu.sum() - 1) < 1e-12
    for x in range(aug.n_states):
        s, q = aug.decode(x)
        np.testing.assert_allclose(aug.beliefs[x], belief_exact(mdp, AugmentedState(s, q)), atol=1e-12)
        np.testing.assert_allclose(aug.mdp.r[x], aug.beliefs[x] @ mdp.r, atol=1e-12)


def test_delay_zero_augmented_value_is_base_value(rng):
    mdp = random_mdp(rng, 4, 3)
    pi = rng.dirichlet(np.ones(3), size=4)
    assert delayed_policy_value(build_augmented_mdp(mdp, 0), pi) == pytest.approx(mdp.mu @ solve_v_exact(mdp, pi))


def test_augmented_value_matches_simulated_delayed_env(rng):
    mdp = random_mdp(rng, 3, 2, gamma=0.8)
    aug = build_augmented_mdp(mdp, 2)
    actions = rng.integers(0, 2, aug.n_states)
    exact = delayed_policy_value(aug, actions)
    env = DelayedEnv(FiniteMdpEnv(mdp), 2)
    horizon = truncation_horizon(0.8, 1.0, 1e-4)
    rets = []
    for i in range(3000):
        x = env.reset(seed=i)
        rewards = []
        for _ in range(horizon):
            x, r, _, _ = env.step(int(actions[aug.encode(x.base_state, x.queue)]))
            rewards.append(r)
        rets.append(discounted_return(rewards, 0.8))
    se = np.std(rets) / math.sqrt(len(rets))
    assert abs(np.mean(rets) - exact) < 4 * se + 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3))
def test_performance_difference_identity(seed, delay):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, 3, 2)
    aug = build_augmented_mdp(mdp, delay)
    expert = rng.dirichlet(np.ones(2), size=3)
    pi_t = rng.dirichlet(np.ones(2), size=aug.n_states)
    lhs, rhs, _ = perf_diff_terms(mdp, expert, pi_t, delay, aug)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_belief_policy_mixes_expert_over_belief(rng):
    mdp = random_mdp(rng, 3, 2)
    aug = build_augmented_mdp(mdp, 1)
    expert = value_iteration_expert(mdp)
    np.testing.assert_allclose(belief_policy(expert, aug), aug.beliefs @ policy_matrix(mdp, expert))


def test_dispersion_vanishes_without_noise():
    aug = build_augmented_mdp(make_chain_mdp(4, 0.0), 2)
    assert np.all(belief_dispersion(aug) == 0)


def test_bound_checks_on_chains(rng):
    for slip in (0.0, 0.3, 0.9):
        mdp = make_chain_mdp(5, slip)
        expert = value_iteration_expert(mdp)
        assert check_dispersion_bound(mdp, expert, 2).passed
        rep = check_time_lipschitz_bound(mdp, expert, 3)
        assert rep.passed


def test_memoryless_values_enumerate_all_policies(flip_mdp):
    pols, vals = memoryless_policy_values(flip_mdp, 0)
    assert pols.shape == (4, 2)
    # undelayed: stay in 1, flip from 0 is optimal; value from uniform start
    assert vals.max() == pytest.approx(0.5 * 9 + 0.5 * 10)


def test_capacity_guard():
    with pytest.raises(CapabilityError):
        build_augmented_mdp(random_mdp(np.random.default_rng(0), 5, 3), 8)


def test_gaussian_closed_forms():
    p = GaussianWalkParams(1.0, 1.0, 0.1, 0.9)
    assert walk_gap_lower_bound(p, 1) == pytest.approx(0.7978845608, rel=1e-9)
    assert walk_gap_lower_bound(p, 4) == pytest.approx(1.5957691216, rel=1e-9)
    assert walk_gap_upper_bound(p, 4) == pytest.approx(4.0)
    # two independent N(0, delay sigma^2) continuations: E|X - Y| = 2 sigma sqrt(delay / pi)
    assert gaussian_sigma_b_mc(p, 3, 200_000, seed=0) == pytest.approx(0.2 * math.sqrt(3 / math.pi), rel=0.01)


def test_walk_gaps_order():
    p = GaussianWalkParams(1.0, 1.0, 0.1, 0.9)
    best, se = stationary_gap(p, 2, belief_mean_policy(p), 20_000, seed=1)
    assert abs(best - walk_gap_lower_bound(p, 2)) < 4 * se + 0.01
    worse, _ = stationary_gap(p, 2, memoryless_policy(p), 20_000, seed=1)
    assert worse > best


@pytest.mark.parametrize("suite,kwargs", [
    ("lemma1", {"n_fixtures": 10}), ("thm2", {"n_fixtures": 5}), ("cor3", {"n_fixtures": 5}),
    ("appendixA", {"n_fixtures": 5}), ("fractional", {"n_samples": 5000}),
    ("cor4", {"n_samples": 20_000}),
])
def test_small_suites_pass(suite, kwargs, tmp_path):
    rep = SUITES[suite](**kwargs)
    assert rep.passed, rep.summary()
    rep.to_jsonl(tmp_path / "r.jsonl")
    rows = [json.loads(l) for l in (tmp_path / "r.jsonl").read_text().splitlines()]
    assert len(rows) == len(rep.records) and all(r["passed"] for r in rows)


def test_report_worst_and_summary():
    rep = Report("x")
    rep.add("a", "f1", 1.0, 2.0, 1.0, True)
    rep.add("a", "f2", 3.0, 2.0, -1.0, False)
    assert rep.worst("a").fixture == "f2" and not rep.passed
    assert rep.summary().endswith("suite x: FAIL")
