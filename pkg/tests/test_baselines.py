import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayrl.baselines import (GreedyTabularPolicy, SarsaParams, TabularQ, dsarsa_step,
                               pendulum_discretizer, run_pendulum_tabular, run_tabular, sarsa_lambda_step,
                               table_rows)
from delayrl.delay import DelayedEnv
from delayrl.envs import make_chain_mdp
from delayrl.errors import CapabilityError, ConfigurationError, StateError
from delayrl.mdp import FiniteMdpEnv, solve_q_exact


def dense_sarsa_lambda(q, e, s, a, r, s2, a2, alpha, gamma, lam):
    delta = r + gamma * q[s2, a2] - q[s, a]
    e[s, a] += 1.0
    q += alpha * delta * e
    e *= gamma * lam


transition = st.tuples(st.integers(0, 3), st.integers(0, 1), st.floats(-1, 1),
                       st.integers(0, 3), st.integers(0, 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(transition, min_size=1, max_size=40), st.floats(0.01, 0.5), st.floats(0, 1))
def test_sparse_trace_update_matches_dense_oracle(steps, alpha, lam):
    tab = TabularQ(4, 2)
    q, e = np.zeros((4, 2)), np.zeros((4, 2))
    for s, a, r, s2, a2 in steps:
        sarsa_lambda_step(tab, s, a, r, s2, a2, alpha, 0.9, lam)
        dense_sarsa_lambda(q, e, s, a, r, s2, a2, alpha, 0.9, lam)
    np.testing.assert_allclose(tab.q, q, atol=1e-6)


def test_single_step_and_zero_td():
    tab = TabularQ(3, 2)
    sarsa_lambda_step(tab, 1, 0, 2.0, 2, 1, 0.1, 0.9, 0.9)
    assert tab.q[1, 0] == pytest.approx(0.2) and np.count_nonzero(tab.q) == 1
    tab.reset_traces()
    before = tab.q.copy()
    tab.q[2, 1] = 0.0
    # r + gamma * Q(s2, a2) - Q(s, a) = 0.2 + 0 - 0.2
    sarsa_lambda_step(tab, 1, 0, 0.2, 2, 1, 0.1, 0.9, 0.9)
    np.testing.assert_array_equal(tab.q, before)


def test_dsarsa_credits_oldest_action():
    a, b = TabularQ(2, 3), TabularQ(2, 3)
    dsarsa_step(a, 0, [2, 1], 1.0, 1, [1, 0], 0.5, 0.9, 0.0)
    sarsa_lambda_step(b, 0, 2, 1.0, 1, 1, 0.5, 0.9, 0.0)
    np.testing.assert_array_equal(a.q, b.q)
    with pytest.raises(StateError):
        dsarsa_step(a, 0, [], 1.0, 1, [0], 0.5, 0.9, 0.0)


def test_index_and_capacity_errors():
    tab = TabularQ(2, 2)
    with pytest.raises(ConfigurationError):
        sarsa_lambda_step(tab, 2, 0, 0.0, 0, 0, 0.1, 0.9, 0.9)
    rows = table_rows(15 * 15, 3, 10, "aug-sarsa")
    with pytest.raises(CapabilityError):
        TabularQ(rows, 3, memory_cap=20_000_000)
    with pytest.raises(ConfigurationError):
        SarsaParams(variant="q-learning")


def test_discretizer_covers_range():
    d = pendulum_discretizer(15)
    assert d.n_cells == 225 and d.n_actions == 3
    assert d.index([-np.pi, -8.0]) == 0 and d.index([np.pi, 8.0]) == 224
    assert d.index([100.0, -100.0]) == 14 * 15


def test_sarsa_converges_to_exact_q_on_undelayed_chain():
    mdp = make_chain_mdp(3, 0.2, gamma=0.8)
    env = DelayedEnv(FiniteMdpEnv(mdp, episode_length=10), 0)
    params = SarsaParams(variant="sarsa", delay=0, gamma=0.8, lam=0.0, eps=0.2)
    # short episodes restart from the uniform start so every row keeps being visited
    tab = run_tabular(env, params, 500_000, seed=0, alpha_schedule=lambda t: 0.5 / (1 + t / 2000))
    greedy = tab.q.argmax(1)
    pi = np.full((3, 3), 0.2 / 3)
    pi[np.arange(3), greedy] += 0.8
    assert np.max(np.abs(tab.q - solve_q_exact(mdp, pi))) < 0.05


def test_dsarsa_equals_sarsa_without_delay():
    mdp = make_chain_mdp(4, 0.3)
    tabs = []
    for variant in ("sarsa", "dsarsa"):
        env = DelayedEnv(FiniteMdpEnv(mdp, episode_length=30), 0)
        tabs.append(run_tabular(env, SarsaParams(variant=variant, delay=0), 5000, seed=3))
    np.testing.assert_array_equal(tabs[0].q, tabs[1].q)


def test_greedy_policy_rows_for_augmented_table():
    tab = TabularQ(table_rows(2, 3, 2, "aug-sarsa"), 3)
    pol = GreedyTabularPolicy(tab, "aug-sarsa", 3)
    from delayrl.delay import AugmentedState

    assert pol.row(AugmentedState(1, (2, 1))) == 1 * 9 + 2 * 3 + 1


def test_pendulum_kernel_curve_and_determinism():
    params = SarsaParams(variant="dsarsa", delay=2, iterations=2, steps_per_iteration=2000)
    c1, t1 = run_pendulum_tabular(params, seed=4, config_hash="h")
    c2, t2 = run_pendulum_tabular(params, seed=4, config_hash="h")
    assert repr(c1) == repr(c2) and [r["env_steps"] for r in c1] == [2000, 4000]
    np.testing.assert_array_equal(t1.q, t2.q)
    assert np.all(t1.e == 0)
    for r in c1:
        assert -200 * 17 < r["mean_return"] <= 0
