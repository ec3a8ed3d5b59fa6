import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayrl.delay import (AugmentedState, DelayedEnv, FractionalDelayedEnv, belief_exact,
                           check_fractional_composition, wrap_delayed, wrap_fractional)
from delayrl.envs import GeneratorChainEnv, LinearSystemEnv, PendulumEnv
from delayrl.envs.chain import random_rates
from delayrl.errors import CapabilityError, ConfigurationError, StateError
from delayrl.mdp import FiniteMdpEnv, rollout

from conftest import random_mdp


def test_augmented_state_equality_and_hash():
    a = AugmentedState(1, (0, 1))
    assert a == AugmentedState(1, (0, 1)) and hash(a) == hash(AugmentedState(1, (0, 1)))
    assert a != AugmentedState(1, (0,))
    np.testing.assert_array_equal(a.flat(), [1, 0, 1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(0, 10_000))
def test_delayed_trajectory_is_shifted_undelayed_one(delay, seed):
    # Same true process, so the observed state lags by exactly `delay` steps.
    rng = np.random.default_rng(seed)
    env = DelayedEnv(FiniteMdpEnv(random_mdp(rng, 4, 2)), delay)
    x = env.reset(seed=seed)
    assert len(x.queue) == delay
    trues = [env.true_state]
    obs = [x.base_state]
    for t in range(12):
        x, r, _, info = env.step(int(rng.integers(2)))
        trues.append(info["true_state"])
        obs.append(x.base_state)
    for t in range(len(obs) - delay):
        assert obs[t + delay] == trues[t]


def test_queue_rotation_and_observed_reward(flip_mdp):
    env = DelayedEnv(FiniteMdpEnv(flip_mdp), 2)
    x = env.reset(seed=0, state=0, queue=(1, 0))
    assert x == AugmentedState(0, (1, 0)) and env.true_state == 1
    x, r, _, info = env.step(1)
    # oldest queued action applied at the observed state 0
    assert x == AugmentedState(1, (0, 1))
    assert info["observed_reward"] == flip_mdp.r[0, 1]
    assert r == flip_mdp.r[1, 1] and env.true_state == 0


def test_delay_zero_is_identity(rng):
    mdp = random_mdp(rng, 4, 3)
    pol = lambda s, g: int(g.integers(3))
    plain = rollout(FiniteMdpEnv(mdp, episode_length=20), pol, 20, seed=3)
    wrapped = DelayedEnv(FiniteMdpEnv(mdp, episode_length=20), 0)
    x = wrapped.reset(seed=None)
    assert x.queue == () and wrapped.observation_size == 4
    assert len(plain.transitions) == 20


def test_errors():
    with pytest.raises(ConfigurationError):
        DelayedEnv(LinearSystemEnv(), 1.5)
    env = DelayedEnv(LinearSystemEnv(), 1)
    with pytest.raises(StateError):
        env.step(0.0)
    with pytest.raises(ConfigurationError):
        env.reset(queue=(0.1, 0.2))

    class NoAdvance(FiniteMdpEnv):
        advance = None

    del NoAdvance.advance
    with pytest.raises(CapabilityError):
        FractionalDelayedEnv(FiniteMdpEnv(random_mdp(np.random.default_rng(0))), 0.5)


def test_wrap_fractional_dispatch():
    assert type(wrap_fractional(LinearSystemEnv(), 2.0)) is DelayedEnv
    env = wrap_fractional(LinearSystemEnv(), 1.5)
    assert isinstance(env, FractionalDelayedEnv) and env.queue_length == 2


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.lists(st.floats(-1, 1), min_size=3, max_size=10))
def test_fractional_linear_state_is_lagged_action_mix(f, actions):
    # s_{t+1} = s_t + f * a_prev + (1 - f) * a_t on the integrator
    env = FractionalDelayedEnv(LinearSystemEnv(), f)
    env.reset(seed=0, queue=(0.0,))
    s, prev = 0.0, 0.0
    for a in actions:
        env.step(a)
        s = s + f * prev + (1 - f) * a
        prev = a
        assert abs(env.true_state - s) < 1e-12
    assert abs(env.expert_state() - (s + f * prev)) < 1e-12


def test_fractional_constant_action_matches_undelayed_pendulum():
    frac = FractionalDelayedEnv(PendulumEnv(), 0.3)
    plain = PendulumEnv()
    frac.reset(seed=0, state=[1.0, 0.0], queue=(0.7,))
    plain.reset(state=[1.0, 0.0])
    for _ in range(20):
        frac.step(0.7)
        plain.step(0.7)
    np.testing.assert_array_equal(frac.true_state, plain.state)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3))
def test_belief_is_pushforward_of_dirac(seed, delay):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, 4, 2)
    q = tuple(int(a) for a in rng.integers(0, 2, size=delay))
    b = belief_exact(mdp, AugmentedState(2, q), delay)
    ref = np.eye(4)[2]
    for a in q:
        ref = np.array([sum(ref[s] * mdp.p[s, a, t] for s in range(4)) for t in range(4)])
    np.testing.assert_allclose(b, ref, atol=1e-14)
    assert abs(b.sum() - 1) < 1e-12


def test_belief_matches_empirical_true_state(rng):
    mdp = random_mdp(rng, 3, 2)
    env = DelayedEnv(FiniteMdpEnv(mdp), 2)
    counts = np.zeros(3)
    for i in range(4000):
        env.reset(seed=i, state=1, queue=(0, 1))
        counts[env.true_state] += 1
    b = belief_exact(mdp, AugmentedState(1, (0, 1)))
    assert np.max(np.abs(counts / 4000 - b)) < 0.04


def test_composition_check_generator_chain(rng):
    env = GeneratorChainEnv(random_rates(4, 2, rng), rng.normal(size=(4, 2)))
    rep = check_fractional_composition(env.substep_kernel(1.0), env.substep_kernel(0.5),
                                       env.substep_kernel(0.5), 20_000, seed=1)
    assert rep.passed and rep.exact_deviation < 1e-10
    # a wrong substep is detected
    bad = check_fractional_composition(env.substep_kernel(1.0), env.substep_kernel(0.2),
                                       env.substep_kernel(0.2), 20_000, seed=1)
    assert not bad.passed


def test_composition_check_deterministic():
    lin = LinearSystemEnv()
    f = lambda s, a: lin.advance(s, a, 0.25)[0]
    g = lambda s, a: lin.advance(s, a, 0.75)[0]
    t = lambda s, a: lin.advance(s, a, 1.0)[0]
    rep = check_fractional_composition(t, f, g, 0, states=[(0.0, 0.5), (1.0, -1.0)])
    assert rep.passed
