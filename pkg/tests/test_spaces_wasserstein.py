import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import wasserstein_distance

from delayrl.errors import ConfigurationError, UsageError
from delayrl.spaces import Box, Discrete
from delayrl.wasserstein import pairwise_w1, w1_to_dirac, wasserstein_1d


def test_discrete_space():
    d = Discrete(3)
    assert d.clip(2) == 2 and d.contains(1) and not d.contains(3)
    with pytest.raises(ConfigurationError):
        d.clip(5)


@given(st.floats(-100, 100))
def test_box_clip_and_scale_roundtrip(a):
    b = Box(-2.0, 2.0)
    c = float(np.squeeze(b.clip(a)))
    assert -2 <= c <= 2
    assert abs(float(np.squeeze(b.unscale(b.scale(c)))) - c) < 1e-12


prob = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8)


@settings(max_examples=60, deadline=None)
@given(prob, st.integers(0, 1000))
def test_w1_matches_scipy_oracle(w, seed):
    rng = np.random.default_rng(seed)
    p = np.array(w) / sum(w)
    q = rng.dirichlet(np.ones(len(w)))
    x = rng.normal(size=len(w))
    ours = wasserstein_1d(p, q, x)
    ref = wasserstein_distance(x, x, p, q)
    assert abs(ours - ref) < 1e-10
    assert wasserstein_1d(p, p, x) == 0.0
    # mean difference is dominated by W1
    assert abs(p @ x - q @ x) <= ours + 1e-12


def test_w1_batched_and_dirac(rng):
    P = rng.dirichlet(np.ones(4), size=5)
    Q = rng.dirichlet(np.ones(4), size=5)
    x = np.array([0.0, 1.0, 3.0, 4.0])
    np.testing.assert_allclose(pairwise_w1(P, Q, x), [wasserstein_1d(p, q, x) for p, q in zip(P, Q)])
    dirac = np.array([0, 0, 1.0, 0])
    assert abs(w1_to_dirac(P[0], x, 3.0) - wasserstein_1d(P[0], dirac, x)) < 1e-12


def test_w1_shape_errors():
    with pytest.raises(UsageError):
        wasserstein_1d([0.5, 0.5], [1.0, 0, 0])
