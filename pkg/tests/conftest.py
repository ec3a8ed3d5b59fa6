import numpy as np
import pytest

from delayrl.mdp import FiniteMdp


def two_state_mdp(gamma=0.9):
    # Action 0 keeps the state, action 1 flips it; being in state 1 pays 1.
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 0, 1] = 1.0
    p[0, 1, 1] = p[1, 1, 0] = 1.0
    r = np.array([[0.0, 0.0], [1.0, 1.0]])
    return FiniteMdp(p, r, gamma)


def random_mdp(rng, n_states=4, n_actions=2, gamma=0.9):
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    r = rng.uniform(-1, 1, size=(n_states, n_actions))
    return FiniteMdp(p, r, gamma)


@pytest.fixture
def flip_mdp():
    return two_state_mdp()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance results are collected here and printed once at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
