"""Delayed reinforcement learning: delay wrappers, imitation of undelayed experts,
tabular delayed baselines and numerical checks of delayed performance bounds."""

__version__ = "0.1.0"
