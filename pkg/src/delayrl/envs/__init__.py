"""Environment registry addressable by name from experiment configs."""
from __future__ import annotations

from ..errors import ConfigurationError
from ..mdp import FiniteMdpEnv
from .chain import GeneratorChainEnv, LipschitzConstants, make_chain_mdp, measure_constants
from .gaussian_walk import GaussianWalkEnv, GaussianWalkParams, gaussian_walk_step
from .linear import LinearSystemEnv
from .noise import NOISE_PRESETS, NoiseSpec, apply_noise, noise_from_name
from .pendulum import PendulumEnv, energy, pendulum_step


def make_env(name: str, **params):
    if name == "pendulum":
        noise = params.pop("noise", None)
        literal = params.pop("noise_literal", False)
        spec = noise_from_name(noise, literal) if noise else None
        return PendulumEnv(noise=spec, **params)
    if name == "gaussian-walk":
        keys = ("l_pi", "l_q", "sigma", "gamma")
        wp = GaussianWalkParams(**{k: params.pop(k) for k in keys if k in params})
        return GaussianWalkEnv(wp, **params)
    if name == "chain":
        episode_length = params.pop("episode_length", None)
        return FiniteMdpEnv(make_chain_mdp(**params), episode_length=episode_length)
    if name == "linear":
        return LinearSystemEnv(**params)
    raise ConfigurationError(f"unknown environment {name!r} (key: env.name)")


ENV_NAMES = ("pendulum", "gaussian-walk", "chain", "linear")

__all__ = [
    "ENV_NAMES", "GaussianWalkEnv", "GaussianWalkParams", "GeneratorChainEnv", "LinearSystemEnv",
    "LipschitzConstants", "NOISE_PRESETS", "NoiseSpec", "PendulumEnv", "apply_noise", "energy",
    "gaussian_walk_step", "make_chain_mdp", "make_env", "measure_constants", "noise_from_name",
    "pendulum_step",
]
