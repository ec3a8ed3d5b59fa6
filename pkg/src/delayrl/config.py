"""Experiment configuration: flat dotted keys, TOML files and named presets."""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigurationError

ALGORITHMS = ("dida", "sarsa", "dsarsa", "aug-sarsa")

DEFAULTS: dict = {
    "algorithm": "dida",
    "delay": 5,
    "seeds": [0],
    "output_dir": "runs/experiment",
    "workers": 1,
    "env.name": None,
    "env.noise": "",
    "env.noise_literal": False,
    "env.episode_length": 200,
    "expert.name": "pendulum-energy",
    "expert.training_steps": 0,
    "dida.iterations": 50,
    "dida.steps_per_iteration": 2000,
    "dida.retention": 10,
    "dida.eval_steps": 1000,
    "dida.epochs": 5,
    "dida.hidden": [100, 100, 10],
    "dida.lr": 1e-3,
    "dida.batch_size": 64,
    "dida.beta_rule": "first-only",
    "dida.beta_first": 1.0,
    "dida.beta_value": 0.0,
    "dida.beta_decay": 0.5,
    "dida.include_expert_steps": False,
    "sarsa.alpha": 0.1,
    "sarsa.gamma": 0.99,
    "sarsa.lam": 0.9,
    "sarsa.eps": 0.2,
    "sarsa.iterations": 50,
    "sarsa.steps_per_iteration": 20_000,
    "sarsa.eval_steps": 1000,
    "sarsa.bins": 15,
    "sarsa.memory_cap": 20_000_000,
}

# Environment-specific keys that are passed through to the constructor.
ENV_PARAM_KEYS = {
    "pendulum": ("noise", "noise_literal", "episode_length"),
    "gaussian-walk": ("l_pi", "l_q", "sigma", "gamma", "init_scale", "episode_length", "action_bound"),
    "chain": ("n_states", "slip", "action_cost", "gamma", "episode_length"),
    "linear": ("bound", "episode_length"),
}

PRESETS: dict[str, dict] = {
    "dida-pendulum": {"algorithm": "dida", "env.name": "pendulum", "delay": 5,
                      "output_dir": "runs/dida-pendulum"},
    "sarsa-pendulum": {"algorithm": "sarsa", "env.name": "pendulum", "delay": 5,
                       "output_dir": "runs/sarsa-pendulum"},
    "dsarsa-pendulum": {"algorithm": "dsarsa", "env.name": "pendulum", "delay": 5,
                        "output_dir": "runs/dsarsa-pendulum"},
    "aug-sarsa-pendulum": {"algorithm": "aug-sarsa", "env.name": "pendulum", "delay": 5,
                           "output_dir": "runs/aug-sarsa-pendulum"},
}


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _allowed(key: str) -> bool:
    if key in DEFAULTS or key == "preset":
        return True
    if key.startswith("env."):
        return any(key[4:] in keys for keys in ENV_PARAM_KEYS.values())
    return False


def resolve(overrides: dict) -> dict:
    """Defaults < preset < explicit keys; validated."""
    flat = flatten(overrides)
    cfg = copy.deepcopy(DEFAULTS)
    preset = flat.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {preset!r} (key: preset)")
        cfg.update(PRESETS[preset])
    for k, v in flat.items():
        if not _allowed(k):
            raise ConfigurationError(f"unknown configuration key {k!r}")
        cfg[k] = v
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    if not cfg.get("env.name"):
        raise ConfigurationError("missing environment name (key: env.name)")
    if cfg["env.name"] not in ENV_PARAM_KEYS:
        raise ConfigurationError(f"unknown environment {cfg['env.name']!r} (key: env.name)")
    if cfg["algorithm"] not in ALGORITHMS:
        raise ConfigurationError(f"unknown algorithm {cfg['algorithm']!r} (key: algorithm)")
    if not isinstance(cfg["delay"], (int, float)) or cfg["delay"] < 0:
        raise ConfigurationError(f"delay must be a nonnegative number (key: delay)")
    if cfg["algorithm"] != "dida" and float(cfg["delay"]) != int(cfg["delay"]):
        raise ConfigurationError("tabular baselines need an integer delay (key: delay)")
    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigurationError("seeds must be a non-empty list of integers (key: seeds)")
    if len(set(seeds)) != len(seeds):
        raise ConfigurationError("seeds must be distinct (key: seeds)")


def load(path) -> dict:
    try:
        raw = tomllib.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return resolve(raw)


def env_params(cfg: dict) -> dict:
    name = cfg["env.name"]
    params = {}
    for key in ENV_PARAM_KEYS[name]:
        full = f"env.{key}"
        if full in cfg:
            params[key] = cfg[full]
    if name == "pendulum" and not params.get("noise"):
        params.pop("noise", None)
    return params


def config_hash(cfg: dict) -> str:
    """Hash of everything that influences results (not the output location or pool size)."""
    payload = {k: v for k, v in cfg.items() if k not in ("output_dir", "workers")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def dumps_toml(cfg: dict) -> str:
    lines = []
    for k, v in sorted(cfg.items()):
        if v is None:
            continue
        lines.append(f"{_toml_key(k)} = {json.dumps(v)}")
    return "\n".join(lines) + "\n"


def _toml_key(k: str) -> str:
    return ".".join(f'"{p}"' if "-" in p else p for p in k.split("."))
