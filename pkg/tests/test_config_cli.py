import json

import pytest

from delayrl import config as cfgmod
from delayrl import harness
from delayrl.cli import main, parse_value
from delayrl.errors import CapabilityError, ConfigurationError, UsageError

FAST = {"preset": "sarsa-pendulum", "sarsa.iterations": 2, "sarsa.steps_per_iteration": 1000,
        "sarsa.eval_steps": 200}


def test_resolve_defaults_presets_and_errors():
    cfg = cfgmod.resolve({"preset": "dida-pendulum"})
    assert cfg["algorithm"] == "dida" and cfg["dida.hidden"] == [100, 100, 10]
    assert cfg["sarsa.alpha"] == 0.1 and cfg["sarsa.lam"] == 0.9 and cfg["sarsa.bins"] == 15
    nested = cfgmod.resolve({"env": {"name": "chain", "n_states": 4, "slip": 0.2}, "algorithm": "sarsa"})
    assert cfgmod.env_params(nested) == {"n_states": 4, "slip": 0.2, "episode_length": 200}
    with pytest.raises(ConfigurationError, match="env.name"):
        cfgmod.resolve({})
    with pytest.raises(ConfigurationError, match="dida.epoch"):
        cfgmod.resolve({"preset": "dida-pendulum", "dida.epoch": 3})
    with pytest.raises(ConfigurationError, match="delay"):
        cfgmod.resolve({"preset": "sarsa-pendulum", "delay": 0.5})
    with pytest.raises(ConfigurationError, match="seeds"):
        cfgmod.resolve({"preset": "sarsa-pendulum", "seeds": []})


def test_hash_ignores_location_and_toml_roundtrip(tmp_path):
    a = cfgmod.resolve(dict(FAST, output_dir="x"))
    b = cfgmod.resolve(dict(FAST, output_dir="y", workers=4))
    assert cfgmod.config_hash(a) == cfgmod.config_hash(b)
    assert cfgmod.config_hash(a) != cfgmod.config_hash(dict(a, delay=3))
    path = tmp_path / "c.toml"
    path.write_text(cfgmod.dumps_toml(a))
    assert cfgmod.load(path) == a


def test_parse_value():
    assert parse_value("3") == 3 and parse_value("[1, 2]") == [1, 2]
    assert parse_value("beta(2,2)") == "beta(2,2)" and parse_value("true") is True


def test_run_writes_per_seed_and_aggregate(tmp_path):
    cfg = cfgmod.resolve(dict(FAST, seeds=[0, 1]))
    res = harness.run(cfg, tmp_path / "a")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["aggregate.csv", "config.toml", "curve_seed0.csv", "curve_seed1.csv"]
    assert harness.audit(tmp_path / "a")
    h = cfgmod.config_hash(cfg)
    assert all(r["config_hash"] == h for r in harness.read_csv(tmp_path / "a" / "curve_seed1.csv"))
    harness.run(cfg, tmp_path / "b")
    for name in ("aggregate.csv", "curve_seed0.csv", "curve_seed1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    agg = res.aggregate[-1]
    assert agg["n_seeds"] == 2


def test_worker_pool_matches_serial(tmp_path):
    cfg = cfgmod.resolve(dict(FAST, seeds=[0, 1]))
    harness.run(cfg, tmp_path / "s")
    harness.run(dict(cfg, workers=2), tmp_path / "p")
    assert (tmp_path / "s/aggregate.csv").read_bytes() == (tmp_path / "p/aggregate.csv").read_bytes()


def test_audit_detects_tampering(tmp_path):
    harness.run(cfgmod.resolve(FAST), tmp_path)
    agg = tmp_path / "aggregate.csv"
    lines = agg.read_text().splitlines()
    cols = lines[1].split(",")
    cols[2] = "0.0"
    agg.write_text("\n".join([lines[0], ",".join(cols)] + lines[2:]) + "\n")
    assert not harness.audit(tmp_path)


def test_failure_leaves_error_record(tmp_path):
    cfg = cfgmod.resolve({"preset": "aug-sarsa-pendulum", "delay": 10, "sarsa.iterations": 1})
    with pytest.raises(CapabilityError):
        harness.run(cfg, tmp_path)
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] == "CapabilityError" and err["completed_seeds"] == []


def test_sweep_rows_sorted_and_match_plain_run(tmp_path):
    cfg = cfgmod.resolve(FAST)
    rows = harness.sweep_delay(cfg, [2, 0, 1], tmp_path / "sw")
    assert [r["delay"] for r in rows] == [0, 1, 2]
    plain = harness.run(dict(cfg, delay=0), tmp_path / "plain")
    assert rows[0]["mean_final_return"] == plain.aggregate[-1]["mean_return"]
    head = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()[0]
    assert head == "delay,mean_final_return,std,n_seeds,config_hash"


def test_verify_unknown_suite():
    with pytest.raises(UsageError):
        harness.verify("lemma2")


def test_cli_commands(tmp_path, capsys):
    assert main(["list-presets"]) == 0
    assert "dsarsa-pendulum" in capsys.readouterr().out
    assert main(["run", "--set", "algorithm=sarsa"]) != 0
    assert "env.name" in capsys.readouterr().err
    out = tmp_path / "run"
    args = ["run", "--preset", "dsarsa-pendulum", "--set", "sarsa.iterations=1", "--set",
            "sarsa.steps_per_iteration=1000", "--set", "seeds=[0, 1]", "--out", str(out), "--audit"]
    assert main(args) == 0
    assert len(list(out.glob("curve_seed*.csv"))) == 2
    cfg_file = tmp_path / "exp.toml"
    cfg_file.write_text('algorithm = "sarsa"\ndelay = 1\n[env]\nname = "pendulum"\n'
                        '[sarsa]\niterations = 1\nsteps_per_iteration = 1000\n')
    assert main(["sweep-delay", str(cfg_file), "--delays", "0,1", "--out", str(tmp_path / "sw")]) == 0
    assert (tmp_path / "sw" / "sweep.csv").exists()
    assert main(["verify", "fractional", "--out", str(tmp_path / "v")]) == 0
    assert (tmp_path / "v" / "fractional.jsonl").exists()
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nope"])
    assert exc.value.code != 0
    assert main(["run", str(tmp_path / "missing.toml")]) != 0


def test_harness_dida_and_finite_tabular_paths(tmp_path):
    dida = cfgmod.resolve({"preset": "dida-pendulum", "delay": 0.5, "dida.iterations": 1,
                           "dida.steps_per_iteration": 200, "dida.eval_steps": 200, "dida.hidden": [8],
                           "dida.include_expert_steps": True, "expert.training_steps": 1000})
    res = harness.run(dida, tmp_path / "d")
    assert res.aggregate[0]["env_steps"] == 1200
    chain = cfgmod.resolve({"algorithm": "dsarsa", "delay": 1, "env.name": "chain", "env.n_states": 4,
                            "env.slip": 0.1, "env.episode_length": 20, "sarsa.iterations": 2,
                            "sarsa.steps_per_iteration": 500, "sarsa.eval_steps": 100})
    res = harness.run(chain, tmp_path / "c")
    assert len(res.aggregate) == 2
    noisy = cfgmod.resolve(dict(FAST, **{"env.noise": "beta(2,2)", "sarsa.iterations": 1}))
    assert len(harness.run(noisy, tmp_path / "n").aggregate) == 1
