"""Command-line entry point: ``delayrl run|sweep-delay|verify|list-presets``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import config as cfgmod
from . import harness
from .errors import DelayRLError
from .theory import SUITES


def parse_value(text: str):
    """Interpret ``--set`` values as TOML literals, falling back to a bare string."""
    try:
        return cfgmod.tomllib.loads(f"v = {text}")["v"]
    except cfgmod.tomllib.TOMLDecodeError:
        return text


def build_config(args) -> dict:
    raw: dict = {}
    if getattr(args, "config", None):
        raw.update(cfgmod.flatten(cfgmod.tomllib.loads(_read(args.config))))
    if getattr(args, "preset", None):
        raw["preset"] = args.preset
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise cfgmod.ConfigurationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = parse_value(v.strip())
    if getattr(args, "out", None):
        raw["output_dir"] = args.out
    return cfgmod.resolve(raw)


def _read(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except FileNotFoundError:
        raise cfgmod.ConfigurationError(f"config file {path} not found") from None


def cmd_run(args) -> int:
    cfg = build_config(args)
    res = harness.run(cfg)
    last = res.aggregate[-1]
    print(f"{cfg['algorithm']} delay={cfg['delay']} final mean_return={last['mean_return']:.2f} "
          f"std={last['std_return']:.2f} -> {res.output_dir}")
    if args.audit and not harness.audit(res.output_dir):
        print("audit failed: aggregate does not match per-seed curves", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    delays = [parse_value(d) for d in args.delays.split(",")]
    for row in harness.sweep_delay(cfg, delays):
        print(f"delay={row['delay']} mean_final_return={row['mean_final_return']:.2f} std={row['std']:.2f}")
    return 0


def cmd_verify(args) -> int:
    report = harness.verify(args.suite, args.out)
    print(report.summary())
    return 0 if report.passed else 1


def cmd_list(args) -> int:
    for name, preset in cfgmod.PRESETS.items():
        print(f"{name}: " + ", ".join(f"{k}={v}" for k, v in preset.items()))
    return 0


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="TOML configuration file")
    p.add_argument("--preset", choices=sorted(cfgmod.PRESETS))
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a dotted key")
    p.add_argument("--out", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayrl", description="Delayed-control experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train over all configured seeds")
    _add_config_args(p)
    p.add_argument("--audit", action="store_true", help="recompute the aggregate from per-seed files")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-delay", help="run the same config at several delays")
    _add_config_args(p)
    p.add_argument("--delays", required=True, help="comma-separated, e.g. 1,2,5,10")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run a numerical verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--out", default=None, help="directory for the jsonl report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list-presets", help="show the shipped presets")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DelayRLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
