"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import (
    ConfigError,
    ScenarioConfig,
    curve_csv,
    load_curve_model,
    load_json,
    reproduce_paper,
    run_scenario,
    with_overrides,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _read_source(arg: str) -> tuple[str, str]:
    """Return (label, text) for a path or an inline JSON string."""
    if arg.lstrip().startswith("{"):
        return "<inline>", arg
    try:
        return arg, Path(arg).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {arg}: {e.strerror}") from None


def _load_scenario(args) -> ScenarioConfig:
    label, text = _read_source(args.config)
    try:
        cfg = ScenarioConfig.from_json(text)
    except ConfigError as e:
        raise ConfigError(e.message, e.line, label) from None
    return with_overrides(cfg, seed=args.seed, outputs=args.out)


def cmd_validate(args) -> int:
    cfg = _load_scenario(args)
    print(f"ok: n={cfg.n} steps={cfg.steps} burn_in={cfg.burn_in} replicates={cfg.replicates}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args)
    res = run_scenario(cfg, cfg.outputs, threads=args.threads)
    eq = res.equilibrium
    print(f"wrote {cfg.outputs}: density={eq.density_mean:.4f} "
          f"prop_degree1={eq.prop_degree1_mean:.3f} spells={res.hazard.n_total}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = args.out or "paper-out"
    results = reproduce_paper(out, seed=args.seed or 0, replicates=args.replicates,
                              threads=args.threads, steps=args.steps, burn_in=args.burn_in)
    print("configuration  density  prop_degree1")
    for name, res in results.items():
        print(f"{name:>13}  {res.equilibrium.density_mean:.4f}   {res.equilibrium.prop_degree1_mean:.3f}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_curve(args, name: str) -> int:
    label, text = _read_source(args.model)
    try:
        model = load_curve_model(load_json(text), text)
    except ConfigError as e:
        raise ConfigError(e.message, e.line, label) from None
    csv_text = curve_csv(model, args.x_max)
    if args.out:
        dest = Path(args.out)
        dest.mkdir(parents=True, exist_ok=True)
        (dest / f"{name}.csv").write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the RNG seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker processes for replicates")

    p = argparse.ArgumentParser(prog="stergm", parents=[common],
                                description="Separable temporal ERGM simulation and tie-duration curves")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a scenario config")
    s.add_argument("config", help="scenario JSON file (or inline JSON)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("validate-config", parents=[common], help="check a scenario config")
    s.add_argument("config")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("reproduce-paper", parents=[common],
                       help="run the four monogamy-bias configurations")
    s.add_argument("--replicates", type=int, default=4)
    s.add_argument("--steps", type=int, default=11_000)
    s.add_argument("--burn-in", type=int, default=1_000)
    s.set_defaults(func=cmd_reproduce)

    for name in ("pmf", "hazard"):
        s = sub.add_parser(name, parents=[common], help="emit x,f,F,h for a duration model")
        s.add_argument("--model", required=True, help="model JSON file (or inline JSON)")
        s.add_argument("--x-max", type=int, default=50)
        s.set_defaults(func=lambda a, _n=name: _cmd_curve(a, _n))
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for k, v in (("seed", None), ("out", None), ("threads", 1)):
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
