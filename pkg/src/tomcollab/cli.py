"""Command-line entry point.

Subcommands: gen-data, train, eval, switch-eval, grad-check. Each takes a
flat key=value config file; --seed overrides the config's seed and all
outputs land under --out.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .config import build_game, build_train_config, parse_config, split_kwargs
from .gradcheck import REL_TOL, run_gradient_checks
from .rng import make_rng
from .trainer import load_agents, train


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required, help="key=value config file")
    p.add_argument("--env", choices=["kitchen", "scheduling"],
                   help="must match the config's env when both are given")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default="out", help="output directory")


def _load(args):
    values = parse_config(args.config)
    if args.env and args.env != values["env"]:
        raise ValueError(f"--env {args.env} conflicts with config env {values['env']}")
    if args.seed is not None:
        values["seed"] = args.seed
    values.setdefault("seed", 0)
    return values, build_game(values)


def _make_splits(values, game):
    data_rng = make_rng(values["seed"] + 1_000_003)  # distinct from the train stream
    return harness.gen_splits(
        game, data_rng, values["train_scenarios"], values["test_scenarios"],
        **split_kwargs(values),
    )


def cmd_gen_data(args) -> int:
    values, game = _load(args)
    train_s, test_s = _make_splits(values, game)
    harness.save_splits(args.out, game, train_s, test_s)
    print(f"wrote {len(train_s)} train / {len(test_s)} test scenarios to {args.out}")
    return 0


def cmd_train(args) -> int:
    values, game = _load(args)
    if args.data:
        train_s, test_s = harness.load_splits(args.data, game)
    else:
        train_s, test_s = _make_splits(values, game)
        harness.save_splits(args.out, game, train_s, test_s)
    cfg = build_train_config(values)
    agents, metrics = train(game, train_s, test_s, cfg, out_dir=args.out)
    final = [m for m in metrics if m["eval_success"] is not None][-1]
    print(f"final eval success: {final['eval_success']:.4f} "
          f"({cfg.eval_episodes} episodes, mode={cfg.eval_mode})")
    print(f"artifacts in {args.out}")
    return 0


def cmd_eval(args) -> int:
    values, game = _load(args)
    agents = load_agents(args.checkpoint, game)
    if args.data:
        _, test_s = harness.load_splits(args.data, game)
    else:
        _, test_s = _make_splits(values, game)
    rng = make_rng(values["seed"] + 2_000_003)
    report = harness.evaluate(
        game, agents, test_s, args.episodes, rng, mode=values.get("eval_mode", "greedy"),
        label=f"eval:{args.checkpoint}",
    )
    _print_report(report)
    os.makedirs(args.out, exist_ok=True)
    harness.append_report_csv(os.path.join(args.out, "summary.csv"), report)
    return 0


def cmd_switch_eval(args) -> int:
    values, game = _load(args)
    agents1 = load_agents(args.checkpoint, game)
    agents2 = load_agents(args.checkpoint2, game)
    if args.data:
        _, test_s = harness.load_splits(args.data, game)
    else:
        _, test_s = _make_splits(values, game)
    rng = make_rng(values["seed"] + 3_000_003)
    report = harness.switch_eval(
        game, agents1, agents2, test_s, args.episodes, rng,
        mode=values.get("eval_mode", "greedy"),
    )
    _print_report(report)
    os.makedirs(args.out, exist_ok=True)
    harness.append_report_csv(os.path.join(args.out, "summary.csv"), report)
    return 0


def cmd_grad_check(args) -> int:
    results = run_gradient_checks()
    worst = 0.0
    for name, err in results:
        status = "ok" if err < REL_TOL else "FAIL"
        print(f"{status:4s} {name}: max relative error {err:.3e}")
        worst = max(worst, err)
    if worst >= REL_TOL:
        print(f"gradient check failed: {worst:.3e} >= {REL_TOL}", file=sys.stderr)
        return 1
    return 0


def _print_report(r) -> None:
    print(f"{r.label}: success {100 * r.success_rate:.2f}% "
          f"+- {100 * r.stderr:.2f}pp over {r.episodes} episodes")
    print(f"  mean returns: {r.mean_return[0]:.3f} / {r.mean_return[1]:.3f}")
    if r.unique_identifier_rate is not None:
        print(f"  unique-identifier rate: {100 * r.unique_identifier_rate:.2f}%")
    print(f"  terminals: {r.terminal_breakdown}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tomcollab",
        description="Cooperative imperfect-information games with belief-tracking agents",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write exclusive train/test scenario files")
    _add_common(p)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="run the alternating training loop")
    _add_common(p)
    p.add_argument("--data", help="directory with train.json/test.json (default: generate)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="directory with train.json/test.json")
    p.add_argument("--episodes", type=int, default=2000)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("switch-eval", help="cross-pair two independent runs")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="agents from run 1")
    p.add_argument("--checkpoint2", required=True, help="agents from run 2")
    p.add_argument("--data", help="directory with train.json/test.json")
    p.add_argument("--episodes", type=int, default=2000)
    p.set_defaults(fn=cmd_switch_eval)

    p = sub.add_parser("grad-check", help="finite-difference gradient validation")
    p.set_defaults(fn=cmd_grad_check)

    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
