"""Command-line interface.

Subcommands: demo, anchors, pretrain, train, compare, eval.  Every command is
deterministic given its seed; omitted seeds default to 0.  Exit status is 0 on
success and 1 with a one-line diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import format_float, read_demonstration, read_gains, write_demonstration, write_gains
from .envs import make_env
from .harness import (
    ExperimentConfig,
    compare_agents,
    compare_to_csv,
    compute_anchors,
    execute_run,
    read_config,
    run_experiment,
    scaled_score,
)
from .pid import track_demonstration
from .train import PretrainProblem, exploration_dataset, expert_demonstration, pretrain_gains, pretrain_loss


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=("local", "global"), default="local")
    parser.add_argument("--terms", choices=("p", "pd", "pid"), default="pd")
    parser.add_argument("--method", choices=("cmaes", "bo"), default="cmaes")
    parser.add_argument("--budget", type=int, default=2000)
    parser.add_argument("--init", choices=("random", "pretrained"), default="pretrained")
    parser.add_argument("--pretrain-budget", type=int, default=300, dest="pretrain_budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridm",
        description="Tune inverse-dynamics PID gains against a state-only demonstration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_demo = sub.add_parser("demo", help="record the scripted expert as a demonstration file")
    p_demo.add_argument("env")
    p_demo.add_argument("out")
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.set_defaults(func=cmd_demo)

    p_anchors = sub.add_parser("anchors", help="print the expert/random reward anchors")
    p_anchors.add_argument("--env", required=True)
    p_anchors.add_argument("--seed", type=int, default=0)
    p_anchors.set_defaults(func=cmd_anchors)

    p_pre = sub.add_parser("pretrain", help="fit gains to exploration data, write a gains file")
    p_pre.add_argument("--env", required=True)
    p_pre.add_argument("--out", required=True)
    p_pre.add_argument("--scheme", choices=("local", "global"), default="local")
    p_pre.add_argument("--terms", choices=("p", "pd", "pid"), default="pd")
    p_pre.add_argument("--budget", type=int, default=300)
    p_pre.add_argument("--seed", type=int, default=0)
    p_pre.set_defaults(func=cmd_pretrain)

    p_train = sub.add_parser("train", help="run gain reinforcement, write an artifact directory")
    p_train.add_argument("--config", help="config file; replaces all other flags")
    p_train.add_argument("--env")
    p_train.add_argument("--demo")
    p_train.add_argument("--out")
    p_train.add_argument("--seed", type=int, default=0)
    _add_run_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_cmp = sub.add_parser("compare", help="score expert vs tuned vs default-gains controller")
    p_cmp.add_argument("--demo", required=True)
    p_cmp.add_argument("--out", required=True, help="output CSV path")
    p_cmp.add_argument("--env", help="defaults to the demo's environment")
    p_cmp.add_argument("--gains", help="tuned gains file; omitting it trains first")
    p_cmp.add_argument("--seed", type=int, default=0)
    _add_run_flags(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_eval = sub.add_parser("eval", help="replay saved gains against a demonstration")
    p_eval.add_argument("gains")
    p_eval.add_argument("--demo", required=True)
    p_eval.add_argument("--env", help="defaults to the demo's environment")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def cmd_demo(args) -> int:
    make_env(args.env)  # reject unknown envs before touching the filesystem
    demo, record = expert_demonstration(args.env, args.seed)
    write_demonstration(demo, args.out)
    print(f"expert_reward={format_float(record.cumulative_reward)}")
    return 0


def cmd_anchors(args) -> int:
    anchors = compute_anchors(args.env, args.seed)
    print(f"expert_reward={format_float(anchors.expert_reward)}")
    print(f"random_reward={format_float(anchors.random_reward)}")
    return 0


def cmd_pretrain(args) -> int:
    spec = make_env(args.env)
    problem = PretrainProblem(
        exploration_dataset(args.env, args.seed), args.scheme, args.terms, spec.dt
    )
    gains = pretrain_gains(problem, seed=args.seed, budget=args.budget)
    write_gains(gains, args.out)
    print(f"pretrain_loss={format_float(pretrain_loss(gains, problem))}")
    return 0


def _train_config(args) -> ExperimentConfig:
    if args.config is not None:
        if args.env or args.demo or args.out:
            raise ValueError("--config replaces the other flags; pass one or the other")
        return read_config(args.config)
    missing = [name for name in ("env", "demo", "out") if getattr(args, name) is None]
    if missing:
        raise ValueError(f"missing required flags: {', '.join('--' + m for m in missing)}")
    return ExperimentConfig(
        env_id=args.env,
        demo_path=args.demo,
        out_dir=args.out,
        scheme=args.scheme,
        terms=args.terms,
        method=args.method,
        budget=args.budget,
        seed=args.seed,
        init=args.init,
        pretrain_budget=args.pretrain_budget,
    )


def cmd_train(args) -> int:
    done, _, score = run_experiment(_train_config(args))
    print(f"best_reward={format_float(done.best_reward)}")
    print(f"scaled_score={format_float(score)}")
    return 0


def cmd_compare(args) -> int:
    demo = read_demonstration(args.demo)
    env_id = args.env if args.env is not None else demo.env_id
    if args.gains is not None:
        tuned = read_gains(args.gains)
    else:
        config = ExperimentConfig(
            env_id=env_id,
            demo_path=args.demo,
            out_dir=str(Path(args.out).parent),
            scheme=args.scheme,
            terms=args.terms,
            method=args.method,
            budget=args.budget,
            seed=args.seed,
            init=args.init,
            pretrain_budget=args.pretrain_budget,
        )
        tuned = execute_run(config, demo).best_gains
    rows = compare_agents(env_id, demo, tuned, seed=args.seed)
    csv_path = Path(args.out)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(compare_to_csv(rows), encoding="utf-8")
    from . import report

    report.plot_compare(rows, csv_path.with_suffix(".png"))
    for agent, reward, score in rows:
        print(
            f"agent={agent} reward={format_float(reward)} "
            f"scaled_score={format_float(score)}"
        )
    return 0


def cmd_eval(args) -> int:
    gains = read_gains(args.gains)
    demo = read_demonstration(args.demo)
    env_id = args.env if args.env is not None else demo.env_id
    record = track_demonstration(env_id, demo, gains, seed=args.seed)
    anchors = compute_anchors(env_id, args.seed)
    print(f"reward={format_float(record.cumulative_reward)}")
    print(f"scaled_score={format_float(scaled_score(record.cumulative_reward, anchors))}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
