"""Experiment orchestration: score anchors, configs, run artifacts, baselines.

A run artifact directory is self-describing: it holds the demonstration, a
config snapshot that reproduces the run byte for byte, the optimizer history,
the best gains, and the best rollout, plus rendered figures for quick triage.
"""

from __future__ import annotations

import math
import os
import shutil
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

from .core import (
    Demonstration,
    GainParams,
    format_float,
    gain_dimension,
    read_demonstration,
    rollout_to_csv,
    write_gains,
)
from .envs import ENV_IDS, PolicyHandle, make_env, rollout_policy
from .optimizers import METHODS, history_to_csv
from .pid import track_demonstration
from .train import (
    DEFAULT_PRETRAIN_BUDGET,
    INIT_MODES,
    PretrainProblem,
    RidmRun,
    exploration_dataset,
    init_gains,
    reinforce_gains,
)

RANDOM_ANCHOR_EPISODES = 20

# canonical config key order; env/demo/out are required, the rest default
CONFIG_KEYS = (
    "env",
    "demo",
    "scheme",
    "terms",
    "method",
    "budget",
    "seed",
    "init",
    "pretrain_budget",
    "out",
)
_REQUIRED_KEYS = ("env", "demo", "out")
_INT_KEYS = ("budget", "seed", "pretrain_budget")

COMPARE_AGENTS = ("expert", "ridm", "default_pid")


@dataclass(frozen=True)
class ScoreAnchors:
    """Reward levels defining the scaled score: random maps to 0, expert to 1."""

    env_id: str
    seed: int
    expert_reward: float
    random_reward: float

    def __post_init__(self):
        if self.env_id not in ENV_IDS:
            raise ValueError(f"unknown env_id {self.env_id!r}; known: {', '.join(ENV_IDS)}")
        if not (math.isfinite(self.expert_reward) and math.isfinite(self.random_reward)):
            raise ValueError("anchor rewards must be finite")
        if self.expert_reward <= self.random_reward:
            raise ValueError(
                "anchors invalid: expert reward "
                f"{self.expert_reward} does not exceed random reward "
                f"{self.random_reward}; the scripted expert is broken"
            )


@lru_cache(maxsize=None)
def compute_anchors(env_id: str, seed: int = 0) -> ScoreAnchors:
    """Expert reward at the seed; random reward averaged over 20 torque streams.

    Every random episode starts from the same reset as the expert so all
    three agents in a comparison face the identical task instance.
    """
    expert = rollout_policy(env_id, PolicyHandle("ScriptedExpert", env_id), seed=seed)
    total = 0.0
    for episode in range(RANDOM_ANCHOR_EPISODES):
        record = rollout_policy(
            env_id, PolicyHandle("Random", env_id), seed=seed, policy_seed=episode
        )
        total += record.cumulative_reward
    return ScoreAnchors(
        env_id=env_id,
        seed=int(seed),
        expert_reward=expert.cumulative_reward,
        random_reward=total / RANDOM_ANCHOR_EPISODES,
    )


def scaled_score(reward: float, anchors: ScoreAnchors) -> float:
    """Affine rescaling: random policy scores 0, expert scores 1; may exceed 1."""
    span = anchors.expert_reward - anchors.random_reward
    return (reward - anchors.random_reward) / span


@dataclass(frozen=True)
class ExperimentConfig:
    """One training run, fully determined: rerunning it reproduces the history."""

    env_id: str
    demo_path: str
    out_dir: str
    scheme: str = "local"
    terms: str = "pd"
    method: str = "cmaes"
    budget: int = 2000
    seed: int = 0
    init: str = "pretrained"
    pretrain_budget: int = DEFAULT_PRETRAIN_BUDGET

    def __post_init__(self):
        if self.env_id not in ENV_IDS:
            raise ValueError(f"unknown env_id {self.env_id!r}; known: {', '.join(ENV_IDS)}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if self.pretrain_budget < 0:
            raise ValueError("pretrain_budget must be >= 0")
        # scheme/terms validated by constructing a probe parameterization
        gain_dimension(self.scheme, self.terms, 1)


_FIELD_BY_KEY = {
    "env": "env_id",
    "demo": "demo_path",
    "out": "out_dir",
    "scheme": "scheme",
    "terms": "terms",
    "method": "method",
    "budget": "budget",
    "seed": "seed",
    "init": "init",
    "pretrain_budget": "pretrain_budget",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value format; diagnostics carry line numbers."""
    values: dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {number}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(
                f"config line {number}: unknown key {key!r}; "
                f"known: {', '.join(CONFIG_KEYS)}"
            )
        if key in values:
            raise ValueError(f"config line {number}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ValueError(
                    f"config line {number}: {key} must be an integer, got {value!r}"
                ) from None
        else:
            values[key] = value
    for key in _REQUIRED_KEYS:
        if key not in values:
            raise ValueError(f"config is missing required key {key!r}")
    return ExperimentConfig(**{_FIELD_BY_KEY[k]: v for k, v in values.items()})


def format_config(config: ExperimentConfig) -> str:
    """Canonical snapshot; parse_config(format_config(c)) == c."""
    lines = []
    for key in CONFIG_KEYS:
        value = getattr(config, _FIELD_BY_KEY[key])
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _build_init_gains(config: ExperimentConfig, joint_count: int, dt: float) -> GainParams:
    if config.init == "random":
        return init_gains(config.scheme, config.terms, joint_count, seed=config.seed)
    problem = PretrainProblem(
        exploration_dataset(config.env_id, config.seed), config.scheme, config.terms, dt
    )
    return init_gains(
        config.scheme,
        config.terms,
        joint_count,
        mode="pretrained",
        problem=problem,
        seed=config.seed,
        pretrain_budget=config.pretrain_budget,
    )


def execute_run(config: ExperimentConfig, demo: Demonstration) -> RidmRun:
    """Initialize gains per the config and reinforce them against the demo."""
    if demo.env_id != config.env_id:
        raise ValueError(
            f"config/demo mismatch: demo is for {demo.env_id!r}, config says "
            f"{config.env_id!r}"
        )
    spec = make_env(config.env_id)
    gains_init = _build_init_gains(config, spec.joint_count, spec.dt)
    run = RidmRun(
        demo=demo,
        env_id=config.env_id,
        gains_init=gains_init,
        method=config.method,
        budget=config.budget,
        seed=config.seed,
    )
    return reinforce_gains(run)


def run_experiment(config: ExperimentConfig) -> tuple[RidmRun, ScoreAnchors, float]:
    """Execute one configured run and write its artifact directory.

    Artifacts: demo.txt (verbatim copy), config.txt (snapshot pointing at that
    copy), history.csv, gains.txt, best_rollout.csv, history.png, tracking.png.
    """
    demo = read_demonstration(config.demo_path)
    done = execute_run(config, demo)
    anchors = compute_anchors(config.env_id, config.seed)
    score = scaled_score(done.best_reward, anchors)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    demo_copy = out / "demo.txt"
    # a rerun from a saved snapshot reads the demo from the artifact dir itself
    if not (demo_copy.exists() and os.path.samefile(config.demo_path, demo_copy)):
        shutil.copyfile(config.demo_path, demo_copy)
    snapshot = replace(
        config, demo_path=os.path.abspath(demo_copy), out_dir=os.path.abspath(out)
    )
    (out / "config.txt").write_text(format_config(snapshot), encoding="utf-8")
    (out / "history.csv").write_text(
        history_to_csv(done.optimizer_history), encoding="utf-8"
    )
    write_gains(done.best_gains, out / "gains.txt")
    (out / "best_rollout.csv").write_text(
        rollout_to_csv(done.best_rollout), encoding="utf-8"
    )
    from . import report

    report.plot_history(done.optimizer_history, out / "history.png")
    report.plot_tracking(demo, done.best_rollout, out / "tracking.png")
    return done, anchors, score


def default_gains(template: GainParams) -> GainParams:
    """The untuned baseline: every gain 1.0 in the same parameterization."""
    return template.with_log_gains([0.0] * template.dimension)


def compare_agents(
    env_id: str, demo: Demonstration, tuned: GainParams, seed: int = 0
) -> list[tuple[str, float, float]]:
    """Rewards and scaled scores for expert, tuned controller, and untuned PID."""
    anchors = compute_anchors(env_id, seed)
    ridm_reward = track_demonstration(env_id, demo, tuned, seed=seed).cumulative_reward
    default_reward = track_demonstration(
        env_id, demo, default_gains(tuned), seed=seed
    ).cumulative_reward
    return [
        ("expert", anchors.expert_reward, scaled_score(anchors.expert_reward, anchors)),
        ("ridm", ridm_reward, scaled_score(ridm_reward, anchors)),
        ("default_pid", default_reward, scaled_score(default_reward, anchors)),
    ]


def compare_to_csv(rows) -> str:
    lines = ["agent,reward,scaled_score"]
    for agent, reward, score in rows:
        lines.append(f"{agent},{format_float(reward)},{format_float(score)}")
    return "\n".join(lines) + "\n"
