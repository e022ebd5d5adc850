"""The two training phases: inverse-model pretraining and reinforcement.

Phase 1 fits the controller gains to self-generated (state, action,
next_state) triples by maximizing a normalized negative absolute error.
Phase 2 searches gains by black-box optimization of the cumulative
environment reward obtained while tracking the demonstration.  The
demonstration contributes states only; no expert action is ever read.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import (
    RANDOM_LOG_GAIN_HIGH,
    RANDOM_LOG_GAIN_LOW,
    Demonstration,
    GainParams,
    RolloutRecord,
    TransitionDataset,
    gain_dimension,
)
from .envs import PolicyHandle, make_env, record_demonstration, rollout_policy
from .optimizers import ObjectiveHandle, optimize
from .pid import idm_action, reset_pid, track_demonstration

# guards the per-dimension normalizer when an action dimension is constant
RANGE_EPSILON = 1.0e-8

# phase-2 stagnation early stop: generations window and fitness tolerance
STAGNATION_GENERATIONS = 20
STAGNATION_TOLERANCE = 1.0e-6

DEFAULT_PRETRAIN_BUDGET = 300

INIT_MODES = ("random", "pretrained")

_INIT_STREAM_TAG = 17


@dataclass(frozen=True)
class PretrainProblem:
    """Supervised inverse-model fitting problem over one recorded trajectory."""

    dataset: TransitionDataset
    scheme: str
    terms: str
    dt: float
    action_ranges: np.ndarray | None = None  # (joints, 2); dataset min/max if omitted

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        ranges = self.action_ranges
        if ranges is None:
            ranges = self.dataset.action_ranges
        ranges = np.asarray(ranges, dtype=float)
        if ranges.shape != (self.dataset.joint_count, 2):
            raise ValueError(
                f"action_ranges must have shape ({self.dataset.joint_count}, 2)"
            )
        data = self.dataset.action_ranges
        if np.any(ranges[:, 0] > data[:, 0]) or np.any(ranges[:, 1] < data[:, 1]):
            raise ValueError("action_ranges must contain the dataset's actions")
        ranges.flags.writeable = False
        object.__setattr__(self, "action_ranges", ranges)

    @property
    def joint_count(self) -> int:
        return self.dataset.joint_count

    @property
    def dimension(self) -> int:
        return gain_dimension(self.scheme, self.terms, self.joint_count)


def predict_actions(gains: GainParams, problem: PretrainProblem) -> np.ndarray:
    """Model outputs along the trajectory, controller state threaded from t=0.

    Predictions are the raw controller law, not clamped to any bounds.
    """
    dataset = problem.dataset
    if gains.joint_count != dataset.joint_count:
        raise ValueError(
            f"gains are for {gains.joint_count} joints, dataset has {dataset.joint_count}"
        )
    pid_state = reset_pid(dataset.joint_count)
    predictions = np.empty_like(dataset.actions)
    for t in range(len(dataset)):
        predictions[t], pid_state = idm_action(
            gains, pid_state, dataset.states[t], dataset.next_states[t], problem.dt
        )
    return predictions


def pretrain_loss(gains: GainParams, problem: PretrainProblem) -> float:
    """Normalized negative absolute error; 0 is the supremum (exact fit).

    -(1/T) * sum_t sum_n |prediction_tn - action_tn| / (range_n + epsilon),
    where range_n is the span of recorded action dimension n.
    """
    predictions = predict_actions(gains, problem)
    spans = problem.action_ranges[:, 1] - problem.action_ranges[:, 0] + RANGE_EPSILON
    per_step = np.abs(predictions - problem.dataset.actions) / spans
    total = 0.0
    for t in range(per_step.shape[0]):
        for n in range(per_step.shape[1]):
            total += float(per_step[t, n])
    return -total / len(problem.dataset)


def pretrain_gains(
    problem: PretrainProblem, seed: int = 0, budget: int = DEFAULT_PRETRAIN_BUDGET
) -> GainParams:
    """Maximize pretrain_loss by CMA-ES from the neutral start (log gains 0)."""
    neutral = GainParams(
        problem.scheme, problem.terms, problem.joint_count, np.zeros(problem.dimension)
    )
    if budget == 0:
        return neutral
    objective = ObjectiveHandle(
        dimension=problem.dimension,
        evaluate=lambda logs: pretrain_loss(neutral.with_log_gains(logs), problem),
        budget=budget,
    )
    result = optimize(objective, "cmaes", neutral.log_gains, seed=seed)
    return neutral.with_log_gains(result.best_params)


def exploration_dataset(env_id: str, seed: int = 0) -> TransitionDataset:
    """One exploration trajectory of max_steps for inverse-model pretraining."""
    record = rollout_policy(env_id, PolicyHandle("Exploration", env_id), seed=seed)
    return TransitionDataset.from_rollout(record)


def relabel_with_gains(states, gains: GainParams, dt: float) -> TransitionDataset:
    """Label a state sequence with the controller law applied to each transition.

    The resulting triples satisfy action_t = law(state_t, state_{t+1}) exactly
    (controller state threaded from t = 0), so fitting them with the same
    gains reproduces every action bit for bit.  This is the construction for
    gain-recovery checks; physically collected data comes from
    exploration_dataset instead.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < 2:
        raise ValueError("need a (T, joints) array with at least 2 states")
    pid_state = reset_pid(states.shape[1])
    actions = np.empty((states.shape[0] - 1, states.shape[1]))
    for t in range(states.shape[0] - 1):
        actions[t], pid_state = idm_action(
            gains, pid_state, states[t], states[t + 1], dt
        )
    return TransitionDataset(
        states=states[:-1], actions=actions, next_states=states[1:]
    )


def init_gains(
    scheme: str,
    terms: str,
    joint_count: int,
    mode: str = "random",
    problem: PretrainProblem | None = None,
    seed: int = 0,
    pretrain_budget: int = DEFAULT_PRETRAIN_BUDGET,
) -> GainParams:
    """Phase-2 starting point: uniform random log gains, or the phase-1 fit."""
    mode = mode.lower()
    if mode not in INIT_MODES:
        raise ValueError(f"mode must be one of {INIT_MODES}, got {mode!r}")
    if mode == "random":
        dimension = gain_dimension(scheme, terms, joint_count)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([_INIT_STREAM_TAG, int(seed)]))
        )
        logs = rng.uniform(RANDOM_LOG_GAIN_LOW, RANDOM_LOG_GAIN_HIGH, size=dimension)
        return GainParams(scheme, terms, joint_count, logs)
    if problem is None:
        raise ValueError("pretrained mode needs a PretrainProblem")
    if problem.scheme != scheme or problem.terms != terms:
        raise ValueError("problem parameterization does not match the requested one")
    if problem.joint_count != joint_count:
        raise ValueError("problem joint count does not match the requested one")
    return pretrain_gains(problem, seed=seed, budget=pretrain_budget)


@dataclass(frozen=True)
class RidmRun:
    """Configuration plus, once reinforced, the full search record."""

    demo: Demonstration
    env_id: str
    gains_init: GainParams
    method: str  # "cmaes" | "bo"
    budget: int
    seed: int = 0
    # filled in by reinforce_gains
    history: tuple | None = None  # per evaluation: (GainParams, fitness)
    optimizer_history: tuple | None = None  # (eval_index, fitness, best_so_far)
    best_gains: GainParams | None = None
    best_rollout: RolloutRecord | None = None

    def __post_init__(self):
        if self.method not in ("cmaes", "bo"):
            raise ValueError(f"method must be 'cmaes' or 'bo', got {self.method!r}")
        if self.budget < 1:
            raise ValueError("budget must be positive")

    @property
    def completed(self) -> bool:
        return self.best_gains is not None

    @property
    def best_reward(self) -> float:
        if self.best_rollout is None:
            raise ValueError("run not reinforced yet")
        return self.best_rollout.cumulative_reward


def _bo_box(init_logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # the random-init log-gain box, stretched to contain the starting point
    low = np.minimum(np.full_like(init_logs, RANDOM_LOG_GAIN_LOW), init_logs)
    high = np.maximum(np.full_like(init_logs, RANDOM_LOG_GAIN_HIGH), init_logs)
    return low, high


def reinforce_gains(run: RidmRun) -> RidmRun:
    """Phase 2: maximize tracking reward over gains; returns a completed run."""
    spec = make_env(run.env_id)
    if run.demo.env_id != run.env_id:
        raise ValueError(f"demonstration is for {run.demo.env_id!r}, not {run.env_id!r}")
    if run.demo.joint_count != spec.joint_count:
        raise ValueError("demonstration joint count does not match the environment")
    template = run.gains_init
    evaluations: list[tuple[GainParams, float]] = []

    def evaluate(logs: np.ndarray) -> float:
        gains = template.with_log_gains(logs)
        record = track_demonstration(run.env_id, run.demo, gains, seed=run.seed)
        evaluations.append((gains, record.cumulative_reward))
        return record.cumulative_reward

    objective = ObjectiveHandle(
        dimension=template.dimension, evaluate=evaluate, budget=run.budget
    )
    if run.method == "cmaes":
        result = optimize(
            objective,
            "cmaes",
            template.log_gains,
            seed=run.seed,
            stagnation_generations=STAGNATION_GENERATIONS,
            stagnation_tolerance=STAGNATION_TOLERANCE,
        )
    else:
        result = optimize(
            objective,
            "bo",
            template.log_gains,
            seed=run.seed,
            bounds=_bo_box(template.log_gains),
        )
    best_gains = template.with_log_gains(result.best_params)
    best_rollout = track_demonstration(run.env_id, run.demo, best_gains, seed=run.seed)
    return replace(
        run,
        history=tuple(evaluations),
        optimizer_history=tuple(result.history),
        best_gains=best_gains,
        best_rollout=best_rollout,
    )


def expert_demonstration(env_id: str, seed: int = 0) -> tuple[Demonstration, RolloutRecord]:
    """Record the scripted expert and strip it to a state-only demonstration."""
    record = rollout_policy(env_id, PolicyHandle("ScriptedExpert", env_id), seed=seed)
    spec = make_env(env_id)
    return record_demonstration(record, env_id, spec.dt, source="scripted-expert"), record
