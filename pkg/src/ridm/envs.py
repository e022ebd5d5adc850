"""Deterministic toy control environments plus scripted reference policies.

All four environments share the same machinery: joint angles and angular
velocities integrated by semi-implicit Euler at a fixed timestep, torque
actions clamped to per-joint bounds, rewards evaluated at the post-step
state.  `step` is a pure function of (spec, state, action), so rollouts can
run concurrently without any shared mutable state.

Environments:
  dint1     1-D double integrator ("angle" is a position); reward
            -(|x - goal| + 0.1*|v|); goal drawn per seed.
  pend1     torque-limited pendulum swing-up, angle 0 = upright; reward
            -wrap(angle)^2 - 0.001*torque^2; starts hanging at angle pi.
  reacher2  2-link planar reacher, no gravity; reward = -|ee - target|.
  reacher3  3-link planar reacher, same reward; target drawn per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Demonstration, RolloutRecord, wrap_angle

ENV_IDS = ("dint1", "pend1", "reacher2", "reacher3")

# stable integer tags so (env, seed) -> RNG stream is platform independent
_ENV_TAGS = {"dint1": 1, "pend1": 2, "reacher2": 3, "reacher3": 4}

POLICY_KINDS = ("ScriptedExpert", "Exploration", "Random")


def _freeze(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class EnvSpec:
    """Physics constants and episode limits for one environment."""

    env_id: str
    joint_count: int
    dt: float
    max_steps: int
    action_low: np.ndarray
    action_high: np.ndarray
    params: dict
    reward_description: str
    integrator: str = "semi-implicit Euler"

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.max_steps < 2:
            raise ValueError(f"max_steps must be >= 2, got {self.max_steps}")
        low = _freeze(self.action_low)
        high = _freeze(self.action_high)
        if low.shape != (self.joint_count,) or high.shape != (self.joint_count,):
            raise ValueError("action bounds must be per-joint vectors")
        if not np.all(low < high):
            raise ValueError("each joint needs action min < max")
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)


@dataclass(frozen=True, eq=False)
class EnvState:
    """Instantaneous environment state; a value, never mutated in place."""

    angles: np.ndarray
    velocities: np.ndarray
    aux: np.ndarray  # environment constants fixed at reset (goal / target)
    t: int = 0

    def __post_init__(self):
        angles = _freeze(self.angles)
        velocities = _freeze(self.velocities)
        if angles.shape != velocities.shape or angles.ndim != 1:
            raise ValueError("angles and velocities must be equal-length vectors")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "velocities", velocities)
        object.__setattr__(self, "aux", _freeze(self.aux))


def observable(state: EnvState) -> np.ndarray:
    """The projection that enters demonstrations and the controller: angles only."""
    return state.angles


@dataclass(frozen=True)
class PolicyHandle:
    """Names one of the reference policies for an environment.

    Random draws uniform torques from a counter-based generator seeded per
    episode.  ScriptedExpert is the hand-written control law below.
    Exploration is the expert acting as the data-collection policy for
    inverse-model pretraining; it executes the same law.
    """

    kind: str
    env_id: str

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"kind must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.env_id not in ENV_IDS:
            raise ValueError(f"unknown env_id {self.env_id!r}")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

# scripted expert constants, frozen after the tuning pass recorded in the
# test suite (expert must beat Random everywhere; reacher final distance
# < 0.02 m; pendulum upright within the episode)
_DINT1_PARAMS = {
    "goal_low": 0.5,
    "goal_high": 1.5,
    "expert_kp": 8.0,
    "expert_kd": 5.0,
}
_PEND1_PARAMS = {
    "mass": 1.0,
    "length": 1.0,
    "gravity": 9.81,
    "damping": 0.05,
    "pump_gain": 3.0,
    "kick_torque": 8.0,
    "catch_angle": 0.5,
    "catch_rate": 6.0,
    "catch_kp": 30.0,
    "catch_kd": 8.0,
}
_REACHER_PARAMS = {
    "inertia": 1.0,
    "damping": 0.5,
    "link_length": 1.0,
    "target_radius_low": 0.5,
    "target_radius_high": 1.5,
    "expert_kp": 40.0,
    "expert_kd": 12.0,
}


def _build_specs() -> dict[str, EnvSpec]:
    specs = {}
    specs["dint1"] = EnvSpec(
        env_id="dint1",
        joint_count=1,
        dt=0.02,
        max_steps=200,
        action_low=np.array([-5.0]),
        action_high=np.array([5.0]),
        params=dict(_DINT1_PARAMS),
        reward_description="-( |x - goal| + 0.1*|v| ), goal fixed per seed",
    )
    specs["pend1"] = EnvSpec(
        env_id="pend1",
        joint_count=1,
        dt=0.01,
        max_steps=300,
        action_low=np.array([-8.0]),
        action_high=np.array([8.0]),
        params=dict(_PEND1_PARAMS),
        reward_description="-wrap(angle)^2 - 0.001*torque^2, angle 0 = upright",
    )
    for env_id, joints in (("reacher2", 2), ("reacher3", 3)):
        params = dict(_REACHER_PARAMS)
        if env_id == "reacher3":
            params["target_radius_high"] = 2.0
        specs[env_id] = EnvSpec(
            env_id=env_id,
            joint_count=joints,
            dt=0.02,
            max_steps=150,
            action_low=np.full(joints, -4.0),
            action_high=np.full(joints, 4.0),
            params=params,
            reward_description="-( euclidean distance of end effector to target )",
        )
    return specs


_SPECS = _build_specs()


def make_env(env_id: str) -> EnvSpec:
    try:
        return _SPECS[env_id]
    except KeyError:
        raise ValueError(
            f"unknown env_id {env_id!r}; known: {', '.join(ENV_IDS)}"
        ) from None


def describe_env(spec: EnvSpec) -> str:
    """Human-readable dump of an EnvSpec."""
    lines = [
        f"env_id: {spec.env_id}",
        f"joints: {spec.joint_count}",
        f"dt: {spec.dt}",
        f"max_steps: {spec.max_steps}",
        f"action_low: {spec.action_low.tolist()}",
        f"action_high: {spec.action_high.tolist()}",
        f"integrator: {spec.integrator}",
        f"reward: {spec.reward_description}",
    ]
    for key in sorted(spec.params):
        lines.append(f"param {key}: {spec.params[key]}")
    return "\n".join(lines) + "\n"


def _seed_rng(env_id: str, seed: int) -> np.random.Generator:
    # Philox is counter based: streams are identical across platforms
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([_ENV_TAGS[env_id], int(seed)]))
    )


# ---------------------------------------------------------------------------
# reset / step
# ---------------------------------------------------------------------------


def reset(env_id: str, seed: int = 0) -> EnvState:
    """Deterministic initial state; seed 0 is the canonical evaluation seed."""
    spec = make_env(env_id)
    rng = _seed_rng(env_id, seed)
    if env_id == "dint1":
        magnitude = rng.uniform(spec.params["goal_low"], spec.params["goal_high"])
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        aux = np.array([sign * magnitude])
        return EnvState(angles=np.zeros(1), velocities=np.zeros(1), aux=aux)
    if env_id == "pend1":
        # swing-up task: every seed starts hanging at rest
        return EnvState(angles=np.array([math.pi]), velocities=np.zeros(1), aux=np.zeros(0))
    # reachers: links stretched along +x at angle 0, target drawn in an annulus
    radius = rng.uniform(spec.params["target_radius_low"], spec.params["target_radius_high"])
    azimuth = rng.uniform(0.0, 2.0 * math.pi)
    aux = np.array([radius * math.cos(azimuth), radius * math.sin(azimuth)])
    return EnvState(
        angles=np.zeros(spec.joint_count),
        velocities=np.zeros(spec.joint_count),
        aux=aux,
    )


def clamp_action(spec: EnvSpec, action) -> np.ndarray:
    action = np.asarray(action, dtype=float)
    if action.shape != (spec.joint_count,):
        raise ValueError(
            f"action shape {action.shape} does not match {spec.joint_count} joints"
        )
    return np.minimum(np.maximum(action, spec.action_low), spec.action_high)


def end_effector(spec: EnvSpec, angles: np.ndarray) -> np.ndarray:
    """Planar forward kinematics: chained unit links, cumulative angles."""
    length = spec.params["link_length"]
    total = np.cumsum(np.asarray(angles, dtype=float))
    return np.array([length * np.sum(np.cos(total)), length * np.sum(np.sin(total))])


def _acceleration(spec: EnvSpec, state: EnvState, torque: np.ndarray) -> np.ndarray:
    if spec.env_id == "dint1":
        return torque.copy()
    if spec.env_id == "pend1":
        p = spec.params
        theta = state.angles[0]
        omega = state.velocities[0]
        inertia = p["mass"] * p["length"] ** 2
        accel = (p["gravity"] / p["length"]) * math.sin(theta)
        accel += (torque[0] - p["damping"] * omega) / inertia
        return np.array([accel])
    p = spec.params
    return (torque - p["damping"] * state.velocities) / p["inertia"]


def _reward(spec: EnvSpec, state: EnvState, torque: np.ndarray) -> float:
    # index-ascending accumulation of per-joint pieces keeps this bit stable
    if spec.env_id == "dint1":
        goal = state.aux[0]
        return -(abs(float(state.angles[0]) - float(goal)) + 0.1 * abs(float(state.velocities[0])))
    if spec.env_id == "pend1":
        err = float(wrap_angle(state.angles[0]))
        return -(err * err) - 0.001 * float(torque[0]) ** 2
    delta = end_effector(spec, state.angles) - state.aux
    return -math.hypot(float(delta[0]), float(delta[1]))


def step(spec: EnvSpec, state: EnvState, action) -> tuple[EnvState, float, bool]:
    """One control step: clamp, integrate (semi-implicit Euler), reward, done.

    Rewards are evaluated at the post-step state; done fires only at
    max_steps, there is no failure-based early termination.
    """
    torque = clamp_action(spec, action)
    accel = _acceleration(spec, state, torque)
    velocities = state.velocities + accel * spec.dt
    angles = state.angles + velocities * spec.dt
    next_state = EnvState(angles=angles, velocities=velocities, aux=state.aux, t=state.t + 1)
    reward = _reward(spec, next_state, torque)
    done = next_state.t >= spec.max_steps
    return next_state, reward, done


# ---------------------------------------------------------------------------
# scripted experts
# ---------------------------------------------------------------------------


def _dint1_expert(spec: EnvSpec, state: EnvState) -> np.ndarray:
    p = spec.params
    err = state.aux[0] - state.angles[0]
    return np.array([p["expert_kp"] * err - p["expert_kd"] * state.velocities[0]])


def _pend1_energy(spec: EnvSpec, state: EnvState) -> float:
    """Mechanical energy relative to the hanging rest state (always >= 0)."""
    p = spec.params
    omega = float(state.velocities[0])
    kinetic = 0.5 * p["mass"] * p["length"] ** 2 * omega * omega
    potential = p["mass"] * p["gravity"] * p["length"] * (1.0 + math.cos(float(state.angles[0])))
    return kinetic + potential


def _pend1_expert(spec: EnvSpec, state: EnvState) -> np.ndarray:
    p = spec.params
    theta = float(wrap_angle(state.angles[0]))
    omega = float(state.velocities[0])
    # near the top: linear catch-and-hold
    if abs(theta) < p["catch_angle"] and abs(omega) < p["catch_rate"]:
        return np.array([-p["catch_kp"] * theta - p["catch_kd"] * omega])
    # otherwise pump energy toward the upright level 2*m*g*l
    target = 2.0 * p["mass"] * p["gravity"] * p["length"]
    deficit = target - _pend1_energy(spec, state)
    if omega == 0.0:
        # at exact rest sign(omega) carries no information: kick one way
        return np.array([p["kick_torque"]])
    return np.array([p["pump_gain"] * deficit * math.copysign(1.0, omega)])


def _reacher_ik(spec: EnvSpec, target: np.ndarray, joint_count: int) -> np.ndarray:
    """Joint angles placing the end effector on the target (elbow-down branch).

    The 3-link chain removes its redundancy by pointing the last link radially
    outward, reducing to the 2-link problem for the wrist.
    """
    length = spec.params["link_length"]
    tx, ty = float(target[0]), float(target[1])
    azimuth = math.atan2(ty, tx)
    if joint_count == 3:
        wx = tx - length * math.cos(azimuth)
        wy = ty - length * math.sin(azimuth)
    else:
        wx, wy = tx, ty
    r2 = wx * wx + wy * wy
    # clamp guards the acos against roundoff just outside [-1, 1]
    c2 = (r2 - 2.0 * length * length) / (2.0 * length * length)
    c2 = min(1.0, max(-1.0, c2))
    q2 = math.acos(c2)
    q1 = math.atan2(wy, wx) - math.atan2(
        length * math.sin(q2), length + length * math.cos(q2)
    )
    if joint_count == 2:
        return np.array([q1, q2])
    q3 = azimuth - q1 - q2
    return np.array([q1, q2, q3])


def _reacher_expert(spec: EnvSpec, state: EnvState) -> np.ndarray:
    p = spec.params
    targets = _reacher_ik(spec, state.aux, spec.joint_count)
    err = wrap_angle(targets - state.angles)
    return p["expert_kp"] * err - p["expert_kd"] * state.velocities


_EXPERTS = {
    "dint1": _dint1_expert,
    "pend1": _pend1_expert,
    "reacher2": _reacher_expert,
    "reacher3": _reacher_expert,
}


def expert_action(spec: EnvSpec, state: EnvState) -> np.ndarray:
    """Unclamped action of the scripted expert control law."""
    return _EXPERTS[spec.env_id](spec, state)


# ---------------------------------------------------------------------------
# rollouts
# ---------------------------------------------------------------------------


def rollout_policy(
    env_id: str,
    policy: PolicyHandle,
    seed: int = 0,
    steps: int | None = None,
    policy_seed: int | None = None,
) -> RolloutRecord:
    """Run a reference policy closed-loop; deterministic per (env, policy, seed).

    Records the observable angle sequence, the executed (clamped) actions and
    per-step rewards.  `policy_seed` lets the Random policy draw a different
    torque stream while keeping the reset (and so the task instance) fixed;
    it defaults to `seed`.
    """
    if policy.env_id != env_id:
        raise ValueError(f"policy is for {policy.env_id!r}, not {env_id!r}")
    spec = make_env(env_id)
    if steps is None:
        steps = spec.max_steps
    if steps < 1 or steps > spec.max_steps:
        raise ValueError(f"steps must be in [1, {spec.max_steps}], got {steps}")
    if policy_seed is None:
        policy_seed = seed
    rng = _seed_rng(env_id, policy_seed) if policy.kind == "Random" else None
    state = reset(env_id, seed)
    angles = [observable(state).copy()]
    actions = []
    rewards = []
    done = False
    for _ in range(steps):
        if policy.kind == "Random":
            raw = rng.uniform(spec.action_low, spec.action_high)
        else:
            # Exploration is the expert law acting as the data-collection
            # policy; both kinds execute the same deterministic actions
            raw = expert_action(spec, state)
        executed = clamp_action(spec, raw)
        state, reward, done = step(spec, state, executed)
        angles.append(observable(state).copy())
        actions.append(executed)
        rewards.append(reward)
        if done:
            break
    return RolloutRecord.from_steps(
        states=np.array(angles),
        actions=np.array(actions),
        rewards=np.array(rewards),
        terminated_early=done and len(rewards) < steps,
    )


def record_demonstration(record: RolloutRecord, env_id: str, dt: float,
                         source: str = "scripted") -> Demonstration:
    """Strip a rollout down to the state-only angle sequence."""
    return Demonstration(env_id=env_id, dt=dt, states=record.states, source=source)
