"""PID inverse dynamics model: from (current state, set point) to an action.

The controller is the whole model: given the learner's current joint angles
and the demonstration's next state as the set point, it emits the torque
that tries to close the gap.  Tracking a demonstration advances the set
point with the timestep index regardless of how far the learner has strayed,
so the demo is open-loop in time but the correction is closed-loop in state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Demonstration, GainParams, RolloutRecord, gain_arrays, wrap_angle
from .envs import clamp_action, make_env, observable, reset, step

# anti-windup: unbounded integrals destabilize black-box gain search
INTEGRAL_CLAMP = 10.0


@dataclass(frozen=True)
class PidState:
    """Controller memory carried between steps of one episode."""

    integral: np.ndarray  # per-joint accumulated error, rad*s
    prev_error: np.ndarray  # per-joint error at the previous call, rad
    initialized: bool = False  # False until the first call; derivative = 0 then

    def __post_init__(self):
        integral = np.asarray(self.integral, dtype=float)
        prev_error = np.asarray(self.prev_error, dtype=float)
        integral.flags.writeable = False
        prev_error.flags.writeable = False
        object.__setattr__(self, "integral", integral)
        object.__setattr__(self, "prev_error", prev_error)


def reset_pid(joint_count: int) -> PidState:
    if joint_count < 1:
        raise ValueError("joint_count must be >= 1")
    return PidState(
        integral=np.zeros(joint_count),
        prev_error=np.zeros(joint_count),
        initialized=False,
    )


def idm_action(
    gains: GainParams,
    pid_state: PidState,
    current: np.ndarray,
    setpoint: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, PidState]:
    """One controller evaluation; returns the unclamped action and new state.

    Error is the wrapped angular difference setpoint - current in (-pi, pi].
    The integral is updated first (then clamped symmetrically), so the I term
    sees the current error.  Output clamping to actuator bounds is the
    caller's job.
    """
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    current = np.asarray(current, dtype=float)
    setpoint = np.asarray(setpoint, dtype=float)
    j = gains.joint_count
    if current.shape != (j,) or setpoint.shape != (j,):
        raise ValueError(
            f"expected {j}-joint vectors, got current {current.shape}, "
            f"setpoint {setpoint.shape}"
        )
    error = wrap_angle(setpoint - current)
    integral = np.clip(pid_state.integral + error * dt, -INTEGRAL_CLAMP, INTEGRAL_CLAMP)
    if pid_state.initialized:
        derivative = (error - pid_state.prev_error) / dt
    else:
        derivative = np.zeros(j)
    kp, ki, kd = gain_arrays(gains)
    action = kp * error + ki * integral + kd * derivative
    return action, PidState(integral=integral, prev_error=error, initialized=True)


def track_demonstration(
    env_id: str, demo: Demonstration, gains: GainParams, seed: int = 0
) -> RolloutRecord:
    """Run the controller against a demonstration's states as set points.

    At learner step t the set point is demo.states[t+1] (the state the
    expert reached next), never demo.states[t].  One environment step per
    demo transition: a demo of length T yields T-1 steps.
    """
    spec = make_env(env_id)
    if demo.env_id != env_id:
        raise ValueError(f"demonstration is for {demo.env_id!r}, not {env_id!r}")
    if demo.joint_count != spec.joint_count:
        raise ValueError(
            f"demonstration has {demo.joint_count} joints, environment has {spec.joint_count}"
        )
    if gains.joint_count != spec.joint_count:
        raise ValueError(
            f"gains are for {gains.joint_count} joints, environment has {spec.joint_count}"
        )
    state = reset(env_id, seed)
    pid_state = reset_pid(spec.joint_count)
    angles = [observable(state).copy()]
    actions = []
    rewards = []
    done = False
    steps = len(demo) - 1
    for t in range(steps):
        setpoint = demo.states[t + 1]
        raw, pid_state = idm_action(gains, pid_state, observable(state), setpoint, demo.dt)
        executed = clamp_action(spec, raw)
        state, reward, done = step(spec, state, executed)
        angles.append(observable(state).copy())
        actions.append(executed)
        rewards.append(reward)
        if done and t < steps - 1:
            break
    return RolloutRecord.from_steps(
        states=np.array(angles),
        actions=np.array(actions),
        rewards=np.array(rewards),
        terminated_early=done and len(rewards) < steps,
    )
