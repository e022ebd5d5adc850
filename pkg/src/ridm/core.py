"""Shared domain types: demonstrations, gain vectors, rollout records.

Everything here is an immutable value object once constructed (arrays are
frozen read-only), so instances can be shared freely between concurrent
evaluation workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SCHEMES = ("local", "global")
TERMS = ("p", "pd", "pid")

# base-10 exponent range for randomly initialized gains: 10**-1 .. 10**2
RANDOM_LOG_GAIN_LOW = -1.0
RANDOM_LOG_GAIN_HIGH = 2.0


class DemoFormatError(ValueError):
    """Raised when demonstration text cannot be decoded; names the bad line."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(x))


def wrap_angle(x):
    """Map an angle (or array of angles) into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


def check_finite_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Demonstration:
    """A single state-only trajectory of expert joint angles.

    Contains no actions and no velocities: only the angle sequence, the
    environment it came from, and the control timestep it was recorded at.
    """

    env_id: str
    dt: float
    states: np.ndarray  # (T, joints), T >= 2
    source: str = "unknown"

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2:
            raise ValueError(f"states must be 2-D (T, joints), got shape {states.shape}")
        if states.shape[0] < 2:
            raise ValueError("a demonstration needs at least 2 states")
        if states.shape[1] < 1:
            raise ValueError("a demonstration needs at least 1 joint")
        if not np.all(np.isfinite(states)):
            raise ValueError("demonstration states contain non-finite entries")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "states", _freeze(states))

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def joint_count(self) -> int:
        return self.states.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Demonstration):
            return NotImplemented
        return (
            self.env_id == other.env_id
            and self.dt == other.dt
            and self.source == other.source
            and self.states.shape == other.states.shape
            and bool(np.array_equal(self.states, other.states))
        )


@dataclass(frozen=True, eq=False)
class GainParams:
    """Controller gains searched in base-10 log space.

    ``terms`` is one of "p", "pd", "pid"; position k of the string names the
    gain stored at term index k (p = proportional, i = integral,
    d = derivative).  Under the "local" scheme every joint has its own set of
    gains and the flat layout is joint-major: index = joint * len(terms) + k.
    Under "global" a single set is shared by all joints.  Decoded gains are
    10**log_gain, strictly positive by construction.
    """

    scheme: str
    terms: str
    joint_count: int
    log_gains: np.ndarray

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.terms not in TERMS:
            raise ValueError(f"terms must be one of {TERMS}, got {self.terms!r}")
        if self.joint_count < 1:
            raise ValueError("joint_count must be >= 1")
        log_gains = check_finite_vector(self.log_gains, "log_gains")
        if log_gains.size != self.dimension:
            raise ValueError(
                f"log_gains has length {log_gains.size}, expected {self.dimension} "
                f"for scheme={self.scheme} terms={self.terms} joints={self.joint_count}"
            )
        object.__setattr__(self, "log_gains", _freeze(log_gains))

    @property
    def terms_count(self) -> int:
        return len(self.terms)

    @property
    def dimension(self) -> int:
        if self.scheme == "local":
            return self.terms_count * self.joint_count
        return self.terms_count

    def with_log_gains(self, log_gains) -> "GainParams":
        return GainParams(self.scheme, self.terms, self.joint_count, log_gains)


def gain_dimension(scheme: str, terms: str, joint_count: int) -> int:
    """Length of the searchable log-gain vector for a parameterization."""
    return GainParams(scheme, terms, joint_count, np.zeros(
        len(terms) * joint_count if scheme == "local" else len(terms))).dimension


def decode_gain(params: GainParams, joint: int, term: int) -> float:
    """Gain 10**log_gain for one (joint, term) pair.

    Under the global scheme the same gain is returned for every joint.
    """
    if not (0 <= joint < params.joint_count):
        raise IndexError(f"joint index {joint} out of range for {params.joint_count} joints")
    if not (0 <= term < params.terms_count):
        raise IndexError(f"term index {term} out of range for terms {params.terms!r}")
    if params.scheme == "local":
        flat = joint * params.terms_count + term
    else:
        flat = term
    return float(10.0 ** params.log_gains[flat])


def gain_arrays(params: GainParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-joint (kp, ki, kd) arrays; absent terms come back as zeros."""
    j = params.joint_count
    kp = np.zeros(j)
    ki = np.zeros(j)
    kd = np.zeros(j)
    out = {"p": kp, "i": ki, "d": kd}
    for term, letter in enumerate(params.terms):
        for joint in range(j):
            out[letter][joint] = decode_gain(params, joint, term)
    return kp, ki, kd


def _ascending_sum(values: Iterable[float]) -> float:
    # summation order is pinned (t ascending) so cumulative rewards are
    # bit-for-bit reproducible
    total = 0.0
    for v in values:
        total += float(v)
    return total


@dataclass(frozen=True, eq=False)
class RolloutRecord:
    """One tracking episode: states, executed actions, per-step rewards."""

    states: np.ndarray  # (steps + 1, joints) joint angles
    actions: np.ndarray  # (steps, joints) executed (clamped) torques
    rewards: np.ndarray  # (steps,)
    cumulative_reward: float
    terminated_early: bool = False

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        actions = np.asarray(self.actions, dtype=float)
        rewards = np.asarray(self.rewards, dtype=float)
        if states.ndim != 2 or actions.ndim != 2 or rewards.ndim != 1:
            raise ValueError("states/actions must be 2-D and rewards 1-D")
        steps = rewards.shape[0]
        if actions.shape[0] != steps or states.shape[0] != steps + 1:
            raise ValueError(
                f"length mismatch: {states.shape[0]} states, "
                f"{actions.shape[0]} actions, {steps} rewards"
            )
        expected = _ascending_sum(rewards)
        # a diverged rollout may carry nan rewards; nan != nan needs its own check
        if expected != self.cumulative_reward and not (
            np.isnan(expected) and np.isnan(self.cumulative_reward)
        ):
            raise ValueError("cumulative_reward must equal the ascending sum of rewards")
        object.__setattr__(self, "states", _freeze(states))
        object.__setattr__(self, "actions", _freeze(actions))
        object.__setattr__(self, "rewards", _freeze(rewards))

    @classmethod
    def from_steps(cls, states, actions, rewards, terminated_early=False) -> "RolloutRecord":
        rewards = np.asarray(rewards, dtype=float)
        return cls(
            states=np.asarray(states, dtype=float),
            actions=np.asarray(actions, dtype=float),
            rewards=rewards,
            cumulative_reward=_ascending_sum(rewards),
            terminated_early=terminated_early,
        )

    @property
    def steps(self) -> int:
        return self.rewards.shape[0]

    @property
    def joint_count(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class TransitionDataset:
    """(state, action, next_state) triples collected by an exploration policy."""

    states: np.ndarray  # (T, joints)
    actions: np.ndarray  # (T, joints)
    next_states: np.ndarray  # (T, joints)

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        a = np.asarray(self.actions, dtype=float)
        ns = np.asarray(self.next_states, dtype=float)
        if s.ndim != 2 or s.shape[0] == 0:
            raise ValueError("dataset must contain at least one triple")
        if a.shape != s.shape or ns.shape != s.shape:
            raise ValueError(
                f"shape mismatch: states {s.shape}, actions {a.shape}, next_states {ns.shape}"
            )
        for name, arr in (("states", s), ("actions", a), ("next_states", ns)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"dataset {name} contain non-finite entries")
        object.__setattr__(self, "states", _freeze(s))
        object.__setattr__(self, "actions", _freeze(a))
        object.__setattr__(self, "next_states", _freeze(ns))

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def joint_count(self) -> int:
        return self.states.shape[1]

    @property
    def action_ranges(self) -> np.ndarray:
        """Per-dimension (min, max) over the recorded actions, shape (joints, 2).

        Always recomputed from the triples so it can never drift out of sync.
        """
        return np.stack([self.actions.min(axis=0), self.actions.max(axis=0)], axis=1)

    @classmethod
    def from_rollout(cls, record: RolloutRecord) -> "TransitionDataset":
        return cls(
            states=record.states[:-1],
            actions=record.actions,
            next_states=record.states[1:],
        )


# ---------------------------------------------------------------------------
# demonstration text codec
#
# UTF-8 text, one record per line:
#   line 1:  #ridm-demo v1 env=<env_id> dt=<float> joints=<int> source=<token>
#   line 2+: whitespace-separated joint angles, `joints` columns per line
# ---------------------------------------------------------------------------

DEMO_MAGIC = "#ridm-demo v1"
GAINS_MAGIC = "#ridm-gains v1"


def _token(text: str) -> str:
    # header values must be single whitespace-free tokens
    return "-".join(str(text).split()) or "unknown"


def encode_demonstration(demo: Demonstration) -> str:
    lines = [
        f"{DEMO_MAGIC} env={_token(demo.env_id)} dt={format_float(demo.dt)} "
        f"joints={demo.joint_count} source={_token(demo.source)}"
    ]
    for row in demo.states:
        lines.append(" ".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _parse_header_fields(header: str) -> dict[str, str]:
    fields = {}
    for part in header[len(DEMO_MAGIC):].split():
        if "=" not in part:
            raise DemoFormatError(f"line 1: malformed header field {part!r}")
        key, value = part.split("=", 1)
        fields[key] = value
    return fields


def decode_demonstration(text: str | bytes) -> Demonstration:
    """Parse demonstration text; errors name the offending line (1-based)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(DEMO_MAGIC):
        raise DemoFormatError(f"line 1: expected header starting with {DEMO_MAGIC!r}")
    fields = _parse_header_fields(lines[0])
    for key in ("env", "dt", "joints"):
        if key not in fields:
            raise DemoFormatError(f"line 1: header missing {key}=")
    try:
        dt = float(fields["dt"])
        joints = int(fields["joints"])
    except ValueError as exc:
        raise DemoFormatError(f"line 1: bad numeric header value ({exc})") from None
    if not (dt > 0):
        raise DemoFormatError(f"line 1: dt must be positive, got {fields['dt']}")
    if joints < 1:
        raise DemoFormatError(f"line 1: joints must be >= 1, got {fields['joints']}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split()
        if len(cols) != joints:
            raise DemoFormatError(
                f"line {lineno}: expected {joints} columns, found {len(cols)}"
            )
        try:
            row = [float(c) for c in cols]
        except ValueError:
            raise DemoFormatError(f"line {lineno}: non-numeric value") from None
        for c, v in zip(cols, row):
            if not np.isfinite(v):
                raise DemoFormatError(f"line {lineno}: non-finite value {c!r}")
        rows.append(row)
    if len(rows) < 2:
        raise DemoFormatError(
            f"line {len(lines)}: demonstration needs at least 2 state rows, found {len(rows)}"
        )
    return Demonstration(
        env_id=fields["env"],
        dt=dt,
        states=np.array(rows, dtype=float),
        source=fields.get("source", "unknown"),
    )


def write_demonstration(demo: Demonstration, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(encode_demonstration(demo))


def read_demonstration(path) -> Demonstration:
    with open(path, "r", encoding="utf-8") as fh:
        return decode_demonstration(fh.read())


# ---------------------------------------------------------------------------
# gains text codec
#
#   line 1:  #ridm-gains v1 scheme=<local|global> terms=<p|pd|pid> joints=<int>
#   line 2+: one base-10 log gain per line
# ---------------------------------------------------------------------------


def encode_gains(params: GainParams) -> str:
    lines = [
        f"{GAINS_MAGIC} scheme={params.scheme} terms={params.terms} joints={params.joint_count}"
    ]
    lines.extend(format_float(v) for v in params.log_gains)
    return "\n".join(lines) + "\n"


def decode_gains_text(text: str | bytes) -> GainParams:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(GAINS_MAGIC):
        raise ValueError(f"line 1: expected header starting with {GAINS_MAGIC!r}")
    fields = {}
    for part in lines[0][len(GAINS_MAGIC):].split():
        key, _, value = part.partition("=")
        fields[key] = value
    try:
        values = [float(ln) for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"bad log-gain value: {exc}") from None
    return GainParams(
        scheme=fields.get("scheme", ""),
        terms=fields.get("terms", ""),
        joint_count=int(fields.get("joints", "0")),
        log_gains=np.array(values, dtype=float),
    )


def write_gains(params: GainParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(encode_gains(params))


def read_gains(path) -> GainParams:
    with open(path, "r", encoding="utf-8") as fh:
        return decode_gains_text(fh.read())


# ---------------------------------------------------------------------------
# rollout CSV export: t, s_0..s_{J-1}, a_0..a_{J-1}, r
# (final row carries the terminal state with empty action/reward cells)
# ---------------------------------------------------------------------------


def rollout_to_csv(record: RolloutRecord) -> str:
    j = record.joint_count
    header = ["t"] + [f"s_{i}" for i in range(j)] + [f"a_{i}" for i in range(j)] + ["r"]
    lines = [",".join(header)]
    for t in range(record.steps):
        cells = [str(t)]
        cells += [format_float(v) for v in record.states[t]]
        cells += [format_float(v) for v in record.actions[t]]
        cells.append(format_float(record.rewards[t]))
        lines.append(",".join(cells))
    final = [str(record.steps)]
    final += [format_float(v) for v in record.states[-1]]
    final += [""] * j + [""]
    lines.append(",".join(final))
    return "\n".join(lines) + "\n"
