"""Tune PID inverse dynamics gains against a single state-only demonstration.

The package records a demonstration of joint angles from a scripted expert,
then searches controller gains by black-box optimization of the environment's
cumulative reward while the controller tracks the demonstration as a sequence
of set points.  No expert actions are ever used.
"""

__version__ = "0.1.0"

from .core import (
    Demonstration,
    GainParams,
    RolloutRecord,
    TransitionDataset,
    decode_demonstration,
    encode_demonstration,
    read_demonstration,
    read_gains,
    write_demonstration,
    write_gains,
)

__all__ = [
    "Demonstration",
    "GainParams",
    "RolloutRecord",
    "TransitionDataset",
    "decode_demonstration",
    "encode_demonstration",
    "read_demonstration",
    "read_gains",
    "write_demonstration",
    "write_gains",
]
