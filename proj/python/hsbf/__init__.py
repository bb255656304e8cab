"""Smooth backfitting additive regression for Hilbert-space responses.

The compiled core lives in ``hsbf._core``; everything is re-exported here.
"""

from ._core import *  # noqa: F401,F403
from ._core import (  # noqa: F401
    HsbfError,
    InvariantViolation,
    SpaceMismatch,
    ConditionAViolation,
    ConvergenceError,
    OutOfDomain,
)

__all__ = [name for name in dir() if not name.startswith("_")]
