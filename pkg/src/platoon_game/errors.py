"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations

import numpy as np


class PlatoonError(Exception):
    """Base class for every error raised by :mod:`platoon_game`."""


class InvalidParameterError(PlatoonError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InvalidScenarioError(PlatoonError, ValueError):
    """A scenario violates a structural requirement (e.g. vehicle ordering)."""


class DomainError(PlatoonError, ValueError):
    """An evaluation time lies outside the game horizon ``[0, T]``."""


class SingularMatrixError(PlatoonError, np.linalg.LinAlgError):
    """A shifted Gramian is numerically singular.

    Attributes
    ----------
    condition : float
        2-norm condition estimate of the offending matrix.
    follower : int or None
        Follower index, when known.
    t : float or None
        Evaluation time, when known.
    """

    def __init__(self, condition, follower=None, t=None):
        self.condition = float(condition)
        self.follower = follower
        self.t = t
        where = ""
        if follower is not None:
            where += f" follower={follower}"
        if t is not None:
            where += f" t={t:.6g}"
        super().__init__(
            f"shifted Gramian is numerically singular (cond={self.condition:.3e}){where}"
        )


class DivergenceError(PlatoonError, ArithmeticError):
    """Forward integration produced a non-finite state."""

    def __init__(self, follower, t):
        self.follower = follower
        self.t = float(t)
        super().__init__(f"non-finite state for follower {follower} at t={self.t:.6g}")


class ConfigError(PlatoonError, ValueError):
    """A scenario file could not be parsed or validated.

    ``line`` and ``field`` locate the problem when that information exists.
    """

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        prefix = f"[{', '.join(loc)}] " if loc else ""
        super().__init__(prefix + message)
