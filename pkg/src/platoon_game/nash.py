"""Open-loop Nash equilibrium of the predecessor-following platoon game.

Follower ``i`` penalises its terminal displacement from the predecessor,
``omega_i |x_{i-1}(T) - x_i(T) - d_i|^2``, plus its control energy. In the
relative coordinates ``y_i = x_{i-1} - x_i - (d_i, 0, 0)`` and
``xi_i = u_{i-1} - u_i`` each player faces a decoupled minimum-energy
problem whose solution is

    y_i(T)  = (I + omega_i Psi(T))^{-1} e^{TA} y_i(0)
    xi_i(t) = -omega_i (e^{(T-t)A} B)^T y_i(T)
    u_i(t)  = -(xi_1(t) + ... + xi_i(t))

The state response to ``xi_i`` is

    y_i(t) = e^{tA} y_i(0) - omega_i Psi(t) e^{(T-t)A^T} y_i(T)

(``convention="consistent"``, the default). The often-quoted shortcut
``e^{tA} y_i(0) - omega_i Psi(t) y_i(T)`` (``convention="printed"``) agrees
with it only at ``t = 0`` and ``t = T`` and is kept for reproducing
published trajectory plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidParameterError, InvalidScenarioError
from .linear import (
    DynamicsMatrices,
    StateVec3,
    expm_batch,
    gramian,
    gramian_batch,
    input_response,
    invert_shifted_gramian,
)

CONVENTIONS = ("consistent", "printed")


@dataclass(frozen=True)
class FollowerParams:
    """Per-follower weights and distances.

    ``omega`` weights the terminal displacement, ``mu`` the collision term
    (ignored by the Nash strategy), ``d`` is the desired gap and ``r`` the
    safety radius. Zero weights are accepted as degenerate limits.
    """

    omega: float
    d: float
    r: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("omega", "d", "r", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.omega < 0:
            raise InvalidParameterError(f"omega must be >= 0, got {self.omega}")
        if self.mu < 0:
            raise InvalidParameterError(f"mu must be >= 0, got {self.mu}")
        if self.d <= 0:
            raise InvalidParameterError(f"d must be > 0, got {self.d}")
        if not 0 < self.r <= self.d:
            raise InvalidParameterError(f"r must satisfy 0 < r <= d, got r={self.r}, d={self.d}")

    @property
    def d_hat(self) -> np.ndarray:
        return np.array([self.d, 0.0, 0.0])

    @property
    def r_hat(self) -> np.ndarray:
        return np.array([self.r, 0.0, 0.0])


@dataclass(frozen=True)
class LeaderMotion:
    """Leader at constant velocity: ``x_0(t) = (p0 + v0 t, v0, 0)``."""

    p0: float
    v0: float

    def state(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        out[..., 0] = self.p0 + self.v0 * t
        out[..., 1] = self.v0
        return out

    @property
    def initial(self) -> StateVec3:
        return StateVec3(self.p0, self.v0, 0.0)


@dataclass(frozen=True)
class RelativeState:
    i: int
    y: StateVec3


def relative_initial_states(
    leader: LeaderMotion, followers: Sequence[tuple[StateVec3, FollowerParams]]
) -> list[RelativeState]:
    """``y_i(0) = x_{i-1}(0) - x_i(0) - d_hat_i`` for every follower."""
    if not followers:
        raise InvalidScenarioError("at least one follower is required")
    prev = leader.initial
    out = []
    for i, (x0, params) in enumerate(followers, start=1):
        x0 = StateVec3(*x0)
        if not x0.p < prev.p:
            raise InvalidScenarioError(
                f"vehicle {i} (p={x0.p}) is not strictly behind vehicle {i - 1} (p={prev.p})"
            )
        y = np.asarray(prev, dtype=float) - np.asarray(x0, dtype=float) - params.d_hat
        out.append(RelativeState(i, StateVec3.from_array(y)))
        prev = x0
    return out


def _as_times(t, T):
    arr = np.asarray(t, dtype=float)
    slack = 1e-12 * max(1.0, T)
    if not np.all(np.isfinite(arr)) or np.any(arr < -slack) or np.any(arr > T + slack):
        raise DomainError(f"evaluation time must lie in [0, {T}]")
    return np.clip(arr, 0.0, T)


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"unknown trajectory convention {convention!r}")


class NashFollower:
    """Equilibrium of one follower's reduced problem.

    ``Psi(T)``, ``(I + omega Psi(T))^{-1}`` and the terminal relative state
    are computed once; :meth:`xi` and :meth:`y` accept scalar or array time.
    """

    def __init__(self, y0, params: FollowerParams, dyn: DynamicsMatrices, T: float, i: int | None = None):
        if not (math.isfinite(T) and T > 0):
            raise InvalidParameterError(f"horizon T must be positive, got {T}")
        self.i = i
        self.y0 = np.asarray(y0, dtype=float).reshape(3)
        self.params = params
        self.dyn = dyn
        self.T = float(T)
        self.psi_T = gramian(dyn, self.T)
        self.inv_T = invert_shifted_gramian(params.omega, self.psi_T)
        self.y_T = self.inv_T @ (expm_batch(dyn, self.T) @ self.y0)

    def xi(self, t):
        t = _as_times(t, self.T)
        g = input_response(self.dyn, self.T - t)
        return -self.params.omega * (g @ self.y_T)

    def y(self, t, convention: str = "consistent"):
        _check_convention(convention)
        t = _as_times(t, self.T)
        drift = expm_batch(self.dyn, t) @ self.y0
        psi = gramian_batch(self.dyn, t)
        if convention == "consistent":
            back = np.swapaxes(expm_batch(self.dyn, self.T - t), -1, -2) @ self.y_T
        else:
            back = np.broadcast_to(self.y_T, drift.shape)
        return drift - self.params.omega * (psi @ back[..., None])[..., 0]


class Platoon:
    """Shared bookkeeping for strategies defined through per-follower ``xi``/``y``.

    Subclasses provide ``_followers`` with ``xi(t)`` and ``y(t)`` methods.
    """

    provenance = "external"

    def __init__(self, leader: LeaderMotion, followers, dyn: DynamicsMatrices, T: float):
        self.leader = leader
        self.followers = [(StateVec3(*x0), p) for x0, p in followers]
        self.dyn = dyn
        self.T = float(T)
        self.relative = relative_initial_states(leader, self.followers)
        self.d_hats = np.array([p.d_hat for _, p in self.followers])

    @property
    def n(self) -> int:
        return len(self.followers)

    def xi_all(self, t) -> np.ndarray:
        """Reduced controls, shape ``t.shape + (N,)``."""
        return np.stack([f.xi(t) for f in self._followers], axis=-1)

    def u(self, t) -> np.ndarray:
        """Vehicle inputs ``u_i = -sum_{j<=i} xi_j``, shape ``t.shape + (N,)``."""
        return -np.cumsum(self.xi_all(t), axis=-1)

    def y_all(self, t) -> np.ndarray:
        return np.stack([f.y(t, self.convention) for f in self._followers], axis=-2)

    def x(self, t) -> np.ndarray:
        """States of the leader and all followers, shape ``t.shape + (N + 1, 3)``."""
        t = _as_times(t, self.T)
        y = self.y_all(t)
        lead = self.leader.state(t)
        followers = lead[..., None, :] - np.cumsum(y + self.d_hats, axis=-2)
        return np.concatenate([lead[..., None, :], followers], axis=-2)


class NashPlatoon(Platoon):
    provenance = "nash"

    def __init__(self, leader, followers, dyn, T, convention: str = "consistent"):
        super().__init__(leader, followers, dyn, T)
        _check_convention(convention)
        self.convention = convention
        self._followers = [
            NashFollower(rs.y.as_array(), p, dyn, T, i=rs.i)
            for rs, (_, p) in zip(self.relative, self.followers)
        ]


def xi_nash(i, y0, params, dyn, T, t):
    """Reduced equilibrium control ``xi_i(t)`` of follower ``i``."""
    y0 = y0.y if isinstance(y0, RelativeState) else y0
    return NashFollower(np.asarray(y0, dtype=float), params, dyn, T, i=i).xi(t)


def u_nash(i, all_y0, all_params, dyn, T, t):
    """Equilibrium input ``u_i(t) = -sum_{j<=i} xi_j(t)``; ``u_0 = 0``."""
    total = 0.0
    for j in range(1, i + 1):
        total = total + xi_nash(j, all_y0[j - 1], all_params[j - 1], dyn, T, t)
    return -total if i > 0 else np.zeros_like(np.asarray(t, dtype=float))


def y_traj_nash(i, y0, params, dyn, T, t, convention="consistent"):
    """Relative state ``y_i(t)`` along the equilibrium."""
    y0 = y0.y if isinstance(y0, RelativeState) else y0
    return NashFollower(np.asarray(y0, dtype=float), params, dyn, T, i=i).y(t, convention)


def x_traj_nash(leader, followers, dyn, T, t, convention="consistent"):
    """Absolute states (leader first) along the equilibrium."""
    return NashPlatoon(leader, followers, dyn, T, convention).x(t)
