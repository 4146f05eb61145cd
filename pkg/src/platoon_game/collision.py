"""Estimated Nash strategy with a terminal collision-avoidance term.

Adding ``1 / (mu_i |x_{i-1}(T) - x_i(T) - r_hat_i|^2 + eps)`` to each
player's cost makes the equilibrium depend on the unknown terminal state
through the risk weight

    f(y) = 1 / (mu |y + d_hat - r_hat|^2 + eps)^2 .

The estimate evaluates ``f`` at the free drift ``e^{tA} y(0)`` instead. With
``f_t = f(e^{tA} y0)`` the horizon-``t`` terminal estimate is

    z(t) = (I + (omega - mu f_t) Psi(t))^{-1} (e^{tA} y0 - mu f_t Psi(t) (r_hat - d_hat))

and every control below has the form ``xi(t) = -(e^{(T-t)A} B)^T c`` for a
weight vector ``c`` built from ``z``.

Variants
--------
terminal
    ``c = (omega - mu f_T) z(T) + mu f_T (r_hat - d_hat)``, constant in time.
time-varying
    ``c(t) = (omega - mu f_t) z(t) + mu f_T (r_hat - d_hat)``; the second
    risk weight stays at the terminal drift.
time-varying-consistent
    as above with ``f_t`` in both places.

Both time-varying variants share the trajectory
``e^{tA} y0 - Psi(t) [(omega - mu f_t) z(t) + mu f_t (r_hat - d_hat)]``,
which simplifies to ``z(t)`` itself. That curve is not the response of the
system to either time-varying control; use :mod:`platoon_game.oracle` to
obtain the realised motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SingularMatrixError
from .linear import (
    DynamicsMatrices,
    StateVec3,
    expm_batch,
    gramian_batch,
    input_response,
    solve_shifted_batch,
)
from .nash import (
    FollowerParams,
    Platoon,
    RelativeState,
    _as_times,
    _check_convention,
)

VARIANTS = ("terminal", "time-varying", "time-varying-consistent")
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True)
class CaParams:
    epsilon: float = DEFAULT_EPSILON
    variant: str = "time-varying"

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True)
class EstimatedTerminal:
    i: int | None
    t: float
    z: StateVec3


def risk_f(y, params: FollowerParams, epsilon: float):
    """Collision-risk weight ``1 / (mu |y + d_hat - r_hat|^2 + eps)^2``.

    ``y`` may be a single 3-vector or a stack with trailing dimension 3.
    The value lies in ``(0, 1/eps^2]`` and peaks at ``y = r_hat - d_hat``.
    """
    if not epsilon > 0:
        raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
    q = np.asarray(y, dtype=float) + (params.d_hat - params.r_hat)
    quad = np.sum(q * q, axis=-1)
    return 1.0 / (params.mu * quad + epsilon) ** 2


class CaFollower:
    """Cached estimated-Nash quantities for one follower."""

    def __init__(self, y0, params: FollowerParams, ca: CaParams, dyn: DynamicsMatrices, T: float, i=None):
        if not (math.isfinite(T) and T > 0):
            raise InvalidParameterError(f"horizon T must be positive, got {T}")
        self.i = i
        self.y0 = np.asarray(y0, dtype=float).reshape(3)
        self.params = params
        self.ca = ca
        self.dyn = dyn
        self.T = float(T)
        self.rd = params.r_hat - params.d_hat
        self.f_T = float(self.risk_along_drift(self.T))
        self.y_T = self.z(self.T)
        mf = params.mu * self.f_T
        self.c_T = (params.omega - mf) * self.y_T + mf * self.rd

    def risk_along_drift(self, t):
        """``f(e^{tA} y0)``; no horizon restriction on ``t``."""
        drift = expm_batch(self.dyn, t) @ self.y0
        return risk_f(drift, self.params, self.ca.epsilon)

    def _parts(self, t):
        drift = expm_batch(self.dyn, t) @ self.y0
        mf = self.params.mu * risk_f(drift, self.params, self.ca.epsilon)
        psi = gramian_batch(self.dyn, t)
        return drift, mf, psi

    def z(self, t):
        t = _as_times(t, self.T)
        flat = np.atleast_1d(t)
        drift, mf, psi = self._parts(flat)
        rhs = drift - mf[:, None] * (psi @ self.rd)
        z, bad = solve_shifted_batch(self.params.omega - mf, psi, rhs)
        if bad is not None:
            k, cond = bad
            raise SingularMatrixError(cond, follower=self.i, t=float(flat[k]))
        return z.reshape(np.shape(t) + (3,))

    def xi_terminal(self, t):
        t = _as_times(t, self.T)
        return -(input_response(self.dyn, self.T - t) @ self.c_T)

    def y_terminal(self, t, convention="consistent"):
        _check_convention(convention)
        t = _as_times(t, self.T)
        drift = expm_batch(self.dyn, t) @ self.y0
        psi = gramian_batch(self.dyn, t)
        if convention == "consistent":
            back = np.swapaxes(expm_batch(self.dyn, self.T - t), -1, -2) @ self.c_T
        else:
            back = np.broadcast_to(self.c_T, drift.shape)
        return drift - (psi @ back[..., None])[..., 0]

    def _weights_tv(self, t, mf_rd_terminal):
        t = _as_times(t, self.T)
        z = self.z(t)
        mf_t = self.params.mu * self.risk_along_drift(t)
        mf_rd = self.params.mu * self.f_T if mf_rd_terminal else mf_t
        return (self.params.omega - mf_t)[..., None] * z + np.multiply.outer(mf_rd, self.rd)

    def xi_timevarying(self, t, variant=None):
        variant = variant or self.ca.variant
        if variant not in VARIANTS[1:]:
            raise InvalidParameterError(f"not a time-varying variant: {variant!r}")
        t = _as_times(t, self.T)
        c = self._weights_tv(t, mf_rd_terminal=(variant == "time-varying"))
        g = input_response(self.dyn, self.T - t)
        return -np.sum(g * c, axis=-1)

    def y_timevarying(self, t):
        t = _as_times(t, self.T)
        c = self._weights_tv(t, mf_rd_terminal=False)
        drift = expm_batch(self.dyn, t) @ self.y0
        psi = gramian_batch(self.dyn, t)
        return drift - (psi @ c[..., None])[..., 0]

    # uniform interface used by Platoon
    def xi(self, t):
        if self.ca.variant == "terminal":
            return self.xi_terminal(t)
        return self.xi_timevarying(t)

    def y(self, t, convention="consistent"):
        if self.ca.variant == "terminal":
            return self.y_terminal(t, convention)
        return self.y_timevarying(t)


class CaPlatoon(Platoon):
    def __init__(self, leader, followers, dyn, T, ca: CaParams, convention="consistent"):
        super().__init__(leader, followers, dyn, T)
        _check_convention(convention)
        self.ca = ca
        self.convention = convention
        self.provenance = "ca-terminal" if ca.variant == "terminal" else "ca-timevarying"
        self._followers = [
            CaFollower(rs.y.as_array(), p, ca, dyn, T, i=rs.i)
            for rs, (_, p) in zip(self.relative, self.followers)
        ]

    def risks(self, t) -> np.ndarray:
        """``f(e^{tA} y_i(0))`` for every follower, shape ``t.shape + (N,)``."""
        return np.stack([f.risk_along_drift(t) for f in self._followers], axis=-1)


def _y0(y0):
    y0 = y0.y if isinstance(y0, RelativeState) else y0
    return np.asarray(y0, dtype=float)


def z_estimate(i, y0, params, ca, dyn, T, t) -> EstimatedTerminal:
    z = CaFollower(_y0(y0), params, ca, dyn, T, i=i).z(float(t))
    return EstimatedTerminal(i, float(t), StateVec3.from_array(z))


def xi_ca_terminal(i, y0, params, ca, dyn, T, t):
    return CaFollower(_y0(y0), params, ca, dyn, T, i=i).xi_terminal(t)


def y_ca_terminal(i, y0, params, ca, dyn, T, t, convention="consistent"):
    return CaFollower(_y0(y0), params, ca, dyn, T, i=i).y_terminal(t, convention)


def xi_ca_timevarying(i, y0, params, ca, dyn, T, t):
    return CaFollower(_y0(y0), params, ca, dyn, T, i=i).xi_timevarying(t)


def y_ca_timevarying(i, y0, params, ca, dyn, T, t):
    return CaFollower(_y0(y0), params, ca, dyn, T, i=i).y_timevarying(t)


def u_ca(i, all_y0, all_params, ca, dyn, T, t):
    """``-sum_{j<=i} xi_hat_j(t)`` for the variant selected in ``ca``."""
    total = np.zeros_like(np.asarray(t, dtype=float))
    for j in range(1, i + 1):
        total = total + CaFollower(_y0(all_y0[j - 1]), all_params[j - 1], ca, dyn, T, i=j).xi(t)
    return -total
