"""Closed-form linear algebra for the third-order longitudinal vehicle model.

Each vehicle obeys ``p' = v, v' = a, tau a' + a = u``, i.e. ``x' = A x + B u``
with ``x = (p, v, a)``. Everything here is specialised to that 3x3 system:
the matrix exponential, the impulse response ``e^{sA} B`` and the finite
horizon Gramian are all available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad_vec

from . import _backend
from .errors import InvalidParameterError, SingularMatrixError

#: Condition number above which a shifted Gramian is treated as singular.
SINGULAR_CONDITION = 1e14


class StateVec3(NamedTuple):
    """Position, velocity and acceleration of one vehicle (or a relative state)."""

    p: float
    v: float
    a: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.v, self.a], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "StateVec3":
        p, v, a = (float(x) for x in np.asarray(arr, dtype=float).reshape(3))
        return cls(p, v, a)

    def is_finite(self) -> bool:
        return all(math.isfinite(x) for x in self)


@dataclass(frozen=True)
class DynamicsMatrices:
    tau: float
    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class Gramian:
    """``Psi(t) = int_0^t e^{sA} B B^T e^{sA^T} ds`` at a given ``t``."""

    t: float
    M: np.ndarray

    def is_symmetric(self) -> bool:
        scale = 1.0 + np.abs(self.M).max()
        return bool(np.abs(self.M - self.M.T).max() <= 1e-12 * scale)

    def is_psd(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.eigvalsh(0.5 * (self.M + self.M.T)).min() >= -tol)


def _check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return value


def make_dynamics(tau: float) -> DynamicsMatrices:
    """Build ``A`` and ``B`` for engine time constant ``tau`` (seconds)."""
    tau = _check_finite("tau", tau)
    if tau <= 0.0:
        raise InvalidParameterError(f"tau must be positive, got {tau!r}")
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0 / tau]])
    B = np.array([0.0, 0.0, 1.0 / tau])
    A.setflags(write=False)
    B.setflags(write=False)
    return DynamicsMatrices(tau=tau, A=A, B=B)


def expm_tA(dyn: DynamicsMatrices, t: float) -> np.ndarray:
    """Return ``e^{tA}``; any finite real ``t`` is accepted."""
    t = _check_finite("t", t)
    return _backend.kernels().expm_batch(dyn.tau, np.array([t]))[0]


def expm_batch(dyn: DynamicsMatrices, t) -> np.ndarray:
    """Vectorised :func:`expm_tA`; returns shape ``t.shape + (3, 3)``."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise InvalidParameterError("t must be finite")
    return _backend.kernels().expm_batch(dyn.tau, t)


def input_response(dyn: DynamicsMatrices, s) -> np.ndarray:
    """``e^{sA} B`` for scalar or array ``s``.

    Since ``B^T e^{sA^T} = (e^{sA} B)^T``, this vector is all that the
    open-loop control laws need from the matrix exponential.
    """
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise InvalidParameterError("s must be finite")
    return _backend.kernels().input_response_batch(dyn.tau, s)


def gramian(dyn: DynamicsMatrices, t: float, quad: str = "analytic") -> Gramian:
    """Finite-horizon Gramian ``Psi(t)``.

    Parameters
    ----------
    dyn : DynamicsMatrices
    t : float
        Horizon, ``t >= 0``.
    quad : {"analytic", "adaptive"}
        ``"analytic"`` integrates ``g(s) g(s)^T`` entrywise in closed form,
        with ``g(s) = e^{sA} B``. ``"adaptive"`` uses adaptive Gauss-Kronrod
        quadrature of the same integrand and serves as a cross-check.
    """
    t = _check_finite("t", t)
    if t < 0.0:
        raise InvalidParameterError(f"Gramian horizon must be >= 0, got {t!r}")
    if t == 0.0:
        return Gramian(0.0, np.zeros((3, 3)))
    if quad == "analytic":
        M = _backend.kernels().gramian_batch(dyn.tau, np.array([t]))[0]
    elif quad == "adaptive":
        M = _gramian_adaptive(dyn, t)
    else:
        raise InvalidParameterError(f"unknown quadrature {quad!r}")
    return Gramian(t, M)


def gramian_batch(dyn: DynamicsMatrices, t) -> np.ndarray:
    """Analytic Gramian for an array of horizons; shape ``t.shape + (3, 3)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or not np.all(np.isfinite(t)):
        raise InvalidParameterError("Gramian horizons must be finite and >= 0")
    return _backend.kernels().gramian_batch(dyn.tau, t)


def _gramian_adaptive(dyn, t):
    def integrand(s):
        g = _backend.kernels().input_response_batch(dyn.tau, np.array([s]))[0]
        return np.outer(g, g)

    # the integrand has a boundary layer of width ~tau near s = 0
    points = [p for p in (dyn.tau, 5.0 * dyn.tau) if p < t]
    M, _ = quad_vec(integrand, 0.0, t, epsabs=0.0, epsrel=1e-13, points=points or None)
    return 0.5 * (M + M.T)


def invert_shifted_gramian(w: float, psi: Gramian | np.ndarray) -> np.ndarray:
    """Return ``(I + w Psi)^{-1}``.

    Raises :class:`SingularMatrixError` when the condition estimate of
    ``I + w Psi`` exceeds ``SINGULAR_CONDITION``. For ``w >= 0`` the matrix is
    symmetric positive definite and the check never fires.
    """
    M = psi.M if isinstance(psi, Gramian) else np.asarray(psi, dtype=float)
    shifted = np.eye(3) + float(w) * M
    cond = np.linalg.cond(shifted)
    if not math.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularMatrixError(cond, t=psi.t if isinstance(psi, Gramian) else None)
    return np.linalg.inv(shifted)


def solve_shifted_batch(w, psi, rhs):
    """Solve ``(I + w_k Psi_k) z_k = rhs_k`` for a stack of systems.

    ``w`` has shape (m,), ``psi`` (m, 3, 3), ``rhs`` (m, 3). Returns
    ``(z, bad)`` where ``bad`` is the index of the first singular system
    (or ``None``) together with its condition number.
    """
    w = np.asarray(w, dtype=float)
    shifted = np.eye(3) + w[:, None, None] * psi
    cond = np.linalg.cond(shifted)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > SINGULAR_CONDITION))
    if bad.size:
        k = int(bad[0])
        return None, (k, float(cond[k]))
    z = np.linalg.solve(shifted, rhs[..., None])[..., 0]
    return z, None
