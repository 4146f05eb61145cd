"""Pure-Python/NumPy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation and are used whenever
the compiled extension is unavailable or disabled.
"""

import numpy as np


def expm_batch(tau, t):
    t = np.asarray(t, dtype=float)
    e = np.exp(-t / tau)
    one_minus = -np.expm1(-t / tau)
    out = np.zeros(t.shape + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 0, 1] = t
    out[..., 0, 2] = tau * t - tau * tau * one_minus
    out[..., 1, 1] = 1.0
    out[..., 1, 2] = tau * one_minus
    out[..., 2, 2] = e
    return out


def input_response_batch(tau, s):
    s = np.asarray(s, dtype=float)
    one_minus = -np.expm1(-s / tau)
    out = np.empty(s.shape + (3,))
    out[..., 0] = s - tau * one_minus
    out[..., 1] = one_minus
    out[..., 2] = np.exp(-s / tau) / tau
    return out


def gramian_batch(tau, t):
    t = np.asarray(t, dtype=float)
    a = tau
    e1 = -np.expm1(-t / a)
    e2 = -np.expm1(-2.0 * t / a)
    # integrals over [0, t] of E, E^2 and s*E with E = exp(-s/a)
    i_e = a * e1
    i_e2 = 0.5 * a * e2
    i_se = a * a * e1 - a * t * np.exp(-t / a)
    out = np.empty(t.shape + (3, 3))
    p22 = e2 / (2.0 * a)
    p12 = e1 - 0.5 * e2
    p11 = t - 2.0 * i_e + i_e2
    p02 = (i_se - a * i_e + a * i_e2) / a
    p01 = 0.5 * t * t - a * t - i_se + 2.0 * a * i_e - a * i_e2
    p00 = ((t - a) ** 3 + a ** 3) / 3.0 + 2.0 * a * (i_se - a * i_e) + a * a * i_e2
    out[..., 0, 0] = p00
    out[..., 0, 1] = p01
    out[..., 0, 2] = p02
    out[..., 1, 0] = p01
    out[..., 1, 1] = p11
    out[..., 1, 2] = p12
    out[..., 2, 0] = p02
    out[..., 2, 1] = p12
    out[..., 2, 2] = p22
    return out


def rk4_linear(tau, x0, times, u_nodes, u_mid):
    """Classic RK4 for ``x' = A x + B u`` on a given time grid.

    ``x0`` has shape (n_sys, 3); ``u_nodes`` (n_steps + 1, n_sys) holds the
    input at grid times and ``u_mid`` (n_steps, n_sys) at step midpoints.
    Returns states of shape (n_steps + 1, n_sys, 3).
    """
    x0 = np.asarray(x0, dtype=float)
    times = np.asarray(times, dtype=float)
    n_steps = times.shape[0] - 1
    out = np.empty((n_steps + 1,) + x0.shape)
    p = x0[:, 0].copy()
    v = x0[:, 1].copy()
    a = x0[:, 2].copy()
    out[0] = x0
    inv_tau = 1.0 / tau
    for k in range(n_steps):
        h = times[k + 1] - times[k]
        u0 = u_nodes[k]
        um = u_mid[k]
        u1 = u_nodes[k + 1]
        k1p = v
        k1v = a
        k1a = (u0 - a) * inv_tau
        v2 = v + 0.5 * h * k1v
        a2 = a + 0.5 * h * k1a
        k2p = v2
        k2v = a2
        k2a = (um - a2) * inv_tau
        v3 = v + 0.5 * h * k2v
        a3 = a + 0.5 * h * k2a
        k3p = v3
        k3v = a3
        k3a = (um - a3) * inv_tau
        v4 = v + h * k3v
        a4 = a + h * k3a
        k4p = v4
        k4v = a4
        k4a = (u1 - a4) * inv_tau
        p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        a = a + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        out[k + 1, :, 0] = p
        out[k + 1, :, 1] = v
        out[k + 1, :, 2] = a
    return out
