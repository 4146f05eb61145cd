# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: closed-form e^{tA}, e^{sA}B, the Gramian and RK4.

Same signatures and arithmetic as ``_kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1

cnp.import_array()


def expm_batch(double tau, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t m = tt.shape[0], k
    cdef cnp.ndarray[double, ndim=3] out = np.zeros((m, 3, 3))
    cdef double s, om
    for k in range(m):
        s = tt[k]
        om = -expm1(-s / tau)
        out[k, 0, 0] = 1.0
        out[k, 0, 1] = s
        out[k, 0, 2] = tau * s - tau * tau * om
        out[k, 1, 1] = 1.0
        out[k, 1, 2] = tau * om
        out[k, 2, 2] = exp(-s / tau)
    return out.reshape(np.shape(t) + (3, 3))


def input_response_batch(double tau, s):
    cdef cnp.ndarray[double, ndim=1] ss = np.ascontiguousarray(s, dtype=float).ravel()
    cdef Py_ssize_t m = ss.shape[0], k
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, 3))
    cdef double x, om
    for k in range(m):
        x = ss[k]
        om = -expm1(-x / tau)
        out[k, 0] = x - tau * om
        out[k, 1] = om
        out[k, 2] = exp(-x / tau) / tau
    return out.reshape(np.shape(s) + (3,))


def gramian_batch(double tau, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=float).ravel()
    cdef Py_ssize_t m = tt.shape[0], k
    cdef cnp.ndarray[double, ndim=3] out = np.empty((m, 3, 3))
    cdef double a = tau, s, e1, e2, i_e, i_e2, i_se
    cdef double p00, p01, p02, p11, p12, p22
    for k in range(m):
        s = tt[k]
        e1 = -expm1(-s / a)
        e2 = -expm1(-2.0 * s / a)
        i_e = a * e1
        i_e2 = 0.5 * a * e2
        i_se = a * a * e1 - a * s * exp(-s / a)
        p22 = e2 / (2.0 * a)
        p12 = e1 - 0.5 * e2
        p11 = s - 2.0 * i_e + i_e2
        p02 = (i_se - a * i_e + a * i_e2) / a
        p01 = 0.5 * s * s - a * s - i_se + 2.0 * a * i_e - a * i_e2
        p00 = ((s - a) ** 3 + a ** 3) / 3.0 + 2.0 * a * (i_se - a * i_e) + a * a * i_e2
        out[k, 0, 0] = p00
        out[k, 0, 1] = p01
        out[k, 0, 2] = p02
        out[k, 1, 0] = p01
        out[k, 1, 1] = p11
        out[k, 1, 2] = p12
        out[k, 2, 0] = p02
        out[k, 2, 1] = p12
        out[k, 2, 2] = p22
    return out.reshape(np.shape(t) + (3, 3))


def rk4_linear(double tau, x0, times, u_nodes, u_mid):
    cdef cnp.ndarray[double, ndim=2] X0 = np.ascontiguousarray(x0, dtype=float)
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(times, dtype=float)
    cdef cnp.ndarray[double, ndim=2] U = np.ascontiguousarray(u_nodes, dtype=float)
    cdef cnp.ndarray[double, ndim=2] UM = np.ascontiguousarray(u_mid, dtype=float)
    cdef Py_ssize_t n_steps = tt.shape[0] - 1
    cdef Py_ssize_t n_sys = X0.shape[0]
    cdef cnp.ndarray[double, ndim=3] out = np.empty((n_steps + 1, n_sys, 3))
    cdef Py_ssize_t i, k
    cdef double inv_tau = 1.0 / tau
    cdef double h, p, v, a, u0, um, u1
    cdef double k1p, k1v, k1a, k2p, k2v, k2a, k3p, k3v, k3a, k4p, k4v, k4a
    cdef double v2, a2, v3, a3, v4, a4
    for i in range(n_sys):
        p = X0[i, 0]
        v = X0[i, 1]
        a = X0[i, 2]
        out[0, i, 0] = p
        out[0, i, 1] = v
        out[0, i, 2] = a
        for k in range(n_steps):
            h = tt[k + 1] - tt[k]
            u0 = U[k, i]
            um = UM[k, i]
            u1 = U[k + 1, i]
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
            out[k + 1, i, 0] = p
            out[k + 1, i, 1] = v
            out[k + 1, i, 2] = a
    return out
