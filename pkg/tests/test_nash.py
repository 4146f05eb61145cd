import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
import mpmath as mp

from platoon_game.errors import DomainError, InvalidScenarioError
from platoon_game.linear import StateVec3, expm_tA, gramian, make_dynamics
from platoon_game.nash import (
    FollowerParams,
    LeaderMotion,
    NashPlatoon,
    relative_initial_states,
    u_nash,
    x_traj_nash,
    xi_nash,
    y_traj_nash,
)
from platoon_game.oracle import ControlLaw, integrate

T = 10.0


def tpbv_xi0(dyn, omega, y0, T):
    """Reduced control at t=0 from the state/costate boundary value problem.

    y' = A y - B B^T lam, lam' = -A^T lam, y(0) = y0, lam(T) = omega y(T).
    The Hamiltonian system is propagated exactly with a 40-digit transition
    matrix, then the boundary condition is solved for lam(0).
    """
    mp.mp.dps = 40
    A = mp.matrix(dyn.A.tolist())
    BBt = mp.matrix(np.outer(dyn.B, dyn.B).tolist())
    H = mp.zeros(6, 6)
    for r in range(3):
        for c in range(3):
            H[r, c] = A[r, c]
            H[r, c + 3] = -BBt[r, c]
            H[r + 3, c + 3] = -A[c, r]
    Phi = mp.expm(H * T)
    P = lambda r0, c0: mp.matrix([[Phi[r0 + r, c0 + c] for c in range(3)] for r in range(3)])
    Pyy, Pyl, Pll = P(0, 0), P(0, 3), P(3, 3)
    # lam(T) = Pll lam0 (Ply = 0); y(T) = Pyy y0 + Pyl lam0
    y0m = mp.matrix([float(v) for v in y0])
    lam0 = mp.lu_solve(Pll - omega * Pyl, omega * (Pyy * y0m))
    return float(-(mp.mpf(dyn.B[2]) * lam0[2]))


def test_relative_initial_states_sec5(sec5):
    rel = relative_initial_states(sec5.leader, sec5.follower_pairs)
    assert rel[0].y == pytest.approx((3.0, -0.5, -1.0))
    assert rel[2].y == pytest.approx((3.0, 1.5, 0.7))
    assert [r.i for r in rel] == [1, 2, 3, 4]


def test_relative_initial_state_at_formation():
    p = FollowerParams(omega=1, d=2, r=1)
    rel = relative_initial_states(LeaderMotion(10, 1), [(StateVec3(8, 1, 0), p)])
    assert rel[0].y == (0.0, 0.0, 0.0)


def test_relative_initial_states_ordering():
    p = FollowerParams(omega=1, d=2, r=1)
    with pytest.raises(InvalidScenarioError, match="vehicle 2"):
        relative_initial_states(LeaderMotion(10, 1), [(StateVec3(8, 1, 0), p), (StateVec3(9, 1, 0), p)])
    with pytest.raises(InvalidScenarioError):
        relative_initial_states(LeaderMotion(10, 1), [])


def test_xi_zero_initial_error(dyn):
    p = FollowerParams(omega=6, d=2, r=1)
    t = np.linspace(0, T, 11)
    np.testing.assert_array_equal(xi_nash(1, np.zeros(3), p, dyn, T, t), 0.0)


def test_xi_vanishes_with_weight(dyn):
    y0 = np.array([3.0, -0.5, -1.0])
    t = np.linspace(0, T, 11)
    for w, bound in [(1e-6, 1e-3), (1e-10, 1e-7)]:
        assert np.abs(xi_nash(1, y0, FollowerParams(omega=w, d=2, r=1), dyn, T, t)).max() < bound


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_xi_matches_tpbv_oracle(sec5, i):
    rel = relative_initial_states(sec5.leader, sec5.follower_pairs)
    params = sec5.followers[i - 1].params
    y0 = rel[i - 1].y.as_array()
    got = xi_nash(i, y0, params, sec5.dynamics, T, 0.0)
    expected = tpbv_xi0(sec5.dynamics, params.omega, y0, T)
    assert got == pytest.approx(expected, rel=1e-8)


def test_xi_domain(dyn):
    p = FollowerParams(omega=6, d=2, r=1)
    with pytest.raises(DomainError):
        xi_nash(1, np.ones(3), p, dyn, T, 10.5)
    with pytest.raises(DomainError):
        xi_nash(1, np.ones(3), p, dyn, T, -0.1)


def test_u_nash_single_and_zero(sec5):
    rel = [r.y.as_array() for r in relative_initial_states(sec5.leader, sec5.follower_pairs)]
    params = [f.params for f in sec5.followers]
    t = np.linspace(0, T, 7)
    np.testing.assert_array_equal(u_nash(1, rel, params, sec5.dynamics, T, t), -xi_nash(1, rel[0], params[0], sec5.dynamics, T, t))
    zeros = [np.zeros(3)] * 4
    np.testing.assert_array_equal(u_nash(3, zeros, params, sec5.dynamics, T, t), 0.0)


def test_u_telescoping_random():
    rng = np.random.default_rng(3)
    dyn = make_dynamics(0.7)
    for _ in range(20):
        n = rng.integers(1, 6)
        y0s = [rng.normal(size=3) for _ in range(n)]
        params = [FollowerParams(omega=rng.uniform(0.1, 10), d=2, r=1) for _ in range(n)]
        t = rng.uniform(0, 8, size=5)
        u = [np.zeros(5)] + [u_nash(i, y0s, params, dyn, 8.0, t) for i in range(1, n + 1)]
        for i in range(1, n + 1):
            xi = xi_nash(i, y0s[i - 1], params[i - 1], dyn, 8.0, t)
            np.testing.assert_allclose(u[i - 1] - u[i], xi, rtol=0, atol=1e-12 * (1 + np.abs(xi).max()))


@pytest.mark.parametrize("convention", ["consistent", "printed"])
def test_y_initial_and_terminal(sec5, convention):
    rel = relative_initial_states(sec5.leader, sec5.follower_pairs)
    for r, f in zip(rel, sec5.followers):
        y0 = r.y.as_array()
        np.testing.assert_array_equal(y_traj_nash(r.i, y0, f.params, sec5.dynamics, T, 0.0, convention), y0)
        yT = y_traj_nash(r.i, y0, f.params, sec5.dynamics, T, T, convention)
        shifted = np.eye(3) + f.params.omega * gramian(sec5.dynamics, T).M
        expected = np.linalg.solve(shifted, expm_tA(sec5.dynamics, T) @ y0)
        np.testing.assert_allclose(yT, expected, rtol=0, atol=1e-10)


def test_y_free_drift_limit(dyn):
    y0 = np.array([3.0, -0.5, -1.0])
    p = FollowerParams(omega=1e-12, d=2, r=1)
    from platoon_game.linear import expm_batch

    t = np.linspace(0, T, 9)
    np.testing.assert_allclose(y_traj_nash(1, y0, p, dyn, T, t), expm_batch(dyn, t) @ y0, atol=1e-9)


def test_printed_form_differs_midway(sec5):
    """The printed shortcut is only exact at the endpoints."""
    f = sec5.followers[0]
    y0 = relative_initial_states(sec5.leader, sec5.follower_pairs)[0].y.as_array()
    a = y_traj_nash(1, y0, f.params, sec5.dynamics, T, 5.0, "consistent")
    b = y_traj_nash(1, y0, f.params, sec5.dynamics, T, 5.0, "printed")
    assert np.abs(a - b).max() > 0.1


def test_trajectory_matches_rk4(sec5):
    strat = NashPlatoon(sec5.leader, sec5.follower_pairs, sec5.dynamics, T)
    sim = integrate(ControlLaw.from_strategy(strat), sec5, dt=1e-3)
    assert np.abs(strat.x(sim.t) - sim.states).max() <= 1e-6


def test_open_loop_bit_identical(sec5):
    """xi_2 depends only on y_2(0) and t: changing a vehicle that does not
    enter y_2(0) leaves it bit-for-bit unchanged."""
    t = np.linspace(0, T, 101)
    pairs = list(sec5.follower_pairs)
    base = NashPlatoon(sec5.leader, pairs, sec5.dynamics, T).xi_all(t)[:, 1]
    rerun = NashPlatoon(sec5.leader, pairs, sec5.dynamics, T).xi_all(t)[:, 1]
    np.testing.assert_array_equal(base, rerun)
    pairs[2] = (StateVec3(-20.0, 7.0, 3.0), pairs[2][1])
    pairs[3] = (StateVec3(-40.0, 0.0, 0.0), pairs[3][1])
    moved = NashPlatoon(sec5.leader, pairs, sec5.dynamics, T).xi_all(t)[:, 1]
    np.testing.assert_array_equal(base, moved)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.floats(0.01, 20),
    st.floats(0, 10),
)
def test_scaling_linearity(y0, omega, t):
    dyn = make_dynamics(0.5)
    y0 = np.array(y0)
    p = FollowerParams(omega=omega, d=2, r=1)
    xi1, xi2 = xi_nash(1, y0, p, dyn, T, t), xi_nash(1, 2 * y0, p, dyn, T, t)
    assert abs(xi2 - 2 * xi1) <= 1e-12 * (1 + abs(xi2))
    y1, y2 = y_traj_nash(1, y0, p, dyn, T, t), y_traj_nash(1, 2 * y0, p, dyn, T, t)
    assert np.abs(y2 - 2 * y1).max() <= 1e-12 * (1 + np.abs(y2).max())


def test_x_traj_initial_recovers_config(sec5):
    x = x_traj_nash(sec5.leader, sec5.follower_pairs, sec5.dynamics, T, 0.0)
    expected = [sec5.leader.initial] + [f.x0 for f in sec5.followers]
    np.testing.assert_allclose(x, np.array(expected, dtype=float), atol=1e-12)


def test_x_traj_perfect_platoon(dyn):
    p = FollowerParams(omega=5, d=2, r=1)
    leader = LeaderMotion(10.0, 3.0)
    followers = [(StateVec3(8.0, 3.0, 0.0), p), (StateVec3(6.0, 3.0, 0.0), p)]
    t = np.linspace(0, T, 5)
    x = x_traj_nash(leader, followers, dyn, T, t)
    np.testing.assert_allclose(x[:, 1, 0], 10 + 3 * t - 2, atol=1e-12)
    np.testing.assert_allclose(x[:, 2, 0], 10 + 3 * t - 4, atol=1e-12)
    np.testing.assert_allclose(x[:, :, 1], 3.0, atol=1e-12)


def test_x_traj_terminal_formation(sec5):
    x = x_traj_nash(sec5.leader, sec5.follower_pairs, sec5.dynamics, T, T)
    for i in range(1, 5):
        err = x[i - 1] - x[i] - np.array([2.0, 0, 0])
        assert abs(err[0]) <= 0.1
