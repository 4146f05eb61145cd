"""Independent verification: RK4 simulation, costs, best-response checks.

Nothing here uses the closed-form trajectories. Control laws are sampled
and pushed through a fixed-step RK4 integrator of ``x' = A x + B u``, so
comparing the result with :mod:`platoon_game.nash` or
:mod:`platoon_game.collision` is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.integrate import simpson

from . import _backend
from .collision import risk_f
from .errors import DivergenceError, InvalidParameterError
from .linear import expm_batch

OPTIMALITY_TOL = 1e-9
PLATOON_THRESHOLD = 0.1  # metres of position error that count as "in formation"


@dataclass(frozen=True)
class ControlLaw:
    """Vector of follower inputs as a function of time.

    ``evaluate`` maps an array of times of shape (m,) to inputs of shape
    (m, N). Calling the law as ``law(i, t)`` returns follower ``i``'s input
    (1-based); ``i = 0`` is the leader, whose input is zero.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    n_followers: int
    provenance: str = "external"

    def __call__(self, i: int, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if i == 0:
            vals = np.zeros(t_arr.shape)
        else:
            vals = self.evaluate(t_arr)[:, i - 1]
        return vals if np.ndim(t) else float(vals[0])

    @classmethod
    def from_strategy(cls, strategy) -> "ControlLaw":
        return cls(strategy.u, strategy.n, strategy.provenance)

    def scaled(self, factor: float) -> "ControlLaw":
        return ControlLaw(lambda t: factor * self.evaluate(t), self.n_followers, self.provenance)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    states: np.ndarray  # (N + 1, 3), leader first
    controls: np.ndarray  # (N,)
    spacings: np.ndarray  # (N,)
    risks: np.ndarray | None = None  # (N,)


@dataclass
class Trajectory:
    """Time series of every vehicle's state and every follower's input."""

    t: np.ndarray
    states: np.ndarray  # (m, N + 1, 3)
    controls: np.ndarray  # (m, N)
    mid_controls: np.ndarray | None = None  # (m - 1, N) at step midpoints
    risks: np.ndarray | None = None  # (m, N)

    def __len__(self):
        return self.t.shape[0]

    @property
    def spacings(self) -> np.ndarray:
        return self.states[:, :-1, 0] - self.states[:, 1:, 0]

    def sample(self, k: int) -> TrajectorySample:
        return TrajectorySample(
            float(self.t[k]),
            self.states[k],
            self.controls[k],
            self.spacings[k],
            None if self.risks is None else self.risks[k],
        )

    def __iter__(self) -> Iterator[TrajectorySample]:
        return (self.sample(k) for k in range(len(self)))

    def control_energy(self) -> np.ndarray:
        """``int_0^T u_i^2 dt`` per follower by composite Simpson."""
        return _energy(self.t, self.controls, self.mid_controls)


def _energy(t, nodes, mids):
    if mids is not None:
        h = np.diff(t)[:, None]
        sq = nodes**2
        return np.sum(h / 6.0 * (sq[:-1] + 4.0 * mids**2 + sq[1:]), axis=0)
    if len(t) < 2:
        return np.zeros(nodes.shape[1:])
    return simpson(nodes**2, x=t, axis=0)


def time_grid(T: float, dt: float) -> np.ndarray:
    """``0, dt, 2 dt, ...`` with ``T`` appended exactly (last step may be shorter)."""
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidParameterError(f"step must be positive, got {dt}")
    if T / dt > 1e7:
        raise InvalidParameterError("T / dt must not exceed 1e7")
    n = math.floor(T / dt + 1e-9)
    grid = np.arange(n + 1, dtype=float) * dt
    if T - grid[-1] < 1e-9 * dt:
        grid = grid[:-1]
    return np.append(grid, T)


def output_grid(T: float, dt: float) -> np.ndarray:
    """``floor(T/dt) + 1`` samples: multiples of ``dt`` below ``T``, then ``T``."""
    if not (dt > 0 and math.isfinite(dt)) or dt > T:
        raise InvalidParameterError(f"output step must lie in (0, T], got {dt}")
    n = math.floor(T / dt + 1e-9)
    return np.append(np.arange(n, dtype=float) * dt, T)


def _rk4(tau, x0, times, u_nodes, u_mid, labels=None):
    states = _backend.kernels().rk4_linear(tau, x0, times, u_nodes, u_mid)
    finite = np.isfinite(states).all(axis=-1)
    if not finite.all():
        k, j = np.argwhere(~finite)[0]
        raise DivergenceError(labels[j] if labels is not None else int(j) + 1, times[k])
    return states


def integrate(law: ControlLaw, scenario, dt: float = 1e-3, method: str = "rk4") -> Trajectory:
    """Simulate every follower under ``law``; the leader is propagated exactly."""
    if method != "rk4":
        raise InvalidParameterError(f"unsupported method {method!r}")
    times = time_grid(scenario.T, dt)
    mids = 0.5 * (times[:-1] + times[1:])
    u_nodes = np.asarray(law.evaluate(times), dtype=float)
    u_mid = np.asarray(law.evaluate(mids), dtype=float)
    x0 = np.array([list(f.x0) for f in scenario.followers], dtype=float)
    followers = _rk4(scenario.dynamics.tau, x0, times, u_nodes, u_mid)
    lead = scenario.leader.state(times)[:, None, :]
    return Trajectory(times, np.concatenate([lead, followers], axis=1), u_nodes, u_mid)


def terminal_error(traj: Trajectory, i: int, offset: np.ndarray) -> np.ndarray:
    return traj.states[-1, i - 1] - traj.states[-1, i] - offset


def cost_from_trajectory(traj: Trajectory, i: int, params, epsilon: float, with_collision_term: bool = False) -> float:
    """Performance index of follower ``i`` evaluated on a trajectory."""
    err = terminal_error(traj, i, params.d_hat)
    J = params.omega * float(err @ err) + float(traj.control_energy()[i - 1])
    if with_collision_term:
        q = terminal_error(traj, i, params.r_hat)
        J += 1.0 / (params.mu * float(q @ q) + epsilon)
    return J


def eval_cost(i: int, law: ControlLaw, scenario, with_collision_term: bool = False, dt: float = 1e-3) -> float:
    traj = integrate(law, scenario, dt)
    params = scenario.followers[i - 1].params
    return cost_from_trajectory(traj, i, params, scenario.epsilon, with_collision_term)


def raised_cosine_basis(T: float, k: int = 8) -> list[Callable[[np.ndarray], np.ndarray]]:
    """``k`` raised-cosine bumps of half-width ``T/k`` centred on a uniform grid."""
    width = T / k
    centres = (np.arange(k) + 0.5) * width

    def bump(c):
        def f(t):
            s = (np.asarray(t, dtype=float) - c) / width
            return np.where(np.abs(s) < 1.0, 0.5 * (1.0 + np.cos(np.pi * s)), 0.0)

        return f

    return [bump(c) for c in centres]


@dataclass
class BestResponseReport:
    follower: int
    base_cost: float
    magnitude: float
    margins: list[tuple[int, int, float]] = field(default_factory=list)
    tolerance: float = OPTIMALITY_TOL

    @property
    def min_margin(self) -> float:
        return min(m for _, _, m in self.margins)

    @property
    def passed(self) -> bool:
        return self.min_margin >= -self.tolerance

    def to_dict(self):
        d = asdict(self)
        d["min_margin"] = self.min_margin
        d["passed"] = self.passed
        return d


def best_response_check(
    i: int,
    law: ControlLaw,
    scenario,
    perturbation_basis: Sequence[Callable] | None = None,
    magnitude: float = 1e-2,
    dt: float = 1e-3,
) -> BestResponseReport:
    """Check that follower ``i`` cannot lower its reduced cost unilaterally.

    The reduced input ``xi_i = u_{i-1} - u_i`` is perturbed by
    ``+/- magnitude * delta`` for each basis function ``delta``; the reduced
    cost ``omega |y_i(T)|^2 + int xi_i^2`` is re-simulated by RK4 and the
    increase over the unperturbed cost is recorded as a margin.
    """
    if perturbation_basis is None:
        perturbation_basis = raised_cosine_basis(scenario.T)
    params = scenario.followers[i - 1].params
    prev = scenario.leader.initial if i == 1 else scenario.followers[i - 2].x0
    y0 = np.asarray(prev, dtype=float) - np.asarray(scenario.followers[i - 1].x0, dtype=float) - params.d_hat

    times = time_grid(scenario.T, dt)
    mids = 0.5 * (times[:-1] + times[1:])

    def reduced(t):
        u = np.asarray(law.evaluate(t), dtype=float)
        upstream = u[:, i - 2] if i > 1 else np.zeros(t.shape)
        return upstream - u[:, i - 1]

    xi_nodes, xi_mid = reduced(times), reduced(mids)
    cols_n, cols_m, labels = [xi_nodes], [xi_mid], [(-1, 0)]
    for k, delta in enumerate(perturbation_basis):
        for sign in (1, -1):
            cols_n.append(xi_nodes + sign * magnitude * delta(times))
            cols_m.append(xi_mid + sign * magnitude * delta(mids))
            labels.append((k, sign))
    u_nodes = np.stack(cols_n, axis=1)
    u_mid = np.stack(cols_m, axis=1)
    x0 = np.repeat(y0[None, :], u_nodes.shape[1], axis=0)
    states = _rk4(scenario.dynamics.tau, x0, times, u_nodes, u_mid, labels=[i] * u_nodes.shape[1])
    y_T = states[-1]
    costs = params.omega * np.sum(y_T * y_T, axis=1) + _energy(times, u_nodes, u_mid)

    report = BestResponseReport(follower=i, base_cost=float(costs[0]), magnitude=magnitude)
    for (k, sign), c in zip(labels[1:], costs[1:]):
        report.margins.append((k, sign, float(c - costs[0])))
    return report


@dataclass
class RunReport:
    terminal_spacing_errors: list[float]
    terminal_state_errors: list[float]
    min_spacing: list[tuple[float, float]]
    collision_events: list[tuple[int, float, float | None]]
    peak_risk_times: list[float]
    peak_risks: list[float]
    costs: dict[str, list[float]]
    platoon_threshold: float
    platoon_achieved_times: list[float | None]
    min_velocity_margin: list[float]
    extra: dict = field(default_factory=dict)

    @property
    def collided(self) -> bool:
        return bool(self.collision_events)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def _collision_intervals(t, spacing, r):
    inside = spacing < r
    events = []
    k = 0
    m = len(t)
    while k < m:
        if inside[k]:
            start = k
            while k < m and inside[k]:
                k += 1
            events.append((float(t[start]), float(t[k]) if k < m else None))
        else:
            k += 1
    return events


def _achieved_time(t, err, threshold):
    ok = np.abs(err) < threshold
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return float(t[0]) if bad.size == 0 else float(t[bad[-1] + 1])


def analyze(samples: Trajectory, scenario) -> RunReport:
    """Summary metrics of a sampled trajectory."""
    t = samples.t
    spacing = samples.spacings
    n = spacing.shape[1]
    params = [f.params for f in scenario.followers]
    d = np.array([p.d for p in params])

    if samples.risks is not None:
        risks = samples.risks
    else:
        risks = drift_risks(scenario, t)
    pos_err = spacing - d
    term_state = [
        float(np.linalg.norm(terminal_error(samples, i, params[i - 1].d_hat))) for i in range(1, n + 1)
    ]
    events = []
    for i in range(n):
        for start, stop in _collision_intervals(t, spacing[:, i], params[i].r):
            events.append((i + 1, start, stop))
    J = [cost_from_trajectory(samples, i, params[i - 1], scenario.epsilon) for i in range(1, n + 1)]
    J_hat = [
        cost_from_trajectory(samples, i, params[i - 1], scenario.epsilon, with_collision_term=True)
        for i in range(1, n + 1)
    ]
    vel = samples.states[:, 1:, 1] - samples.states[:, :1, 1]
    return RunReport(
        terminal_spacing_errors=[float(abs(e)) for e in pos_err[-1]],
        terminal_state_errors=term_state,
        min_spacing=[(float(spacing[:, i].min()), float(t[spacing[:, i].argmin()])) for i in range(n)],
        collision_events=events,
        peak_risk_times=[float(t[risks[:, i].argmax()]) for i in range(n)],
        peak_risks=[float(risks[:, i].max()) for i in range(n)],
        costs={"J": J, "J_hat": J_hat},
        platoon_threshold=PLATOON_THRESHOLD,
        platoon_achieved_times=[_achieved_time(t, pos_err[:, i], PLATOON_THRESHOLD) for i in range(n)],
        min_velocity_margin=[float(v) for v in vel.min(axis=0)],
    )


def drift_risks(scenario, t):
    """``f(e^{tA} y_i(0))`` for each follower on the grid ``t``."""
    E = expm_batch(scenario.dynamics, t)
    prev = np.asarray(scenario.leader.initial, dtype=float)
    out = []
    for f in scenario.followers:
        x0 = np.asarray(f.x0, dtype=float)
        y0 = prev - x0 - f.params.d_hat
        out.append(risk_f(E @ y0, f.params, scenario.epsilon))
        prev = x0
    return np.stack(out, axis=-1)
