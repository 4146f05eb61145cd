"""Evaluate a scenario, cross-check it, and write CSV / JSON outputs."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DivergenceError, SingularMatrixError
from .oracle import (
    ControlLaw,
    Trajectory,
    analyze,
    best_response_check,
    drift_risks,
    integrate,
    output_grid,
)
from .scenario import PlatoonConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COLLISION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

ORACLE_TOL = 1e-6


def evaluate(config: PlatoonConfig, times=None) -> Trajectory:
    """Sample the configured strategy's closed-form trajectories."""
    strategy = config.strategy_object()
    t = output_grid(config.T, config.dt_output) if times is None else np.asarray(times, dtype=float)
    return Trajectory(t, strategy.x(t), strategy.u(t), risks=drift_risks(config, t))


def oracle_deviation(config: PlatoonConfig, dt: float | None = None) -> float:
    """Max |closed form - RK4| over all grid times and vehicles."""
    dt = config.dt_oracle if dt is None else dt
    strategy = config.strategy_object()
    sim = integrate(ControlLaw.from_strategy(strategy), config, dt)
    return float(np.abs(strategy.x(sim.t) - sim.states).max())


def csv_header(n: int) -> list[str]:
    cols = ["t"]
    for i in range(n + 1):
        cols += [f"p_{i}", f"v_{i}", f"a_{i}", f"u_{i}"]
    cols += [f"spacing_{i}" for i in range(1, n + 1)]
    cols += [f"f_{i}" for i in range(1, n + 1)]
    return cols


def csv_rows(traj: Trajectory):
    n = traj.controls.shape[1]
    u = np.concatenate([np.zeros((len(traj), 1)), traj.controls], axis=1)
    per_vehicle = np.concatenate([traj.states, u[:, :, None]], axis=2).reshape(len(traj), 4 * (n + 1))
    table = np.column_stack([traj.t, per_vehicle, traj.spacings, traj.risks])
    for row in table:
        yield ",".join(format(float(v), ".17g") for v in row)


def write_csv(traj: Trajectory, path: Path) -> None:
    n = traj.controls.shape[1]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(csv_header(n)) + "\n")
        for line in csv_rows(traj):
            fh.write(line + "\n")


PLOT_TEMPLATE = '''"""Plot the platoon time series written by platoon-game."""
import csv
import sys

import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}
N = {n}

with open(CSV_PATH) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]

fig, axes = plt.subplots(1, 5, figsize=(22, 4))
for ax, key, label in zip(axes, "pvau", ("position", "velocity", "acceleration", "control")):
    for i in range(N + 1):
        ax.plot(t, [float(r[f"{{key}}_{{i}}"]) for r in rows], label=f"vehicle {{i}}")
    ax.set_xlabel("t")
    ax.set_ylabel(label)
for i in range(1, N + 1):
    axes[4].plot(t, [float(r[f"f_{{i}}"]) for r in rows], label=f"vehicle {{i}}")
axes[4].set_xlabel("t")
axes[4].set_ylabel("risk f")
axes[0].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else CSV_PATH.rsplit(".", 1)[0] + ".png")
'''


@dataclass
class RunResult:
    exit_code: int
    report: dict | None
    message: str = ""


def run(
    config: PlatoonConfig,
    csv_path: str | Path,
    report_path: str | Path,
    *,
    verify: bool = False,
    plot_script: str | Path | None = None,
) -> RunResult:
    """Evaluate, cross-check and write outputs; return the exit code and report.

    Exit codes: 0 success, 2 collision detected (outputs still written),
    3 numerical failure (or a failed ``verify`` check), 4 I/O failure.
    """
    numerical_failure = None
    try:
        traj = evaluate(config)
        report = analyze(traj, config)
        deviation = oracle_deviation(config)
    except (SingularMatrixError, DivergenceError) as exc:
        log.error("numerical failure: %s", exc)
        return RunResult(EXIT_NUMERICAL, None, str(exc))

    extra = {
        "scenario": config.name,
        "strategy": config.strategy,
        "trajectory_convention": config.trajectory,
        "epsilon": config.epsilon,
        "horizon": config.T,
        "oracle": {
            "dt": config.dt_oracle,
            "max_deviation": deviation,
            "tolerance": ORACLE_TOL,
            "consistent": deviation <= ORACLE_TOL,
        },
    }
    if verify:
        checks = {"oracle_consistent": deviation <= ORACLE_TOL}
        if config.strategy == "nash":
            law = ControlLaw.from_strategy(config.strategy_object())
            br = [best_response_check(i, law, config, dt=config.dt_oracle) for i in range(1, config.n + 1)]
            extra["best_response"] = [
                {"follower": b.follower, "min_margin": b.min_margin, "passed": b.passed} for b in br
            ]
            checks["best_response"] = all(b.passed for b in br)
        extra["verify"] = checks
        if not all(checks.values()):
            numerical_failure = "verification failed: " + ", ".join(k for k, ok in checks.items() if not ok)
    report.extra = extra
    payload = report.to_dict()

    try:
        write_csv(traj, Path(csv_path))
        Path(report_path).write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")
        if plot_script is not None:
            Path(plot_script).write_text(PLOT_TEMPLATE.format(csv_path=str(csv_path), n=config.n))
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return RunResult(EXIT_IO, payload, str(exc))

    if numerical_failure:
        return RunResult(EXIT_NUMERICAL, payload, numerical_failure)
    if report.collided:
        return RunResult(EXIT_COLLISION, payload, "collision detected")
    return RunResult(EXIT_OK, payload)
