"""Open-loop Nash and estimated collision-avoidance strategies for platoons.

Modules
-------
linear
    Closed-form ``e^{tA}``, ``e^{sA} B`` and the finite-horizon Gramian.
nash
    Exact open-loop Nash equilibrium without collision avoidance.
collision
    Estimated Nash strategy with a terminal collision-avoidance term.
oracle
    RK4 simulation, cost evaluation and best-response certification.
scenario, runner, cli
    Scenario files, the built-in preset, CSV/JSON output and the CLI.
"""

from .collision import CaParams, CaPlatoon, risk_f, z_estimate
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    InvalidParameterError,
    InvalidScenarioError,
    PlatoonError,
    SingularMatrixError,
)
from .linear import StateVec3, expm_tA, gramian, invert_shifted_gramian, make_dynamics
from .nash import FollowerParams, LeaderMotion, NashPlatoon
from .scenario import PlatoonConfig, load_config, paper_sec5

__version__ = "0.1.0"

__all__ = [
    "CaParams",
    "CaPlatoon",
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "FollowerParams",
    "InvalidParameterError",
    "InvalidScenarioError",
    "LeaderMotion",
    "NashPlatoon",
    "PlatoonConfig",
    "PlatoonError",
    "SingularMatrixError",
    "StateVec3",
    "expm_tA",
    "gramian",
    "invert_shifted_gramian",
    "load_config",
    "make_dynamics",
    "paper_sec5",
    "risk_f",
    "z_estimate",
]
