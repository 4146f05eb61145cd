"""Scenario description, JSON scenario files and the built-in preset.

A scenario file is a flat JSON object::

    {
      "tau": 0.5, "T": 10.0,
      "dt_output": 0.01, "dt_oracle": 0.001, "epsilon": 0.1,
      "strategy": "ca-timevarying",
      "trajectory": "consistent",
      "leader": {"p0": 23.0, "v0": 2.0},
      "followers": [
        {"x0": [18.0, 2.5, 1.0], "omega": 6.0, "d": 2.0, "r": 1.0, "mu": 12.0},
        ...
      ]
    }

``variant`` may also be given; it must agree with ``strategy``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

from .collision import DEFAULT_EPSILON, CaParams, CaPlatoon
from .errors import ConfigError, InvalidParameterError, InvalidScenarioError
from .linear import StateVec3, make_dynamics
from .nash import CONVENTIONS, FollowerParams, LeaderMotion, NashPlatoon, relative_initial_states

STRATEGIES = ("nash", "ca-terminal", "ca-timevarying", "ca-timevarying-consistent")
_STRATEGY_VARIANT = {
    "nash": None,
    "ca-terminal": "terminal",
    "ca-timevarying": "time-varying",
    "ca-timevarying-consistent": "time-varying-consistent",
}
MAX_FOLLOWERS = 1000
PRESET_NAMES = ("paper-sec5",)


@dataclass(frozen=True)
class Follower:
    x0: StateVec3
    params: FollowerParams


@dataclass(frozen=True)
class PlatoonConfig:
    tau: float
    T: float
    leader: LeaderMotion
    followers: tuple[Follower, ...]
    strategy: str = "nash"
    epsilon: float = DEFAULT_EPSILON
    dt_output: float = 0.01
    dt_oracle: float = 1e-3
    trajectory: str = "consistent"
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "followers", tuple(self.followers))
        for key in ("tau", "T", "epsilon", "dt_output", "dt_oracle"):
            val = getattr(self, key)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InvalidParameterError(f"{key} must be a positive finite number, got {val!r}")
        if self.dt_output > self.T:
            raise InvalidParameterError(f"dt_output ({self.dt_output}) must not exceed T ({self.T})")
        if self.T / self.dt_oracle > 1e7:
            raise InvalidParameterError("T / dt_oracle must not exceed 1e7")
        if not 1 <= len(self.followers) <= MAX_FOLLOWERS:
            raise InvalidScenarioError(f"need 1..{MAX_FOLLOWERS} followers, got {len(self.followers)}")
        if self.strategy not in STRATEGIES:
            raise InvalidParameterError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.trajectory not in CONVENTIONS:
            raise InvalidParameterError(f"trajectory must be one of {CONVENTIONS}, got {self.trajectory!r}")
        for i, f in enumerate(self.followers, start=1):
            if not StateVec3(*f.x0).is_finite():
                raise InvalidScenarioError(f"follower {i} initial state is not finite")
            if f.params.omega <= 0:
                raise InvalidParameterError(f"follower {i}: omega must be > 0")
        relative_initial_states(self.leader, self.follower_pairs)

    @property
    def n(self) -> int:
        return len(self.followers)

    @property
    def variant(self) -> str | None:
        return _STRATEGY_VARIANT[self.strategy]

    @cached_property
    def dynamics(self):
        return make_dynamics(self.tau)

    @property
    def follower_pairs(self):
        return [(f.x0, f.params) for f in self.followers]

    def strategy_object(self):
        """Closed-form strategy evaluator for the configured strategy."""
        if self.strategy == "nash":
            return NashPlatoon(self.leader, self.follower_pairs, self.dynamics, self.T, self.trajectory)
        ca = CaParams(self.epsilon, self.variant)
        return CaPlatoon(self.leader, self.follower_pairs, self.dynamics, self.T, ca, self.trajectory)

    def with_overrides(self, **kw) -> "PlatoonConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "T": self.T,
            "dt_output": self.dt_output,
            "dt_oracle": self.dt_oracle,
            "epsilon": self.epsilon,
            "strategy": self.strategy,
            "trajectory": self.trajectory,
            "leader": {"p0": self.leader.p0, "v0": self.leader.v0},
            "followers": [
                {
                    "x0": list(f.x0),
                    "omega": f.params.omega,
                    "d": f.params.d,
                    "r": f.params.r,
                    "mu": f.params.mu,
                }
                for f in self.followers
            ],
        }


def paper_sec5(**overrides) -> PlatoonConfig:
    """Five-vehicle scenario: tau = 0.5, T = 10, four followers."""
    x0s = [(18.0, 2.5, 1.0), (11.0, 3.0, 1.5), (6.0, 1.5, 0.8), (1.0, 2.0, 1.2)]
    omegas = (6.0, 3.0, 8.0, 5.0)
    mus = (12.0, 10.0, 1.0, 5.0)
    followers = tuple(
        Follower(StateVec3(*x0), FollowerParams(omega=w, d=2.0, r=1.0, mu=m))
        for x0, w, m in zip(x0s, omegas, mus)
    )
    cfg = PlatoonConfig(
        tau=0.5,
        T=10.0,
        leader=LeaderMotion(p0=23.0, v0=2.0),
        followers=followers,
        name="paper-sec5",
    )
    return cfg.with_overrides(**overrides) if overrides else cfg


_TOP_KEYS = {
    "tau", "T", "dt_output", "dt_oracle", "epsilon", "strategy", "variant",
    "trajectory", "leader", "followers",
}
_FOLLOWER_KEYS = {"x0", "omega", "d", "r", "mu"}


def _number(obj, key, where, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise ConfigError("missing required key", field=f"{where}{key}")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"expected a number, got {val!r}", field=f"{where}{key}")
    return float(val)


def config_from_dict(data: dict, name: str = "custom") -> PlatoonConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", field=sorted(unknown)[0])
    lead = data.get("leader")
    if not isinstance(lead, dict):
        raise ConfigError("expected an object with p0 and v0", field="leader")
    if "a0" in lead and float(lead["a0"]) != 0.0:
        raise ConfigError("leader acceleration must be zero (constant-velocity leader)", field="leader.a0")
    leader = LeaderMotion(_number(lead, "p0", "leader."), _number(lead, "v0", "leader."))

    raw = data.get("followers")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a non-empty list", field="followers")
    followers = []
    for k, item in enumerate(raw):
        where = f"followers[{k}]."
        if not isinstance(item, dict):
            raise ConfigError("expected an object", field=where[:-1])
        extra = set(item) - _FOLLOWER_KEYS
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)}", field=where + sorted(extra)[0])
        x0 = item.get("x0")
        if not (isinstance(x0, list) and len(x0) == 3):
            raise ConfigError("expected [p, v, a]", field=where + "x0")
        try:
            params = FollowerParams(
                omega=_number(item, "omega", where),
                d=_number(item, "d", where),
                r=_number(item, "r", where),
                mu=_number(item, "mu", where),
            )
            state = StateVec3(*(float(v) for v in x0))
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where[:-1]) from exc
        followers.append(Follower(state, params))

    strategy = data.get("strategy", "nash")
    if "variant" in data and _STRATEGY_VARIANT.get(strategy) not in (None, data["variant"]):
        raise ConfigError(
            f"variant {data['variant']!r} contradicts strategy {strategy!r}", field="variant"
        )
    try:
        return PlatoonConfig(
            tau=_number(data, "tau", ""),
            T=_number(data, "T", ""),
            leader=leader,
            followers=tuple(followers),
            strategy=strategy,
            epsilon=_number(data, "epsilon", "", DEFAULT_EPSILON),
            dt_output=_number(data, "dt_output", "", 0.01),
            dt_oracle=_number(data, "dt_oracle", "", 1e-3),
            trajectory=data.get("trajectory", "consistent"),
            name=name,
        )
    except (InvalidParameterError, InvalidScenarioError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_config(source: str | Path) -> PlatoonConfig:
    """Load a scenario file, or the preset named ``"paper-sec5"``."""
    if str(source) in PRESET_NAMES:
        return paper_sec5()
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return config_from_dict(data, name=path.stem)
