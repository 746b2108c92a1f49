"""Scenario configuration: flat ``key = value`` files plus overrides.

A scenario names a rotator family, its scales, the initial state (Q or the
CM angular velocity for phenomenological families, a gauge profile for
fundamental ones) and the integrator settings.  Validation happens at load
time and reports the offending field.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import GaugeProfile, _phenom_frequency, build_initial_state, q_from_frequency
from .errors import DomainError, RotatorError
from .model import RotatorSpec, casimirs_from_Q, get_family

OUTPUT_ENV = "ROTATORS_OUTPUT_DIR"
SPHERE = "sphere"


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class ScenarioConfig:
    family: str
    m: float = 1.0
    ell: float = 1.0
    Q: Optional[float] = None
    Omega: Optional[float] = None
    profile: Optional[str] = None
    T: Optional[float] = None
    dt: Optional[float] = None
    periods: float = 10.0
    steps_per_period: int = 1000
    stabilize: bool = False
    record_every: int = 1
    abort_threshold: float = 1e-6
    axis: str = "1,0,0"
    phase: float = 0.0
    output_dir: Optional[str] = None
    name: str = "trajectory"
    seed: int = 0
    samples: int = 20
    workers: int = 1
    w: str = "1,0,0,0"
    q0: str = "1,1,0,0"
    qdot0: str = "0,0,1,0"

    # -- derived objects -----------------------------------------------------

    @property
    def is_sphere(self) -> bool:
        return self.family == SPHERE

    def rotator(self) -> RotatorSpec:
        return RotatorSpec(self.m, self.ell, _family_arg(self.family))

    def gauge_profile(self) -> Optional[GaugeProfile]:
        if not self.rotator().is_fundamental:
            return None
        return GaugeProfile.parse(self.profile or self.default_profile())

    def default_profile(self) -> str:
        return f"const:{float(self.rotator().sign):.1f}"

    def q_value(self) -> Optional[float]:
        spec = self.rotator()
        if spec.is_fundamental:
            return None
        if self.Q is not None:
            return self.Q
        try:
            return q_from_frequency(spec, self.Omega)
        except DomainError as exc:
            raise ConfigError("Omega", str(exc)) from None

    def initial_state(self):
        axis = [float(v) for v in self.axis.split(",")]
        return build_initial_state(self.rotator(), q=self.q_value(), axis=axis, phase=self.phase)

    def period(self) -> Optional[float]:
        spec = self.rotator()
        if spec.is_fundamental:
            return None
        c = casimirs_from_Q(spec, self.q_value())
        return 2.0 * np.pi / abs(float(_phenom_frequency(spec, c.c_m, c.c_j)[0]))

    def time_grid(self):
        """``(T, dt)`` with defaults: 10 periods at 1000 steps each, or T=20, dt=1e-3."""
        if self.is_sphere:
            return self.T if self.T is not None else 10.0, self.dt if self.dt is not None else 1e-3
        per = self.period()
        if per is None:
            dt = self.dt if self.dt is not None else 1e-3
            T = self.T if self.T is not None else 20.0
        else:
            dt = self.dt if self.dt is not None else per / self.steps_per_period
            T = self.T if self.T is not None else self.periods * per
        # snap T onto the step grid
        n = max(1, int(round(T / dt)))
        return n * dt, dt

    def output_path(self, override: Optional[str] = None) -> Path:
        return Path(override or os.environ.get(OUTPUT_ENV) or self.output_dir or ".")

    def as_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    def replace(self, **kw):
        return validate(dict(self.as_dict(), **kw))


def _family_arg(text):
    """A builtin name, or polynomial coefficients ``c0,c1,...`` (optionally ``poly:``)."""
    text = text.strip()
    if text.startswith("poly:"):
        text = text[5:]
    if "," in text or text.replace(".", "", 1).replace("-", "", 1).isdigit():
        return [float(c) for c in text.split(",")]
    return text


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_ALIASES = {"q": "Q", "omega": "Omega", "t": "T", "l": "ell", "mass": "m"}


def _canonical(key):
    key = key.strip().replace("-", "_")
    if key in _FIELDS:
        return key
    low = key.lower()
    if low in _ALIASES:
        return _ALIASES[low]
    if low in _FIELDS:
        return low
    raise ConfigError(key, f"unknown setting (known: {', '.join(sorted(_FIELDS))})")


def _coerce(key, value):
    f = _FIELDS[key]
    kind = str(f.type)
    if value is None:
        return None
    try:
        if "bool" in kind:
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"expected a boolean, got {value!r}")
        if "int" in kind:
            fv = float(value)
            if fv != int(fv):
                raise ValueError(f"expected an integer, got {value!r}")
            return int(fv)
        if "float" in kind:
            return float(value)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    return str(value).strip()


def parse_config_text(text: str) -> dict:
    """``key = value`` per line; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(None, f"line {lineno}: expected key = value, got {raw.strip()!r}")
        out[_canonical(key)] = value.strip()
    return out


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    values = parse_config_text(text)
    if not values:
        raise ConfigError("config", f"{path} is empty")
    return values


def validate(values: dict) -> ScenarioConfig:
    values = {_canonical(k): v for k, v in values.items() if v is not None}
    if "family" not in values:
        raise ConfigError("family", "required (a builtin name, 'sphere', or coefficients c0,c1,...)")
    cfg = ScenarioConfig(**{k: _coerce(k, v) for k, v in values.items()})
    for key in ("m", "ell"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, f"must be positive, got {getattr(cfg, key)}")
    for key in ("dt", "T"):
        v = getattr(cfg, key)
        if v is not None and not v > 0:
            raise ConfigError(key, f"must be positive, got {v}")
    for key in ("record_every", "samples", "workers", "steps_per_period"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be at least 1")
    if cfg.is_sphere:
        from .sphere import SphereModelSpec
        try:
            SphereModelSpec(*(_vector(cfg, k) for k in ("w", "q0", "qdot0")))
        except RotatorError as exc:
            raise ConfigError("q0", str(exc)) from None
        return cfg
    try:
        spec = cfg.rotator()
    except (RotatorError, ValueError) as exc:
        raise ConfigError("family", str(exc)) from None
    if spec.is_fundamental:
        for key in ("Q", "Omega"):
            if getattr(cfg, key) is not None:
                raise ConfigError(key, "fundamental rotators have fixed Casimirs; give a profile instead")
        try:
            prof = cfg.gauge_profile()
            T, dt = cfg.time_grid()
            grid = np.linspace(0.0, T, 257)
            w = np.asarray(prof(grid), dtype=float)
            if np.any(np.abs(0.5 * cfg.ell * w) >= 1.0):
                raise ConfigError("profile", f"l*omega/2 reaches 1 on [0, {T:g}]: superluminal gauge")
            if np.any(spec.sign * w < 0):
                raise ConfigError("profile", f"{spec.family.name} needs sign(omega) = {spec.sign:+d}; "
                                             "the other sign puts the velocities outside G(Q) > 0")
        except RotatorError as exc:
            raise ConfigError("profile", str(exc)) from None
    else:
        if cfg.profile is not None:
            raise ConfigError("profile", "only fundamental rotators take a gauge profile")
        if (cfg.Q is None) == (cfg.Omega is None):
            raise ConfigError("Q", "give exactly one of Q or Omega for a phenomenological rotator")
        try:
            q = cfg.q_value()
            lo, hi = spec.relation.q[0], spec.relation.q[-1]
            if not lo <= q <= hi:
                raise ConfigError("Q", f"{q} outside the admissible range [{lo:.4g}, {hi:.4g}]")
            cfg.initial_state()
        except RotatorError as exc:
            raise ConfigError("Q", str(exc)) from None
    try:
        cfg.initial_state()
    except (RotatorError, ValueError) as exc:
        raise ConfigError("axis", str(exc)) from None
    return cfg


def _vector(cfg, key):
    try:
        v = np.array([float(x) for x in getattr(cfg, key).split(",")])
    except ValueError:
        raise ConfigError(key, "expected four comma-separated numbers") from None
    if v.shape != (4,):
        raise ConfigError(key, "expected four comma-separated numbers")
    return v


def sphere_spec(cfg: ScenarioConfig):
    from .sphere import SphereModelSpec
    return SphereModelSpec(*(_vector(cfg, k) for k in ("w", "q0", "qdot0")))
