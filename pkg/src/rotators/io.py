"""Flat-file output: trajectory CSVs, JSON manifests and reports.

Everything is written deterministically (fixed float format, sorted keys,
no timestamps) so identical runs give identical bytes.
"""
from __future__ import annotations

import json
from importlib import metadata
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"

STATE_COLUMNS = [f"{name}{i}" for name in ("x", "p", "k", "chi") for i in range(4)]
OBSERVABLE_COLUMNS = ["C_M", "C_J", "tanh_psi", "rho", "omega", "phi1", "phi2", "phi3", "phi4",
                      "gauge_pxdot", "gauge_pk", "gauge_pchi", "torsion"]
SPHERE_COLUMNS = ([f"q{i}" for i in range(4)] + [f"qdot{i}" for i in range(4)]
                  + [f"p{i}" for i in range(4)] + ["ray1", "ray2", "ray3", "qq", "qqdot", "pq"])


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


def write_table(path, columns: dict):
    """CSV with a header row; columns must share their length."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(names), comments="")
    return path


def read_table(path) -> dict:
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return {n: np.asarray(data[n]) for n in data.dtype.names}


def trajectory_columns(traj) -> dict:
    cols = {"t": traj.t}
    for j, name in enumerate(STATE_COLUMNS):
        cols[name] = traj.z[:, j]
    obs = traj.observables()
    for name in OBSERVABLE_COLUMNS:
        if name == "omega":
            cols[name] = omega_column(traj)
        elif name in obs:
            cols[name] = obs[name]
    return cols


def omega_column(traj):
    """Rotation frequency per sample: the gauge profile, or the Casimir-fixed value."""
    if traj.spec.is_fundamental:
        return np.asarray(traj.profile(traj.t), dtype=float) * np.ones(len(traj.t))
    from .analysis import angular_velocity
    obs = traj.observables()
    return np.asarray(angular_velocity(traj.spec, (obs["C_M"], obs["C_J"])))


def write_trajectory_csv(path, traj):
    return write_table(path, trajectory_columns(traj))


def sphere_columns(traj) -> dict:
    cols = {"t": traj.t}
    ray = traj.ray()
    data = np.column_stack([traj.q, traj.qdot, traj.p, ray[:, 1:]])
    for j, name in enumerate(SPHERE_COLUMNS[:15]):
        cols[name] = data[:, j]
    cols.update(traj.residuals())
    return cols


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default, allow_nan=True) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def spec_dict(spec) -> dict:
    fam = spec.family
    out = dict(m=spec.m, ell=spec.ell, family=fam.name, fundamental=spec.is_fundamental,
               q_range=list(spec.q_range), q_nodes=spec.q_nodes)
    if fam.coefficients is not None:
        out["coefficients"] = list(fam.coefficients)
    return out


def manifest(traj, config: dict | None = None, csv_name: str | None = None) -> dict:
    """Everything needed to re-run: model, gauge profile, integrator, drift, version."""
    out = dict(
        model=spec_dict(traj.spec),
        profile=traj.profile.describe() if traj.profile is not None else None,
        integrator=dict(traj.settings),
        initial_state=traj.z[0].tolist(),
        drift=traj.drift_summary(),
        version=code_version(),
    )
    if config is not None:
        out["config"] = dict(config)
    if csv_name is not None:
        out["csv"] = csv_name
    return out


def trajectory_report(traj) -> dict:
    """Per-trajectory observable summary for the analysis report."""
    from .analysis import curvature_radius, orbit_radius
    obs = traj.observables()
    out = {}
    for name in ("C_M", "C_J", "tanh_psi", "rho"):
        v = obs[name]
        out[name] = dict(mean=float(np.mean(v)), std=float(np.std(v)),
                         min=float(np.min(v)), max=float(np.max(v)))
    tors = obs["torsion"]
    out["torsion_residual"] = float(np.nanmax(tors)) if np.any(np.isfinite(tors)) else None
    if len(traj.t) >= 5 and float(np.mean(obs["C_J"])) > 0:
        cr = curvature_radius(traj)
        out["curvature_radius"] = cr._asdict()
        out["orbit_radius"] = orbit_radius(traj)
    out["drift"] = traj.drift_summary()
    return out
