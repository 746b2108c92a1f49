"""Command-line front end: ``rotators simulate|verify|sweep|hessian``.

Settings come from an optional flat config file (``--config``), then
command-line flags.  Outputs go to ``--output-dir``, else the directory in
``$ROTATORS_OUTPUT_DIR``, else the config's ``output_dir``, else ``.``.

Exit codes: 0 all good, 1 a check failed (or integration aborted),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .analysis import (angular_velocity, hessian_rank, orbit_radius, radius_from_casimirs,
                       rapidity_from_f, rapidity_from_Q)
from .brackets import (bracket_identities, first_class_report, hamiltonian_flow,
                       random_on_surface_state, regularity_determinant,
                       regularity_determinant_closed_form)
from .dynamics import (closed_form_fund, closed_form_phenom, eom, hamiltonian_cm,
                       hamiltonian_cm_fund, integrate)
from .errors import IntegrationAbort, RotatorError
from .minkowski import dot
from .model import casimirs_from_Q
from .scenario import ConfigError, ScenarioConfig, read_config, sphere_spec, validate
from .sphere import integrate_sphere, sphere_hessian

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("rotators")


class UsageError(Exception):
    pass


# -- argument handling -------------------------------------------------------

def _scenario_flags(p):
    g = p.add_argument_group("scenario (override config keys)")
    g.add_argument("--config", help="flat key = value file")
    g.add_argument("--family", help="quadratic, fundamental+, fundamental-, sphere, or c0,c1,...")
    g.add_argument("--m", type=float)
    g.add_argument("--ell", type=float)
    g.add_argument("--Q", type=float)
    g.add_argument("--Omega", type=float, help="CM angular velocity instead of Q")
    g.add_argument("--profile", help="gauge profile: const:c, sin:a:b:nu or spline:t=v,...")
    g.add_argument("--T", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--periods", type=float)
    g.add_argument("--stabilize", action="store_const", const=True)
    g.add_argument("--record-every", type=int)
    g.add_argument("--abort-threshold", type=float)
    g.add_argument("--axis")
    g.add_argument("--seed", type=int)
    g.add_argument("--name", help="basename for output files")
    g.add_argument("--output-dir")


_SCENARIO_KEYS = ["family", "m", "ell", "Q", "Omega", "profile", "T", "dt", "periods", "stabilize",
                  "record_every", "abort_threshold", "axis", "seed", "name"]


def load_scenario(args, **extra) -> ScenarioConfig:
    values = read_config(args.config) if args.config else {}
    for key in _SCENARIO_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    values.update({k: v for k, v in extra.items() if v is not None})
    if not values:
        raise UsageError("nothing to run: give --config FILE or --family NAME")
    return validate(values)


def build_parser():
    ap = argparse.ArgumentParser(prog="rotators", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one scenario and write CSV + manifest")
    _scenario_flags(sim)

    ver = sub.add_parser("verify", help="run the invariant suite for one family")
    _scenario_flags(ver)
    ver.add_argument("--samples", type=int, help="random on-surface states per check")
    ver.add_argument("--inject-corruption", action="store_true",
                     help="push the test states off the constraint surface (negative control)")

    sw = sub.add_parser("sweep", help="run a parameter or gauge-profile grid")
    _scenario_flags(sw)
    sw.add_argument("--param", choices=["Q", "Omega", "m", "ell"])
    sw.add_argument("--values", help="lo:hi:n (inclusive linspace) or v1,v2,...")
    sw.add_argument("--profiles", help="semicolon-separated gauge profiles")
    sw.add_argument("--trajectories", action="store_true", help="integrate each point and keep its CSV")
    sw.add_argument("--workers", type=int)

    he = sub.add_parser("hessian", help="velocity Hessian rank at the scenario's initial point")
    _scenario_flags(he)
    he.add_argument("--method", choices=["jet", "fd"], default="jet")
    return ap


# -- simulate ----------------------------------------------------------------

def run_trajectory(cfg: ScenarioConfig):
    T, dt = cfg.time_grid()
    if cfg.is_sphere:
        return integrate_sphere(sphere_spec(cfg), T, dt, abort_threshold=cfg.abort_threshold)
    return integrate(cfg.rotator(), cfg.initial_state(), T, dt, profile=cfg.gauge_profile(),
                     stabilize_steps=cfg.stabilize, abort_threshold=cfg.abort_threshold,
                     record_every=cfg.record_every)


def write_outputs(cfg: ScenarioConfig, traj, outdir: Path, name: str):
    csv_path = outdir / f"{name}.csv"
    if cfg.is_sphere:
        io.write_table(csv_path, io.sphere_columns(traj))
        man = dict(model=dict(family="sphere", w=traj.spec.w, q0=traj.spec.q0, qdot0=traj.spec.qdot0),
                   integrator=dict(method="rk4", T=float(traj.t[-1]), dt=float(traj.t[1] - traj.t[0])),
                   drift=traj.drift_summary(), version=io.code_version(), config=cfg.as_dict(),
                   csv=csv_path.name)
        io.write_json(outdir / f"{name}.manifest.json", man)
        return csv_path, None
    io.write_trajectory_csv(csv_path, traj)
    io.write_json(outdir / f"{name}.manifest.json", io.manifest(traj, cfg.as_dict(), csv_path.name))
    report = io.trajectory_report(traj)
    io.write_json(outdir / f"{name}.report.json", report)
    return csv_path, report


def summary_line(cfg, traj, report) -> str:
    if cfg.is_sphere:
        d = traj.drift_summary()
        return (f"sphere: {len(traj.t)} samples, drift qq={d['qq']:.2e} "
                f"qqdot={d['qqdot']:.2e} pq={d['pq']:.2e}")
    d = report["drift"]
    parts = [f"{cfg.rotator().family.name}:",
             f"C_M={report['C_M']['mean']:.10g}", f"C_J={report['C_J']['mean']:.10g}",
             f"tanh_psi={report['tanh_psi']['mean']:.10g}", f"rho={report['rho']['mean']:.10g}"]
    if "orbit_radius" in report:
        parts.append(f"orbit_radius={report['orbit_radius']:.10g}")
    parts += [f"max_constraint={d['max_constraint_residual']:.2e}",
              f"casimir_drift={max(d['casimir_mass_drift'], d['casimir_spin_drift']):.2e}"]
    return " ".join(parts)


def cmd_simulate(args) -> int:
    cfg = load_scenario(args)
    outdir = cfg.output_path(args.output_dir)
    try:
        traj = run_trajectory(cfg)
    except IntegrationAbort as exc:
        print(f"integration aborted at t={exc.time:g}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    csv_path, report = write_outputs(cfg, traj, outdir, cfg.name)
    print(summary_line(cfg, traj, report))
    print(f"wrote {csv_path}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------

def _check(name, value, tol, detail=""):
    ok = bool(np.isfinite(value) and value <= tol)
    return dict(name=name, passed=ok, value=float(value), tol=tol, detail=detail)


def corrupt(s):
    """Tilt k towards chi: kk and k.chi stop vanishing."""
    chi_hat = s.chi / np.sqrt(-dot(s.chi, s.chi))
    return s.replace(k=s.k + 0.05 * chi_hat)


def verify_checks(cfg: ScenarioConfig, samples: int, seed: int, inject: bool = False):
    spec = cfg.rotator()
    rng = np.random.default_rng(seed)
    states = [random_on_surface_state(spec, rng) for _ in range(samples)]
    if inject:
        states = [corrupt(s) for s in states]
    checks = []

    violated, off_surface, worst, passed = {}, 0, 0.0, True
    for s in states:
        rep = first_class_report(spec, s)
        passed &= rep.passed
        off_surface += not rep.on_surface
        rel = np.abs(rep.brackets) / rep.scales
        worst = max(worst, float(rel[np.triu_indices_from(rel, 1)].max()))
        for i, j in zip(*np.triu_indices_from(rel, 1)):
            if rel[i, j] > 1e-7:
                key = f"{{{rep.names[i]},{rep.names[j]}}}"
                violated[key] = max(violated.get(key, 0.0), abs(rep.brackets[i, j]))
    detail = ", ".join(f"{k} = {v:.3g} does not vanish" for k, v in violated.items())
    if off_surface:
        detail += f"; {off_surface}/{len(states)} states off the constraint surface"
    kind = "4x4" if spec.is_fundamental else "3x3"
    checks.append(dict(name=f"first-class {kind}", passed=bool(passed), value=worst, tol=1e-7,
                       detail=detail.lstrip("; ")))

    idents = {}
    for s in states:
        for key, v in bracket_identities(spec, s).items():
            idents[key] = max(idents.get(key, 0.0), abs(v))
    for key, v in idents.items():
        checks.append(_check(f"identity {key}", v, 1e-8))

    rel = 0.0
    for s in states:
        det = regularity_determinant(spec, s, 1.3, 0.7, 2.0)
        ref = regularity_determinant_closed_form(spec, s, 1.3, 0.7, 2.0)
        rel = max(rel, abs(det - ref) / abs(ref))
    checks.append(_check("regularity determinant", rel, 1e-7, "bracket matrix vs closed form"))

    prof = cfg.gauge_profile()
    err = 0.0
    for s in states:
        if spec.is_fundamental:
            flow = hamiltonian_flow(lambda z: hamiltonian_cm_fund(spec, z, prof(0.0)), s)
        else:
            flow = hamiltonian_flow(lambda z: hamiltonian_cm(spec, z), s)
        err = max(err, float(np.abs(flow.vector() - eom(spec, s, prof, 0.0).vector()).max()))
    checks.append(_check("CM Hamiltonian generates the equations of motion", err, 1e-8))

    s0 = cfg.initial_state()
    if inject:
        s0 = corrupt(s0)
    v = eom(spec, s0, prof, 0.0)
    try:
        hr = hessian_rank(spec, v.x, s0.k, v.k)
        expected = 4 if spec.is_fundamental else 5
        checks.append(dict(name="hessian rank", passed=hr.rank == expected and hr.warning is None,
                           value=hr.rank, tol=expected, detail=f"expected {expected}, gap {hr.gap:.3g}"))
    except RotatorError as exc:
        checks.append(dict(name="hessian rank", passed=False, value=float("nan"), tol=0, detail=str(exc)))

    try:
        if spec.is_fundamental:
            T, dt = 2.0, 1e-3
            tr = integrate(spec, s0, T, dt, profile=prof)
            ref = closed_form_fund(spec, s0, prof, tr.t)
            obs = tr.observables()
            checks.append(_check("tanh psi = l omega / 2", float(np.max(np.abs(
                obs["tanh_psi"] - 0.5 * spec.ell * prof(tr.t)))), 1e-8))
            checks.append(_check("C_M = C_J = 1", float(max(np.max(np.abs(obs["C_M"] - 1)),
                                                              np.max(np.abs(obs["C_J"] - 1)))), 1e-9))
        else:
            per = cfg.period()
            tr = integrate(spec, s0, per, per / 1000)
            ref = closed_form_phenom(spec, s0, tr.t)
            q = np.linspace(0.05, 0.95, 19) * cfg.rotator().relation.q[-1]
            c = casimirs_from_Q(spec, q)
            th = rapidity_from_Q(spec, q)
            rho_om = radius_from_casimirs(spec, c) * angular_velocity(spec, c)
            checks.append(_check("tanh psi = rho omega", float(np.max(np.abs(np.abs(th) - np.abs(rho_om)))), 1e-10))
            checks.append(_check("tanh psi from f", float(np.max(np.abs(rapidity_from_f(spec, c.c_j) - th))), 1e-10))
        checks.append(_check("RK4 vs closed form", float(np.abs(tr.z - ref.vector()).max()), 1e-6))
    except RotatorError as exc:
        checks.append(dict(name="RK4 vs closed form", passed=False, value=float("nan"), tol=1e-6,
                           detail=f"{type(exc).__name__}: {exc}"))
    return checks


def cmd_verify(args) -> int:
    cfg = load_scenario(args)
    if cfg.is_sphere:
        raise ConfigError("family", "verify covers rotator families; use 'hessian --family sphere'")
    samples = args.samples or cfg.samples
    checks = verify_checks(cfg, samples, cfg.seed, args.inject_corruption)
    for c in checks:
        tag = "PASS" if c["passed"] else "FAIL"
        extra = f" ({c['detail']})" if c["detail"] else ""
        print(f"{tag} {c['name']}: {c['value']:.3g} vs {c['tol']:g}{extra}")
    outdir = cfg.output_path(args.output_dir)
    path = io.write_json(outdir / f"{cfg.name}.verify.json",
                         dict(config=cfg.as_dict(), samples=samples, corrupted=args.inject_corruption,
                              checks=checks, passed=all(c["passed"] for c in checks)))
    print(f"wrote {path}")
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_FAIL


# -- sweep -------------------------------------------------------------------

def parse_values(text):
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n)).tolist()
    return [float(v) for v in text.split(",")]


def _sweep_point(job):
    """Worker: one grid point.  Returns (row, error message or None)."""
    values, outdir, name, trajectories = job
    cfg = validate(values)
    spec = cfg.rotator()
    row = {}
    if spec.is_fundamental:
        row["profile"] = cfg.profile or cfg.default_profile()
    else:
        q = cfg.q_value()
        c = casimirs_from_Q(spec, q)
        row.update(Q=q, C_M=float(c.c_m), C_J=float(c.c_j),
                   omega=float(angular_velocity(spec, c)), rho=float(radius_from_casimirs(spec, c)),
                   tanh_psi=float(abs(rapidity_from_Q(spec, q))))
    if spec.is_fundamental or trajectories:
        try:
            traj = run_trajectory(cfg)
        except IntegrationAbort as exc:
            return row, f"integration aborted at t={exc.time:g}"
        obs = traj.observables()
        d = traj.drift_summary()
        if spec.is_fundamental:
            row.update(C_M=float(np.mean(obs["C_M"])), C_J=float(np.mean(obs["C_J"])),
                       rho=float(np.mean(obs["rho"])))
        row.update(tanh_psi_measured_mean=float(np.mean(obs["tanh_psi"])),
                   orbit_radius=orbit_radius(traj),
                   max_constraint=d["max_constraint_residual"],
                   casimir_drift=max(d["casimir_mass_drift"], d["casimir_spin_drift"]))
        for i in range(4):
            row[f"x{i}_final"] = float(traj.z[-1, i])
        if trajectories or spec.is_fundamental:
            csv_path, _ = write_outputs(cfg, traj, Path(outdir), name)
            row["csv"] = csv_path.name
    return row, None


def _fmt(v):
    if isinstance(v, float):
        return io.FLOAT_FMT % v
    return str(v)


def cmd_sweep(args) -> int:
    base = load_scenario(args, **({"Q": 0.5} if args.param in ("Q", "Omega") and args.Q is None
                                  and args.Omega is None else {}))
    if base.is_sphere:
        raise ConfigError("family", "sweeps cover rotator families")
    if bool(args.param) == bool(args.profiles):
        raise UsageError("give either --param NAME --values GRID or --profiles P1;P2;...")
    outdir = base.output_path(args.output_dir)
    jobs = []
    if args.profiles:
        if not base.rotator().is_fundamental:
            raise ConfigError("profiles", "profile sweeps need a fundamental family")
        grid = [p.strip() for p in args.profiles.split(";") if p.strip()]
        for i, prof in enumerate(grid):
            jobs.append((dict(base.as_dict(), profile=prof), outdir, f"{base.name}_{i:03d}", True))
        label = "profile"
    else:
        if not args.values:
            raise UsageError("--param needs --values")
        grid = parse_values(args.values)
        for i, v in enumerate(grid):
            vals = dict(base.as_dict(), **{args.param: v})
            if args.param == "Q":
                vals.pop("Omega", None)
            if args.param == "Omega":
                vals.pop("Q", None)
            validate(vals)
            jobs.append((vals, outdir, f"{base.name}_{i:03d}", args.trajectories))
        label = args.param
    workers = args.workers or base.workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]

    rows, failed = [], []
    for g, (row, err) in zip(grid, results):
        rows.append(dict({label: g}, **row))
        if err:
            failed.append(f"{label}={g}: {err}")
    columns = list(dict.fromkeys(k for r in rows for k in r))
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{base.name}_sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])
    print(f"sweep over {label}: {len(rows)} points -> {path}")
    for f in failed:
        print(f"FAIL {f}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# -- hessian -----------------------------------------------------------------

def cmd_hessian(args) -> int:
    cfg = load_scenario(args)
    outdir = cfg.output_path(args.output_dir)
    if cfg.is_sphere:
        sp = sphere_spec(cfg)
        res = sphere_hessian(sp.w, sp.q0, sp.qdot0)
        rep, expected = res.report, 2
        extra = dict(residual_q=res.residual_q, residual_w=res.residual_w, norm=res.norm)
    else:
        spec = cfg.rotator()
        s0 = cfg.initial_state()
        prof = cfg.gauge_profile()
        v = eom(spec, s0, prof, 0.0)
        rep = hessian_rank(spec, v.x, s0.k, v.k, method=args.method)
        expected = 4 if spec.is_fundamental else 5
        extra = dict(method=args.method)
    sv = " ".join(f"{x:.3e}" for x in rep.singular_values)
    print(f"rank {rep.rank} (expected {expected}), gap {rep.gap:.3g}")
    print(f"singular values: {sv}")
    ok = rep.rank == expected and rep.warning is None
    io.write_json(outdir / f"{cfg.name}.hessian.json",
                  dict(config=cfg.as_dict(), expected=expected, passed=ok, **rep.as_dict(), **extra))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = dict(simulate=cmd_simulate, verify=cmd_verify, sweep=cmd_sweep, hessian=cmd_hessian)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rotators {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RotatorError as exc:
        print(f"rotators {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
