"""Gauge-fixed Hamiltonians, equations of motion and their integration.

Time is proper time in the centre-of-momentum (CM) frame: the multipliers
are fixed by ``p.xdot = sqrt(pp)``, ``pk = sqrt(pp)``, ``p.chi = 0``.  For
phenomenological rotators this leaves no freedom.  For fundamental rotators
one arbitrary function survives, the rotation frequency ``omega(t)``,
supplied here as a :class:`GaugeProfile`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import jet
from .brackets import PhaseState, constraint_scales, eval_constraints
from .errors import DomainError, FeasibilityError, IntegrationAbort, SuperluminalGaugeError
from .minkowski import dot, four
from .model import RotatorSpec, casimirs_from_momenta, casimirs_from_Q

FEASIBILITY_TOL = 1e-12


def _col(a):
    return np.asarray(a)[..., None]


# -- gauge data --------------------------------------------------------------

@dataclass(frozen=True)
class GaugeCoefficients:
    kind: str
    values: tuple

    def __getattr__(self, name):
        if name.startswith("u") and name[1:].isdigit():
            i = int(name[1:]) - 1
            if 0 <= i < len(self.values):
                return self.values[i]
        raise AttributeError(name)


class GaugeProfile:
    """Rotation frequency ``omega(t)`` of a fundamental rotator.

    ``phase(t)`` returns the accumulated angle ``int_0^t omega``; presets
    provide it in closed form, arbitrary callables fall back to quadrature.
    """

    def __init__(self, func, phase=None, label="callable", params=None):
        self._func = func
        self._phase = phase
        self.label = label
        self.params = params or {}

    def __call__(self, t):
        return self._func(t)

    def __repr__(self):
        return f"GaugeProfile({self.label}, {self.params})"

    def phase(self, t):
        if self._phase is not None:
            return self._phase(t)
        t = np.asarray(t, dtype=float)
        out = [quad(self._func, 0.0, ti, epsabs=1e-13, epsrel=1e-12, limit=200)[0] for ti in t.ravel()]
        return np.array(out).reshape(t.shape) if t.ndim else float(out[0])

    def describe(self):
        return dict(kind=self.label, **self.params)

    @classmethod
    def constant(cls, c):
        c = float(c)
        return cls(lambda t: c + 0.0 * np.asarray(t, dtype=float), lambda t: c * np.asarray(t, dtype=float),
                   "const", {"c": c})

    @classmethod
    def sinusoid(cls, a, b, nu):
        """``a + b sin(nu t)``."""
        a, b, nu = float(a), float(b), float(nu)

        def phase(t):
            t = np.asarray(t, dtype=float)
            return a * t + b * (1.0 - np.cos(nu * t)) / nu

        return cls(lambda t: a + b * np.sin(nu * np.asarray(t, dtype=float)), phase,
                   "sinusoid", {"a": a, "b": b, "nu": nu})

    @classmethod
    def spline(cls, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        cs = CubicSpline(times, values)
        anti = cs.antiderivative()
        a0 = float(anti(0.0))
        return cls(lambda t: cs(t)[()], lambda t: (anti(t) - a0)[()], "spline",
                   {"times": times.tolist(), "values": values.tolist()})

    @classmethod
    def random_spline(cls, rng, n=8, T=20.0, low=0.2, high=1.5):
        return cls.spline(np.linspace(0.0, T, n), rng.uniform(low, high, n))

    @classmethod
    def parse(cls, text: str):
        """``const:c``, ``sin:a:b:nu`` or ``spline:t0=v0,t1=v1,...``."""
        kind, _, rest = text.partition(":")
        try:
            if kind in ("const", "constant"):
                return cls.constant(float(rest))
            if kind in ("sin", "sinusoid"):
                a, b, nu = (float(v) for v in rest.split(":"))
                return cls.sinusoid(a, b, nu)
            if kind == "spline":
                pairs = [item.split("=") for item in rest.split(",")]
                return cls.spline([float(t) for t, _ in pairs], [float(v) for _, v in pairs])
        except ValueError as exc:
            raise DomainError(f"malformed gauge profile {text!r}: {exc}") from None
        raise DomainError(f"unknown gauge profile kind {kind!r} in {text!r}")


# -- initial data ------------------------------------------------------------

def _frame(axis, phase):
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ref = np.cross([0.0, 0.0, 1.0], n)
    if np.linalg.norm(ref) < 1e-8:
        ref = np.cross(n, [1.0, 0.0, 0.0])
    ref /= np.linalg.norm(ref)
    other = np.cross(n, ref)
    return n, np.cos(phase) * ref + np.sin(phase) * other


def build_initial_state(spec: RotatorSpec, q: Optional[float] = None, axis=(1.0, 0.0, 0.0),
                        phase: float = 0.0, x0=None, omega: Optional[float] = None) -> PhaseState:
    """On-surface state in the CM gauge at rest.

    ``axis`` is the spatial direction of k and ``phase`` rotates chi about
    it.  ``q`` (or the CM angular velocity ``omega``) selects the
    phenomenological state; both are ignored for fundamental rotators.
    """
    if omega is not None and not spec.is_fundamental:
        if q is not None:
            raise DomainError("give Q or omega, not both")
        q = q_from_frequency(spec, omega)
    if spec.is_fundamental:
        c_m, c_j = 1.0, 1.0
    else:
        if q is None:
            raise DomainError("a phenomenological rotator needs Q")
        c_m, c_j = (float(v) for v in casimirs_from_Q(spec, q))
        if not c_j > 0:
            raise DomainError(f"Q = {q} gives zero spin; chi would be degenerate")
    m, ell = spec.m, spec.ell
    n_hat, chi_hat = _frame(axis, phase)
    sqrt_pp = m * np.sqrt(c_m)
    p = four(sqrt_pp, 0.0, 0.0, 0.0)
    k = np.concatenate([[1.0], n_hat])
    pk = sqrt_pp
    chi_norm = np.sqrt(m**4 * ell**2 * c_j / (4.0 * pk**2))
    chi = np.concatenate([[0.0], chi_norm * chi_hat])
    x = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float)
    return PhaseState(x, p, k, chi)


def q_from_frequency(spec: RotatorSpec, omega: float) -> float:
    """Smallest admissible Q whose CM angular velocity is ``omega``.

    The frequency need not be monotone in Q (for the quadratic family it
    is ``Q (1 - Q**2)``), hence the smallest root.
    """
    q = spec.relation.q[1:-1]
    c = casimirs_from_Q(spec, q)
    w = _phenom_frequency(spec, c.c_m, c.c_j)[0] - omega
    idx = np.nonzero(np.sign(w[:-1]) != np.sign(w[1:]))[0]
    if not len(idx):
        raise DomainError(f"omega = {omega} is not reached for Q in [{q[0]:.3g}, {q[-1]:.3g}] "
                          f"(range {w.min() + omega:.4g} .. {w.max() + omega:.4g})")
    i = idx[0]

    def g(x):
        cc = casimirs_from_Q(spec, x)
        return float(_phenom_frequency(spec, cc.c_m, cc.c_j)[0]) - omega

    return float(brentq(g, q[i], q[i + 1], xtol=1e-15, rtol=1e-15))


# -- multipliers -------------------------------------------------------------

def _phenom_frequency(spec, c_m, c_j):
    f, fp = spec.relation(c_j)
    f_cj = -fp
    denom = c_m + c_j * f_cj
    if np.any(np.abs(denom) < FEASIBILITY_TOL):
        raise FeasibilityError(f"C_M F_CM + C_J F_CJ = {denom} vanishes; CM gauge infeasible")
    omega = (2.0 / spec.ell) * c_m * np.sqrt(c_j) * f_cj / denom
    return omega, f_cj


def gauge_coefficients_phenom(spec: RotatorSpec, s: PhaseState) -> GaugeCoefficients:
    """Multipliers ``(u1, u2, u3)`` that keep the CM gauge conditions."""
    sc = s.scalars()
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    omega, f_cj = _phenom_frequency(spec, c.c_m, c.c_j)
    root = np.sqrt(-sc["chichi"] * sc["pp"])
    u1 = -0.5 * (sc["pchi"] ** 2 - sc["pp"] * sc["chichi"]) / (sc["pk"] * root) * omega
    u2 = sc["pchi"] / root * omega
    u3 = spec.m**4 * spec.ell**2 / (8.0 * sc["pk"] * root) * omega / f_cj
    return GaugeCoefficients("phenomenological", (float(u1), float(u2), float(u3)))


def _check_gauge(spec, omega):
    u4 = 0.5 * spec.ell * np.asarray(omega)
    if np.any(np.abs(u4) >= 1.0):
        raise SuperluminalGaugeError(f"l*omega/2 = {u4} violates |tanh psi| < 1")
    return u4


def gauge_coefficients_fund(spec: RotatorSpec, s: PhaseState, profile, t) -> GaugeCoefficients:
    """Multipliers ``(u1, u2, u3, u4)`` with ``u4 = l omega(t) / 2``."""
    u4 = float(_check_gauge(spec, profile(t)))
    m, ell = spec.m, spec.ell
    sc = s.scalars()
    pk, pchi = sc["pk"], sc["pchi"]
    u1 = -m**3 / (2.0 * pk**2) * (1.0 + 4.0 * pk**2 * pchi**2 / (m**6 * ell**2)) * u4
    u2 = 4.0 * pk * pchi / (m**3 * ell**2) * u4
    u3 = 0.5 * m * u4
    return GaugeCoefficients("fundamental", (float(u1), float(u2), float(u3), u4))


# -- Hamiltonians (float or jet inputs) --------------------------------------

def total_hamiltonian_phenom(spec: RotatorSpec, s: PhaseState, u):
    """``u1 kk + u2 k.chi + u3 F_G(C_M, C_J)`` for fixed multipliers."""
    u1, u2, u3 = u
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    return u1 * dot(s.k, s.k) + u2 * dot(s.k, s.chi) + u3 * (c.c_m - spec.relation.f(c.c_j))


def total_hamiltonian_fund(spec: RotatorSpec, s: PhaseState, u):
    u1, u2, u3, u4 = u
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    return (u1 * dot(s.k, s.k) + u2 * dot(s.k, s.chi) + u3 * (c.c_j - 1.0)
            + (1.0 - u4) / u4 * u3 * (c.c_m - 1.0))


def hamiltonian_cm(spec: RotatorSpec, s: PhaseState):
    """CM-gauge Hamiltonian of a phenomenological rotator."""
    m, ell = spec.m, spec.ell
    sc = s.scalars()
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    rel = spec.relation
    f = rel.f(c.c_j)
    fp = rel.fprime(c.c_j)
    pref = 0.5 * m * fp * jet.sqrt(f) / (f - c.c_j * fp)
    ml = m**4 * ell**2
    return pref * ((c.c_m - f) / fp
                   + 4.0 * (sc["pchi"] ** 2 - sc["pp"] * sc["chichi"]) / ml * sc["kk"]
                   - 8.0 * sc["pk"] * sc["pchi"] / ml * sc["kchi"])


def hamiltonian_cm_fund(spec: RotatorSpec, s: PhaseState, omega):
    """CM-gauge Hamiltonian of a fundamental rotator at frequency ``omega``."""
    m, ell = spec.m, spec.ell
    sc = s.scalars()
    ml = m**4 * ell**2
    bracket = ((sc["pp"] / m**2 + 4.0 * sc["pk"] ** 2 * sc["chichi"] / ml)
               + 4.0 * (sc["pchi"] ** 2 - sc["pp"] * sc["chichi"]) / ml * sc["kk"]
               - 8.0 * sc["pk"] * sc["pchi"] / ml * sc["kchi"])
    return 0.5 * m * (sc["pp"] / m**2 - 1.0) - 0.25 * m * ell * omega * bracket


# -- equations of motion -----------------------------------------------------

def normal_vector(s: PhaseState):
    """Unit spacelike ``n = (pp k - pk p) / (pk sqrt(pp))``."""
    pp, pk = dot(s.p, s.p), dot(s.p, s.k)
    return (_col(pp) * s.k - _col(pk) * s.p) / _col(pk * np.sqrt(pp))


def eom_phenom(spec: RotatorSpec, s: PhaseState) -> PhaseState:
    """Phase velocity of a phenomenological rotator in the CM gauge."""
    sc = s.scalars()
    pp, pk, pchi, cc = sc["pp"], sc["pk"], sc["pchi"], sc["chichi"]
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    omega, _ = _phenom_frequency(spec, c.c_m, c.c_j)
    rho = 0.5 * spec.ell * np.sqrt(c.c_j) / c.c_m
    n = normal_vector(s)
    sqrt_pp = np.sqrt(pp)
    sqrt_mcc = np.sqrt(-cc)
    rot = _col(pchi) * s.k - _col(pk) * s.chi
    xdot = s.p / _col(sqrt_pp) + _col(rho * omega) * n
    kdot = _col(omega / (sqrt_mcc * sqrt_pp)) * rot
    chidot = _col(sqrt_mcc * omega) * (n + _col(pchi / (sqrt_mcc * sqrt_pp) / (pk * sqrt_mcc)) * rot)
    return PhaseState(xdot, np.zeros_like(s.p), kdot, chidot)


def eom_fund(spec: RotatorSpec, s: PhaseState, profile, t) -> PhaseState:
    """Phase velocity of a fundamental rotator in the CM gauge at time ``t``."""
    m, ell = spec.m, spec.ell
    w = np.asarray(profile(t), dtype=float)
    _check_gauge(spec, w)
    sc = s.scalars()
    pk, pchi = sc["pk"], sc["pchi"]
    nn = _col(m / pk) * s.k - s.p / m
    rot = _col(pchi) * s.k - _col(pk) * s.chi
    xdot = s.p / m + _col(0.5 * ell * w) * nn
    kdot = _col(w * 2.0 * pk / (m**3 * ell)) * rot
    chidot = _col(m**2 * ell / (2.0 * pk) * w) * (nn + _col(4.0 * pk * pchi / (m**5 * ell**2)) * rot)
    return PhaseState(xdot, np.zeros_like(s.p), kdot, chidot)


def eom(spec: RotatorSpec, s: PhaseState, profile=None, t=0.0) -> PhaseState:
    if spec.is_fundamental:
        if profile is None:
            raise DomainError("a fundamental rotator needs a gauge profile")
        return eom_fund(spec, s, profile, t)
    return eom_phenom(spec, s)


# -- closed-form solutions ---------------------------------------------------

def _cm_pieces(spec, s0, tol=1e-9):
    p, k, chi = (np.asarray(v, dtype=float) for v in (s0.p, s0.k, s0.chi))
    pp, pk, pchi, cc = dot(p, p), dot(p, k), dot(p, chi), dot(chi, chi)
    if abs(pchi) > tol * np.linalg.norm(p) * np.linalg.norm(chi):
        raise DomainError(f"closed form needs p.chi = 0 (got {pchi:.3g})")
    res = eval_constraints(spec, s0).residuals
    if np.any(np.abs(res) > tol * constraint_scales(spec, s0)):
        raise DomainError(f"closed form needs an on-surface state (residuals {res})")
    n0 = normal_vector(s0)
    chi_hat0 = chi / np.sqrt(-cc)
    return p, pp, pk, n0, chi_hat0, np.sqrt(-cc)


def _rotate(s0, p, pp, pk, n0, chi_hat0, chi_norm, radius, theta, t):
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    cth, sth = _col(np.cos(theta)), _col(np.sin(theta))
    n = n0 * cth - chi_hat0 * sth
    chi_hat = chi_hat0 * cth + n0 * sth
    sqrt_pp = np.sqrt(pp)
    x = np.asarray(s0.x, dtype=float) + p * _col(t) / sqrt_pp + radius * (n0 * sth + chi_hat0 * (cth - 1.0))
    k = (pk / pp) * p + (pk / sqrt_pp) * n
    return PhaseState(x, np.broadcast_to(p, x.shape).copy(), k, chi_norm * chi_hat)


def closed_form_phenom(spec: RotatorSpec, s0: PhaseState, t) -> PhaseState:
    """Exact state at CM time ``t``: uniform circle of radius rho at frequency omega."""
    pieces = _cm_pieces(spec, s0)
    c = casimirs_from_momenta(spec, s0.p, s0.k, s0.chi)
    omega, _ = _phenom_frequency(spec, c.c_m, c.c_j)
    radius = 0.5 * spec.ell * np.sqrt(c.c_j) / c.c_m
    return _rotate(s0, *pieces, radius, omega * np.asarray(t, dtype=float), t)


def closed_form_fund(spec: RotatorSpec, s0: PhaseState, profile, t) -> PhaseState:
    """Exact state at CM time ``t`` for an arbitrary frequency profile."""
    pieces = _cm_pieces(spec, s0)
    return _rotate(s0, *pieces, 0.5 * spec.ell, profile.phase(t), t)


# -- integration -------------------------------------------------------------

@dataclass
class Trajectory:
    """Uniformly sampled RK4 solution; ``z`` rows are (x, p, k, chi)."""

    spec: RotatorSpec
    t: np.ndarray
    z: np.ndarray
    profile: Optional[GaugeProfile] = None
    settings: dict = field(default_factory=dict)
    _obs: Optional[dict] = field(default=None, repr=False)

    @property
    def states(self) -> PhaseState:
        return PhaseState.from_vector(self.z)

    def __len__(self):
        return len(self.t)

    def velocities(self):
        """Four-velocity ``xdot`` at every sample, from the equations of motion."""
        return eom(self.spec, self.states, self.profile, self.t).x

    def observables(self):
        if self._obs is None:
            from .analysis import trajectory_observables
            self._obs = trajectory_observables(self)
        return self._obs

    def drift_summary(self):
        obs = self.observables()
        names = [c for c in obs if c.startswith("phi")]
        gauge = [c for c in obs if c.startswith("gauge_")]
        out = dict(
            samples=len(self.t),
            max_constraint_residual=float(max(np.max(np.abs(obs[c])) for c in names)),
            max_gauge_residual=float(max(np.max(np.abs(obs[c])) for c in gauge)),
            casimir_mass_drift=float(np.max(np.abs(obs["C_M"] - obs["C_M"][0]))),
            casimir_spin_drift=float(np.max(np.abs(obs["C_J"] - obs["C_J"][0]))),
            momentum_drift=float(np.max(np.abs(self.z[:, 4:8] - self.z[0, 4:8]))),
        )
        if self.spec.is_fundamental:
            out["casimir_mass_offset"] = float(np.max(np.abs(obs["C_M"] - 1.0)))
            out["casimir_spin_offset"] = float(np.max(np.abs(obs["C_J"] - 1.0)))
        return out


def stabilize(spec: RotatorSpec, s: PhaseState, c_j: float) -> PhaseState:
    """Project (k, chi) back onto the constraint surface and the CM gauge.

    k is rebuilt as ``p/sqrt(pp) + n`` with unit spacelike ``n``; chi is
    Gram-Schmidt orthogonalised against p and n and rescaled to spin ``c_j``.
    """
    p = np.asarray(s.p, dtype=float)
    pp = dot(p, p)
    p_hat = p / np.sqrt(pp)
    kp = s.k - dot(s.k, p_hat) * p_hat
    n = kp / np.sqrt(-dot(kp, kp))
    k = p_hat + n
    chi = s.chi - dot(s.chi, p_hat) * p_hat
    chi = chi + dot(chi, n) * n
    target = spec.m**4 * spec.ell**2 * c_j / (4.0 * dot(p, k) ** 2)
    chi = chi * np.sqrt(target / -dot(chi, chi))
    return PhaseState(np.asarray(s.x, dtype=float), p, k, chi)


def integrate(spec: RotatorSpec, s0: PhaseState, T: float, dt: float, profile=None,
              stabilize_steps: bool = False, abort_threshold: float = 1e-6,
              record_every: int = 1) -> Trajectory:
    """Fixed-step classical RK4 from ``s0`` over ``[0, T]``.

    Constraint residuals are checked at every recorded sample; the run
    aborts with :class:`IntegrationAbort` once any exceeds
    ``abort_threshold`` (relative to the constraint's natural scale).
    """
    if spec.is_fundamental and profile is None:
        raise DomainError("a fundamental rotator needs a gauge profile")
    nsteps = int(round(T / dt))
    if nsteps < 1 or abs(nsteps * dt - T) > 1e-9 * max(T, 1.0):
        raise DomainError(f"T = {T} is not a whole number of steps dt = {dt}")
    res0 = eval_constraints(spec, s0).residuals
    if np.any(np.abs(res0) > abort_threshold * constraint_scales(spec, s0)):
        raise DomainError(f"initial state is off the constraint surface: {res0}")
    c_j0 = float(casimirs_from_momenta(spec, s0.p, s0.k, s0.chi).c_j)

    def rhs(t, z):
        return eom(spec, PhaseState.from_vector(z), profile, t).vector()

    z = np.asarray(s0.vector(), dtype=float).copy()
    ts = [0.0]
    zs = [z.copy()]
    h = dt
    for i in range(nsteps):
        t = i * h
        k1 = rhs(t, z)
        k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2)
        k4 = rhs(t + h, z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if stabilize_steps:
            z = stabilize(spec, PhaseState.from_vector(z), c_j0).vector()
        if (i + 1) % record_every == 0 or i + 1 == nsteps:
            s = PhaseState.from_vector(z)
            res = eval_constraints(spec, s).residuals
            rel = np.abs(res) / constraint_scales(spec, s)
            if not np.all(np.isfinite(rel)) or np.any(rel > abort_threshold):
                raise IntegrationAbort(
                    f"constraint residuals {res} exceed {abort_threshold:g} at t = {(i + 1) * h:g}",
                    step=i + 1, time=(i + 1) * h, residuals=res)
            ts.append((i + 1) * h)
            zs.append(z.copy())
    settings = dict(method="rk4", T=T, dt=dt, steps=nsteps, record_every=record_every,
                    stabilize=stabilize_steps, abort_threshold=abort_threshold)
    return Trajectory(spec, np.array(ts), np.array(zs), profile, settings)
