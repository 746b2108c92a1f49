"""Phase space, Poisson brackets and the primary constraints.

The phase point is ``(x, p, k, chi)``.  Elementary brackets are
``{x^mu, p^nu} = {k^mu, chi^nu} = eta^{mu nu}``, so for any phase function H
the flow reads ``xdot = dH/dp``, ``kdot = dH/dchi``, ``chidot = -dH/dk`` with
indices raised by the metric.  This sign choice is the one under which
``{kk, chi.k} = +2 kk``; see ``tests/test_brackets.py`` for the calibration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import jet
from .errors import DegenerateError, NumericError
from .minkowski import boost, dot
from .model import RotatorSpec, casimirs_from_momenta

# flip to -1 to reverse every bracket (and hence the direction of time)
BRACKET_SIGN = 1.0

FD_STEP = 1e-6


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    p: np.ndarray
    k: np.ndarray
    chi: np.ndarray

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z)
        return cls(z[..., 0:4], z[..., 4:8], z[..., 8:12], z[..., 12:16])

    def vector(self):
        return np.concatenate([np.asarray(v) for v in (self.x, self.p, self.k, self.chi)], axis=-1)

    def __len__(self):
        x = np.asarray(self.x)
        if x.ndim == 1:
            raise TypeError("single PhaseState has no length")
        return x.shape[0]

    def __getitem__(self, i):
        return PhaseState(self.x[i], self.p[i], self.k[i], self.chi[i])

    def replace(self, **kw):
        d = dict(x=self.x, p=self.p, k=self.k, chi=self.chi)
        d.update(kw)
        return PhaseState(**{n: np.asarray(v, dtype=float) for n, v in d.items()})

    def scalars(self):
        """The six invariants kk, pk, k.chi, pp, p.chi, chi.chi."""
        p, k, c = self.p, self.k, self.chi
        return dict(kk=dot(k, k), pk=dot(p, k), kchi=dot(k, c),
                    pp=dot(p, p), pchi=dot(p, c), chichi=dot(c, c))


# -- phase functions ---------------------------------------------------------

def phi_kk(s: PhaseState):
    return dot(s.k, s.k)


def phi_chik(s: PhaseState):
    return dot(s.chi, s.k)


def casimir_mass(spec: RotatorSpec) -> Callable:
    return lambda s: casimirs_from_momenta(spec, s.p, s.k, s.chi).c_m


def casimir_spin(spec: RotatorSpec) -> Callable:
    return lambda s: casimirs_from_momenta(spec, s.p, s.k, s.chi).c_j


def F_G(spec: RotatorSpec, s: PhaseState):
    """Mass-spin constraint ``C_M - f(C_J)`` of a phenomenological rotator."""
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    return c.c_m - spec.relation.f(c.c_j)


def constraint_functions(spec: RotatorSpec):
    """Named primary constraints: 3 for phenomenological, 4 for fundamental rotators."""
    if spec.is_fundamental:
        cm, cj = casimir_mass(spec), casimir_spin(spec)
        return [("phi1", phi_kk), ("phi2", phi_chik),
                ("phi3", lambda s: cj(s) - 1.0), ("phi4", lambda s: cm(s) - 1.0)]
    return [("phi1", phi_kk), ("phi2", phi_chik), ("phi3", lambda s: F_G(spec, s))]


@dataclass
class ConstraintSet:
    kind: str
    names: List[str]
    residuals: np.ndarray

    def max_abs(self):
        return float(np.max(np.abs(self.residuals)))


def eval_constraints(spec: RotatorSpec, s: PhaseState) -> ConstraintSet:
    kind = "fundamental" if spec.is_fundamental else "phenomenological"
    if np.any(np.asarray(dot(s.p, s.k)) == 0):
        raise DegenerateError("pk = 0: constraints are undefined")
    if spec.is_fundamental:
        c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
        res = [phi_kk(s), phi_chik(s), c.c_j - 1.0, c.c_m - 1.0]
    else:
        res = [fn(s) for _, fn in constraint_functions(spec)]
    names = [n for n, _ in constraint_functions(spec)]
    return ConstraintSet(kind, names, np.array(res, dtype=float))


def constraint_scales(spec: RotatorSpec, s: PhaseState):
    """Natural magnitude of each constraint, for relative on-surface tests."""
    k2 = float(np.sum(np.asarray(s.k) ** 2))
    kc = float(np.linalg.norm(s.k) * np.linalg.norm(s.chi)) or 1.0
    n = 4 if spec.is_fundamental else 3
    return np.array([k2, kc] + [1.0] * (n - 2))


# -- brackets ----------------------------------------------------------------

def phase_gradient(f, s: PhaseState, method="dual"):
    """Gradient of phase function ``f`` as 16 covariant partials ``df/dz^mu``."""
    z = np.asarray(s.vector(), dtype=float)
    if method == "dual":
        out = f(PhaseState.from_vector(jet.seed(z)))
        g = np.array(jet.gradient(out, z.size), dtype=float)
    elif method == "fd":
        g = np.empty_like(z)
        for i in range(z.size):
            h = FD_STEP * max(1.0, abs(z[i]))
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            g[i] = (float(f(PhaseState.from_vector(zp))) - float(f(PhaseState.from_vector(zm)))) / (2 * h)
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    if not np.all(np.isfinite(g)):
        raise NumericError(f"non-finite gradient: {g}")
    return g


def _contract(a, b):
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]


def bracket_from_gradients(gf, gg):
    fx, fp, fk, fc = gf[0:4], gf[4:8], gf[8:12], gf[12:16]
    gx, gp, gk, gc = gg[0:4], gg[4:8], gg[8:12], gg[12:16]
    return BRACKET_SIGN * (_contract(fx, gp) - _contract(fp, gx)
                           + _contract(fk, gc) - _contract(fc, gk))


def poisson_bracket(f, g, s: PhaseState, method="dual"):
    """Canonical bracket ``{f, g}`` of two phase functions at ``s``."""
    return float(bracket_from_gradients(phase_gradient(f, s, method), phase_gradient(g, s, method)))


def hamiltonian_flow(h, s: PhaseState, method="dual") -> PhaseState:
    """Phase velocity ``{z, h}`` generated by the phase function ``h``."""
    g = phase_gradient(h, s, method)
    eta = np.array([1.0, -1.0, -1.0, -1.0]) * BRACKET_SIGN
    return PhaseState(x=eta * g[4:8], p=-eta * g[0:4], k=eta * g[12:16], chi=-eta * g[8:12])


@dataclass
class FirstClassReport:
    kind: str
    names: List[str]
    brackets: np.ndarray
    scales: np.ndarray
    residuals: np.ndarray
    on_surface: bool
    identities: dict = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self):
        return dict(kind=self.kind, names=self.names, brackets=self.brackets.tolist(),
                    residuals=self.residuals.tolist(), on_surface=self.on_surface,
                    identities=self.identities, passed=self.passed, failures=self.failures)


def bracket_identities(spec: RotatorSpec, s: PhaseState, method="dual"):
    """Residuals of the closed-form bracket relations among the constraints.

    These hold identically (on and off the surface) for the phenomenological
    set; for the fundamental set only ``{phi1, phi2} = 2 phi1`` is an identity.
    """
    fns = dict(constraint_functions(spec))
    grads = {n: phase_gradient(f, s, method) for n, f in fns.items()}
    b = lambda i, j: float(bracket_from_gradients(grads[i], grads[j]))  # noqa: E731
    phi1, phi2 = float(fns["phi1"](s)), float(fns["phi2"](s))
    out = {"{phi1,phi2}-2phi1": b("phi1", "phi2") - 2.0 * phi1}
    if not spec.is_fundamental:
        pk = float(dot(s.p, s.k))
        c_j = float(casimir_spin(spec)(s))
        f_cj = -spec.relation(c_j)[1]
        coef = 16.0 * pk**2 / (spec.m**4 * spec.ell**2) * f_cj
        out["{phi2,phi3}"] = b("phi2", "phi3")
        out["{phi3,phi1}-16(pk)^2/(m^4 l^2) F_CJ phi2"] = b("phi3", "phi1") - coef * phi2
    return out


def first_class_report(spec: RotatorSpec, s: PhaseState, tol=1e-7, surface_tol=1e-10,
                       method="dual") -> FirstClassReport:
    """Pairwise brackets of the primary constraints and a first-class verdict."""
    named = constraint_functions(spec)
    names = [n for n, _ in named]
    grads = [phase_gradient(f, s, method) for _, f in named]
    n = len(named)
    mat = np.zeros((n, n))
    scales = np.ones((n, n))
    for i in range(n):
        for j in range(n):
            mat[i, j] = bracket_from_gradients(grads[i], grads[j])
            scales[i, j] = max(np.linalg.norm(grads[i]) * np.linalg.norm(grads[j]), 1e-300)
    res = eval_constraints(spec, s).residuals
    on_surface = bool(np.all(np.abs(res) <= surface_tol * constraint_scales(spec, s)))
    report = FirstClassReport("fundamental" if spec.is_fundamental else "phenomenological",
                              names, mat, scales, res, on_surface,
                              identities=bracket_identities(spec, s, method))
    if not on_surface:
        report.failures.append("state is off the constraint surface: residuals "
                               + ", ".join(f"{a}={r:.3g}" for a, r in zip(names, res)))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(mat[i, j]) > tol * scales[i, j]:
                report.failures.append(f"{{{names[i]},{names[j]}}} = {mat[i, j]:.3g} does not vanish")
    return report


def regularity_matrix(spec: RotatorSpec, s: PhaseState, alpha=1.0, beta=1.0, gamma=1.0):
    """``J_mn = eta(alpha dphi_m/dp dphi_n/dp + beta d/dk d/dk + gamma d/dchi d/dchi)``."""
    grads = [phase_gradient(f, s) for _, f in constraint_functions(spec)]
    n = len(grads)
    J = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            a, b = grads[i], grads[j]
            J[i, j] = (alpha * _contract(a[4:8], b[4:8]) + beta * _contract(a[8:12], b[8:12])
                       + gamma * _contract(a[12:16], b[12:16]))
    return J


def regularity_determinant(spec: RotatorSpec, s: PhaseState, alpha=1.0, beta=1.0, gamma=1.0):
    return float(np.linalg.det(regularity_matrix(spec, s, alpha, beta, gamma)))


def regularity_determinant_closed_form(spec: RotatorSpec, s: PhaseState, alpha=1.0, beta=1.0, gamma=1.0):
    """On-surface value: ``-16 beta^3 chi.chi C_J^2 F_CJ^2`` or ``16 m^2 l^2 alpha beta^3 / (pk)^2``."""
    if spec.is_fundamental:
        pk = float(dot(s.p, s.k))
        return 16.0 * spec.m**2 * spec.ell**2 * alpha * beta**3 / pk**2
    c_j = float(casimir_spin(spec)(s))
    f_cj = -spec.relation(c_j)[1]
    return float(-16.0 * beta**3 * dot(s.chi, s.chi) * c_j**2 * f_cj**2)


# -- sampling ----------------------------------------------------------------

def _unit3(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_on_surface_state(spec: RotatorSpec, rng, q=None, max_rapidity=0.8) -> PhaseState:
    """Random state satisfying every primary constraint, not gauge-fixed.

    Momentum is boosted in a random direction, k has a random scale and chi
    carries a random p.chi component, so all terms of the general formulas
    are exercised.
    """
    m, ell = spec.m, spec.ell
    if spec.is_fundamental:
        c_m, c_j = 1.0, 1.0
    else:
        from .model import casimirs_from_Q
        rel = spec.relation
        qmax = rel.q[-1]
        if q is None:
            q = rng.uniform(max(rel.q[0], 0.05 * qmax), 0.9 * qmax)
        c_m, c_j = (float(v) for v in casimirs_from_Q(spec, q))
    p = np.array([m * np.sqrt(c_m), 0.0, 0.0, 0.0])
    for axis in (1, 2, 3):
        p = boost(p, rng.uniform(-max_rapidity, max_rapidity) / np.sqrt(3), axis)
    k = rng.uniform(0.5, 2.0) * np.concatenate([[1.0], _unit3(rng)])
    r = rng.normal(size=4)
    chi = r - dot(k, r) / dot(k, p) * p
    cc = dot(chi, chi)
    target = -m**4 * ell**2 * c_j / (4.0 * dot(p, k) ** 2)
    chi = chi * np.sqrt(target / cc)
    x = rng.normal(size=4)
    return PhaseState(x, p, k, chi)
