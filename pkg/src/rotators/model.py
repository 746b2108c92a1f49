"""The rotator family: the function G(Q), the Lagrangian, momenta and Casimirs.

A rotator is a worldline ``x`` carrying a null direction ``k``.  Members of
the family differ only through G(Q), with

    L = -m sqrt(xdot.xdot) sqrt(G(Q)),   Q = sqrt(-l**2 kdot.kdot / (k.xdot)**2).

Families with G'' != 0 are *phenomenological* (mass tied to spin through
C_M = f(C_J)); the two linear families G = 1 +- Q are *fundamental* (C_M and
C_J both pinned to 1).
"""
from __future__ import annotations

import functools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicHermiteSpline

from . import jet
from .errors import ClassificationError, DegenerateError, DomainError, InversionError
from .minkowski import dot

log = logging.getLogger(__name__)

DEFAULT_Q_RANGE = (1e-3, 10.0)
DEFAULT_Q_NODES = 512
# G'' below this fraction of G'/Q counts as linear
FUNDAMENTAL_TOL = 1e-10


@dataclass(frozen=True)
class Family:
    """G(Q) together with its first two derivatives.

    The callables must accept numpy arrays.  ``fundamental`` may be left as
    ``None``, in which case the family is classified by sampling G''.
    """

    name: str
    G: Callable = field(compare=False)
    dG: Callable = field(compare=False)
    d2G: Callable = field(compare=False)
    coefficients: Optional[tuple] = None
    fundamental: Optional[bool] = None

    def __call__(self, q):
        return self.G(q), self.dG(q), self.d2G(q)


def polynomial_family(coefficients: Sequence[float], name: Optional[str] = None) -> Family:
    """Family with G(Q) = sum c_i Q**i; derivatives are exact."""
    coefficients = tuple(float(c) for c in coefficients)
    poly = Polynomial(coefficients)
    d1, d2 = poly.deriv(1), poly.deriv(2)
    trimmed = np.trim_zeros(np.array(coefficients), "b")
    fundamental = True if len(trimmed) == 2 else None
    return Family(name or f"poly{list(coefficients)}", poly, d1, d2,
                  coefficients=coefficients, fundamental=fundamental)


QUADRATIC = polynomial_family([1.0, 0.0, 1.0], "quadratic")
FUNDAMENTAL_PLUS = polynomial_family([1.0, 1.0], "fundamental+")
FUNDAMENTAL_MINUS = polynomial_family([1.0, -1.0], "fundamental-")

BUILTIN_FAMILIES = {
    "quadratic": QUADRATIC,
    "fundamental+": FUNDAMENTAL_PLUS,
    "fundamental-": FUNDAMENTAL_MINUS,
}


def get_family(name_or_coefficients) -> Family:
    """Look up a builtin by name, or build a polynomial family from coefficients."""
    if isinstance(name_or_coefficients, Family):
        return name_or_coefficients
    if isinstance(name_or_coefficients, str):
        try:
            return BUILTIN_FAMILIES[name_or_coefficients]
        except KeyError:
            raise DomainError(
                f"unknown family {name_or_coefficients!r}; expected one of "
                f"{sorted(BUILTIN_FAMILIES)} or a coefficient list") from None
    return polynomial_family(name_or_coefficients)


class CasimirPair(NamedTuple):
    c_m: float
    c_j: float

    @property
    def is_physical(self) -> bool:
        return bool(np.all(np.asarray(jet.value(self.c_m)) > 0)
                    and np.all(np.asarray(jet.value(self.c_j)) > 0))


@dataclass(frozen=True)
class RotatorSpec:
    m: float
    ell: float
    family: Family = QUADRATIC
    q_range: tuple = DEFAULT_Q_RANGE
    q_nodes: int = DEFAULT_Q_NODES

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass m must be positive, got {self.m}")
        if not self.ell > 0:
            raise DomainError(f"length ell must be positive, got {self.ell}")
        object.__setattr__(self, "family", get_family(self.family))
        lo, hi = self.q_range
        if not 0 < lo < hi:
            raise DomainError(f"q_range must satisfy 0 < lo < hi, got {self.q_range}")
        if self.is_fundamental:
            g0, g1 = float(self.family.G(0.0)), float(self.family.dG(0.0))
            if not (np.isclose(g0, 1.0, rtol=0, atol=1e-12) and np.isclose(abs(g1), 1.0, rtol=0, atol=1e-12)):
                raise ClassificationError(
                    f"linear family {self.family.name} has C_M = {g0}, C_J = {g1**2}; "
                    "rescale m and ell so that G(Q) = 1 +- Q")

    @functools.cached_property
    def is_fundamental(self) -> bool:
        fam = self.family
        if fam.fundamental is not None:
            return fam.fundamental
        q = np.geomspace(*self.q_range, 64)
        g1 = np.abs(fam.dG(q))
        g2 = np.abs(fam.d2G(q))
        if np.all(g2 == 0):
            return True
        if np.all(g2 * q < FUNDAMENTAL_TOL * np.maximum(g1, 1e-300)):
            warnings.warn(f"family {fam.name} is numerically linear; treated as fundamental",
                          stacklevel=2)
            return True
        return False

    @property
    def sign(self) -> int:
        """Branch sign of G' (the +- in 1 +- Q for fundamental families)."""
        return 1 if float(self.family.dG(0.5 * sum(self.q_range))) >= 0 else -1

    @functools.cached_property
    def relation(self) -> "MassSpinRelation":
        return derive_f(self)


def eval_family(spec: RotatorSpec, q):
    """(G, G', G'') at ``q``; raises when G <= 0 or G <= Q G'."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise DomainError(f"Q must be non-negative, got {q}")
    g, g1, g2 = spec.family(q)
    if np.any(g <= 0):
        raise DomainError(f"G(Q) = {g} is not positive at Q = {q}")
    if np.any(g - q * g1 <= 0):
        raise DomainError(f"G(Q) > Q G'(Q) fails at Q = {q} (C_M would be {g - q * g1})")
    return g, g1, g2


def _q_of_velocities(spec, xdot, k, kdot, tol=1e-9):
    xx = dot(xdot, xdot)
    kx = dot(k, xdot)
    kk = dot(k, k)
    dd = dot(kdot, kdot)
    if not jet.value(xx) > 0:
        raise DomainError("xdot must be timelike (xdot.xdot > 0)")
    if jet.value(kx) == 0:
        raise DomainError("k.xdot vanishes")
    scale = float(np.sum(np.abs(jet.value(np.asarray(k))) ** 2))
    if abs(jet.value(kk)) > tol * scale:
        raise DomainError(f"k must be null (kk = {jet.value(kk):.3g})")
    if jet.value(dd) > 0:
        raise DomainError("kdot must be spacelike or zero (kdot.kdot <= 0)")
    q2 = -spec.ell**2 * dd / (kx * kx)
    if isinstance(q2, jet.Jet) and q2.val == 0:
        raise DegenerateError("Q = 0: the Lagrangian is not differentiable there")
    return jet.sqrt(q2), xx, kx, dd


def _lift_family(spec, q):
    qv = float(jet.value(q))
    g, g1, g2 = eval_family(spec, qv)
    return jet.lift(q, float(g), float(g1), float(g2)) if isinstance(q, jet.Jet) else float(g)


def lagrangian(spec: RotatorSpec, xdot, k, kdot):
    """``-m sqrt(xdot.xdot) sqrt(G(Q))``; accepts floats or jets."""
    q, xx, _, _ = _q_of_velocities(spec, xdot, k, kdot)
    return -spec.m * jet.sqrt(xx) * jet.sqrt(_lift_family(spec, q))


def momenta_from_velocities(spec: RotatorSpec, xdot, k, kdot):
    """Momenta ``(p, chi)`` conjugate to ``(x, k)`` with the minus-sign convention."""
    xdot, k, kdot = (np.asarray(v, dtype=float) for v in (xdot, k, kdot))
    q, xx, kx, dd = _q_of_velocities(spec, xdot, k, kdot)
    if dd == 0:
        raise DegenerateError("kdot.kdot = 0: chi is undefined")
    if abs(dot(k, kdot)) > 1e-9 * np.linalg.norm(k) * np.linalg.norm(kdot):
        raise DomainError("k.kdot must vanish on the null cone")
    g, g1, _ = eval_family(spec, q)
    sxx = np.sqrt(xx)
    c = 0.5 * spec.m * q * g1 / np.sqrt(g) * sxx
    p = spec.m * np.sqrt(g) * xdot / sxx - c * k / kx
    chi = c * kdot / dd
    return p, chi


def casimirs_from_momenta(spec: RotatorSpec, p, k, chi) -> CasimirPair:
    """``C_M = pp/m**2`` and ``C_J = chi.chi (pk)**2 / (-m**4 l**2 / 4)``."""
    pk = dot(p, k)
    if np.any(np.asarray(jet.value(pk)) == 0):
        raise DegenerateError("pk = 0: C_J is undefined")
    m, ell = spec.m, spec.ell
    c_m = dot(p, p) / m**2
    c_j = dot(chi, chi) * pk * pk * (-4.0 / (m**4 * ell**2))
    return CasimirPair(c_m, c_j)


def casimirs_from_Q(spec: RotatorSpec, q) -> CasimirPair:
    """``C_M = G - Q G'`` and ``C_J = G'**2``."""
    g, g1, _ = eval_family(spec, q)
    return CasimirPair(g - q * g1, g1 * g1)


class MassSpinRelation:
    """Numerical inverse of the curve Q -> (C_J(Q), C_M(Q)) as ``C_M = f(C_J)``.

    The curve is tabulated on a log-spaced Q grid and interpolated with a
    cubic Hermite spline whose node slopes are the exact ``f' = -Q/(2G')``.
    Point evaluations are then polished by Newton iteration on
    ``G'(Q) = +-sqrt(C_J)``, so ``f`` is accurate to round-off rather than to
    interpolation error.
    """

    def __init__(self, spec: RotatorSpec, q_range=None, n_nodes=None):
        if spec.is_fundamental:
            raise ClassificationError(
                f"{spec.family.name} is fundamental; C_M and C_J are independent constants")
        self.spec = spec
        lo, hi = q_range or spec.q_range
        n_nodes = n_nodes or spec.q_nodes
        q = np.geomspace(lo, hi, n_nodes)
        fam = spec.family
        with np.errstate(all="ignore"):
            g, g1, g2 = fam(q)
            c_m = g - q * g1
            ok = np.isfinite(c_m) & (g > 0) & (c_m > 0) & (g1 != 0) & (g2 != 0)
        if not ok[0]:
            raise DomainError(f"Q = {lo} is outside the admissible range of {fam.name}")
        stop = n_nodes if ok.all() else int(np.argmin(ok))
        if stop < n_nodes:
            log.info("%s: Q grid truncated at %.6g (G > Q G' fails beyond)", fam.name, q[stop - 1])
        if stop < 4:
            raise InversionError(f"{fam.name}: fewer than 4 admissible Q nodes")
        q, g, g1, g2, c_m = q[:stop], g[:stop], g1[:stop], g2[:stop], c_m[:stop]
        c_j = g1 * g1
        d = np.diff(c_j)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise InversionError(f"{fam.name}: C_J(Q) is not monotone on [{q[0]:.3g}, {q[-1]:.3g}]")
        order = np.argsort(c_j)
        self.q = q[order]
        self.c_j = c_j[order]
        self.c_m = c_m[order]
        self.branch = int(np.sign(g1[0]))
        slope = -self.q / (2.0 * g1[order])
        self.interpolant = CubicHermiteSpline(self.c_j, self.c_m, slope)
        self._q_spline = CubicHermiteSpline(self.c_j, self.q, 1.0 / (2.0 * g1[order] * g2[order]))

        fp_nodes = self.interpolant.derivative()(self.c_j)
        rel = np.abs(4.0 * self.c_j * fp_nodes**2 - self.q**2) / self.q**2
        if rel.max() > 1e-6:
            raise InversionError(f"Q^2 = 4 C_J f'^2 violated on the grid (max rel {rel.max():.2e})")
        mid = 0.5 * (self.c_j[1:] + self.c_j[:-1])
        self.max_interpolation_error = float(np.max(np.abs(self.interpolant(mid) - self.value(mid))))

    @property
    def cj_range(self):
        return float(self.c_j[0]), float(self.c_j[-1])

    def q_of(self, c_j):
        """Solve ``G'(Q) = branch * sqrt(C_J)`` for Q."""
        c_j = np.asarray(c_j, dtype=float)
        if np.any(c_j < 0):
            raise DomainError("C_J must be non-negative")
        fam = self.spec.family
        target = self.branch * np.sqrt(c_j)
        q = np.clip(self._q_spline(np.clip(c_j, *self.cj_range)), 0.0, None)
        for _ in range(60):
            g1, g2 = fam.dG(q), fam.d2G(q)
            step = (g1 - target) / g2
            q = np.clip(q - step, 0.0, None)
            if np.all(np.abs(step) <= 4e-16 * np.maximum(q, 1e-300)):
                break
        if not np.all(np.isclose(fam.dG(q), target, rtol=1e-12, atol=1e-14)):
            raise InversionError(f"no Q with G'(Q)^2 = {c_j} on the admissible branch")
        return q

    def value(self, c_j):
        q = self.q_of(c_j)
        g, g1, _ = self.spec.family(q)
        return g - q * g1

    def __call__(self, c_j):
        """``(f(C_J), f'(C_J))``."""
        q = self.q_of(c_j)
        g, g1, g2 = self.spec.family(q)
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = np.where(q > 0, -q / (2.0 * g1), -0.5 / g2)
        return g - q * g1, fp

    def second_derivative(self, c_j):
        q = self.q_of(c_j)
        _, g1, g2 = self.spec.family(q)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -(g1 - q * g2) / (4.0 * g1**3 * g2)

    def f(self, c_j):
        """f evaluated on floats, arrays or a jet."""
        if not isinstance(c_j, jet.Jet):
            return self(c_j)[0]
        cv = c_j.val
        f0, f1 = self(cv)
        return jet.lift(c_j, float(f0), float(f1), float(self.second_derivative(cv)))

    def fprime(self, c_j):
        """f' evaluated on floats, arrays or a jet (no second-order part)."""
        if not isinstance(c_j, jet.Jet):
            return self(c_j)[1]
        cv = c_j.val
        _, f1 = self(cv)
        return jet.lift(c_j, float(f1), float(self.second_derivative(cv)), np.nan)


def derive_f(spec: RotatorSpec, q_range=None, n_nodes=None) -> MassSpinRelation:
    """Mass as a function of spin, ``C_M = f(C_J)``, for a phenomenological family."""
    return MassSpinRelation(spec, q_range, n_nodes)
