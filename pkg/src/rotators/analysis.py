"""Observables along trajectories and Hessian-rank diagnostics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import jet
from .errors import ClassificationError, DegenerateError, DomainError
from .minkowski import dot, lower, project_orthogonal, spatial_basis
from .model import RotatorSpec, casimirs_from_momenta, eval_family, lagrangian

RANK_RTOL = 1e-8
MIN_GAP = 1e2


# -- rapidity and the circle -------------------------------------------------

def rapidity(s, xdot):
    """``tanh psi = (pk p.xdot - pp k.xdot) / (pk p.xdot)``, the CM rotation speed."""
    pp, pk = dot(s.p, s.p), dot(s.p, s.k)
    pxd, kxd = dot(s.p, xdot), dot(s.k, xdot)
    if np.any(pxd == 0) or np.any(pk <= 0):
        raise DegenerateError("rapidity needs p.xdot != 0 and pk > 0")
    th = (pk * pxd - pp * kxd) / (pk * pxd)
    if np.any(np.abs(th) >= 1):
        warnings.warn("superluminal rotation: |tanh psi| >= 1", RuntimeWarning, stacklevel=2)
    return th


def angular_velocity(spec: RotatorSpec, c) -> float:
    """CM angular velocity of a phenomenological rotator with Casimirs ``c``."""
    if spec.is_fundamental:
        raise ClassificationError("the fundamental rotator's frequency is a gauge variable")
    from .dynamics import _phenom_frequency
    return _phenom_frequency(spec, c[0], c[1])[0]


def radius_from_casimirs(spec: RotatorSpec, c):
    """``rho = (l/2) sqrt(C_J) / C_M``."""
    return 0.5 * spec.ell * np.sqrt(c[1]) / c[0]


def rapidity_from_Q(spec: RotatorSpec, q):
    """``Q G' / (2G - Q G')``; its magnitude is the rapidity of the CM rotation."""
    g, g1, _ = eval_family(spec, q)
    return q * g1 / (2.0 * g - q * g1)


def rapidity_from_f(spec: RotatorSpec, c_j):
    """``C_J f' / (C_J f' - f)`` in terms of the mass-spin relation."""
    f, fp = spec.relation(c_j)
    return c_j * fp / (c_j * fp - f)


# -- kinematic estimators ----------------------------------------------------

def _stencils(t, v):
    """First and second time derivatives by 5-point central stencils (NaN at edges)."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(t) < 5:
        raise DomainError("need at least 5 samples")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise DomainError("samples must be uniformly spaced")
    d1 = np.full_like(v, np.nan)
    d2 = np.full_like(v, np.nan)
    a, b, c, d, e = v[:-4], v[1:-3], v[2:-2], v[3:-1], v[4:]
    d1[2:-2] = (a - 8 * b + 8 * d - e) / (12 * h)
    d2[2:-2] = (-a + 16 * b - 30 * c + 16 * d - e) / (12 * h * h)
    return d1, d2


def projected_derivatives(t, xdot, p):
    """``(xdot_perp, xddot_perp, xdddot_perp)`` from sampled four-velocities."""
    acc, jerk = _stencils(t, xdot)
    return tuple(project_orthogonal(v, p) for v in (xdot, acc, jerk))


def torsion_series(t, xdot, p):
    """Normalised 3x3 Gram determinant of the projected derivatives per sample.

    Zero when velocity, acceleration and jerk are coplanar; NaN where the
    stencil does not reach.
    """
    v, a, j = projected_derivatives(t, xdot, p)
    vv, aa, jj = dot(v, v), dot(a, a), dot(j, j)
    va, vj, aj = dot(v, a), dot(v, j), dot(a, j)
    det = (vv * (aa * jj - aj * aj) - va * (va * jj - aj * vj) + vj * (va * aj - aa * vj))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(det) / np.abs(vv * aa * jj)


def torsion_residual(t, xdot, p) -> float:
    """Largest normalised torsion Gram determinant over the samples."""
    return float(np.nanmax(torsion_series(t, xdot, p)))


class CurvatureEstimate(NamedTuple):
    kinematic: float
    casimir: float
    spread: float


def kinematic_radius(t, xdot, p):
    """Curvature radius ``|v.v|^{3/2} / sqrt|Gram(v, a)|`` of the projected path per sample."""
    v, a, _ = projected_derivatives(t, xdot, p)
    vv = dot(v, v)
    g = vv * dot(a, a) - dot(v, a) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(vv) ** 1.5 / np.sqrt(np.abs(g))


def curvature_radius(traj, window: Optional[slice] = None) -> CurvatureEstimate:
    """Kinematic radius (finite differences) next to the Casimir formula."""
    sl = window or slice(None)
    t = traj.t[sl]
    states = traj.states[sl]
    xdot = traj.velocities()[sl]
    p = np.asarray(states.p)[0]
    c = casimirs_from_momenta(traj.spec, states.p[0], states.k[0], states.chi[0])
    if c.c_j <= 0:
        raise DegenerateError("zero spin: the path is straight")
    rho_k = kinematic_radius(t, xdot, p)
    rho_k = rho_k[np.isfinite(rho_k)]
    rho_c = float(radius_from_casimirs(traj.spec, c))
    return CurvatureEstimate(float(np.mean(rho_k)), rho_c, float(np.max(np.abs(rho_k - rho_c))))


def orbit_radius(traj) -> float:
    """Radius of a least-squares circle through the CM-frame positions."""
    states = traj.states
    p = np.asarray(states.p)[0]
    xp = project_orthogonal(np.asarray(states.x), p)
    basis = spatial_basis(p)
    coords = -np.stack([dot(xp, e) for e in basis], axis=-1)
    centred = coords - coords.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    uv = centred @ vt[:2].T
    A = np.column_stack([2 * uv, np.ones(len(uv))])
    b = np.sum(uv**2, axis=1)
    (cx, cy, c0), *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(np.sqrt(c0 + cx * cx + cy * cy))


def spin_triple(s, covectors):
    """Contraction of ``p ^ k ^ chi`` with three fixed covectors (a 3x3 determinant)."""
    cov = np.asarray(covectors, dtype=float)
    vecs = [np.asarray(s.p), np.asarray(s.k), np.asarray(s.chi)]
    m = np.stack([np.stack([np.tensordot(v, c, axes=([-1], [0])) for v in vecs], axis=-1)
                  for c in cov], axis=-2)
    return np.linalg.det(m)


def trajectory_observables(traj) -> dict:
    """Per-sample observables and residuals, as columns keyed by name."""
    spec = traj.spec
    s = traj.states
    xdot = traj.velocities()
    c = casimirs_from_momenta(spec, s.p, s.k, s.chi)
    pp = dot(s.p, s.p)
    out = {"C_M": np.asarray(c.c_m), "C_J": np.asarray(c.c_j),
           "tanh_psi": rapidity(s, xdot), "rho": radius_from_casimirs(spec, c)}
    out["phi1"] = dot(s.k, s.k)
    out["phi2"] = dot(s.chi, s.k)
    if spec.is_fundamental:
        out["phi3"] = c.c_j - 1.0
        out["phi4"] = c.c_m - 1.0
    else:
        out["phi3"] = c.c_m - spec.relation(c.c_j)[0]
    sqrt_pp = np.sqrt(pp)
    out["gauge_pxdot"] = dot(s.p, xdot) - sqrt_pp
    out["gauge_pk"] = dot(s.p, s.k) - sqrt_pp
    out["gauge_pchi"] = dot(s.p, s.chi)
    if len(traj.t) >= 5:
        out["torsion"] = torsion_series(traj.t, xdot, np.asarray(s.p)[0])
    else:
        out["torsion"] = np.full(len(traj.t), np.nan)
    return out


# -- Hessian rank ------------------------------------------------------------

@dataclass
class RankReport:
    rank: int
    singular_values: np.ndarray
    gap: float
    null_vectors: np.ndarray
    matrix: np.ndarray
    raw_rank: Optional[int] = None
    warning: Optional[str] = None

    def as_dict(self):
        return dict(rank=self.rank, raw_rank=self.raw_rank, gap=self.gap,
                    singular_values=self.singular_values.tolist(), warning=self.warning)


def rank_report(H, rtol=RANK_RTOL, min_gap=MIN_GAP) -> RankReport:
    """Numerical rank by SVD with relative threshold and a spectral-gap check."""
    H = 0.5 * (H + H.T)
    u, sv, vt = np.linalg.svd(H)
    rank = int(np.sum(sv > rtol * sv[0]))
    gap = float(sv[rank - 1] / sv[rank]) if rank < len(sv) and sv[rank] > 0 else np.inf
    warn = None
    if gap < min_gap:
        warn = f"indeterminate rank: spectral gap {gap:.3g} < {min_gap:g}"
        warnings.warn(warn, RuntimeWarning, stacklevel=3)
    return RankReport(rank, sv, gap, vt[rank:].copy(), H, warning=warn)


def _second_derivatives(fn, v, method):
    v = np.asarray(v, dtype=float)
    n = v.size
    if method == "jet":
        return np.array(jet.hessian(fn(jet.seed(v, hessian=True)), n))
    if method == "fd":
        def grad(w):
            return np.array(jet.gradient(fn(jet.seed(w)), n))

        def central(h):
            H = np.empty((n, n))
            for i in range(n):
                e = np.zeros(n)
                e[i] = h[i]
                H[:, i] = (grad(v + e) - grad(v - e)) / (2 * h[i])
            return H

        h = 1e-5 * np.maximum(1.0, np.abs(v))
        return (4.0 * central(h / 2) - central(h)) / 3.0
    raise ValueError(f"unknown method {method!r}")


def projector_along(direction, normal):
    """``I - direction (x) normal_lowered / (normal.direction)``.

    Annihilates ``direction`` and maps every vector into ``{v : normal.v = 0}``.
    """
    direction = np.asarray(direction, dtype=float)
    normal = np.asarray(normal, dtype=float)
    return np.eye(4) - np.outer(direction, lower(normal)) / dot(normal, direction)


def velocity_hessian(spec: RotatorSpec, xdot, k, kdot, method="jet"):
    """Raw 8x8 matrix ``d^2 L / d(xdot, kdot)^2`` at fixed k."""
    k = np.asarray(k, dtype=float)
    return _second_derivatives(lambda v: lagrangian(spec, v[:4], k, v[4:]),
                               np.concatenate([xdot, kdot]), method)


def hessian_rank(spec: RotatorSpec, xdot, k, kdot, method="jet", tol=1e-9) -> RankReport:
    """Rank of the velocity Hessian with the null-cone constraint imposed.

    The k-velocity block is projected onto the tangent space ``k.kdot = 0``
    of the cone (along xdot), as done for the light-cone particle, so the
    count ``8 - rank`` matches the number of primary constraints: 3 for
    phenomenological and 4 for fundamental rotators.
    """
    xdot, k, kdot = (np.asarray(v, dtype=float) for v in (xdot, k, kdot))
    if abs(dot(k, k)) > tol * np.sum(k**2):
        raise DomainError("k must be null")
    if abs(dot(k, kdot)) > tol * np.linalg.norm(k) * np.linalg.norm(kdot):
        raise DomainError("kdot must be tangent to the cone (k.kdot = 0)")
    if not dot(kdot, kdot) < 0:
        raise DomainError("kdot must be spacelike")
    H = velocity_hessian(spec, xdot, k, kdot, method)
    P = np.eye(8)
    P[4:, 4:] = projector_along(xdot, k)
    raw_rank = int(np.sum(np.linalg.svd(H, compute_uv=False) > RANK_RTOL * np.abs(H).max()))
    report = rank_report(P.T @ H @ P)
    report.raw_rank = raw_rank
    return report
