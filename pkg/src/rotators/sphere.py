"""A particle on the light cone, described projectively.

The configuration ``q`` is a null four-vector defined up to rescaling
``q -> lambda q``; a fixed timelike ``w`` picks the scale through

    L = -1/2 qdot.qdot / (w.q)**2,

so the physical content is the ray of q, a point on a two-sphere.  The
constraint ``qq = 0`` enters with a multiplier Lambda.  Because any
time-dependent rescaling is a symmetry, Lambda is not fixed by the
dynamics; we pick the representative with ``w.qddot = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet
from .analysis import RankReport, projector_along, rank_report
from .errors import DomainError, IntegrationAbort
from .minkowski import dot


@dataclass(frozen=True)
class SphereModelSpec:
    w: np.ndarray
    q0: np.ndarray
    qdot0: np.ndarray

    def __post_init__(self):
        for name in ("w", "q0", "qdot0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not dot(self.w, self.w) > 0:
            raise DomainError("w must be timelike")
        check_on_cone(self.w, self.q0, self.qdot0)
        if not dot(self.qdot0, self.qdot0) < 0:
            raise DomainError("qdot must be spacelike")

    @classmethod
    def default(cls):
        return cls(np.array([1.0, 0, 0, 0]), np.array([1.0, 1, 0, 0]), np.array([0.0, 0, 1, 0]))


def check_on_cone(w, q, qdot=None, tol=1e-10):
    scale = np.sum(np.asarray(q, dtype=float) ** 2)
    if dot(w, q) == 0:
        raise DomainError("w.q vanishes")
    if abs(dot(q, q)) > tol * scale:
        raise DomainError(f"q must be null (qq = {dot(q, q):.3g})")
    if qdot is not None and abs(dot(q, qdot)) > tol * np.sqrt(scale * np.sum(np.asarray(qdot) ** 2)):
        raise DomainError(f"q.qdot must vanish (got {dot(q, qdot):.3g})")


def sphere_lagrangian(w, q, qdot):
    wq = dot(w, q)
    if jet.value(wq) == 0:
        raise DomainError("w.q vanishes")
    return -0.5 * dot(qdot, qdot) / (wq * wq)


def sphere_momentum(w, q, qdot):
    """``p = qdot / (w.q)**2`` (minus-sign convention, indices up)."""
    return np.asarray(qdot) / dot(w, q)[..., None] ** 2


def sphere_multiplier(w, q, qdot, pdot=None):
    """Lambda for the light-cone constraint.

    Without ``pdot`` the gauge ``w.qddot = 0`` gives
    ``[2 (w.qdot)**2 - qdot.qdot ww] / (w.q)**4``.  With ``pdot`` the
    identity ``-Lambda = w.pdot/(q.w) + qdot.qdot ww/(w.q)**4`` is used.
    """
    wq, wqd = dot(w, q), dot(w, qdot)
    ww, qdqd = dot(w, w), dot(qdot, qdot)
    if np.any(wq == 0):
        raise DomainError("w.q vanishes")
    if pdot is not None:
        return -(dot(w, pdot) / wq + qdqd * ww / wq**4)
    return (2.0 * wqd**2 - qdqd * ww) / wq**4


def sphere_acceleration(w, q, qdot, lam=None):
    """``qddot = -(qdot.qdot/w.q) w - Lambda (w.q)**2 q + 2 qdot (w.qdot)/(w.q)``."""
    q, qdot = np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)
    wq, wqd, qdqd = dot(w, q), dot(w, qdot), dot(qdot, qdot)
    if lam is None:
        lam = sphere_multiplier(w, q, qdot)
    col = lambda a: np.asarray(a)[..., None]
    return -col(qdqd / wq) * w - col(lam * wq**2) * q + col(2.0 * wqd / wq) * qdot


def sphere_eom(w, z):
    """Time derivative of ``z = (q, qdot)``."""
    q, qd = z[..., :4], z[..., 4:]
    return np.concatenate([qd, sphere_acceleration(w, q, qd)], axis=-1)


@dataclass
class SphereTrajectory:
    spec: SphereModelSpec
    t: np.ndarray
    z: np.ndarray

    @property
    def q(self):
        return self.z[:, :4]

    @property
    def qdot(self):
        return self.z[:, 4:]

    @property
    def p(self):
        return sphere_momentum(self.spec.w, self.q, self.qdot)

    def ray(self):
        """Scale-free representative ``q / (w.q)``."""
        return self.q / dot(self.spec.w, self.q)[:, None]

    def residuals(self):
        return dict(qq=dot(self.q, self.q), qqdot=dot(self.q, self.qdot), pq=dot(self.p, self.q))

    def drift_summary(self):
        return {k: float(np.max(np.abs(v))) for k, v in self.residuals().items()}


def integrate_sphere(spec: SphereModelSpec, T: float, dt: float, q0=None, qdot0=None,
                     abort_threshold: float = 1e-6) -> SphereTrajectory:
    """Fixed-step RK4 over ``[0, T]``."""
    w = spec.w
    q0 = spec.q0 if q0 is None else np.asarray(q0, dtype=float)
    qdot0 = spec.qdot0 if qdot0 is None else np.asarray(qdot0, dtype=float)
    check_on_cone(w, q0, qdot0)
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise DomainError(f"T = {T} is not a whole number of steps dt = {dt}")
    z = np.concatenate([q0, qdot0])
    out = np.empty((n + 1, 8))
    out[0] = z
    scale = np.sum(q0**2)
    for i in range(n):
        k1 = sphere_eom(w, z)
        k2 = sphere_eom(w, z + 0.5 * dt * k1)
        k3 = sphere_eom(w, z + 0.5 * dt * k2)
        k4 = sphere_eom(w, z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        qq = dot(z[:4], z[:4])
        if not np.isfinite(qq) or abs(qq) > abort_threshold * scale:
            raise IntegrationAbort(f"qq = {qq:.3g} left the cone at t = {(i + 1) * dt:g}",
                                   step=i + 1, time=(i + 1) * dt, residuals=np.array([qq]))
        out[i + 1] = z
    return SphereTrajectory(spec, dt * np.arange(n + 1), out)


@dataclass
class SphereHessian:
    report: RankReport
    residual_q: float
    residual_w: float
    norm: float

    @property
    def rank(self):
        return self.report.rank


def sphere_hessian(w, q, qdot=None) -> SphereHessian:
    """Velocity Hessian restricted to the cone tangent directions.

    The raw Hessian ``-eta/(w.q)**2`` is projected along w onto
    ``{v : q.v = 0}``; the result is ``-1/(w.q)**2`` times
    ``eta - w(x)q/wq - q(x)w/wq + ww q(x)q/(wq)**2`` (indices lowered), whose
    kernel is spanned by q and w.
    """
    w, q = np.asarray(w, dtype=float), np.asarray(q, dtype=float)
    check_on_cone(w, q)
    if qdot is None:
        qdot = np.zeros(4)
    lag = lambda v: sphere_lagrangian(w, q, v)
    raw = np.array(jet.hessian(lag(jet.seed(np.asarray(qdot, dtype=float), hessian=True)), 4))
    P = projector_along(w, q)
    H = P.T @ raw @ P
    rep = rank_report(H)
    norm = np.linalg.norm(H, 2)
    return SphereHessian(rep, float(np.linalg.norm(H @ q)), float(np.linalg.norm(H @ w)), float(norm))


def sphere_operator(w, q):
    """Closed form of the projected Hessian, as a covariant matrix."""
    w, q = np.asarray(w, dtype=float), np.asarray(q, dtype=float)
    eta = np.diag([1.0, -1, -1, -1])
    wl, ql = eta @ w, eta @ q
    wq = dot(w, q)
    op = eta - np.outer(wl, ql) / wq - np.outer(ql, wl) / wq + dot(w, w) * np.outer(ql, ql) / wq**2
    return -op / wq**2
