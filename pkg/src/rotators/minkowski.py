"""Four-vector algebra with signature (+, -, -, -).

Vectors are numpy arrays whose last axis has length 4 and holds contravariant
components ``(t, x, y, z)``; the metric is applied only inside :func:`dot`.
Leading axes broadcast, and object arrays of :class:`rotators.jet.Jet` work
unchanged.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateError

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def four(t, x, y, z):
    return np.array([t, x, y, z], dtype=float)


def dot(a, b):
    """Minkowski product ``a.t*b.t - a.x*b.x - a.y*b.y - a.z*b.z``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def lower(a):
    """Covariant components of ``a``."""
    a = np.asarray(a)
    out = a.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def project_orthogonal(y, p):
    """``y - (yp/pp) p``, the part of ``y`` orthogonal to ``p``."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    pp = dot(p, p)
    if np.any(pp == 0.0):
        raise DegenerateError("cannot project orthogonally to a null vector (pp = 0)")
    return y - (dot(y, p) / pp)[..., None] * p


def gram(*vectors):
    """Matrix of Minkowski products of the given vectors."""
    n = len(vectors)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = dot(vectors[i], vectors[j])
    return g


def curvature_gram(a, b):
    """2x2 Gram determinant ``aa*bb - (ab)**2``."""
    ab = dot(a, b)
    return dot(a, a) * dot(b, b) - ab * ab


def pauli_lubanski_sq(p, k, chi):
    """Square of the Pauli-Lubanski vector, ``-det`` of the (p, chi, k) Gram matrix.

    On the surface kk = 0, k.chi = 0 this reduces to ``(pk)**2 * chi.chi``.
    """
    pp, pc, pk = dot(p, p), dot(p, chi), dot(p, k)
    cc, ck, kk = dot(chi, chi), dot(chi, k), dot(k, k)
    det = (pp * (cc * kk - ck * ck)
           - pc * (pc * kk - ck * pk)
           + pk * (pc * ck - cc * pk))
    return -det


def boost(v, rapidity, axis=1):
    """Pure boost of ``v`` along spatial ``axis`` (1, 2 or 3)."""
    v = np.asarray(v, dtype=float)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    out = v.copy()
    out[..., 0] = ch * v[..., 0] + sh * v[..., axis]
    out[..., axis] = sh * v[..., 0] + ch * v[..., axis]
    return out


def spatial_basis(p):
    """Three vectors orthogonal to timelike ``p`` with ``e_i . e_j = -delta_ij``."""
    p = np.asarray(p, dtype=float)
    basis = []
    for cand in np.eye(4)[1:]:
        v = project_orthogonal(cand, p)
        for e in basis:
            v = v + dot(v, e) * e
        nv = dot(v, v)
        basis.append(v / np.sqrt(-nv))
    return np.array(basis)
