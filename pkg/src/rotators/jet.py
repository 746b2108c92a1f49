"""Second-order forward-mode differentiation on plain Python scalars.

A :class:`Jet` carries a value, its gradient with respect to ``n`` seeded
variables and (optionally) its Hessian.  Phase-space and Lagrangian code is
written against ordinary arithmetic, so feeding it an object array of jets
instead of floats yields exact first and second derivatives.
"""
from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")
    # make numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, val, grad, hess=None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    def __repr__(self):
        return f"Jet({self.val!r}, grad={self.grad!r})"

    def _lift(self, f0, f1, f2):
        g = f1 * self.grad
        h = None
        if self.hess is not None:
            h = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet(f0, g, h)

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            h = None if self.hess is None else self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, h)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            g = self.val * other.grad + other.val * self.grad
            h = None
            if self.hess is not None:
                cross = np.outer(self.grad, other.grad)
                h = self.val * other.hess + other.val * self.hess + cross + cross.T
            return Jet(self.val * other.val, g, h)
        other = float(other)
        return Jet(self.val * other, self.grad * other,
                   None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        return self._lift(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, n):
        n = float(n)
        v = self.val
        return self._lift(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    def __float__(self):
        return self.val

    # ordering compares values only; used for sign checks in preconditions
    def __lt__(self, other):
        return self.val < float(other)

    def __le__(self, other):
        return self.val <= float(other)

    def __gt__(self, other):
        return self.val > float(other)

    def __ge__(self, other):
        return self.val >= float(other)


def seed(values, hessian=False):
    """Return an object array of independent jets at ``values``."""
    values = np.asarray(values, dtype=float)
    n = values.size
    eye = np.eye(n)
    zero = np.zeros((n, n)) if hessian else None
    out = np.empty(values.shape, dtype=object)
    for i, v in enumerate(values.flat):
        out.flat[i] = Jet(v, eye[i].copy(), None if zero is None else zero.copy())
    return out


def lift(x, f0, f1, f2=0.0):
    """Apply a scalar function given its value and first two derivatives at ``x``."""
    if isinstance(x, Jet):
        return x._lift(f0, f1, f2)
    return f0


def sqrt(x):
    if isinstance(x, Jet):
        r = math.sqrt(x.val)
        return x._lift(r, 0.5 / r, -0.25 / (r * x.val))
    return np.sqrt(x)


def value(x):
    """Strip derivative information (works on scalars and object arrays)."""
    if isinstance(x, Jet):
        return x.val
    if isinstance(x, np.ndarray) and x.dtype == object:
        return np.array([value(e) for e in x.flat]).reshape(x.shape)
    return x


def gradient(x, n):
    if isinstance(x, Jet):
        return x.grad
    return np.zeros(n)


def hessian(x, n):
    if isinstance(x, Jet) and x.hess is not None:
        return x.hess
    return np.zeros((n, n))
