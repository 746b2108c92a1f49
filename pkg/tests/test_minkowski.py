import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rotators.errors import DegenerateError
from rotators.minkowski import (boost, curvature_gram, dot, gram, lower, pauli_lubanski_sq,
                                project_orthogonal, spatial_basis)

finite = st.floats(-10, 10, allow_nan=False)
vec = arrays(float, 4, elements=finite)


def test_dot_examples():
    assert dot([1, 0, 0, 0], [1, 0, 0, 0]) == 1
    assert dot([1, 1, 0, 0], [1, 1, 0, 0]) == 0
    assert dot([1, 0, 0, 0], [1, 1, 0, 0]) == 1
    assert dot([0, 0, 0, 2], [0, 0, 0, 3]) == -6


def test_dot_matches_metric_matrix(rng):
    a, b = rng.normal(size=(2, 4))
    assert np.isclose(dot(a, b), a @ np.diag([1, -1, -1, -1]) @ b, rtol=1e-15)
    assert np.isclose(dot(a, b), lower(a) @ b, rtol=1e-15)


def test_dot_broadcasts(rng):
    a = rng.normal(size=(5, 4))
    b = rng.normal(size=4)
    assert np.allclose(dot(a, b), [dot(r, b) for r in a])


@given(vec, vec, vec, finite, finite)
def test_dot_bilinear_symmetric(a, b, c, al, be):
    lhs = dot(al * a + be * b, c)
    rhs = al * dot(a, c) + be * dot(b, c)
    scale = (abs(al) * np.abs(a).max() + abs(be) * np.abs(b).max() + 1) * (np.abs(c).max() + 1)
    assert abs(lhs - rhs) <= 1e-14 * scale
    assert dot(a, b) == dot(b, a)


def test_project_orthogonal_examples():
    assert np.allclose(project_orthogonal([1, 0, 0, 0], [1, 0, 0, 0]), 0)
    assert np.allclose(project_orthogonal([0, 1, 0, 0], [1, 0, 0, 0]), [0, 1, 0, 0])
    assert np.allclose(project_orthogonal([1, 1, 0, 0], [2, 0, 0, 0]), [0, 1, 0, 0])


def test_project_orthogonal_rejects_null():
    with pytest.raises(DegenerateError):
        project_orthogonal([1, 0, 0, 0], [1, 1, 0, 0])


@settings(max_examples=200)
@given(vec, vec)
def test_projection_is_orthogonal(y, p):
    pp = dot(p, p)
    if abs(pp) < 1e-3 * np.sum(p**2) or np.sum(p**2) < 1e-6:
        return
    yp = project_orthogonal(y, p)
    assert abs(dot(yp, p)) <= 1e-12 * np.linalg.norm(y) * np.linalg.norm(p) * (np.sum(p**2) / abs(pp)) + 1e-300


def test_curvature_gram_examples():
    a = np.array([0.3, 1.2, -0.4, 2.0])
    assert curvature_gram(a, a) == pytest.approx(0, abs=1e-14)
    assert curvature_gram([0, 1, 0, 0], [0, 0, 1, 0]) == 1
    assert curvature_gram([0, 2, 0, 0], [0, 0, 3, 0]) == 36


def test_gram_matrix(rng):
    a, b = rng.normal(size=(2, 4))
    g = gram(a, b)
    assert g[0, 1] == g[1, 0] == dot(a, b)
    assert np.isclose(np.linalg.det(g), curvature_gram(a, b))


def test_pauli_lubanski_examples():
    p, k, chi = np.array([1.0, 0, 0, 0]), np.array([1.0, 1, 0, 0]), np.array([0, 0, 0.5, 0])
    assert pauli_lubanski_sq(p, k, chi) == pytest.approx(-0.25, abs=1e-15)
    assert pauli_lubanski_sq(p, k, np.zeros(4)) == 0
    assert pauli_lubanski_sq(p, np.zeros(4), chi) == 0


def test_pauli_lubanski_is_minus_gram_det(rng):
    p, k, chi = rng.normal(size=(3, 4))
    assert np.isclose(pauli_lubanski_sq(p, k, chi), -np.linalg.det(gram(p, chi, k)), rtol=1e-12)


@settings(max_examples=100)
@given(st.floats(-2, 2), st.floats(0.1, 3), arrays(float, 3, elements=st.floats(-1, 1)),
       st.floats(0, 6.3), st.floats(0.01, 3))
def test_pauli_lubanski_on_surface(rap, e, direction, angle, size):
    n = direction / np.linalg.norm(direction) if np.linalg.norm(direction) > 1e-3 else np.array([1.0, 0, 0])
    k = np.concatenate([[1.0], n])
    # chi orthogonal to n in space: kchi = 0
    ref = np.cross(n, [0.3, 0.7, 0.2])
    ref /= np.linalg.norm(ref)
    other = np.cross(n, ref)
    chi = np.concatenate([[0.0], size * (np.cos(angle) * ref + np.sin(angle) * other)])
    p = boost(np.array([e, 0.2, -0.1, 0.3]), rap)
    k, chi = boost(k, rap, 2), boost(chi, rap, 2)
    assert abs(dot(k, k)) < 1e-12 * np.sum(k**2) and abs(dot(k, chi)) < 1e-9 * np.sum(k**2 + chi**2)
    ww = pauli_lubanski_sq(p, k, chi)
    ref_ww = dot(p, k) ** 2 * dot(chi, chi)
    scale = np.sum(p**2) * np.sum(k**2) * np.sum(chi**2)
    assert abs(ww - ref_ww) <= 1e-10 * scale


def test_boost_preserves_dot(rng):
    a, b = rng.normal(size=(2, 4))
    for axis in (1, 2, 3):
        assert np.isclose(dot(boost(a, 0.7, axis), boost(b, 0.7, axis)), dot(a, b), rtol=1e-12)


def test_spatial_basis(rng):
    p = boost(np.array([2.0, 0, 0, 0]), 0.9, 3)
    e = spatial_basis(p)
    assert np.allclose(gram(*e), -np.eye(3), atol=1e-12)
    assert np.allclose([dot(v, p) for v in e], 0, atol=1e-12)
