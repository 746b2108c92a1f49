import numpy as np
import pytest

from rotators.analysis import spin_triple
from rotators.brackets import eval_constraints, hamiltonian_flow, random_on_surface_state
from rotators.dynamics import (GaugeProfile, build_initial_state, closed_form_fund,
                               closed_form_phenom, eom, eom_fund, eom_phenom,
                               gauge_coefficients_fund, gauge_coefficients_phenom,
                               hamiltonian_cm, hamiltonian_cm_fund, integrate, normal_vector,
                               q_from_frequency, stabilize, total_hamiltonian_fund,
                               total_hamiltonian_phenom)
from rotators.errors import DomainError, IntegrationAbort, SuperluminalGaugeError
from rotators.minkowski import dot
from rotators.model import RotatorSpec


def test_initial_state_examples(fund_plus, quadratic):
    s = build_initial_state(fund_plus)
    assert np.array_equal(s.p, [1, 0, 0, 0]) and np.array_equal(s.k, [1, 1, 0, 0])
    assert np.allclose(s.chi, [0, 0, 0.5, 0], atol=1e-16)
    s = build_initial_state(quadratic, q=0.5)
    assert np.allclose(s.p, [np.sqrt(0.75), 0, 0, 0])
    assert dot(s.chi, s.chi) == pytest.approx(-1 / 3, rel=1e-14)
    assert abs(s.chi[2]) == pytest.approx(np.sqrt(1 / 3))


def test_initial_state_on_surface_and_gauge(any_spec, rng):
    for _ in range(5):
        axis = rng.normal(size=3)
        s = build_initial_state(any_spec, q=0.4, axis=axis, phase=rng.uniform(0, 6))
        assert eval_constraints(any_spec, s).max_abs() < 1e-14
        pp = dot(s.p, s.p)
        assert dot(s.p, s.k) == pytest.approx(np.sqrt(pp), rel=1e-15)
        assert dot(s.p, s.chi) == 0


def test_initial_state_from_frequency(quadratic):
    assert q_from_frequency(quadratic, 0.375) == pytest.approx(0.5, rel=1e-13)
    s = build_initial_state(quadratic, omega=0.375)
    assert np.allclose(s.vector(), build_initial_state(quadratic, q=0.5).vector(), rtol=1e-13)
    with pytest.raises(DomainError):
        build_initial_state(quadratic, omega=0.5)  # max of Q(1 - Q^2) is 0.385


def test_initial_state_errors(quadratic):
    with pytest.raises(DomainError):
        build_initial_state(quadratic)
    with pytest.raises(DomainError):
        build_initial_state(quadratic, q=1.2)


def test_gauge_coefficients_phenom(quadratic):
    s = build_initial_state(quadratic, q=0.5)
    u = gauge_coefficients_phenom(quadratic, s)
    assert u.u2 == 0
    # omega = 2 * 0.75 * 1 * 0.25 / (0.75 + 0.25)
    from rotators.analysis import angular_velocity
    assert angular_velocity(quadratic, (0.75, 1.0)) == pytest.approx(0.375, rel=1e-13)


def test_gauge_coefficients_fund(fund_plus):
    s = build_initial_state(fund_plus)
    u = gauge_coefficients_fund(fund_plus, s, GaugeProfile.constant(1.0), 0.0)
    assert (u.u1, u.u2, u.u3, u.u4) == pytest.approx((-0.25, 0.0, 0.25, 0.5))
    u = gauge_coefficients_fund(fund_plus, s, GaugeProfile.constant(0.0), 0.0)
    assert u.values == (0.0, 0.0, 0.0, 0.0)
    with pytest.raises(SuperluminalGaugeError):
        gauge_coefficients_fund(fund_plus, s, GaugeProfile.constant(2.0), 0.0)


def test_total_hamiltonian_flows_keep_cm_gauge(quadratic, fund_plus, rng):
    """The multipliers keep p.xdot - sqrt(pp), pk - sqrt(pp) and p.chi fixed, even for pchi != 0."""
    for spec in (quadratic, fund_plus):
        s = random_on_surface_state(spec, rng)
        if spec.is_fundamental:
            u = gauge_coefficients_fund(spec, s, GaugeProfile.constant(0.7), 0.0).values
            flow = hamiltonian_flow(lambda z: total_hamiltonian_fund(spec, z, u), s)
        else:
            u = gauge_coefficients_phenom(spec, s).values
            flow = hamiltonian_flow(lambda z: total_hamiltonian_phenom(spec, z, u), s)
        # d/dt (pk) = p.kdot, d/dt (p.chi) = p.chidot (pdot = 0)
        assert abs(dot(s.p, flow.k)) < 1e-12
        assert abs(dot(s.p, flow.chi)) < 1e-12
        assert np.allclose(flow.p, 0, atol=1e-14)


def test_eom_phenom_examples(quadratic):
    s = build_initial_state(quadratic, q=0.5)
    v = eom_phenom(quadratic, s)
    assert np.array_equal(v.p, np.zeros(4))
    n = normal_vector(s)
    assert np.allclose(v.x, s.p / np.sqrt(0.75) + 0.25 * n, atol=1e-10)
    assert dot(v.x, s.p) == pytest.approx(np.sqrt(0.75), rel=1e-14)
    assert dot(n, n) == pytest.approx(-1.0)


def test_eom_fund_examples(fund_plus):
    s = build_initial_state(fund_plus)
    v = eom_fund(fund_plus, s, GaugeProfile.constant(1.0), 0.0)
    assert np.allclose(v.x, [1, 0.5, 0, 0])
    assert dot(v.k, s.k) == pytest.approx(0, abs=1e-15)
    v = eom_fund(fund_plus, s, GaugeProfile.constant(0.0), 0.0)
    assert np.allclose(v.x, s.p) and np.all(v.k == 0) and np.all(v.chi == 0)


def test_cm_hamiltonians_vanish_on_surface(quadratic, cubic, fund_plus, rng):
    for spec in (quadratic, cubic):
        assert hamiltonian_cm(spec, random_on_surface_state(spec, rng)) == pytest.approx(0, abs=1e-13)
    assert hamiltonian_cm_fund(fund_plus, random_on_surface_state(fund_plus, rng), 0.8) == pytest.approx(0, abs=1e-13)


def test_cm_hamiltonians_generate_eom(any_spec, rng):
    prof = GaugeProfile.sinusoid(0.4 * any_spec.sign, 0.2 * any_spec.sign, 1.3)
    for _ in range(5):
        s = random_on_surface_state(any_spec, rng)
        t = rng.uniform(0, 5)
        if any_spec.is_fundamental:
            flow = hamiltonian_flow(lambda z: hamiltonian_cm_fund(any_spec, z, prof(t)), s)
        else:
            flow = hamiltonian_flow(lambda z: hamiltonian_cm(any_spec, z), s)
        ref = eom(any_spec, s, prof, t)
        assert np.allclose(flow.vector(), ref.vector(), atol=1e-10)


def test_eom_batched_matches_single(quadratic, rng):
    states = [random_on_surface_state(quadratic, rng, q=0.4) for _ in range(3)]
    from rotators.brackets import PhaseState
    batch = PhaseState.from_vector(np.stack([s.vector() for s in states]))
    out = eom_phenom(quadratic, batch).vector()
    for i, s in enumerate(states):
        assert np.allclose(out[i], eom_phenom(quadratic, s).vector(), rtol=1e-14)


def test_gauge_profiles():
    p = GaugeProfile.parse("sin:1:0.5:2")
    t = np.linspace(0, 3, 7)
    assert np.allclose(p(t), 1 + 0.5 * np.sin(2 * t))
    assert np.allclose(p.phase(t), t + 0.25 * (1 - np.cos(2 * t)))
    sp = GaugeProfile.parse("spline:0=1,1=1.5,2=0.5,3=1")
    generic = GaugeProfile(sp._func)  # quadrature path
    assert np.allclose(sp.phase(t), generic.phase(t), atol=1e-12)
    assert GaugeProfile.parse("const:0.3").phase(2.0) == pytest.approx(0.6)
    for bad in ("nope:1", "sin:1:2", "const:x"):
        with pytest.raises(DomainError):
            GaugeProfile.parse(bad)


def test_closed_forms_at_zero_and_period(quadratic, fund_plus):
    s = build_initial_state(quadratic, q=0.5)
    assert np.allclose(closed_form_phenom(quadratic, s, 0.0).vector(), s.vector(), atol=1e-15)
    period = 2 * np.pi / 0.375
    back = closed_form_phenom(quadratic, s, period)
    assert np.allclose(back.k, s.k, atol=1e-12) and np.allclose(back.chi, s.chi, atol=1e-12)
    # the orbit of x_perp is a circle of radius 2/3
    ts = np.linspace(0, period, 50)
    xs = closed_form_phenom(quadratic, s, ts).x
    centre = s.x[1:] + np.array([0, -2 / 3, 0]) * np.sign(s.chi[2])
    r = np.linalg.norm(xs[:, 1:] - centre, axis=1)
    assert np.allclose(r, 2 / 3, atol=1e-12)
    s = build_initial_state(fund_plus)
    zero = closed_form_fund(fund_plus, s, GaugeProfile.constant(0.0), ts)
    assert np.allclose(zero.x, s.p[None] * ts[:, None], atol=1e-15)


def test_constant_profile_is_phenomenological_style_circle(fund_plus):
    s = build_initial_state(fund_plus)
    ts = np.linspace(0, 10, 200)
    xs = closed_form_fund(fund_plus, s, GaugeProfile.constant(0.8), ts).x
    r = np.linalg.norm(xs[:, 1:] - np.array([0, -0.5, 0]), axis=1)
    assert np.allclose(r, 0.5, atol=1e-12)


def test_closed_form_requires_cm_gauge(quadratic, rng):
    with pytest.raises(DomainError):
        closed_form_phenom(quadratic, random_on_surface_state(quadratic, rng), 1.0)


@pytest.fixture(scope="module")
def fund_runs():
    spec = RotatorSpec(1.0, 1.0, "fundamental+")
    s0 = build_initial_state(spec)
    prof = GaugeProfile.sinusoid(1.0, 0.5, 1.0)
    return spec, s0, prof, integrate(spec, s0, 10.0, 1e-3, profile=prof)


def test_rk4_sinusoid_matches_closed_form(fund_runs):
    spec, s0, prof, tr = fund_runs
    ref = closed_form_fund(spec, s0, prof, tr.t)
    assert np.abs(tr.z - ref.vector()).max() < 1e-8
    assert np.abs(tr.z[:, 4:8] - s0.p).max() < 1e-12


def test_rk4_order_four(quadratic):
    s0 = build_initial_state(quadratic, q=0.5)
    T = 2 * np.pi / 0.375
    errs = []
    for n in (100, 200):
        tr = integrate(quadratic, s0, T, T / n)
        errs.append(np.abs(tr.z[-1] - closed_form_phenom(quadratic, s0, T).vector()).max())
    assert 12 < errs[0] / errs[1] < 20


def test_spin_triple_conserved(quadratic, rng):
    s0 = build_initial_state(quadratic, q=0.6, axis=(0.3, 1.0, -0.2))
    tr = integrate(quadratic, s0, 20.0, 0.01)
    cov = rng.normal(size=(3, 4))
    trip = spin_triple(tr.states, cov)
    # p, k, chi span a fixed 3-space only up to the rotation; the wedge is conserved
    assert np.ptp(trip) < 1e-9 * max(1.0, np.abs(trip).max())


def test_integration_abort(quadratic):
    s0 = build_initial_state(quadratic, q=0.5)
    with pytest.raises(IntegrationAbort) as exc:
        integrate(quadratic, s0, 20.0, 2.0, abort_threshold=1e-12)
    assert exc.value.step >= 1 and exc.value.residuals is not None


def test_integrate_rejects_bad_input(quadratic, fund_plus, rng):
    s0 = build_initial_state(quadratic, q=0.5)
    with pytest.raises(DomainError):
        integrate(quadratic, s0, 1.0, 0.3)
    with pytest.raises(DomainError):
        integrate(quadratic, s0.replace(k=s0.k * [1, 1.1, 1, 1]), 1.0, 0.1)
    with pytest.raises(DomainError):
        integrate(fund_plus, build_initial_state(fund_plus), 1.0, 0.1)


def test_stabilization_reduces_drift(quadratic):
    s0 = build_initial_state(quadratic, q=0.5)
    a = integrate(quadratic, s0, 40.0, 0.1)
    b = integrate(quadratic, s0, 40.0, 0.1, stabilize_steps=True)
    assert b.drift_summary()["max_constraint_residual"] < 1e-13
    assert b.drift_summary()["casimir_spin_drift"] < 1e-12
    assert a.drift_summary()["casimir_spin_drift"] > 1e-9
    st = stabilize(quadratic, b.states[-1], 1.0)
    assert np.allclose(st.vector(), b.z[-1], atol=1e-14)


def test_record_every(fund_plus):
    tr = integrate(fund_plus, build_initial_state(fund_plus), 1.0, 0.01, profile=GaugeProfile.constant(1.0),
                   record_every=10)
    assert len(tr) == 11 and np.allclose(np.diff(tr.t), 0.1)
