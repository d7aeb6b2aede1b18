"""Smoke tests of the Python bindings."""

import math

import pytest

import torusforge as tf


def fixture(eta=0.1, epsilon=1e-3):
    p = tf.SpinOrbitProblem()
    p.alpha = tf.GOLDEN_MEAN
    p.nu = p.alpha
    p.eta = eta
    p.epsilon = epsilon
    return p


def test_series_round_trip():
    f = tf.FourierSeries.from_modes(1, 8, [([1], 0.5 + 0j)])
    assert f.dim == 1 and f.order == 8
    assert f.evaluate([0.0]) == pytest.approx(1.0)
    assert f.evaluate([math.pi / 2]) == pytest.approx(0.0, abs=1e-15)
    assert f.weighted_norm(0.0) == pytest.approx(1.0)
    g = tf.FourierSeries.from_json(f.to_json())
    assert g.coeff([1]) == f.coeff([1])


def test_diophantine_report():
    assert not tf.check_diophantine([0.5], kmax=10)["ok"]
    assert tf.check_diophantine([tf.GOLDEN_MEAN], gamma=0.1, kmax=100)["ok"]


def test_unperturbed_elimination_is_exact():
    r = tf.eliminate_nu(fixture(epsilon=0.0))
    assert r["nu_star"] == tf.GOLDEN_MEAN
    assert r["evaluations"] == 1


def test_fixture_converges_quadratically():
    r = tf.eliminate_nu(fixture())
    assert abs(r["nu_star"] - tf.GOLDEN_MEAN) < 1e-5
    assert r["newton_iters"] <= 8
    assert r["residuals"][-1] <= 1e-11
    assert r["certificate_exponent"] >= 1.7


def test_translated_torus_at_eps_zero():
    p = fixture(epsilon=0.0)
    p.nu = p.alpha + 1e-3
    assert tf.translated_torus(p)["b"] == pytest.approx(1e-4, abs=1e-13)


def test_sweep_records_failures():
    rows = tf.sweep(fixture(), [1e-3], [0.0, 0.1])
    assert rows[0]["error"] == "StructurallyExcluded"
    assert rows[0]["nu_star"] is None
    assert "error" not in rows[1]


def test_numerical_errors_are_raised():
    with pytest.raises(tf.NumericalError):
        tf._core.eliminate_nu(fixture(eta=0.0))


def test_ode_rotation_number():
    p = fixture(epsilon=0.0)
    traj = tf.integrate_spin_orbit(p, 0.0, 1.0, 2000.0, stride=10)
    rho, _ = tf.rotation_number(traj["t"], traj["theta"])
    assert rho == pytest.approx(tf.GOLDEN_MEAN, abs=1e-10)


def test_newton_on_stored_fields():
    p = fixture(epsilon=0.0)
    u0 = tf.spin_orbit_field(p)
    r = tf.newton_solve("moser", u0, u0)
    assert r["iterations"] == 0
    assert r["conjugacy_residual"] == 0.0
