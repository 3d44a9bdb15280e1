import math
import warnings

import numpy as np
import pytest

from gaugep.ensemble import init_coherent
from gaugep.errors import ConfigurationError, UnsupportedInputError
from gaugep.estimator import moment
from gaugep.gauges import (DiffusionGauge, apply_drift_gauge, canonical_factor, circular_gauge,
                           classify_gauge, constant_gauge, diffusion_transform,
                           kerr_noise_family, laser_gauge, laser_gauge_tilde,
                           laser_number_gauge, laser_reduced_theta_correction,
                           laser_safe_lambda, norm_preserving_gauge, zero_gauge)
from gaugep.integrator import StepConfig, run_ensemble
from gaugep.models import absorber_model, kerr_model, laser_model, laser_number_model

INV_SQRT2 = 1 / math.sqrt(2)


def pts(*pairs):
    return np.array(pairs, complex)


def test_zero_gauge_reduces_to_positive_p(rng):
    m = absorber_model(gamma=0.2, epsilon=0.1)
    x = rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2))
    w = np.ones(6, complex)
    bare = apply_drift_gauge(m).coefficients(w, x, 0.0, strat=False)
    zero = apply_drift_gauge(m, zero_gauge(2)).coefficients(w, x, 0.0, strat=False)
    assert np.all(zero[0] == 0) and np.all(zero[2] == 0)
    assert np.array_equal(bare[1], zero[1])


def test_circular_gauge_restoring_drift(rng):
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    x = rng.normal(size=(20, 2)) + 1j * rng.normal(size=(20, 2))
    _, a_x, _, _ = sys.coefficients(np.ones(20, complex), x, 0.0, strat=True)
    n = x[:, 0] * x[:, 1]
    dn_tau = (x[:, 1] * a_x[:, 0] + x[:, 0] * a_x[:, 1]) / 2
    assert np.allclose(dn_tau, -n * (np.abs(n) - 0.5))


def test_laser_gauge_drift_shift(rng):
    Q = 0.25
    m = laser_model(G=1.0, Q=Q)
    gauge = laser_gauge(4.0)
    x = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
    w = np.ones(50, complex)
    a0 = apply_drift_gauge(m).coefficients(w, x, 0.0, strat=False)[1]
    a1 = apply_drift_gauge(m, gauge).coefficients(w, x, 0.0, strat=False)[1]
    g = gauge.g(w, x, 0.0, m.params)
    assert np.allclose(a1[:, 0] - a0[:, 0], -math.sqrt(Q) * (g[:, 0] + 1j * g[:, 1]))
    gt = laser_gauge_tilde(x[:, 0] * x[:, 1], 4.0)
    assert np.allclose(a1[:, 0] - a0[:, 0], -x[:, 0] * gt)


def test_laser_number_gauge_drift_shift(rng):
    m = laser_number_model(G=1.0, Q=0.25)
    n = rng.normal(size=30) + 1j * rng.normal(size=30)
    x = np.stack([n, np.ones(30)], axis=1)
    w = np.ones(30, complex)
    a0 = apply_drift_gauge(m).coefficients(w, x, 0.0, strat=True)[1]
    a1 = apply_drift_gauge(m, laser_number_gauge(4.0)).coefficients(w, x, 0.0, strat=True)[1]
    assert np.allclose(a1[:, 0] - a0[:, 0], -2 * n * laser_gauge_tilde(n, 4.0))


def test_gauge_width_mismatch():
    with pytest.raises(ConfigurationError):
        apply_drift_gauge(absorber_model(), constant_gauge([1, 2, 3]))


def test_gauge_family_mismatch():
    with pytest.raises(ConfigurationError):
        apply_drift_gauge(kerr_model(), circular_gauge())


def test_circular_gauge_values():
    g = circular_gauge()
    x = pts((2.0, 0.5), (1.0, -3.0))
    vals = g(np.ones(2), x)
    assert np.all(vals[0] == 0)
    assert vals[1] == pytest.approx([-6j, -6j])


def test_circular_gauge_polar_law(rng):
    """r drifts as -r(r - 1/2) per tau; the phase carries all the noise."""
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    x = rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2))
    _, a_x, _, B = sys.coefficients(np.ones(10, complex), x, 0.0, strat=True)
    n = x[:, 0] * x[:, 1]
    dlog = (x[:, 1] * a_x[:, 0] + x[:, 0] * a_x[:, 1]) / n / 2
    r = np.abs(n)
    assert np.allclose(dlog.real * r, -r * (r - 0.5))
    bn = (x[:, 1, None] * B[:, 0, :] + x[:, 0, None] * B[:, 1, :]) / n[:, None]
    assert np.allclose(bn, 1j)        # d log n = ... + i(dW1 + dW2): pure phase noise


def test_laser_gauge_tilde_and_correction():
    assert laser_gauge_tilde(0.3 + 1j, 4.0) == 0
    assert laser_reduced_theta_correction(0.3 - 2j, 4.0) == 0
    assert laser_gauge_tilde(-0.1, 4.0) == pytest.approx(0.4)
    n = -0.2 + 0.1j
    assert laser_reduced_theta_correction(n, 4.0) == pytest.approx(
        4.0 * (n.real + n + abs(n)) / 2)


def test_laser_safe_lambda():
    assert laser_safe_lambda(1.0, 0.25) == 3.0
    sys = apply_drift_gauge(laser_number_model(G=1.0, Q=0.25), laser_number_gauge(4.0))
    assert sys.warnings == ()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sys = apply_drift_gauge(laser_number_model(G=1.0, Q=0.25), laser_number_gauge(2.0))
    assert any("stationary" in w for w in sys.warnings)


def test_laser_gauge_lambda_checks():
    with pytest.raises(ConfigurationError):
        laser_gauge(0.0)
    with pytest.warns(UserWarning):
        g = laser_gauge(0.5)
    assert g.warnings


def test_diffusion_transform_identity():
    B = np.diag([1 + 2j, 3j])
    assert np.allclose(diffusion_transform(B, DiffusionGauge(0.0)), B)


def test_diffusion_transform_single_mode_closed_form():
    l1, l2, g = 0.7 + 0.2j, -1.1j, 0.4 - 0.3j
    B = diffusion_transform(np.diag([l1, l2]), DiffusionGauge(g))
    c, s = np.cos(g), np.sin(g)
    assert np.allclose(B, [[l1 * c, l1 * s], [-l2 * s, l2 * c]])


@pytest.mark.parametrize("g", [0.0, 0.5j, 1.0 + 0.3j, -2.0])
def test_kerr_family_preserves_diffusion(g):
    a, b, k = 0.4 + 0.9j, 1.2 - 0.1j, 0.7
    B = kerr_noise_family(a, b, k, g)
    assert np.allclose(B @ B.T, 1j * k * np.diag([-a * a, b * b]))
    canon = kerr_model(kappa=k).noise(pts((a, b)))[0]
    assert np.allclose(diffusion_transform(canon, DiffusionGauge(g)), B)


def test_diffusion_transform_extra_columns(rng):
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    Q = 0.1 * (rng.normal(size=(2, 1)) + 1j * rng.normal(size=(2, 1)))
    out = diffusion_transform(B, DiffusionGauge(0.3, q_extra=Q))
    assert out.shape == (2, 3)
    assert np.allclose(out @ out.T, B @ B.T)


def test_diffusion_transform_dimension_errors():
    with pytest.raises(ConfigurationError):
        diffusion_transform(np.eye(2), DiffusionGauge((0.1, 0.2, 0.3)))
    with pytest.raises(ConfigurationError):
        diffusion_transform(np.ones((2, 3)), DiffusionGauge(0.1))


def test_canonical_factor_kerr():
    a, b, k = 0.6 - 0.2j, 0.3 + 0.8j, 1.5
    D = np.diag([-1j * k * a * a, 1j * k * b * b])
    B = canonical_factor(D)
    target = np.sqrt(1j * k) * np.diag([1j * a, b])
    for j in range(2):
        assert np.allclose(B[:, j], target[:, j]) or np.allclose(B[:, j], -target[:, j])


def test_canonical_factor_zero():
    assert np.all(canonical_factor(np.zeros((2, 2))) == 0)


def test_canonical_factor_random(rng):
    for _ in range(20):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        D = A + A.T
        B = canonical_factor(D)
        assert np.linalg.norm(B @ B.T - D) <= 1e-10 * np.linalg.norm(D)


def test_canonical_factor_defective():
    D = np.array([[1.0, 1j], [1j, -1.0]])     # nilpotent, not diagonalizable
    with pytest.raises(UnsupportedInputError):
        canonical_factor(D)


def test_canonical_factor_rejects_asymmetric():
    with pytest.raises(ConfigurationError):
        canonical_factor(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_classify_circular():
    g = circular_gauge()
    real_axis = (np.ones(3), pts((0.5, -2.0), (1.0, 1.0), (-1.0, 3.0)))
    off_axis = (np.ones(2), pts((0.5 + 0.5j, 1.0), (1.0j, 2.0)))
    c1 = classify_gauge(g, real_axis)
    c2 = classify_gauge(g, off_axis)
    assert c1.complexity == "imaginary"
    assert c2.complexity == "complex"
    assert c1.functional == "space-dependent"


def test_classify_norm_preserving():
    g = norm_preserving_gauge(lambda x: np.stack([x[:, 0].real, x[:, 1].imag], axis=1))
    probe = (np.array([1 + 0.3j, 0.7 - 0.2j]), pts((0.4 + 0.1j, 0.2), (1.0, 0.5j)))
    c = classify_gauge(g, probe)
    assert c.norm_preserving
    assert c.functional == "mixed"


def test_classify_zero():
    c = classify_gauge(zero_gauge(2), (np.ones(2), pts((1, 2), (3, 4))))
    assert c.complexity == "real-and-imaginary"
    assert c.functional == "autonomous"
    assert not classify_gauge(constant_gauge([1.0, 0.0]), (np.ones(1), pts((1, 1)))).norm_preserving


def test_classify_empty_probe():
    with pytest.raises(ConfigurationError):
        classify_gauge(zero_gauge(2), (np.array([]), np.zeros((0, 2))))


def test_gauge_invariance_early_times():
    """Gauged and ungauged absorber runs describe the same physics before tails matter."""
    ens = init_coherent(INV_SQRT2, 20000, seed=31)
    cfg = StepConfig(0.005, 0.5, record_stride=20)
    m = absorber_model()
    a = moment(run_ensemble(ens, apply_drift_gauge(m), cfg), 1, 1)
    b = moment(run_ensemble(ens, apply_drift_gauge(m, circular_gauge()), cfg), 1, 1)
    z = np.abs(a.value - b.value) / np.hypot(a.std_err, b.std_err).clip(1e-300)
    assert np.all(z[1:] <= 3)
