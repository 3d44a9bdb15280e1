import math
from types import MappingProxyType

import numpy as np
import pytest

from gaugep import _pyengine
from gaugep.ensemble import Ensemble, TrajectoryState, init_coherent
from gaugep.errors import ConfigurationError, DivergenceAbort
from gaugep.estimator import moment
from gaugep.gauges import apply_drift_gauge, circular_gauge, constant_gauge
from gaugep.integrator import (DivergenceReport, StepConfig, ramp_schedule, run_ensemble,
                               run_schedule, step_ito, step_strat)
from gaugep.models import ModelSpec, absorber_model, weight_toy_model

INV_SQRT2 = 1 / math.sqrt(2)


def linear_model(rate=1.0, B=None):
    Bc = np.zeros((2, 2), complex) if B is None else np.asarray(B, complex)

    def drift(x, t=0.0):
        return -rate * x

    def noise(x, t=0.0):
        return np.broadcast_to(Bc, (x.shape[0], 2, 2))

    return ModelSpec("linear", "linear", 1, 2, MappingProxyType({}), drift, noise, drift)


def state(a, b=None, omega=1.0):
    return TrajectoryState(omega, (a,), (a if b is None else b,))


def test_ito_deterministic_euler():
    sys = apply_drift_gauge(linear_model())
    out = step_ito(state(1.0), sys, [0.0, 0.0], 0.01)
    assert out.alpha[0] == pytest.approx(0.99)
    assert out.time == pytest.approx(0.01)


def test_ito_weight_frozen_without_gauge():
    sys = apply_drift_gauge(absorber_model())
    out = step_ito(state(0.5 + 0.1j, 0.3, omega=0.7 - 0.2j), sys, [0.3, -0.2], 0.01)
    assert out.omega == 0.7 - 0.2j


def test_ito_weight_step():
    sys = apply_drift_gauge(weight_toy_model(1), constant_gauge([1j]))
    out = step_ito(state(0.0), sys, [0.1], 0.001)
    assert out.omega == pytest.approx(1 + 0.1j)


def test_ito_noise_width_checked():
    sys = apply_drift_gauge(absorber_model())
    with pytest.raises(ConfigurationError):
        step_ito(state(1.0), sys, [0.1], 0.01)


def test_strat_midpoint_fixed_point():
    sys = apply_drift_gauge(linear_model())
    cfg = StepConfig(0.1, 0.1, midpoint_iters=60)
    out = step_strat(state(1.0), sys, [0.0, 0.0], cfg)
    mid = 1 / 1.05
    assert out.alpha[0] == pytest.approx(1 - 0.1 * mid, abs=1e-12)
    assert out.alpha[0] == pytest.approx(0.904762, abs=1e-6)
    assert abs(out.alpha[0] - math.exp(-0.1)) < 1e-4


def test_strat_default_iterations_close_to_fixed_point():
    sys = apply_drift_gauge(linear_model())
    out = step_strat(state(1.0), sys, [0.0, 0.0], StepConfig(0.1, 0.1))
    assert out.alpha[0] == pytest.approx(1 - 0.1 / 1.05, abs=1e-5)


def test_circular_gauge_noiseless_radius_relaxes():
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    cfg = StepConfig(0.01, 0.01)
    s = state(1.0)
    radii = [1.0]
    for _ in range(400):
        s = step_strat(s, sys, [0.0, 0.0], cfg)
        radii.append(abs(s.alpha[0] * s.beta[0]))
    assert np.all(np.diff(radii) < 0)
    tau = 2 * s.time
    exact = 0.5 / (1 - 0.5 * math.exp(-tau / 2))
    assert radii[-1] == pytest.approx(exact, abs=1e-5)
    assert radii[-1] - 0.5 < 0.02


def test_additive_noise_schemes_coincide():
    B = [[0.3, 0.1j], [0.0, 0.5]]

    def zero(x, t=0.0):
        return np.zeros_like(x)

    def noise(x, t=0.0):
        return np.broadcast_to(np.asarray(B, complex), (x.shape[0], 2, 2))

    m = ModelSpec("additive", "additive", 1, 2, MappingProxyType({}), zero, noise, zero)
    sys = apply_drift_gauge(m)
    a = step_ito(state(0.2 + 0.1j), sys, [0.05, -0.02], 0.01)
    b = step_strat(state(0.2 + 0.1j), sys, [0.05, -0.02], StepConfig(0.01, 0.01))
    assert a.alpha == pytest.approx(b.alpha) and a.beta == pytest.approx(b.beta)


def test_step_reports_divergence():
    sys = apply_drift_gauge(linear_model(rate=-1e12))
    out = step_ito(state(1.0), sys, [0.0, 0.0], 0.1)
    assert isinstance(out, DivergenceReport)
    assert out.variable == "alpha[0]" and out.magnitude > 1e10


def test_zero_steps_returns_initial_ensemble(each_backend):
    ens = init_coherent(0.3 + 0.2j, 40, seed=1)
    rs = run_ensemble(ens, apply_drift_gauge(absorber_model(), circular_gauge()),
                      StepConfig(0.01, 0.0))
    assert rs.times.tolist() == [0.0]
    assert np.array_equal(rs.x[0], ens.x) and np.array_equal(rs.omega[0], ens.omega)


def test_record_grid():
    cfg = StepConfig(0.005, 1.0, record_stride=20)
    assert cfg.n_steps == 200
    assert np.allclose(cfg.record_times, np.arange(11) * 0.1)
    with pytest.raises(ConfigurationError):
        StepConfig(0.005, 1.0, record_stride=3)
    with pytest.raises(ConfigurationError):
        StepConfig(0.3, 1.0)
    with pytest.raises(ConfigurationError):
        StepConfig(2.0, 1.0)
    with pytest.raises(ConfigurationError):
        StepConfig(0.1, 1.0, scheme="rk4")


def escaping_ensemble(n):
    x = np.tile([1.0, -1.0], (n, 1))
    return Ensemble(np.ones(n), x, 7, 2)


def test_divergent_trajectories_are_frozen_and_counted(each_backend):
    ens = escaping_ensemble(10)
    rs = run_ensemble(ens, apply_drift_gauge(absorber_model()),
                      StepConfig(0.01, 2.0, record_stride=50, overflow_guard=50.0,
                                 abort_fraction=1.0))
    assert rs.diverged_count[-1] > 0
    assert len(rs.divergences) == rs.diverged_count[-1]
    rep = rs.divergences[0]
    assert rep.magnitude > 50.0 and rep.step >= 0
    i = rep.trajectory_index
    frozen = rs.x[-1, i]
    assert np.array_equal(rs.x[-2, i], frozen) or not rs.alive[-2, i]
    assert np.all(np.isfinite(rs.x))


def test_divergence_abort():
    ens = init_coherent(1.0, 10, seed=1, batch_count=2)
    with pytest.raises(DivergenceAbort) as info:
        run_ensemble(ens, apply_drift_gauge(linear_model(rate=-10.0)),
                     StepConfig(0.01, 1.0, "ito_euler", overflow_guard=50.0))
    assert len(info.value.reports) == 10
    first = next(k for k in range(1, 100) if 1.1 ** k > 50)    # |alpha| = 1.1^k
    assert info.value.reports[0].step == first


def test_ito_scheme_required_without_closed_correction():
    from gaugep.gauges import norm_preserving_gauge
    g = norm_preserving_gauge(lambda x: np.ones((x.shape[0], 2)))
    sys = apply_drift_gauge(absorber_model(), g)
    with pytest.raises(ConfigurationError):
        run_ensemble(init_coherent(0.5, 20, 1), sys, StepConfig(0.01, 0.1))


def test_schemes_agree_for_circular_gauge():
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    ens = init_coherent(INV_SQRT2, 40000, seed=19)
    out = []
    for scheme in ("ito_euler", "strat_semi_implicit"):
        rs = run_ensemble(ens, sys, StepConfig(0.002, 0.5, scheme, record_stride=250))
        out.append(moment(rs, 1, 1)[-1])
    assert abs(out[0].value - out[1].value) <= 3 * math.hypot(out[0].std_err, out[1].std_err)


def test_step_halving_trend():
    """Errors shrink under step halving when the Brownian paths are matched."""
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    rng = np.random.default_rng(5)
    n, T, fine = 4000, 0.5, 64
    h = T / fine
    dW = rng.normal(scale=math.sqrt(h), size=(fine, n, 2))
    means = []
    for level in (8, 16, 32, 64):
        k = fine // level
        dt = T / level
        w = np.ones(n, complex)
        x = np.full((n, 2), INV_SQRT2, complex)
        for s in range(level):
            inc = dW[s * k:(s + 1) * k].sum(axis=0)
            w, x = _pyengine.ito_step(sys, w, x, s * dt, inc, dt)
        n_est = (x[:, 0] * x[:, 1] * w + np.conj(x[:, 0] * x[:, 1] * w)).sum() / (2 * w.real).sum()
        means.append(n_est.real)
    diffs = np.abs(np.diff(means))
    assert diffs[1] < diffs[0] and diffs[2] < diffs[1]


def test_ramp_schedule_covers_interval():
    sched = ramp_schedule(1e-4, 2.0, 100, 1.0)
    total = sum(dt * k for dt, k in sched)
    assert total == pytest.approx(1.0, rel=1e-12)
    dts = [dt for dt, _ in sched]
    assert dts[1] == pytest.approx(2 * dts[0])
    with pytest.raises(ConfigurationError):
        ramp_schedule(0.1, 0.5, 10, 1.0)


def test_run_schedule_records_stage_ends():
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    ens = init_coherent(INV_SQRT2, 200, seed=4)
    sched = ramp_schedule(0.001, 2.0, 50, 0.5)
    rs = run_schedule(ens, sys, sched)
    assert len(rs.times) == len(sched) + 1
    assert rs.times[-1] == pytest.approx(0.5)
    again = run_schedule(ens, sys, sched)
    assert np.array_equal(rs.x, again.x)


def test_weight_conservation_circular_gauge():
    from gaugep.estimator import weight_mean_series
    sys = apply_drift_gauge(absorber_model(), circular_gauge())
    rs = run_ensemble(init_coherent(1.0, 20000, seed=9), sys, StepConfig(0.005, 2.0, record_stride=40))
    w = weight_mean_series(rs)
    assert np.all(np.abs(w.value - 1) <= 4 * w.std_err + 1e-12)
