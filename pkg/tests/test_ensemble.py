import math

import numpy as np
import pytest

from gaugep import backend
from gaugep.ensemble import (Ensemble, NoiseStream, TrajectoryState, gaussian_block,
                             init_coherent, init_gaussian, to_number_representation)
from gaugep.errors import ConfigurationError
from gaugep.estimator import moment
from gaugep.integrator import TrajectoryRecordSet

INV_SQRT2 = 1 / math.sqrt(2)


def test_init_coherent_fig1_population():
    ens = init_coherent(INV_SQRT2, 40000, seed=1)
    assert ens.n_traj == 40000
    assert np.all(ens.alpha == INV_SQRT2)
    assert np.all(ens.beta == INV_SQRT2)
    assert np.all(ens.omega == 1)
    assert ens.time == 0


def test_init_coherent_complex_amplitude_conjugates_beta():
    ens = init_coherent(0.3 - 0.4j, 40, seed=1)
    assert np.all(ens.beta == 0.3 + 0.4j)


def test_init_coherent_vacuum():
    ens = init_coherent(0.0, 100, seed=3)
    assert np.all(ens.x == 0) and np.all(ens.omega == 1)


def test_fresh_ensemble_photon_number_is_exact():
    ens = init_coherent(10.0, 1000, seed=3)
    est = moment(TrajectoryRecordSet.from_ensemble(ens), 1, 1)[0]
    assert est.value == 100.0
    assert est.std_err == 0.0


def test_init_coherent_rejects_indivisible_count():
    with pytest.raises(ConfigurationError):
        init_coherent(1.0, 1001, seed=1, batch_count=20)
    with pytest.raises(ConfigurationError):
        init_coherent(1.0, 10, seed=1, batch_count=1)


def test_ensemble_arrays_are_read_only():
    ens = init_coherent(1.0, 20, seed=1)
    with pytest.raises(ValueError):
        ens.x[0, 0] = 2.0


def test_ensemble_rejects_non_finite():
    with pytest.raises(ConfigurationError):
        Ensemble(np.ones(2), np.array([[np.nan, 0], [0, 0]]), 1, 2)


def test_trajectory_state_lengths():
    s = TrajectoryState(1.0, (1.0,), (2.0,))
    assert s.modes == 1 and s.is_finite()
    with pytest.raises(ConfigurationError):
        TrajectoryState(1.0, (1.0, 2.0), (1.0,))
    assert not TrajectoryState(1.0, (np.inf,), (0.0,)).is_finite()


def test_init_gaussian_number_spread():
    ens = init_gaussian(0.1, 100000, seed=11)
    n = ens.alpha[:, 0] * ens.beta[:, 0]
    target = math.sqrt(2) * 0.1
    assert abs(n.real.std() - target) < 0.01 * target * 3
    assert abs(n.imag.std() - target) < 0.01 * target * 3
    assert np.all(ens.omega == 1)


def test_init_gaussian_zero_is_vacuum():
    a = init_gaussian(0.0, 200, seed=5)
    b = init_coherent(0.0, 200, seed=5)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.omega, b.omega)


def test_init_gaussian_second_moment():
    ens = init_gaussian(1.0, 100000, seed=12)
    q = np.abs(ens.alpha[:, 0]) ** 2
    se = q.std(ddof=1) / math.sqrt(q.size)
    assert abs(q.mean() - 2.0) < 3 * se


def test_init_gaussian_rejects_negative():
    with pytest.raises(ConfigurationError):
        init_gaussian(-0.1, 100, seed=1)


def test_gaussian_block_deterministic():
    s = NoiseStream(99, 7, 12)
    assert np.array_equal(gaussian_block(s, 8), gaussian_block(s, 8))
    assert not np.array_equal(gaussian_block(s, 8), gaussian_block(s.advanced(), 8))


def test_gaussian_block_moments():
    xi = backend.normals(2024, np.arange(1000), 0, 1000).ravel()
    assert abs(xi.mean()) < 4 / math.sqrt(xi.size)
    assert abs(xi.var() - 1) < 0.01


def test_streams_uncorrelated_across_trajectories():
    N = 20000
    a = gaussian_block(NoiseStream(5, 0, 3), N)
    b = gaussian_block(NoiseStream(5, 1, 3), N)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(N)


def test_gaussian_block_rejects_empty():
    with pytest.raises(ConfigurationError):
        gaussian_block(NoiseStream(1, 0), 0)


def test_stream_independent_of_block_composition():
    full = backend.normals(77, np.arange(64), 5, 4)
    part = backend.normals(77, np.array([40, 3]), 5, 4)
    assert np.array_equal(full[[40, 3]], part)


def test_step_counter_range_checked():
    with pytest.raises(ValueError):
        backend.normals(1, np.arange(2), -1, 2)
    with pytest.raises(ValueError):
        backend.normals(1, np.arange(2), 1 << 47, 2)


def test_number_representation():
    ens = init_coherent(0.5 + 0.5j, 20, seed=1)
    num = to_number_representation(ens)
    assert np.allclose(num.x[:, 0], 0.5) and np.all(num.x[:, 1] == 1)
