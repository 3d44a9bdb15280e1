import numpy as np
import pytest

from gaugep import _rng, backend
from gaugep.ensemble import init_coherent, init_gaussian, to_number_representation
from gaugep.gauges import apply_drift_gauge, circular_gauge, laser_gauge, laser_number_gauge
from gaugep.integrator import StepConfig, run_ensemble
from gaugep.models import absorber_model, laser_model, laser_number_model

pytestmark = pytest.mark.skipif(not backend.COMPILED_AVAILABLE, reason="compiled kernels not built")


def both(fn):
    out = {}
    for name in ("compiled", "python"):
        prev = backend.use(name)
        try:
            out[name] = fn()
        finally:
            backend.use(prev)
    return out["compiled"], out["python"]


def test_normals_identical():
    idx = np.array([0, 1, 5, 4095, 123456789])
    c, p = both(lambda: backend.normals(0xDEADBEEF, idx, 17, 6))
    assert np.allclose(c, p, rtol=1e-14, atol=1e-15)
    assert np.array_equal(p, _rng.normals(0xDEADBEEF, idx.astype(np.uint64), 17, 6))


CASES = {
    "absorber_none": lambda: (apply_drift_gauge(absorber_model(gamma=0.1, epsilon=0.05)),
                              init_coherent(0.8, 200, 1)),
    "absorber_circular": lambda: (apply_drift_gauge(absorber_model(gamma=0.1, epsilon=0.05),
                                                    circular_gauge()), init_coherent(0.8, 200, 2)),
    "laser_none": lambda: (apply_drift_gauge(laser_model(G=1.0, Q=0.25)),
                           init_gaussian(0.1, 200, 3)),
    "laser_gauge": lambda: (apply_drift_gauge(laser_model(G=1.0, Q=0.25), laser_gauge(4.0)),
                            init_gaussian(0.1, 200, 4)),
    "laser_number_gauge": lambda: (apply_drift_gauge(laser_number_model(G=1.0, Q=0.25),
                                                     laser_number_gauge(4.0)),
                                   to_number_representation(init_gaussian(0.1, 200, 5))),
}


@pytest.mark.parametrize("name", sorted(CASES))
@pytest.mark.parametrize("scheme", ["ito_euler", "strat_semi_implicit"])
def test_kernels_match_numpy_engine(name, scheme):
    sys, ens = CASES[name]()
    cfg = StepConfig(0.005, 0.5, scheme, record_stride=20)
    c, p = both(lambda: run_ensemble(ens, sys, cfg))
    assert np.array_equal(c.alive, p.alive)
    assert np.allclose(c.x, p.x, rtol=1e-10, atol=1e-12)
    assert np.allclose(c.omega, p.omega, rtol=1e-10, atol=1e-12)


def test_backend_switch():
    prev = backend.use("python")
    assert backend.current() == "python"
    backend.use(prev)
    with pytest.raises(ValueError):
        backend.use("gpu")
