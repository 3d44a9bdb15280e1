"""Kernel backend selection.

The compiled extension (``gaugep._ckernels``) provides the counter-based
Gaussian generator and fused time loops for the absorber and laser systems.
When it cannot be imported, or after ``use("python")``, everything runs on
the numpy engine.  Both backends produce the same noise integers and follow
the same arithmetic; results agree to rounding, and each backend is
bit-reproducible on its own.
"""

import numpy as np

from . import _rng

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

COMPILED_AVAILABLE = _ckernels is not None
_state = {"name": "compiled" if COMPILED_AVAILABLE else "python"}

_ABSORBER_GAUGES = {"none": 0, "circular": 1}


def use(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous choice."""
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not COMPILED_AVAILABLE:
        raise RuntimeError("compiled kernels are not built")
    prev = _state["name"]
    _state["name"] = name
    return prev


def current():
    return _state["name"]


def normals(seed, trajectories, step, width):
    """Standard normals of shape ``(len(trajectories), width)``."""
    idx = np.ascontiguousarray(trajectories, dtype=np.uint64)
    if not 0 <= step < _rng.MAX_STEP:
        raise ValueError(f"step {step} outside [0, 2**47)")
    if _state["name"] == "compiled":
        out = np.empty((idx.shape[0], width))
        _ckernels.fill_normals(int(seed) & 0xFFFFFFFFFFFFFFFF, idx, int(step), out)
        return out
    return _rng.normals(seed, idx, step, width)


def has_kernel(sys):
    return _state["name"] == "compiled" and sys.kernel in (
        ("absorber", "none"), ("absorber", "circular"), ("laser", "none"), ("laser", "laser"),
        ("laser_number", "none"), ("laser_number", "laser"))


def run_block(sys, omega, x, alive, seed, traj0, dt, n_steps, stride, strat, iters, guard,
              t0=0.0):
    """Advance one block of trajectories; see :func:`gaugep._pyengine.run_block`."""
    if not has_kernel(sys):
        from . import _pyengine
        return _pyengine.run_block(sys, omega, x, alive, seed, traj0, dt, n_steps, stride,
                                   strat, iters, guard, t0)
    n = omega.shape[0]
    n_rec = n_steps // stride + 1
    if sys.kernel[0] == "laser_number":
        return _run_number(sys, omega, x, alive, seed, traj0, dt, n_steps, stride, strat, iters,
                           guard)
    w = np.ascontiguousarray(omega, complex).copy()
    a = np.ascontiguousarray(x[:, 0], complex).copy()
    b = np.ascontiguousarray(x[:, 1], complex).copy()
    al = np.ascontiguousarray(alive, np.uint8).copy()
    rec_w = np.empty((n_rec, n), complex)
    rec_a = np.empty((n_rec, n), complex)
    rec_b = np.empty((n_rec, n), complex)
    rec_alive = np.empty((n_rec, n), np.uint8)
    div_step = np.full(n, -1, np.int64)
    div_var = np.zeros(n, np.int32)
    div_mag = np.zeros(n)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    model, gauge = sys.kernel
    mp = sys.model.params
    if model == "absorber":
        eps = complex(mp["epsilon"])
        _ckernels.run_absorber(float(mp["gamma"]), eps.real, eps.imag, _ABSORBER_GAUGES[gauge],
                               int(strat), int(iters), float(dt), int(n_steps), int(stride),
                               seed, int(traj0), float(guard), w, a, b, al, rec_w, rec_a, rec_b,
                               rec_alive, div_step, div_var, div_mag)
    else:
        lam = sys.gauge.params["lambda"] if gauge == "laser" else 0.0
        _ckernels.run_laser(float(mp["G"]), float(mp["Q"]), float(lam), int(strat), int(iters),
                            float(dt), int(n_steps), int(stride), seed, int(traj0), float(guard),
                            w, a, b, al, rec_w, rec_a, rec_b, rec_alive, div_step, div_var,
                            div_mag)
    rec_x = np.stack([rec_a, rec_b], axis=-1)
    return rec_w, rec_x, rec_alive.astype(bool), div_step, div_var, div_mag


def _run_number(sys, omega, x, alive, seed, traj0, dt, n_steps, stride, strat, iters, guard):
    n = omega.shape[0]
    n_rec = n_steps // stride + 1
    w = np.ascontiguousarray(omega, complex).copy()
    v = np.ascontiguousarray(x[:, 0], complex).copy()
    al = np.ascontiguousarray(alive, np.uint8).copy()
    rec_w = np.empty((n_rec, n), complex)
    rec_v = np.empty((n_rec, n), complex)
    rec_alive = np.empty((n_rec, n), np.uint8)
    div_step = np.full(n, -1, np.int64)
    div_var = np.zeros(n, np.int32)
    div_mag = np.zeros(n)
    mp = sys.model.params
    lam = sys.gauge.params["lambda"] if sys.kernel[1] == "laser" else 0.0
    _ckernels.run_laser_number(float(mp["G"]), float(mp["Q"]), float(lam), int(strat), int(iters),
                               float(dt), int(n_steps), int(stride),
                               int(seed) & 0xFFFFFFFFFFFFFFFF, int(traj0), float(guard), w, v, al,
                               rec_w, rec_v, rec_alive, div_step, div_var, div_mag)
    rec_x = np.stack([rec_v, np.broadcast_to(x[:, 1], rec_v.shape)], axis=-1)
    return rec_w, rec_x, rec_alive.astype(bool), div_step, div_var, div_mag
