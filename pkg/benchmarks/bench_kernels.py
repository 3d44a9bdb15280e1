"""Compiled vs pure-Python kernel timings.

Runs the same ensembles on both backends, checks the results agree, and
prints trajectory-steps per second::

    python3 benchmarks/bench_kernels.py --n-traj 20000 --steps 400
"""

import argparse
import time

import numpy as np

from gaugep import backend
from gaugep.ensemble import init_coherent, init_gaussian, to_number_representation
from gaugep.gauges import apply_drift_gauge, circular_gauge, laser_number_gauge
from gaugep.integrator import StepConfig, run_ensemble
from gaugep.models import absorber_model, laser_number_model


def cases(n):
    return {
        "absorber positive-P": (apply_drift_gauge(absorber_model(gamma=0.1)),
                                init_coherent(0.7, n, 1), 0.005),
        "absorber circular": (apply_drift_gauge(absorber_model(epsilon=0.05), circular_gauge()),
                              init_coherent(0.7, n, 2), 0.005),
        "laser_number gauge": (apply_drift_gauge(laser_number_model(G=1.0, Q=0.25),
                                                 laser_number_gauge(4.0)),
                               to_number_representation(init_gaussian(0.1, n, 3)), 0.005),
    }


def timed(name, sys, ens, cfg, repeat):
    prev = backend.use(name)
    try:
        best, out = float("inf"), None
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = run_ensemble(ens, sys, cfg)
            best = min(best, time.perf_counter() - t0)
    finally:
        backend.use(prev)
    return best, out


def bench_normals(n, steps):
    idx = np.arange(n, dtype=np.uint64)
    res = {}
    for name in ("compiled", "python"):
        prev = backend.use(name)
        try:
            t0 = time.perf_counter()
            for k in range(steps):
                backend.normals(7, idx, k, 2)
            res[name] = time.perf_counter() - t0
        finally:
            backend.use(prev)
    return res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-traj", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not backend.COMPILED_AVAILABLE:
        raise SystemExit("compiled kernels are not built; run `python3 setup.py build_ext --inplace`")

    work = args.n_traj * args.steps
    print(f"{'case':24s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s} "
          f"{'Msteps/s (c)':>13s} {'max |diff|':>11s} {'n > 1e-9':>9s}")
    for label, (sys, ens, dt) in cases(args.n_traj).items():
        cfg = StepConfig(dt, dt * args.steps, record_stride=args.steps)
        tc, rc = timed("compiled", sys, ens, cfg, args.repeat)
        tp, rp = timed("python", sys, ens, cfg, args.repeat)
        d = np.max(np.abs(rc.x[-1] - rp.x[-1]), axis=-1)
        # ungauged trajectories near escape amplify last-ulp differences
        diff, n_off = float(np.nanmax(d)), int(np.sum(~(d <= 1e-9)))
        print(f"{label:24s} {tc:11.3f} {tp:10.3f} {tp / tc:8.1f} {work / tc / 1e6:13.2f} "
              f"{diff:11.2e} {n_off:9d}")
    nr = bench_normals(args.n_traj, min(args.steps, 100))
    print(f"{'normals only':24s} {nr['compiled']:11.3f} {nr['python']:10.3f} "
          f"{nr['python'] / nr['compiled']:8.1f}")


if __name__ == "__main__":
    main()
