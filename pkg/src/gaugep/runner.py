"""Turn a :class:`RunConfig` into simulations, oracle runs and sweeps."""

from dataclasses import dataclass, field
import logging
import math
import time

import numpy as np

from . import backend, __version__
from .config import record_interval, sweep_point
from .ensemble import init_coherent, init_gaussian, to_number_representation
from .errors import ConfigurationError, GaugePError
from .estimator import moment, weight_diagnostics, MomentSeries
from .fock import (coherent_rho, fock_rho, evolve_absorber, evolve_kerr, TAIL_TOL)
from .gauges import (DiffusionGauge, apply_diffusion_gauge, apply_drift_gauge, circular_gauge,
                     constant_gauge, laser_gauge_for)
from .integrator import StepConfig, run_ensemble, run_schedule, ramp_schedule
from .models import AbsorberParams, KerrParams, MODELS
from .output import moment_column, write_series, write_summary

log = logging.getLogger(__name__)


def build_model(cfg):
    model = MODELS[cfg.model](**cfg.params)
    if cfg.diffusion_g:
        model = apply_diffusion_gauge(model, DiffusionGauge(tuple(cfg.diffusion_g)))
    return model


def build_gauge(cfg, model):
    if cfg.gauge == "none":
        return None
    if cfg.gauge == "circular":
        return circular_gauge()
    if cfg.gauge == "laser":
        return laser_gauge_for(model, cfg.gauge_lambda)
    return constant_gauge(cfg.gauge_values)


def build_system(cfg):
    model = build_model(cfg)
    return apply_drift_gauge(model, build_gauge(cfg, model))


def build_ensemble(cfg):
    if cfg.init == "coherent":
        ens = init_coherent(cfg.init_alpha, cfg.n_traj, cfg.seed, cfg.batch_count)
    elif cfg.init == "gaussian":
        ens = init_gaussian(cfg.init_sigma0sq, cfg.n_traj, cfg.seed, cfg.batch_count)
    else:
        raise ConfigurationError("Fock initial states have no positive-P sampler here; "
                                 "use the oracle")
    if cfg.model == "laser_number":
        ens = to_number_representation(ens)
    return ens


@dataclass
class SimResult:
    cfg: object
    records: object
    moments: dict
    weights: object
    wall_time: float
    system_id: str
    warnings: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.records.times


def simulate(cfg, workers=None):
    """Run the configured ensemble and estimate the requested moments."""
    workers = workers or cfg.workers
    sys = build_system(cfg)
    ens = build_ensemble(cfg)
    t0 = time.perf_counter()
    if cfg.ramp_stage_steps:
        sched = ramp_schedule(cfg.dt, cfg.ramp_factor, cfg.ramp_stage_steps, cfg.t_end)
        rs = run_schedule(ens, sys, sched, cfg.scheme, cfg.midpoint_iters, workers,
                          cfg.overflow_guard, cfg.abort_fraction)
    else:
        sc = StepConfig(cfg.dt, cfg.t_end, cfg.scheme, cfg.midpoint_iters, cfg.record_stride,
                        cfg.overflow_guard, cfg.abort_fraction)
        rs = run_ensemble(ens, sys, sc, workers)
    wall = time.perf_counter() - t0
    moms = {moment_column(n, m, cfg.mode): moment(rs, n, m, cfg.mode) for n, m in cfg.moments}
    return SimResult(cfg, rs, moms, weight_diagnostics(rs), wall, sys.id, sys.warnings)


def _masked(series):
    v = np.where(series.valid, series.value, complex(np.nan, np.nan))
    return MomentSeries(series.times, v, series.std_err, series.numerator_mean,
                        series.denominator_mean, series.valid, series.diverged,
                        series.n_batches, series.label, series.figure_scale)


def write_simulation(res, csv_path, summary_path=None):
    cfg, rs = res.cfg, res.records
    meta = {"kind": "simulate", "system": res.system_id, "scheme": cfg.scheme,
            "seed": cfg.seed, "n_traj": cfg.n_traj}
    write_series(csv_path, rs.times, {k: _masked(s) for k, s in res.moments.items()},
                 res.weights, rs.diverged_count, meta, rs.figure_scale)
    if summary_path:
        final = {k: {"value": complex(s.value[-1]), "std_err": float(s.std_err[-1]),
                     "valid": bool(s.valid[-1])} for k, s in res.moments.items()}
        write_summary(summary_path, {
            "kind": "simulate", "version": __version__, "config": cfg.to_dict(),
            "seed": cfg.seed, "system": res.system_id, "backend": backend.current(),
            "wall_time_s": res.wall_time, "final": final,
            "all_valid": all(bool(s.valid.all()) for s in res.moments.values()),
            "diverged": int(rs.diverged_count[-1]),
            "divergences": [d.__dict__ for d in rs.divergences[:100]],
            "warnings": list(res.warnings), "csv": str(csv_path)})


def oracle_dim(cfg):
    """Truncation for the oracle: configured, or the smallest safe size."""
    if cfg.oracle_dim:
        return cfg.oracle_dim
    if cfg.init == "fock":
        base = cfg.init_fock + 1
    else:
        mu = abs(cfg.init_alpha) ** 2
        base = 1
        from scipy.stats import poisson
        while poisson.sf(base - 1, mu) > TAIL_TOL * 1e-3:
            base += 1
    if cfg.model == "absorber":
        eps = abs(complex(cfg.params.get("epsilon", 0)))
        if eps:
            # driving pumps population upward; leave headroom
            base += int(math.ceil(40 * eps)) + 10
    return max(20, base)


@dataclass
class OracleResult:
    cfg: object
    times: np.ndarray
    moments: dict
    figure_scale: float
    dim: int
    wall_time: float
    kind: str


def oracle(cfg, workers=None):
    """Exact reference on the simulation's record grid.

    Absorber and Kerr runs use the truncated number-state solver; the laser
    reference is a positive-P run from the delta-function vacuum.
    """
    t0 = time.perf_counter()
    if cfg.model.startswith("laser"):
        ref_cfg = cfg.replace(gauge="none", init="coherent", init_alpha=0.0, init_sigma0sq=0.0)
        res = simulate(ref_cfg, workers)
        return OracleResult(cfg, res.times, res.moments, res.records.figure_scale, 0,
                            time.perf_counter() - t0, "positive-P delta reference")
    if cfg.init == "gaussian":
        raise ConfigurationError("the oracle needs a coherent or Fock initial state")
    dim = oracle_dim(cfg)
    rho0 = fock_rho(cfg.init_fock, dim) if cfg.init == "fock" else coherent_rho(cfg.init_alpha, dim)
    step = record_interval(cfg)
    if cfg.model == "absorber":
        p = AbsorberParams(**cfg.params)
        series = evolve_absorber(rho0, p, cfg.t_end, cfg.oracle_dt, step, cfg.oracle_method)
    elif cfg.model == "kerr":
        series = evolve_kerr(rho0, KerrParams(**cfg.params), cfg.t_end, cfg.oracle_dt, step)
    else:
        raise ConfigurationError(f"no oracle for model {cfg.model!r}")
    moms = {moment_column(n, m, cfg.mode): series.moment(n, m) for n, m in cfg.moments}
    return OracleResult(cfg, series.times, moms, series.figure_scale, dim,
                        time.perf_counter() - t0, "fock")


def write_oracle(res, csv_path, summary_path=None):
    meta = {"kind": "oracle", "model": res.cfg.model, "method": res.kind.replace(" ", "_"),
            "dim": res.dim}
    write_series(csv_path, res.times, res.moments, None, None, meta, res.figure_scale)
    if summary_path:
        write_summary(summary_path, {
            "kind": "oracle", "version": __version__, "config": res.cfg.to_dict(),
            "method": res.kind, "dim": res.dim, "wall_time_s": res.wall_time,
            "final": {k: complex(s.value[-1]) for k, s in res.moments.items()},
            "csv": str(csv_path)})


def readout_index(times, t):
    i = int(np.argmin(np.abs(np.asarray(times) - t)))
    if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ConfigurationError(f"readout time {t} is not on the record grid")
    return i


def sweep(cfg, workers=None):
    """One row per sweep value: the first requested moment at ``readout_time``.

    A failing point is recorded with its error and the sweep continues.
    """
    if not cfg.sweep_values:
        raise ConfigurationError("empty sweep list")
    t_read = cfg.readout_time if cfg.readout_time >= 0 else cfg.t_end
    name = moment_column(*cfg.moments[0], cfg.mode)
    rows = []
    for v in cfg.sweep_values:
        try:
            pc = sweep_point(cfg, v)
            res = simulate(pc, workers)
            s = res.moments[name]
            i = readout_index(res.times, t_read)
            val = complex(s.value[i])
            rows.append([str(v), float(res.times[i]), val.real, val.imag, float(s.std_err[i]),
                         int(res.records.diverged_count[i]), "ok" if s.valid[i] else "invalid"])
        except GaugePError as e:
            rows.append([str(v), float(t_read), float("nan"), float("nan"), float("nan"), -1,
                         f"error: {e}".replace(",", ";")])
    header = ["value", "time", f"{name}_re", f"{name}_im", f"{name}_err", "diverged_count",
              "status"]
    return header, rows
