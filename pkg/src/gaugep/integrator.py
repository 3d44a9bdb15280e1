"""Time stepping of weighted trajectories.

Two schemes over the extended variables ``(omega, x)``:

``ito_euler``
    Euler-Maruyama on the Ito equations.
``strat_semi_implicit``
    Semi-implicit midpoint for the Stratonovich equations: the midpoint is
    found by ``midpoint_iters`` fixed-point sweeps and the full step uses the
    coefficients there.

Noise for trajectory ``i`` at step ``k`` is drawn from the counter-based
generator keyed by ``(seed, i, k)``, so results do not depend on how
trajectories are split over workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np

from . import backend, _pyengine
from .ensemble import Ensemble, TrajectoryState
from .errors import ConfigurationError, DivergenceAbort

log = logging.getLogger(__name__)

SCHEMES = ("ito_euler", "strat_semi_implicit")
OVERFLOW_GUARD = 1e10
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    scheme: str = "strat_semi_implicit"
    midpoint_iters: int = 3
    record_stride: int = 1
    overflow_guard: float = OVERFLOW_GUARD
    abort_fraction: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be > 0")
        if self.t_end < 0:
            raise ConfigurationError("t_end must be >= 0")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}")
        if self.midpoint_iters < 1:
            raise ConfigurationError("midpoint_iters must be >= 1")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ConfigurationError("dt must not exceed t_end")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigurationError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        if round(steps) % self.record_stride:
            raise ConfigurationError(
                f"{round(steps)} steps is not a multiple of record_stride={self.record_stride}")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def strat(self):
        return self.scheme == "strat_semi_implicit"

    @property
    def record_times(self):
        return np.arange(self.n_steps // self.record_stride + 1) * self.dt * self.record_stride


@dataclass(frozen=True)
class DivergenceReport:
    trajectory_index: int
    step: int
    variable: str
    magnitude: float


def _variable_name(code, modes):
    if code == 0:
        return "omega"
    j = code - 1
    return f"alpha[{j}]" if j < modes else f"beta[{j - modes}]"


def _single(state):
    return (np.array([state.omega], complex), state.vector()[None, :])


def _to_state(omega, x, t, modes):
    return TrajectoryState(omega[0], tuple(x[0, :modes]), tuple(x[0, modes:]), t)


def _checked(w1, x1, state, guard, step=0):
    bad, var, mag = _pyengine.check_divergence(w1, x1, guard)
    if bad[0]:
        return DivergenceReport(-1, step, _variable_name(int(var[0]), state.modes), float(mag[0]))
    return None


def step_ito(state, sys, noise, dt, guard=OVERFLOW_GUARD):
    """One Euler-Maruyama step.  ``noise`` holds the ``W`` increments (variance ``dt``).

    Returns the new :class:`TrajectoryState`, or a :class:`DivergenceReport`
    when the result is non-finite or exceeds ``guard``.
    """
    omega, x = _single(state)
    dW = np.asarray(noise, dtype=float).reshape(1, -1)
    if dW.shape[1] != sys.n_noises:
        raise ConfigurationError(f"expected {sys.n_noises} noise increments")
    with np.errstate(all="ignore"):
        w1, x1 = _pyengine.ito_step(sys, omega, x, state.time, dW, dt)
    return _checked(w1, x1, state, guard) or _to_state(w1, x1, state.time + dt, state.modes)


def step_strat(state, sys, noise, cfg):
    """One semi-implicit Stratonovich midpoint step with ``cfg.midpoint_iters`` sweeps."""
    omega, x = _single(state)
    dW = np.asarray(noise, dtype=float).reshape(1, -1)
    if dW.shape[1] != sys.n_noises:
        raise ConfigurationError(f"expected {sys.n_noises} noise increments")
    with np.errstate(all="ignore"):
        w1, x1 = _pyengine.strat_step(sys, omega, x, state.time, dW, cfg.dt, cfg.midpoint_iters)
    return (_checked(w1, x1, state, cfg.overflow_guard)
            or _to_state(w1, x1, state.time + cfg.dt, state.modes))


@dataclass(frozen=True)
class TrajectoryRecordSet:
    """Recorded ensemble states: ``omega (R, N)``, ``x (R, N, 2M)``, ``alive (R, N)``."""

    times: np.ndarray
    omega: np.ndarray
    x: np.ndarray
    alive: np.ndarray
    batch_count: int
    master_seed: int
    divergences: tuple = ()
    figure_scale: float = 1.0
    system_id: str = ""
    scheme: str = ""
    dt: float = 0.0
    warnings: tuple = field(default=())

    @property
    def n_traj(self):
        return self.omega.shape[1]

    @property
    def modes(self):
        return self.x.shape[2] // 2

    @property
    def figure_times(self):
        return self.times * self.figure_scale

    @property
    def diverged_count(self):
        return (~self.alive).sum(axis=1)

    def ensemble_at(self, r=-1):
        """Ensemble snapshot at record ``r`` (diverged trajectories stay flagged)."""
        return Ensemble(self.omega[r], self.x[r], self.master_seed, self.batch_count,
                        time=float(self.times[r]), model_id=self.system_id,
                        alive=self.alive[r])

    @classmethod
    def from_ensemble(cls, ens, **kw):
        return cls(np.array([ens.time]), ens.omega[None].copy(), ens.x[None].copy(),
                   ens.alive[None].copy(), ens.batch_count, ens.master_seed, **kw)


def run_ensemble(ens, sys, cfg, workers=1):
    """Advance every trajectory of ``ens`` to ``cfg.t_end``.

    Trajectories are processed in fixed blocks of ``BLOCK_SIZE``; ``workers``
    only changes how blocks are scheduled, never the arithmetic.  Diverged
    trajectories are frozen and flagged; if more than ``cfg.abort_fraction``
    of the ensemble diverges, :class:`DivergenceAbort` is raised.
    """
    if ens.x.shape[1] != sys.dim:
        raise ConfigurationError(
            f"ensemble has {ens.x.shape[1]} phase-space components, system needs {sys.dim}")
    if cfg.strat and not sys.supports_strat:
        raise ConfigurationError(f"{sys.id}: Stratonovich form unavailable; use ito_euler")
    for msg in sys.warnings:
        log.warning("%s: %s", sys.id, msg)
    n = ens.n_traj
    n_steps, stride = cfg.n_steps, cfg.record_stride
    n_rec = n_steps // stride + 1
    omega = np.empty((n_rec, n), complex)
    x = np.empty((n_rec, n, sys.dim), complex)
    alive = np.empty((n_rec, n), bool)
    div_step = np.full(n, -1, np.int64)
    div_var = np.zeros(n, np.int32)
    div_mag = np.zeros(n)
    starts = list(range(0, n, BLOCK_SIZE))

    def job(s):
        e = min(s + BLOCK_SIZE, n)
        out = backend.run_block(sys, ens.omega[s:e].copy(), ens.x[s:e].copy(),
                                ens.alive[s:e].copy(), ens.master_seed, s, cfg.dt, n_steps,
                                stride, cfg.strat, cfg.midpoint_iters, cfg.overflow_guard,
                                ens.time)
        omega[:, s:e], x[:, s:e], alive[:, s:e] = out[0], out[1], out[2]
        div_step[s:e], div_var[s:e], div_mag[s:e] = out[3], out[4], out[5]

    if workers <= 1 or len(starts) == 1:
        for s in starts:
            job(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, starts))

    modes = sys.dim // 2
    reports = tuple(
        DivergenceReport(int(i), int(div_step[i]), _variable_name(int(div_var[i]), modes),
                         float(div_mag[i]))
        for i in np.flatnonzero(div_step >= 0))
    times = ens.time + cfg.record_times
    rs = TrajectoryRecordSet(times, omega, x, alive, ens.batch_count, ens.master_seed, reports,
                             sys.model.figure_scale, sys.id, cfg.scheme, cfg.dt, sys.warnings)
    frac = len(reports) / n
    if frac > cfg.abort_fraction:
        raise DivergenceAbort(
            f"{len(reports)} of {n} trajectories diverged (> {cfg.abort_fraction:.0%})", reports)
    return rs


def ramp_schedule(dt0, factor, stage_steps, t_end):
    """Geometric step ramp: ``dt`` grows by ``factor`` every ``stage_steps`` steps.

    Returns ``[(dt, n_steps), ...]`` whose durations add up to ``t_end``; the
    last stage is shortened (its step kept) so the end time is hit exactly.
    """
    if not (dt0 > 0 and factor >= 1 and stage_steps >= 1 and t_end > 0):
        raise ConfigurationError("ramp needs dt0 > 0, factor >= 1, stage_steps >= 1, t_end > 0")
    out, t, dt = [], 0.0, float(dt0)
    while t < t_end * (1 - 1e-12):
        span = dt * stage_steps
        if t + span >= t_end * (1 - 1e-12):
            steps = max(1, int(round((t_end - t) / dt)))
            dt_last = (t_end - t) / steps
            out.append((dt_last, steps))
            break
        out.append((dt, stage_steps))
        t += span
        dt *= factor
    return out


def _stage_seed(seed, stage):
    if stage == 0:
        return seed
    z = (int(seed) + stage * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 27)


def run_schedule(ens, sys, schedule, scheme="strat_semi_implicit", midpoint_iters=3,
                 workers=1, overflow_guard=OVERFLOW_GUARD, abort_fraction=0.5):
    """Run consecutive stages ``[(dt, n_steps), ...]``, recording at stage ends.

    Each stage draws noise from its own derived seed so that step counters
    never repeat across stages.
    """
    times, omegas, xs, alives, reports = [ens.time], [ens.omega.copy()], [ens.x.copy()], \
        [ens.alive.copy()], []
    cur = ens
    for s, (dt, steps) in enumerate(schedule):
        cfg = StepConfig(dt, dt * steps, scheme, midpoint_iters, steps, overflow_guard,
                         abort_fraction)
        staged = Ensemble(cur.omega, cur.x, _stage_seed(ens.master_seed, s), cur.batch_count,
                          cur.time, cur.model_id, cur.gauge_id, cur.alive)
        rs = run_ensemble(staged, sys, cfg, workers)
        reports.extend(rs.divergences)
        times.append(rs.times[-1])
        omegas.append(rs.omega[-1])
        xs.append(rs.x[-1])
        alives.append(rs.alive[-1])
        cur = rs.ensemble_at(-1)
    return TrajectoryRecordSet(np.array(times), np.stack(omegas), np.stack(xs), np.stack(alives),
                               ens.batch_count, ens.master_seed, tuple(reports),
                               sys.model.figure_scale, sys.id, scheme, float(schedule[0][0]),
                               sys.warnings)
