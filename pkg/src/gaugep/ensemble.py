"""Weighted trajectory ensembles and their noise streams.

A gauge-P distribution is only ever held as an empirical sample: each
trajectory carries a complex weight ``omega`` and the ket/bra amplitudes
``alpha``/``beta``.  Ensembles store the sample as arrays; the per-trajectory
:class:`TrajectoryState` view is provided for inspection and single-step use.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._rng import INIT_STEP
from .errors import ConfigurationError

DEFAULT_BATCH_COUNT = 20


@dataclass(frozen=True)
class TrajectoryState:
    """One weighted phase-space sample ``(omega, alpha, beta)`` at ``time``."""

    omega: complex
    alpha: tuple
    beta: tuple
    time: float = 0.0

    def __post_init__(self):
        alpha = tuple(complex(a) for a in np.atleast_1d(self.alpha))
        beta = tuple(complex(b) for b in np.atleast_1d(self.beta))
        if len(alpha) != len(beta) or not alpha:
            raise ConfigurationError("alpha and beta must have the same length M >= 1")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "omega", complex(self.omega))

    @property
    def modes(self):
        return len(self.alpha)

    def vector(self):
        """Phase-space vector ``(alpha..., beta...)`` as a complex array."""
        return np.array(self.alpha + self.beta, dtype=complex)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.vector())) and np.isfinite(self.omega))


@dataclass(frozen=True)
class NoiseStream:
    """Gaussian stream of one trajectory; ``counter`` is the step index."""

    seed: int
    trajectory: int
    counter: int = 0

    def advanced(self, steps=1):
        return NoiseStream(self.seed, self.trajectory, self.counter + steps)


def gaussian_block(stream, count):
    """Return ``count`` standard normals for ``stream`` at its current counter.

    The values depend only on ``(seed, trajectory, counter)``; repeated calls
    are bit-identical.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    return backend.normals(stream.seed, np.array([stream.trajectory]), stream.counter, count)[0]


def noise_increments(seed, trajectories, step, width, dt):
    """Wiener increments ``sqrt(dt) * xi`` for a block of trajectories."""
    return np.sqrt(dt) * backend.normals(seed, trajectories, step, width)


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Ensemble:
    """Fixed population of weighted trajectories.

    ``x`` holds the phase-space vectors ``(alpha_1..alpha_M, beta_1..beta_M)``
    row-wise.  Arrays are read-only after construction.
    """

    omega: np.ndarray
    x: np.ndarray
    master_seed: int
    batch_count: int = DEFAULT_BATCH_COUNT
    time: float = 0.0
    model_id: str = ""
    gauge_id: str = ""
    alive: np.ndarray = field(default=None)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=complex).reshape(-1)
        x = np.asarray(self.x, dtype=complex)
        if x.ndim != 2 or x.shape[0] != omega.shape[0] or x.shape[1] % 2 or x.shape[1] == 0:
            raise ConfigurationError("x must have shape (n_traj, 2M) matching omega")
        if self.batch_count < 2:
            raise ConfigurationError("batch_count must be >= 2")
        if omega.shape[0] < self.batch_count:
            raise ConfigurationError("n_traj must be >= batch_count")
        if omega.shape[0] % self.batch_count:
            raise ConfigurationError(
                f"n_traj={omega.shape[0]} is not divisible by batch_count={self.batch_count}")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(x))):
            raise ConfigurationError("non-finite amplitudes in ensemble")
        alive = np.ones(omega.shape[0], bool) if self.alive is None else np.asarray(self.alive, bool)
        object.__setattr__(self, "omega", _readonly(omega))
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "alive", _readonly(alive))
        object.__setattr__(self, "master_seed", int(self.master_seed))

    @property
    def n_traj(self):
        return self.omega.shape[0]

    @property
    def modes(self):
        return self.x.shape[1] // 2

    @property
    def alpha(self):
        return self.x[:, :self.modes]

    @property
    def beta(self):
        return self.x[:, self.modes:]

    @property
    def states(self):
        m = self.modes
        return [TrajectoryState(o, tuple(v[:m]), tuple(v[m:]), self.time)
                for o, v in zip(self.omega, self.x)]

    def state(self, i):
        m = self.modes
        return TrajectoryState(self.omega[i], tuple(self.x[i, :m]), tuple(self.x[i, m:]), self.time)

    def stream(self, i):
        return NoiseStream(self.master_seed, i, 0)


def _check_counts(n_traj, batch_count):
    if batch_count < 2:
        raise ConfigurationError("batch_count must be >= 2")
    if n_traj < batch_count:
        raise ConfigurationError("n_traj must be >= batch_count")
    if n_traj % batch_count:
        raise ConfigurationError(f"n_traj={n_traj} is not divisible by batch_count={batch_count}")


def init_coherent(alpha0, n_traj, seed, batch_count=DEFAULT_BATCH_COUNT):
    """Delta-function positive-P sample of the coherent state ``|alpha0>``.

    Every trajectory starts at ``alpha = alpha0``, ``beta = conj(alpha0)``
    with unit weight.
    """
    _check_counts(n_traj, batch_count)
    a0 = np.atleast_1d(np.asarray(alpha0, dtype=complex))
    row = np.concatenate([a0, a0.conj()])
    x = np.broadcast_to(row, (n_traj, row.size))
    return Ensemble(np.ones(n_traj, complex), x, seed, batch_count)


def init_gaussian(sigma0sq, n_traj, seed, batch_count=DEFAULT_BATCH_COUNT, modes=1):
    """Gaussian positive-P sample of the vacuum with variance ``sigma0sq``.

    Real and imaginary parts of every alpha and beta are independent
    ``N(0, sigma0sq)``, so the density is
    ``exp(-(|alpha|^2 + |beta|^2) / (2 sigma0sq))`` and ``<|alpha|^2> = 2 sigma0sq``.
    """
    if sigma0sq < 0:
        raise ConfigurationError("sigma0sq must be >= 0")
    _check_counts(n_traj, batch_count)
    if sigma0sq == 0:
        return init_coherent(np.zeros(modes), n_traj, seed, batch_count)
    xi = backend.normals(seed, np.arange(n_traj), INIT_STEP, 4 * modes)
    s = np.sqrt(sigma0sq)
    x = s * (xi[:, 0::2] + 1j * xi[:, 1::2])
    return Ensemble(np.ones(n_traj, complex), x, seed, batch_count)


def to_number_representation(ens):
    """Map ``(alpha, beta)`` samples to ``(n, 1)`` with ``n = alpha beta`` per mode."""
    m = ens.modes
    n = ens.x[:, :m] * ens.x[:, m:]
    x = np.concatenate([n, np.ones_like(n)], axis=1)
    return Ensemble(ens.omega.copy(), x, ens.master_seed, ens.batch_count, ens.time,
                    ens.model_id, ens.gauge_id, ens.alive.copy())
