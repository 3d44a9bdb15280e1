"""Exact reference dynamics in a truncated number-state basis.

The absorber master equation (native time ``t``)

    d rho/dt = [eps a^dag - eps* a, rho] + gamma/2 (2 a rho a^dag - n rho - rho n)
               + 1/2 (2 a^2 rho a^dag^2 - K rho - rho K),     K = a^dag^2 a^2

is integrated either with classical RK4 (automatically sub-stepped below the
stability limit of the largest decay rate) or, when ``eps == 0``, exactly:
without driving each diagonal band ``rho[m, m+k]`` evolves on its own under
an upper-triangular generator, which is exponentiated once per record
interval.  The Kerr oscillator is diagonal in this basis and evolves by
phases alone.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ConfigurationError, TruncationError
from .estimator import MomentSeries
from .models import AbsorberParams, KerrParams

TAIL_TOL = 1e-10
TRACE_TOL = 1e-6
RK4_STABILITY = 2.5


@dataclass(frozen=True)
class FockDensityMatrix:
    rho: np.ndarray
    time: float = 0.0
    renormalization: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ConfigurationError("rho must be square")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @property
    def dim(self):
        return self.rho.shape[0]

    def trace(self):
        return complex(np.trace(self.rho))

    def hermiticity_error(self):
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def tail(self):
        return float(self.rho[-1, -1].real)

    def populations(self):
        return self.rho.diagonal().real.copy()

    def parity_populations(self):
        p = self.populations()
        return p[0::2].sum(), p[1::2].sum()

    def min_eigenvalue(self):
        h = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def moment(self, n, m):
        """``Tr(a^dag^n a^m rho)``."""
        return _moment(self.rho, n, m)

    def photon_number(self):
        return self.moment(1, 1).real


def _falling(dim, k):
    """sqrt(j (j-1) ... (j-k+1)) for j = 0..dim-1."""
    j = np.arange(dim, dtype=float)
    return np.exp(0.5 * (gammaln(j + 1) - gammaln(np.maximum(j - k + 1, 1)))) * (j >= k)


def _moment(rho, n, m):
    # <j| a^dag^n a^m |i> = sqrt(i!/(i-m)!) sqrt(j!/(j-n)!) delta(i-m, j-n)
    d = rho.shape[0]
    s = 0.0j
    for i in range(m, d):
        j = i - m + n
        if j >= d:
            break
        ci = math.exp(0.5 * (math.lgamma(i + 1) - math.lgamma(i - m + 1)))
        cj = math.exp(0.5 * (math.lgamma(j + 1) - math.lgamma(j - n + 1)))
        s += ci * cj * rho[i, j]
    return s


def coherent_rho(alpha0, dim, tail_tol=TAIL_TOL):
    """Truncated, renormalized ``|alpha0><alpha0|``.

    Raises :class:`TruncationError` when the Poisson weight beyond ``dim``
    exceeds ``tail_tol``; the discarded weight is kept in ``renormalization``.
    """
    alpha0 = complex(alpha0)
    mu = abs(alpha0) ** 2
    tail = float(poisson.sf(dim - 1, mu)) if mu > 0 else 0.0
    if tail > tail_tol:
        raise TruncationError(
            f"coherent state |{alpha0}> loses {tail:.2e} beyond dim={dim}; increase dim")
    k = np.arange(dim)
    if mu == 0:
        c = (k == 0).astype(complex)
    else:
        logmag = -0.5 * mu + k * math.log(abs(alpha0)) - 0.5 * gammaln(k + 1)
        c = np.exp(logmag) * np.exp(1j * k * np.angle(alpha0))
    c = c / np.linalg.norm(c)
    return FockDensityMatrix(np.outer(c, c.conj()), 0.0, tail)


def fock_rho(k, dim):
    if not 0 <= k < dim:
        raise ConfigurationError(f"|{k}> outside dim={dim}")
    r = np.zeros((dim, dim), complex)
    r[k, k] = 1.0
    return FockDensityMatrix(r)


def thermal_free_diagonal(populations):
    """Diagonal density matrix with the given populations."""
    p = np.asarray(populations, float)
    return FockDensityMatrix(np.diag(p / p.sum()).astype(complex))


def absorber_steady_coherent(alpha0):
    """Long-time ``<n>`` of the pure two-boson absorber from a coherent state."""
    return -0.5 * math.expm1(-2.0 * abs(complex(alpha0)) ** 2)


def absorber_steady_parity(rho0):
    """Long-time ``<n>`` for any initial state: the total odd-number population."""
    p = rho0.populations() if isinstance(rho0, FockDensityMatrix) else np.asarray(rho0).real
    return float(np.sum(p[1::2]))


@dataclass(frozen=True)
class FockSeries:
    times: np.ndarray
    states: tuple
    label: str = ""
    figure_scale: float = 1.0

    def moment(self, n, m):
        v = np.array([s.moment(n, m) for s in self.states])
        if n == m:
            v = v.real.astype(complex)
        return MomentSeries.exact(self.times, v, self.label or f"a+^{n} a^{m}",
                                  self.figure_scale)

    def photon_number(self):
        return self.moment(1, 1)

    @property
    def final(self):
        return self.states[-1]


def _record_grid(t_end, record_interval):
    if record_interval is None or record_interval <= 0:
        raise ConfigurationError("record_interval must be > 0")
    n = t_end / record_interval
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ConfigurationError("t_end must be a multiple of record_interval")
    return np.arange(int(round(n)) + 1) * record_interval


class _AbsorberGenerator:
    """Right-hand side of the absorber master equation by array slicing, O(dim^2)."""

    def __init__(self, dim, gamma, eps):
        j = np.arange(dim, dtype=float)
        self.s1 = np.sqrt(j[1:])                     # <j-1|a|j>
        self.s2 = np.sqrt(j[1:-1] * j[2:]) if dim > 2 else np.zeros(0)   # <j-2|a^2|j>
        self.loss = 0.5 * gamma * j + 0.5 * j * (j - 1)
        self.gamma = gamma
        self.eps = complex(eps)
        self.rate_max = float(2 * self.loss.max() + 4 * abs(self.eps) * math.sqrt(dim))

    def __call__(self, r):
        out = -(self.loss[:, None] + self.loss[None, :]) * r
        if self.gamma:
            out[:-1, :-1] += self.gamma * np.outer(self.s1, self.s1) * r[1:, 1:]
        if r.shape[0] > 2:
            out[:-2, :-2] += np.outer(self.s2, self.s2) * r[2:, 2:]
        if self.eps:
            e, ec = self.eps, self.eps.conjugate()
            # [eps a^dag - eps* a, rho]
            out[1:, :] += e * self.s1[:, None] * r[:-1, :]       # a^dag rho
            out[:, :-1] -= e * r[:, 1:] * self.s1[None, :]       # rho a^dag
            out[:-1, :] -= ec * self.s1[:, None] * r[1:, :]      # a rho
            out[:, 1:] += ec * r[:, :-1] * self.s1[None, :]      # rho a
        return out


def _band_generators(dim, gamma):
    """Per-band triangular generators for ``eps == 0``: band k holds rho[m, m+k]."""
    gens = []
    for k in range(dim):
        L = dim - k
        m = np.arange(L, dtype=float)
        diag = -(0.5 * gamma * (2 * m + k) + 0.5 * (m * (m - 1) + (m + k) * (m + k - 1)))
        G = np.diag(diag)
        if L > 1:
            G[np.arange(L - 1), np.arange(1, L)] = gamma * np.sqrt((m[:-1] + 1) * (m[:-1] + k + 1))
        if L > 2:
            mm = m[:-2]
            G[np.arange(L - 2), np.arange(2, L)] = np.sqrt(
                (mm + 1) * (mm + 2) * (mm + k + 1) * (mm + k + 2))
        gens.append(G)
    return gens


def _check(state, trace0, tail_tol):
    drift = abs(state.trace() - trace0)
    if drift > TRACE_TOL:
        raise TruncationError(f"trace drift {drift:.2e} at t={state.time:.6g}")
    if state.tail() > tail_tol:
        raise TruncationError(
            f"tail occupancy {state.tail():.2e} exceeds {tail_tol:g} at t={state.time:.6g}")


def evolve_absorber(rho0, p=None, t_end=1.0, dt=1e-3, record_interval=None, method="auto",
                    tail_tol=TAIL_TOL, **kw):
    """Evolve ``rho0`` under the absorber master equation up to ``t_end``.

    Parameters
    ----------
    rho0 : FockDensityMatrix
    p : AbsorberParams
        Keyword arguments ``gamma``/``epsilon`` are accepted instead.
    dt : float
        Largest RK4 step; smaller steps are taken automatically when the
        truncated generator is stiffer than ``dt`` allows.
    record_interval : float, optional
        Spacing of returned states (default ``dt``).
    method : {"auto", "rk4", "exact"}
        ``"exact"`` needs ``epsilon == 0``; ``"auto"`` uses it when possible.

    Returns
    -------
    FockSeries
    """
    p = p or AbsorberParams(**kw)
    eps = complex(p.epsilon)
    if method == "auto":
        method = "exact" if eps == 0 else "rk4"
    if method not in ("rk4", "exact"):
        raise ConfigurationError(f"unknown method {method!r}")
    if method == "exact" and eps != 0:
        raise ConfigurationError("exact band evolution requires epsilon == 0")
    if not dt > 0:
        raise ConfigurationError("dt must be > 0")
    record_interval = record_interval or dt
    times = _record_grid(t_end, record_interval)
    dim = rho0.dim
    r = np.array(rho0.rho)
    trace0 = rho0.trace()
    _check(rho0, trace0, tail_tol)
    states = [FockDensityMatrix(r, float(rho0.time))]
    if method == "exact":
        props = [expm(G * record_interval) for G in _band_generators(dim, p.gamma)]
        idx = [np.arange(dim - k) for k in range(dim)]
        for t in times[1:]:
            new = np.zeros_like(r)
            for k, E in enumerate(props):
                i = idx[k]
                new[i, i + k] = E @ r[i, i + k]
                if k:
                    new[i + k, i] = new[i, i + k].conj()
            r = new
            st = FockDensityMatrix(r, float(rho0.time + t))
            _check(st, trace0, tail_tol)
            states.append(st)
    else:
        f = _AbsorberGenerator(dim, p.gamma, eps)
        h_max = min(dt, RK4_STABILITY / f.rate_max) if f.rate_max > 0 else dt
        sub = max(1, math.ceil(record_interval / h_max - 1e-9))
        h = record_interval / sub
        for t in times[1:]:
            for _ in range(sub):
                k1 = f(r)
                k2 = f(r + 0.5 * h * k1)
                k3 = f(r + 0.5 * h * k2)
                k4 = f(r + h * k3)
                r = r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            r = 0.5 * (r + r.conj().T)
            st = FockDensityMatrix(r, float(rho0.time + t))
            _check(st, trace0, tail_tol)
            states.append(st)
    return FockSeries(rho0.time + times, tuple(states), "fock absorber", 2.0)


def kerr_energies(dim, p):
    n = np.arange(dim, dtype=float)
    return p.omega0 * n + 0.5 * p.kappa * n * (n - 1)


def evolve_kerr(rho0, p=None, t_end=1.0, dt=1e-3, record_interval=None, **kw):
    """Unitary Kerr evolution; the Hamiltonian is diagonal so phases are exact."""
    p = p or KerrParams(**kw)
    record_interval = record_interval or dt
    times = _record_grid(t_end, record_interval)
    E = kerr_energies(rho0.dim, p)
    dE = E[:, None] - E[None, :]
    states = tuple(FockDensityMatrix(rho0.rho * np.exp(-1j * dE * t), float(rho0.time + t))
                   for t in times)
    return FockSeries(rho0.time + times, states, "fock kerr", 1.0)


def kerr_coherent_amplitude(alpha0, t, p=None, **kw):
    """Closed-form ``<a>(t)`` for a coherent start under the Kerr Hamiltonian."""
    p = p or KerrParams(**kw)
    t = np.asarray(t, float)
    a0 = complex(alpha0)
    return a0 * np.exp(-1j * p.omega0 * t) * np.exp(abs(a0) ** 2 * np.expm1(-1j * p.kappa * t))
