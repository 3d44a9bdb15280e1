"""Built-in master-equation systems in positive-P form.

Each model supplies, vectorized over trajectories (``x`` has shape
``(n, 2M)`` holding ``alpha`` then ``beta``):

* ``ito_drift(x, t)`` and ``strat_drift(x, t)`` -> ``(n, 2M)``
* ``noise(x, t)`` -> ``(n, 2M, W)`` real-noise coefficient matrix ``B``
* ``potential(x, t)`` -> ``(n,)``

The Stratonovich drift is the Ito drift minus ``(1/2)(B_bk d_b) B_ak``; for the
absorber with ``B = diag(i alpha, i beta)`` that is ``+alpha/2``.
"""

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Optional
import warnings

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class AbsorberParams:
    gamma: float = 0.0
    epsilon: complex = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigurationError("gamma must be >= 0")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "epsilon", complex(self.epsilon))


@dataclass(frozen=True)
class LaserParams:
    G: float
    Q: float
    N_scale: Optional[float] = None

    def __post_init__(self):
        if not (self.G > 0 and self.Q > 0):
            raise ConfigurationError("laser G and Q must be > 0")
        if self.N_scale is not None:
            if self.N_scale < 1:
                raise ConfigurationError("N_scale must be >= 1")
            if self.Q < self.G / self.N_scale:
                raise ConfigurationError("laser model requires Q >= G / N_scale")


@dataclass(frozen=True)
class KerrParams:
    omega0: float = 0.0
    kappa: float = 1.0


@dataclass(frozen=True)
class ModelSpec:
    """A positive-P system: drift, noise matrix and potential.

    ``figure_scale`` converts native time to the axis used in plots
    (``tau = 2t`` for the absorber family).
    """

    name: str
    family: str
    mode_count: int
    n_noises: int
    params: MappingProxyType
    ito_drift: Callable
    noise: Callable
    strat_drift: Optional[Callable] = None
    potential: Optional[Callable] = None
    time_convention: str = "t"
    figure_scale: float = 1.0
    kernel: Optional[str] = None
    notes: tuple = field(default=())
    # number-reduced models keep n in the alpha slot and 1 in the beta slot;
    # only diagonal moments a^dag^k a^k are meaningful for them
    number_reduced: bool = False
    # noise columns defined up to sign (square-root branch); the midpoint
    # scheme aligns them with the start of each step
    sign_free_noise: bool = False

    @property
    def dim(self):
        return 2 * self.mode_count

    def V(self, x, t=0.0):
        if self.potential is None:
            return np.zeros(x.shape[0], complex)
        return self.potential(x, t)

    def diffusion(self, x, t=0.0):
        """``D = B B^T`` at each point, shape ``(n, 2M, 2M)``."""
        B = self.noise(x, t)
        return B @ np.swapaxes(B, -1, -2)

    def with_noise(self, noise, name=None, strat_drift="keep"):
        """Copy with a replaced noise matrix (diffusion gauge).

        The compiled kernels assume the canonical noise, so they are dropped.
        """
        sd = self.strat_drift if strat_drift == "keep" else strat_drift
        return replace(self, noise=noise, n_noises=noise(np.zeros((1, self.dim), complex), 0.0).shape[-1],
                       name=name or self.name, strat_drift=sd, kernel=None)


def absorber_model(p=None, **kw):
    """One- and two-boson absorber with coherent driving, native time ``t``.

    Stratonovich: ``d alpha = [eps - alpha(alpha beta + (gamma-1)/2)] dt + i alpha dW1``
    and the conjugate-form equation for ``beta`` with ``conj(eps)`` and ``dW2``.
    """
    p = p if p is not None else AbsorberParams(**kw)
    g, eps = p.gamma, p.epsilon
    epsc = eps.conjugate()

    def strat_drift(x, t=0.0):
        a, b = x[:, 0], x[:, 1]
        k = a * b + (g - 1.0) / 2
        return np.stack([eps - a * k, epsc - b * k], axis=1)

    def ito_drift(x, t=0.0):
        a, b = x[:, 0], x[:, 1]
        k = a * b + g / 2
        return np.stack([eps - a * k, epsc - b * k], axis=1)

    def noise(x, t=0.0):
        B = np.zeros((x.shape[0], 2, 2), complex)
        B[:, 0, 0] = 1j * x[:, 0]
        B[:, 1, 1] = 1j * x[:, 1]
        return B

    params = MappingProxyType({"gamma": g, "epsilon": eps})
    return ModelSpec("absorber", "absorber", 1, 2, params, ito_drift, noise, strat_drift,
                     time_convention="t", figure_scale=2.0, kernel="absorber")


def absorber_n_closed(n, g_tilde=0.0):
    """Stratonovich drift of ``n = alpha beta`` per unit ``tau = 2t`` (gamma = eps = 0)."""
    return -n * (n + 1j * g_tilde - 0.5)


def laser_stationary(G, Q):
    """Deterministic stationary points ``(a, b)`` of the scaled photon number."""
    root = np.sqrt(G * G + 2.0 * Q)
    return (G + root) / 2.0, (G - root) / 2.0


def laser_model(p=None, **kw):
    """Single-mode laser in scaled variables, native time ``tau``.

    Ito: ``d alpha = (G - alpha beta) alpha dtau + sqrt(Q) d eta`` and the same
    for ``beta`` with ``conj(d eta)``, where ``d eta = dW1 + i dW2`` so that
    ``<d eta d eta*> = 2 dtau``.  The noise is additive, so the Stratonovich
    drift equals the Ito drift.
    """
    p = p if p is not None else LaserParams(**kw)
    G, Q = float(p.G), float(p.Q)
    sq = np.sqrt(Q)
    B0 = np.array([[sq, 1j * sq], [sq, -1j * sq]])

    def drift(x, t=0.0):
        a, b = x[:, 0], x[:, 1]
        k = G - a * b
        return np.stack([k * a, k * b], axis=1)

    def noise(x, t=0.0):
        return np.broadcast_to(B0, (x.shape[0], 2, 2))

    params = MappingProxyType({"G": G, "Q": Q, "N_scale": p.N_scale})
    return ModelSpec("laser", "laser", 1, 2, params, drift, noise, drift,
                     time_convention="tau", figure_scale=1.0, kernel="laser")


def laser_number_model(p=None, **kw):
    """Laser reduced to the scaled photon number ``n``, native time ``tau``.

    Stratonovich: ``dn = [2n(G - n) + Q] dtau + 2 sqrt(Q n) o dW`` with one real
    noise (Ito drift carries ``2Q``).  The state is ``x = (n, 1)``.
    """
    p = p if p is not None else LaserParams(**kw)
    G, Q = float(p.G), float(p.Q)
    sq = np.sqrt(Q)

    def _drift(x, extra):
        n = x[:, 0]
        return np.stack([2 * n * (G - n) + extra, np.zeros_like(n)], axis=1)

    def ito_drift(x, t=0.0):
        return _drift(x, 2 * Q)

    def strat_drift(x, t=0.0):
        return _drift(x, Q)

    def noise(x, t=0.0):
        B = np.zeros((x.shape[0], 2, 1), complex)
        B[:, 0, 0] = 2 * sq * np.sqrt(x[:, 0].astype(complex))
        return B

    params = MappingProxyType({"G": G, "Q": Q, "N_scale": p.N_scale})
    return ModelSpec("laser_number", "laser_number", 1, 1, params, ito_drift, noise,
                     strat_drift, time_convention="tau", kernel="laser_number",
                     number_reduced=True, sign_free_noise=True)


def kerr_model(p=None, **kw):
    """Kerr oscillator ``H = omega0 a^dag a + kappa a^dag^2 a^2 / 2``.

    Canonical noise ``B = sqrt(i kappa) diag(i alpha, beta)``, so
    ``B B^T = i kappa diag(-alpha^2, beta^2)``.
    """
    p = p if p is not None else KerrParams(**kw)
    w, k = float(p.omega0), float(p.kappa)
    if k == 0:
        warnings.warn("kappa = 0: the Kerr model reduces to a noiseless rotation", stacklevel=2)
    root = np.sqrt(1j * k)

    def ito_drift(x, t=0.0):
        a, b = x[:, 0], x[:, 1]
        n = a * b
        return np.stack([-1j * (w + k * n) * a, 1j * (w + k * n) * b], axis=1)

    def strat_drift(x, t=0.0):
        a, b = x[:, 0], x[:, 1]
        n = a * b
        return np.stack([-1j * (w + k * n) * a + 0.5j * k * a,
                         1j * (w + k * n) * b - 0.5j * k * b], axis=1)

    def noise(x, t=0.0):
        B = np.zeros((x.shape[0], 2, 2), complex)
        B[:, 0, 0] = root * 1j * x[:, 0]
        B[:, 1, 1] = root * x[:, 1]
        return B

    params = MappingProxyType({"omega0": w, "kappa": k})
    return ModelSpec("kerr", "kerr", 1, 2, params, ito_drift, noise, strat_drift,
                     time_convention="t", figure_scale=1.0)


def weight_toy_model(n_noises=1):
    """Frozen phase space with no potential: only the weight evolves under a gauge."""
    def zero_drift(x, t=0.0):
        return np.zeros_like(x)

    def noise(x, t=0.0):
        return np.zeros((x.shape[0], x.shape[1], n_noises), complex)

    return ModelSpec("weight_toy", "toy", 1, n_noises, MappingProxyType({}), zero_drift, noise,
                     zero_drift, time_convention="t")


MODELS = {
    "absorber": absorber_model,
    "laser": laser_model,
    "laser_number": laser_number_model,
    "kerr": kerr_model,
    "weight_toy": weight_toy_model,
}
