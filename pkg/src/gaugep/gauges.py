"""Drift and diffusion gauges.

A drift gauge ``g_k(omega, x, t)`` shifts the phase-space drift by
``-g_k B_jk`` and feeds the weight as ``d omega = omega (V dt + g_k dW_k)``
(Ito).  The Stratonovich weight drift needs ``S`` in
``d omega = omega [(V + S) dt + g_k o dW_k]`` with
``S = -(1/2) g.g - (1/2) sum_k (B_bk d_b) g_k``; gauges built from non-analytic
functions supply ``S`` in closed form, otherwise only the Ito scheme may be
used with them.

A diffusion gauge replaces ``B`` by ``B U`` with ``U`` complex orthogonal
(``U U^T = 1``), optionally appending extra noise columns ``Q``.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Optional
import warnings

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, UnsupportedInputError
from .models import laser_stationary


@dataclass(frozen=True)
class DriftGauge:
    """Drift gauge: ``g(omega, x, t, params) -> (n, W)`` complex array.

    ``strat_log_drift(omega, x, t, params) -> (n,)`` is the weight's
    Stratonovich drift per unit weight (``S`` above), or ``None`` if unknown.
    ``families`` restricts the models the gauge may be attached to.
    """

    id: str
    g: Callable
    strat_log_drift: Optional[Callable] = None
    families: Optional[tuple] = None
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    warnings: tuple = ()
    kernel: Optional[str] = None

    def __call__(self, omega, x, t=0.0, model_params=None):
        return self.g(omega, x, t, model_params or {})


def zero_gauge(width):
    """Explicit ``g = 0`` of the given noise width (not the same object as no gauge)."""
    def g(omega, x, t, mp):
        return np.zeros((x.shape[0], width), complex)

    def s(omega, x, t, mp):
        return np.zeros(x.shape[0], complex)

    return DriftGauge("zero", g, s, params=MappingProxyType({"width": width}))


def constant_gauge(values, id="constant"):
    """Phase-space independent gauge ``g_k = values[k]``."""
    vals = np.asarray(values, dtype=complex).reshape(-1)
    ss = -0.5 * np.sum(vals * vals)

    def g(omega, x, t, mp):
        return np.broadcast_to(vals, (x.shape[0], vals.size)).copy()

    def s(omega, x, t, mp):
        return np.full(x.shape[0], ss, complex)

    return DriftGauge(id, g, s, params=MappingProxyType({"values": tuple(vals)}))


def circular_gauge():
    """``g1 = g2 = i(n - |n|)`` with ``n = alpha beta``, for the absorber family.

    Turns the repulsive ``-n^2`` drift of ``n`` into the restoring ``-n|n|``.
    Weight drift per unit weight (native time ``t``): ``n + (n - |n|)^2``.
    """
    def g(omega, x, t, mp):
        n = x[:, 0] * x[:, 1]
        gg = 1j * (n - np.abs(n))
        return np.stack([gg, gg], axis=1)

    def s(omega, x, t, mp):
        n = x[:, 0] * x[:, 1]
        d = n - np.abs(n)
        return n + d * d

    return DriftGauge("circular", g, s, families=("absorber",), kernel="circular")


def laser_gauge_tilde(n, lam):
    """Piecewise gauge on the scaled photon number: ``-lam Re n`` where ``Re n < 0``."""
    n = np.asarray(n)
    return np.where(n.real < 0, -lam * n.real, 0.0)


def laser_reduced_theta_correction(n, lam):
    """Weight correction for the one-noise ``(n, log omega)`` reduction.

    ``lam (Re n + n + |n|) / 2`` where ``Re n < 0``.  Valid only when ``n`` is
    driven by the single real noise ``2 sqrt(Q n) dW``; the two-noise
    amplitude equations need :func:`laser_theta_correction` instead.
    """
    n = np.asarray(n, dtype=complex)
    return np.where(n.real < 0, lam * (n.real + n + np.abs(n)) / 2, 0.0)


def laser_theta_correction(x, lam):
    """Weight correction for the laser gauge on ``(alpha, beta)`` with two real noises.

    ``lam [Re n + n/2 + (|alpha|^2 + |beta|^2)/4]`` where ``Re n < 0``; this is
    ``-(1/2) sum_k (B_bk d_b) g_k`` for ``B = sqrt(Q)[[1, i], [1, -i]]``.
    """
    a, b = x[:, 0], x[:, 1]
    n = a * b
    val = lam * (n.real + 0.5 * n + 0.25 * (np.abs(a) ** 2 + np.abs(b) ** 2))
    return np.where(n.real < 0, val, 0.0)


def laser_safe_lambda(G, Q):
    """Smallest ``lam`` (exclusive) removing every gauged-region stationary point."""
    return 1.0 + G * G / (2.0 * Q)


def laser_gauge(lam):
    """Piecewise-linear laser gauge mapped onto the two real noises.

    ``g = (alpha + beta) gt / (2 sqrt Q)``, ``gbar = (alpha - beta) gt / (2i sqrt Q)``
    which shifts ``d alpha`` by ``-alpha gt dtau``.
    """
    if not lam > 0:
        raise ConfigurationError("laser gauge requires lambda > 0")
    flags = ()
    if lam < 1:
        flags = ("lambda < 1: the moving singularity is not removed",)
        warnings.warn(flags[0], stacklevel=2)

    def g(omega, x, t, mp):
        sq = np.sqrt(mp["Q"])
        a, b = x[:, 0], x[:, 1]
        gt = laser_gauge_tilde(a * b, lam)
        return np.stack([(a + b) * gt / (2 * sq), (a - b) * gt / (2j * sq)], axis=1)

    def s(omega, x, t, mp):
        Q = mp["Q"]
        n = x[:, 0] * x[:, 1]
        gt = laser_gauge_tilde(n, lam)
        return -n * gt * gt / (2 * Q) + laser_theta_correction(x, lam)

    return DriftGauge(f"laser(lambda={lam:g})", g, s, families=("laser",),
                      params=MappingProxyType({"lambda": float(lam)}), warnings=flags,
                      kernel="laser")


def laser_number_gauge(lam):
    """The laser gauge on the number-reduced model: ``g = gt sqrt(n / Q)``.

    Shifts ``dn`` by ``-2 n gt dtau``; the weight correction is
    :func:`laser_reduced_theta_correction`.
    """
    if not lam > 0:
        raise ConfigurationError("laser gauge requires lambda > 0")
    flags = ()
    if lam < 1:
        flags = ("lambda < 1: the moving singularity is not removed",)
        warnings.warn(flags[0], stacklevel=2)

    def g(omega, x, t, mp):
        n = x[:, 0]
        gt = laser_gauge_tilde(n, lam)
        return (gt * np.sqrt(n.astype(complex) / mp["Q"]))[:, None]

    def s(omega, x, t, mp):
        n = x[:, 0]
        gt = laser_gauge_tilde(n, lam)
        return -n * gt * gt / (2 * mp["Q"]) + laser_reduced_theta_correction(n, lam)

    return DriftGauge(f"laser(lambda={lam:g})", g, s, families=("laser_number",),
                      params=MappingProxyType({"lambda": float(lam)}), warnings=flags,
                      kernel="laser")


def laser_gauge_for(model, lam):
    """The laser gauge matching ``model``'s representation."""
    return laser_number_gauge(lam) if model.number_reduced else laser_gauge(lam)


def norm_preserving_gauge(f, id="norm_preserving"):
    """``g_k = i conj(omega) f_k(x)`` with real ``f``; keeps ``Re omega`` fixed (Ito)."""
    def g(omega, x, t, mp):
        fk = np.asarray(f(x), dtype=float)
        return 1j * np.conj(omega)[:, None] * fk

    return DriftGauge(id, g, None)


@dataclass(frozen=True)
class GaugedSystem:
    """A model extended by the weight ``omega`` under a drift gauge.

    Drift of ``x``: ``A - B g``; noise of ``omega``: ``omega g``; ``W`` noises.
    """

    model: object
    gauge: Optional[DriftGauge] = None
    warnings: tuple = ()

    @property
    def n_noises(self):
        return self.model.n_noises

    @property
    def dim(self):
        return self.model.dim

    @property
    def kernel(self):
        k = self.model.kernel
        if k is None:
            return None
        if self.gauge is None:
            return (k, "none")
        if self.gauge.kernel is None:
            return None
        return (k, self.gauge.kernel)

    @property
    def supports_strat(self):
        if self.model.strat_drift is None:
            return False
        return self.gauge is None or self.gauge.strat_log_drift is not None

    @property
    def id(self):
        return f"{self.model.name}/{self.gauge.id if self.gauge else 'none'}"

    def coefficients(self, omega, x, t, strat):
        """Return ``(a_omega, a_x, b_omega, b_x)`` for the chosen calculus.

        Shapes: ``(n,)``, ``(n, 2M)``, ``(n, W)``, ``(n, 2M, W)``.
        """
        m = self.model
        if strat:
            if not self.supports_strat:
                raise ConfigurationError(
                    f"{self.id}: no Stratonovich form available; use the Ito scheme")
            a_x = m.strat_drift(x, t)
        else:
            a_x = m.ito_drift(x, t)
        B = m.noise(x, t)
        V = m.potential(x, t) if m.potential is not None else None
        if self.gauge is None:
            a_w = omega * V if V is not None else np.zeros_like(omega)
            return a_w, a_x, np.zeros((omega.shape[0], m.n_noises), complex), B
        gk = self.gauge.g(omega, x, t, m.params)
        a_x = a_x - np.einsum("njk,nk->nj", B, gk)
        rate = V if V is not None else 0.0
        if strat:
            rate = rate + self.gauge.strat_log_drift(omega, x, t, m.params)
        a_w = omega * rate if V is not None or strat else np.zeros_like(omega)
        return a_w, a_x, omega[:, None] * gk, B


def apply_drift_gauge(model, gauge=None):
    """Attach a drift gauge to ``model`` (``None`` means the positive-P equations)."""
    msgs = []
    if gauge is not None:
        probe = np.full((1, model.dim), 0.3 + 0.1j)
        if model.number_reduced:
            probe[:, model.mode_count:] = 1.0
        gk = gauge.g(np.ones(1, complex), probe, 0.0, model.params)
        if gk.shape != (1, model.n_noises):
            raise ConfigurationError(
                f"gauge {gauge.id} has width {gk.shape[-1]} but model {model.name} has "
                f"{model.n_noises} noises")
        if gauge.families is not None and model.family not in gauge.families:
            raise ConfigurationError(f"gauge {gauge.id} only applies to {gauge.families}")
        msgs.extend(gauge.warnings)
        if gauge.kernel == "laser":
            lam = gauge.params["lambda"]
            G, Q = model.params["G"], model.params["Q"]
            if lam <= laser_safe_lambda(G, Q):
                msgs.append(f"lambda={lam:g} <= 1 + G^2/2Q = {laser_safe_lambda(G, Q):g}: "
                            "gauged-region stationary points remain")
    return GaugedSystem(model, gauge, tuple(msgs))


# -- classification -----------------------------------------------------------


@dataclass(frozen=True)
class GaugeClass:
    complexity: str
    functional: str
    norm_preserving: bool
    pointwise: tuple


def _kind(v, tol):
    re = np.all(np.abs(v.imag) <= tol)
    im = np.all(np.abs(v.real) <= tol)
    if re and im:
        return "real-and-imaginary"
    return "real" if re else "imaginary" if im else "complex"


def classify_gauge(gauge, probe, model_params=None, tol=1e-12):
    """Empirically classify ``gauge`` on ``probe`` points ``(omega, x)``.

    Complexity from the values, functional type from sensitivity to the
    weight versus the phase-space arguments, and the norm-preserving test
    ``Re(omega) Re(g_k) == Im(omega) Im(g_k)``.
    """
    omega, x = probe
    omega = np.atleast_1d(np.asarray(omega, dtype=complex))
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    if omega.size == 0:
        raise ConfigurationError("probe must be nonempty")
    mp = model_params or {}
    gv = gauge.g(omega, x, 0.0, mp)
    scale = tol * max(1.0, float(np.max(np.abs(gv))))
    pointwise = tuple(_kind(row, scale) for row in gv)
    kinds = set(pointwise)
    if kinds == {"real-and-imaginary"}:
        complexity = "real-and-imaginary"
    elif kinds <= {"real", "real-and-imaginary"}:
        complexity = "real"
    elif kinds <= {"imaginary", "real-and-imaginary"}:
        complexity = "imaginary"
    else:
        complexity = "complex"

    rng = np.random.default_rng(12345)
    dw = gauge.g(omega * (1.37 + 0.21j), x, 0.0, mp)
    dx = x + 0.05 * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    dxv = gauge.g(omega, dx, 0.0, mp)
    on_w = not np.allclose(dw, gv, rtol=1e-10, atol=scale)
    on_x = not np.allclose(dxv, gv, rtol=1e-10, atol=scale)
    functional = "mixed" if on_w and on_x else "space-dependent" if on_x else "autonomous"

    lhs = omega.real[:, None] * gv.real
    rhs = omega.imag[:, None] * gv.imag
    norm_preserving = bool(np.allclose(lhs, rhs, rtol=1e-10, atol=scale))
    return GaugeClass(complexity, functional, norm_preserving, pointwise)


# -- diffusion gauges ---------------------------------------------------------


def antisymmetric_basis(dim):
    """Basis ``sigma^(ij)_kl = delta_ik delta_jl - delta_il delta_jk`` for ``i < j``."""
    out = []
    for i in range(dim):
        for j in range(i + 1, dim):
            s = np.zeros((dim, dim))
            s[i, j], s[j, i] = 1.0, -1.0
            out.append(s)
    return out


@dataclass(frozen=True)
class DiffusionGauge:
    """Coefficients ``g_ij`` (``i < j``, row-major) of the orthogonal generator.

    ``q_extra`` optionally appends off-square noise columns.
    """

    g: tuple
    q_extra: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(complex(v) for v in np.atleast_1d(self.g)))
        if self.q_extra is not None:
            q = np.array(self.q_extra, dtype=complex)
            q.setflags(write=False)
            object.__setattr__(self, "q_extra", q)

    def dim(self):
        # M(2M-1) coefficients -> 2M
        k = len(self.g)
        d = int(round((1 + np.sqrt(1 + 8 * k)) / 2))
        if d * (d - 1) // 2 != k:
            raise ConfigurationError(f"{k} generator coefficients do not fit a square dimension")
        return d

    def generator(self):
        d = self.dim()
        gen = np.zeros((d, d), complex)
        for c, s in zip(self.g, antisymmetric_basis(d)):
            gen += c * s
        return gen

    def orthogonal(self):
        """``U = exp(sum g_ij sigma^(ij))``; closed form for a single mode."""
        d = self.dim()
        if d == 2:
            gd = self.g[0]
            return np.cos(gd) * np.eye(2) + np.sin(gd) * np.array([[0.0, 1.0], [-1.0, 0.0]])
        return scipy.linalg.expm(self.generator())


def diffusion_transform(B_canon, gauge):
    """Equivalent noise matrix ``B_canon U`` (or ``[B_s, Q]`` with extra columns).

    Works on a single ``(2M, 2M)`` matrix or a stack ``(n, 2M, 2M)``.
    """
    B = np.asarray(B_canon, dtype=complex)
    if B.shape[-1] != B.shape[-2]:
        raise ConfigurationError("canonical noise matrix must be square")
    if gauge.dim() != B.shape[-1]:
        raise ConfigurationError(
            f"gauge dimension {gauge.dim()} does not match noise matrix {B.shape[-1]}")
    U = gauge.orthogonal()
    if gauge.q_extra is None:
        return B @ U
    Q = gauge.q_extra
    if Q.ndim != 2 or Q.shape[0] != B.shape[-1]:
        raise ConfigurationError("q_extra must have shape (2M, W')")
    D = B @ np.swapaxes(B, -1, -2)
    reduced = D - Q @ Q.T
    if reduced.ndim == 2:
        Bs = canonical_factor(reduced) @ U
        return np.concatenate([Bs, Q], axis=1)
    Bs = np.stack([canonical_factor(r) for r in reduced]) @ U
    return np.concatenate([Bs, np.broadcast_to(Q, (B.shape[0],) + Q.shape)], axis=-1)


def canonical_factor(D, tol=1e-12):
    """Complex-orthogonal factorization ``D = O lambda^2 O^T = B B^T``, ``B = O lambda``.

    Raises :class:`UnsupportedInputError` for matrices that are not complex
    orthogonally diagonalizable (defective or with isotropic eigenvectors).
    """
    D = np.asarray(D, dtype=complex)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ConfigurationError("D must be a square matrix")
    norm = np.linalg.norm(D)
    if np.linalg.norm(D - D.T) > tol * max(norm, 1.0):
        raise ConfigurationError("D must be symmetric")
    if np.count_nonzero(D - np.diag(np.diag(D))) == 0:
        return np.diag(np.sqrt(np.diag(D)))
    w, V = np.linalg.eig(D)
    d = D.shape[0]
    # cluster (near-)degenerate eigenvalues and orthogonalize each cluster
    # under the bilinear form u^T v
    order = np.argsort(w.real + 1e-3 * w.imag)
    w, V = w[order], V[:, order]
    cols, lams = [], []
    scale = max(norm, 1e-300)
    i = 0
    while i < d:
        j = i + 1
        while j < d and abs(w[j] - w[i]) <= 1e-8 * scale:
            j += 1
        for k in range(i, j):
            v = V[:, k].copy()
            for u in cols[len(cols) - (k - i):]:
                v = v - (u @ v) * u
            nrm = v @ v
            if abs(nrm) < 1e-10 * np.vdot(v, v).real:
                raise UnsupportedInputError(
                    "diffusion matrix is not complex-orthogonally diagonalizable")
            cols.append(v / np.sqrt(nrm))
            lams.append(w[k] if j - i == 1 else w[i:j].mean())
        i = j
    O = np.stack(cols, axis=1)
    B = O * np.sqrt(np.asarray(lams))[None, :]
    if np.linalg.norm(B @ B.T - D) > 1e-10 * max(norm, 1e-300) + 1e-14:
        raise UnsupportedInputError("diffusion matrix factorization is ill-conditioned")
    return B


def apply_diffusion_gauge(model, gauge):
    """Model whose noise matrix is ``B U`` for a constant diffusion gauge.

    For constant ``U`` the Stratonovich correction ``sum_k (B_bk d_b) B_ak`` is
    unchanged, so the Stratonovich drift carries over; extra ``Q`` columns
    change it, and then only the Ito scheme is offered.
    """
    if gauge.dim() != model.dim:
        raise ConfigurationError("diffusion gauge dimension does not match the model")
    base = model.noise

    def noise(x, t=0.0):
        return diffusion_transform(base(x, t), gauge)

    sd = "keep" if gauge.q_extra is None else None
    label = f"{model.name}[g_d={','.join(f'{c:g}' for c in gauge.g)}]"
    return model.with_noise(noise, name=label, strat_drift=sd)


def kerr_noise_family(alpha, beta, kappa, g):
    """``sqrt(i kappa) [[i a cos g, i a sin g], [-b sin g, b cos g]]``."""
    r = np.sqrt(1j * kappa)
    c, s = np.cos(g), np.sin(g)
    return r * np.array([[1j * alpha * c, 1j * alpha * s], [-beta * s, beta * c]])


__all__ = [
    "DriftGauge", "GaugedSystem", "DiffusionGauge", "GaugeClass", "zero_gauge", "constant_gauge",
    "circular_gauge", "laser_gauge", "laser_number_gauge", "laser_gauge_for", "laser_gauge_tilde", "laser_theta_correction",
    "laser_reduced_theta_correction", "laser_safe_lambda", "laser_stationary",
    "norm_preserving_gauge", "apply_drift_gauge", "classify_gauge", "diffusion_transform",
    "canonical_factor", "apply_diffusion_gauge", "antisymmetric_basis", "kerr_noise_family",
]
