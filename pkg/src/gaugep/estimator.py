"""Weighted moment estimates, batch-means errors and weight diagnostics.

Normally ordered moments of mode ``j`` are ratio estimates

    <a^dag^n a^m> = mean(beta^n alpha^m Omega + conj(alpha^n beta^m Omega))
                    / mean(Omega + conj(Omega))

over surviving trajectories.  All sums go through :func:`math.fsum`, so an
estimate does not depend on the order of trajectories.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError

DENOM_FLOOR_REL = 1e-6


def _fsum_c(z):
    z = np.asarray(z)
    return complex(math.fsum(z.real), math.fsum(z.imag))


@dataclass(frozen=True)
class MomentEstimate:
    value: complex
    std_err: float
    numerator_mean: complex
    denominator_mean: float
    n_batches: int
    valid: bool = True
    diverged: int = 0

    def __post_init__(self):
        if not (self.std_err >= 0 or math.isnan(self.std_err)):
            raise ValueError("std_err must be >= 0")


@dataclass(frozen=True)
class MomentSeries:
    """Estimates on a time grid; arrays are indexed by record."""

    times: np.ndarray
    value: np.ndarray
    std_err: np.ndarray
    numerator_mean: np.ndarray
    denominator_mean: np.ndarray
    valid: np.ndarray
    diverged: np.ndarray
    n_batches: int
    label: str = ""
    figure_scale: float = 1.0

    def __len__(self):
        return len(self.times)

    def __getitem__(self, r):
        return MomentEstimate(complex(self.value[r]), float(self.std_err[r]),
                              complex(self.numerator_mean[r]), float(self.denominator_mean[r]),
                              self.n_batches, bool(self.valid[r]), int(self.diverged[r]))

    @property
    def figure_times(self):
        return self.times * self.figure_scale

    @classmethod
    def exact(cls, times, values, label="", figure_scale=1.0):
        """Series with zero error bars (oracle or closed form)."""
        times = np.asarray(times, float)
        v = np.asarray(values, complex)
        n = len(times)
        return cls(times, v, np.zeros(n), v.copy(), np.ones(n), np.ones(n, bool),
                   np.zeros(n, int), 0, label, figure_scale)


def _numerator(alpha, beta, omega, n, m):
    # same product order for both terms keeps moment(m, n) == conj(moment(n, m)) bitwise
    p = alpha ** m * beta ** n * omega
    q = alpha ** n * beta ** m * omega
    return p + np.conj(q)


def _batch_slices(n_traj, batch_count):
    size = n_traj // batch_count
    return [slice(b * size, (b + 1) * size) for b in range(batch_count)]


def moment(records, n, m, mode=0, batch_count=None, denom_floor=None):
    """Estimate ``<a^dag^n a^m>`` for ``mode`` at every recorded time.

    Parameters
    ----------
    records : TrajectoryRecordSet
    n, m : int
        Creation and annihilation orders.
    batch_count : int, optional
        Number of sub-ensembles for the batch-means error (defaults to the
        ensemble's own ``batch_count``).
    denom_floor : float, optional
        Times where ``|mean(Omega + Omega*)|`` falls below this are flagged
        invalid.  Default is ``1e-6 * 2 * mean|Omega(0)|``.

    Returns
    -------
    MomentSeries
    """
    if n < 0 or m < 0:
        raise ConfigurationError("moment orders must be >= 0")
    if not 0 <= mode < records.modes:
        raise ConfigurationError(f"mode {mode} out of range for {records.modes} modes")
    B = batch_count or records.batch_count
    N = records.n_traj
    if B < 2 or N % B:
        raise ConfigurationError(f"batch_count={B} must be >= 2 and divide {N}")
    if denom_floor is None:
        denom_floor = DENOM_FLOOR_REL * 2.0 * float(np.mean(np.abs(records.omega[0])))
    R = len(records.times)
    value = np.empty(R, complex)
    err = np.empty(R)
    num_mean = np.empty(R, complex)
    den_mean = np.empty(R)
    valid = np.empty(R, bool)
    slices = _batch_slices(N, B)
    M = records.modes
    for r in range(R):
        live = records.alive[r]
        w = records.omega[r]
        num = _numerator(records.x[r, :, mode], records.x[r, :, M + mode], w, n, m)
        num = np.where(live, num, 0.0)
        den = np.where(live, 2.0 * w.real, 0.0)
        count = int(live.sum())
        tot_num, tot_den = _fsum_c(num), math.fsum(den)
        num_mean[r] = tot_num / count if count else np.nan
        den_mean[r] = tot_den / count if count else np.nan
        with np.errstate(all="ignore"):
            value[r] = tot_num / tot_den if tot_den != 0 else complex(np.nan, np.nan)
            ratios = np.array([_fsum_c(num[s]) / math.fsum(den[s]) if math.fsum(den[s]) else np.nan
                               for s in slices])
        valid[r] = bool(count) and abs(den_mean[r]) >= denom_floor and np.isfinite(value[r])
        if n == m:
            value[r] = value[r].real
        dev = ratios - ratios.mean()
        err[r] = math.sqrt(math.fsum(np.abs(dev) ** 2) / (B - 1)) / math.sqrt(B)
    return MomentSeries(records.times.copy(), value, err, num_mean, den_mean, valid,
                        records.diverged_count.copy(), B, f"a+^{n} a^{m} [{mode}]",
                        records.figure_scale)


def photon_number(records, mode=0, batch_count=None):
    return moment(records, 1, 1, mode, batch_count)


@dataclass(frozen=True)
class WeightDiagnostics:
    times: np.ndarray
    mean_re_omega: np.ndarray
    var_re_omega: np.ndarray
    var_im_omega: np.ndarray
    mean_sq_re: np.ndarray      # <(Re Omega)^2>
    mean_sq_im: np.ndarray      # <(Im Omega)^2>
    se_sq_re: np.ndarray
    se_sq_im: np.ndarray
    min_re_omega: np.ndarray
    max_re_omega: np.ndarray
    frac_negative: np.ndarray
    n_alive: np.ndarray = field(default=None)


def weight_diagnostics(records):
    """Per-time spread of the weights over surviving trajectories."""
    R = len(records.times)
    out = {k: np.empty(R) for k in ("mean", "vre", "vim", "sre", "sim", "ere", "eim",
                                    "lo", "hi", "neg")}
    alive_n = np.empty(R, int)
    for r in range(R):
        w = records.omega[r][records.alive[r]]
        k = w.size
        alive_n[r] = k
        re, im = w.real, w.imag
        mre, mim = math.fsum(re) / k, math.fsum(im) / k
        out["mean"][r] = mre
        out["vre"][r] = max(math.fsum((re - mre) ** 2) / k, 0.0)
        out["vim"][r] = max(math.fsum((im - mim) ** 2) / k, 0.0)
        q_re, q_im = re ** 2, im ** 2
        out["sre"][r] = math.fsum(q_re) / k
        out["sim"][r] = math.fsum(q_im) / k
        out["ere"][r] = np.std(q_re, ddof=1) / math.sqrt(k) if k > 1 else 0.0
        out["eim"][r] = np.std(q_im, ddof=1) / math.sqrt(k) if k > 1 else 0.0
        out["lo"][r], out["hi"][r] = re.min(), re.max()
        out["neg"][r] = np.count_nonzero(re < 0) / k
    return WeightDiagnostics(records.times.copy(), out["mean"], out["vre"], out["vim"],
                             out["sre"], out["sim"], out["ere"], out["eim"], out["lo"],
                             out["hi"], out["neg"], alive_n)


def weight_mean_series(records, batch_count=None):
    """``<Omega>`` with batch-means error; used for norm-conservation checks."""
    B = batch_count or records.batch_count
    slices = _batch_slices(records.n_traj, B)
    R = len(records.times)
    val = np.empty(R, complex)
    err = np.empty(R)
    for r in range(R):
        w = np.where(records.alive[r], records.omega[r], 0.0)
        cnt = records.alive[r]
        val[r] = _fsum_c(w) / cnt.sum()
        bm = np.array([_fsum_c(w[s]) / max(cnt[s].sum(), 1) for s in slices])
        err[r] = np.sqrt(np.sum(np.abs(bm - bm.mean()) ** 2) / (B - 1) / B)
    n = len(records.times)
    return MomentSeries(records.times.copy(), val, err, val.copy(), np.ones(n),
                        np.ones(n, bool), records.diverged_count.copy(), B, "omega",
                        records.figure_scale)


@dataclass(frozen=True)
class ComparisonReport:
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    z: np.ndarray
    max_z: float
    threshold: float
    passed: bool
    label_a: str = "a"
    label_b: str = "b"

    def to_markdown(self, every=1):
        lines = [f"## {self.label_a} vs {self.label_b}", "",
                 f"max z = {self.max_z:.3f} (threshold {self.threshold:g}): "
                 + ("PASS" if self.passed else "FAIL"), "",
                 "| time | a | b | z |", "|---|---|---|---|"]
        for i in range(0, len(self.times), every):
            lines.append(f"| {self.times[i]:.6g} | {_fmt(self.a[i])} | {_fmt(self.b[i])} "
                         f"| {self.z[i]:.3f} |")
        return "\n".join(lines) + "\n"


def _fmt(v):
    v = complex(v)
    return f"{v.real:.6g}" if v.imag == 0 else f"{v.real:.6g}{v.imag:+.6g}j"


def _interp(t, tp, fp):
    fp = np.asarray(fp)
    if np.iscomplexobj(fp):
        return np.interp(t, tp, fp.real) + 1j * np.interp(t, tp, fp.imag)
    return np.interp(t, tp, fp)


def z_scores(a, sa, b, sb, atol=1e-12):
    """``|a - b| / sqrt(sa^2 + sb^2)``; zero error bars give 0 or inf."""
    diff = np.abs(np.asarray(a) - np.asarray(b))
    s = np.hypot(sa, sb)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(s > 0, diff / s, np.where(diff <= atol, 0.0, np.inf))
    return np.where(np.isnan(diff), np.inf, z)


def compare_series(a, b, z_threshold=3.0, t_min=None, t_max=None):
    """Z-scores of ``a`` against ``b`` on ``a``'s time grid.

    ``b`` is linearly interpolated when its grid differs.  Invalid points of
    either series count as failures.
    """
    ta, tb = np.asarray(a.times, float), np.asarray(b.times, float)
    lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    if t_min is not None:
        lo = max(lo, t_min)
    if t_max is not None:
        hi = min(hi, t_max)
    tol = 1e-9 * max(1.0, abs(hi))
    if hi < lo - tol:
        raise ConfigurationError("series have disjoint time ranges")
    sel = (ta >= lo - tol) & (ta <= hi + tol)
    t = ta[sel]
    va, sa, oka = a.value[sel], a.std_err[sel], a.valid[sel]
    if len(tb) == len(ta) and np.allclose(ta, tb, rtol=0, atol=tol):
        vb, sb, okb = b.value[sel], b.std_err[sel], b.valid[sel]
    else:
        vb, sb = _interp(t, tb, b.value), _interp(t, tb, b.std_err)
        okb = np.ones(len(t), bool)
        okb &= np.interp(t, tb, b.valid.astype(float)) == 1.0
    z = z_scores(va, sa, vb, sb)
    z = np.where(oka & okb, z, np.inf)
    max_z = float(z.max()) if len(z) else 0.0
    return ComparisonReport(t, np.asarray(va), np.asarray(vb), z, max_z, z_threshold,
                            max_z <= z_threshold, a.label or "a", b.label or "b")
