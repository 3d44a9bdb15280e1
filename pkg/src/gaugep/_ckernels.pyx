# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: counter-based normals and fused absorber/laser time loops.

The integer pipeline mirrors ``gaugep._rng`` exactly.  Trajectories are
advanced one at a time with the state held in registers; the GIL is released
for the whole loop.
"""

from libc.math cimport sqrt, log, cos, sin, isfinite, M_PI
from libc.stdint cimport uint64_t, uint8_t, int64_t, int32_t
import numpy as np

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t traj_key(uint64_t base, uint64_t traj) noexcept nogil:
    return mix64(base + traj * GOLDEN + 1)


cdef inline void normal_pair(uint64_t key, uint64_t c1, uint64_t c2,
                             double *z0, double *z1) noexcept nogil:
    # c1, c2 are the already-mixed counters
    cdef uint64_t h1 = mix64(key ^ c1) >> 11
    cdef uint64_t h2 = mix64(key ^ c2) >> 11
    cdef double u1 = (<double>h1 + 1.0) * TWO_M53
    cdef double u2 = (<double>h2) * TWO_M53
    cdef double r = sqrt(-2.0 * log(u1))
    cdef double ph = 2.0 * M_PI * u2
    z0[0] = r * cos(ph)
    z1[0] = r * sin(ph)


def fill_normals(uint64_t seed, const uint64_t[::1] trajectories, int64_t step,
                 double[:, ::1] out):
    """Fill ``out[i, :]`` with the normals of trajectory ``trajectories[i]`` at ``step``."""
    cdef Py_ssize_t n = out.shape[0], width = out.shape[1]
    cdef Py_ssize_t n_pairs = (width + 1) // 2
    cdef Py_ssize_t i, p
    cdef uint64_t base = mix64(seed ^ GOLDEN)
    cdef uint64_t key, c1, c2
    cdef uint64_t cbase = (<uint64_t>step) << 17
    cdef double z0, z1
    if n_pairs > 65536:
        raise ValueError("too many noise components per step")
    with nogil:
        for i in range(n):
            key = traj_key(base, trajectories[i])
            for p in range(n_pairs):
                c1 = mix64(cbase | (<uint64_t>p << 1))
                c2 = mix64(cbase | (<uint64_t>p << 1) | 1)
                normal_pair(key, c1, c2, &z0, &z1)
                out[i, 2 * p] = z0
                if 2 * p + 1 < width:
                    out[i, 2 * p + 1] = z1


cdef extern from "math.h" nogil:
    double hypot(double, double)
    double copysign(double, double)


cdef inline double zabs(double complex z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef inline int first_bad(double complex w, double complex a, double complex b, double guard,
                          double *mag) noexcept nogil:
    # squared magnitudes; overflow to inf or nan is caught by the same test
    cdef double g2 = guard * guard
    cdef double mw = w.real * w.real + w.imag * w.imag
    cdef double ma = a.real * a.real + a.imag * a.imag
    cdef double mb = b.real * b.real + b.imag * b.imag
    if mw <= g2 and ma <= g2 and mb <= g2:
        return -1
    if not mw <= g2:
        mag[0] = hypot(w.real, w.imag)
        return 0
    if not ma <= g2:
        mag[0] = hypot(a.real, a.imag)
        return 1
    mag[0] = hypot(b.real, b.imag)
    return 2


cdef inline void absorber_coeffs(double complex w, double complex a, double complex b,
                                 double gamma, double complex eps, int gauge, int strat,
                                 double complex *aw, double complex *aa, double complex *ab,
                                 double complex *bw, double complex *g) noexcept nogil:
    cdef double complex n = a * b
    cdef double complex k, d, gg
    if strat:
        k = n + (gamma - 1.0) / 2.0
    else:
        k = n + gamma / 2.0
    aa[0] = eps - a * k
    ab[0] = eps.conjugate() - b * k
    if gauge == 1:
        d = n - zabs(n)
        gg = 1j * d
        aa[0] = aa[0] - (1j * a) * gg
        ab[0] = ab[0] - (1j * b) * gg
        if strat:
            aw[0] = w * (n + d * d)
        else:
            aw[0] = 0
        bw[0] = w * gg
        g[0] = gg
    else:
        aw[0] = 0
        bw[0] = 0
        g[0] = 0


def run_absorber(double gamma, double eps_re, double eps_im, int gauge, int strat, int iters,
                 double dt, int64_t n_steps, int64_t stride, uint64_t seed, int64_t traj0,
                 double guard,
                 double complex[::1] omega, double complex[::1] alpha, double complex[::1] beta,
                 uint8_t[::1] alive,
                 double complex[:, ::1] rec_w, double complex[:, ::1] rec_a,
                 double complex[:, ::1] rec_b, uint8_t[:, ::1] rec_alive,
                 int64_t[::1] div_step, int32_t[::1] div_var, double[::1] div_mag):
    """Absorber family, gauge 0 = none, 1 = circular; native time ``t``."""
    cdef Py_ssize_t n = omega.shape[0]
    cdef Py_ssize_t i, r
    cdef int64_t k, left
    cdef int it, bad
    cdef double complex eps = eps_re + 1j * eps_im
    cdef double complex w, a, b, wm, am, bm, aw, aa, ab, bw, g, w1, a1, b1
    cdef double sqdt = sqrt(dt), z0, z1, dw1, dw2, mag
    cdef uint64_t base = mix64(seed ^ GOLDEN)
    cdef uint64_t key
    cdef uint64_t[::1] cmix = np.empty(2 * max(n_steps, 1), dtype=np.uint64)
    for k in range(n_steps):
        cmix[2 * k] = mix64((<uint64_t>k) << 17)
        cmix[2 * k + 1] = mix64(((<uint64_t>k) << 17) | 1)
    with nogil:
        for i in range(n):
            w = omega[i]
            a = alpha[i]
            b = beta[i]
            rec_w[0, i] = w
            rec_a[0, i] = a
            rec_b[0, i] = b
            rec_alive[0, i] = alive[i]
            key = traj_key(base, <uint64_t>(traj0 + i))
            left = stride
            for k in range(n_steps):
                if alive[i]:
                    normal_pair(key, cmix[2 * k], cmix[2 * k + 1], &z0, &z1)
                    dw1 = sqdt * z0
                    dw2 = sqdt * z1
                    if strat:
                        wm = w
                        am = a
                        bm = b
                        for it in range(iters):
                            absorber_coeffs(wm, am, bm, gamma, eps, gauge, 1,
                                            &aw, &aa, &ab, &bw, &g)
                            wm = w + 0.5 * (aw * dt + (bw * dw1 + bw * dw2))
                            am = a + 0.5 * (aa * dt + (1j * am) * dw1)
                            bm = b + 0.5 * (ab * dt + (1j * bm) * dw2)
                        absorber_coeffs(wm, am, bm, gamma, eps, gauge, 1,
                                        &aw, &aa, &ab, &bw, &g)
                        w1 = w + aw * dt + (bw * dw1 + bw * dw2)
                        a1 = a + aa * dt + (1j * am) * dw1
                        b1 = b + ab * dt + (1j * bm) * dw2
                    else:
                        absorber_coeffs(w, a, b, gamma, eps, gauge, 0, &aw, &aa, &ab, &bw, &g)
                        w1 = w + aw * dt + (bw * dw1 + bw * dw2)
                        a1 = a + aa * dt + (1j * a) * dw1
                        b1 = b + ab * dt + (1j * b) * dw2
                    bad = first_bad(w1, a1, b1, guard, &mag)
                    if bad >= 0:
                        alive[i] = 0
                        div_step[i] = k + 1
                        div_var[i] = bad
                        div_mag[i] = mag
                    else:
                        w = w1
                        a = a1
                        b = b1
                left -= 1
                if left == 0:
                    left = stride
                    r = (k + 1) // stride
                    rec_w[r, i] = w
                    rec_a[r, i] = a
                    rec_b[r, i] = b
                    rec_alive[r, i] = alive[i]
            omega[i] = w
            alpha[i] = a
            beta[i] = b


cdef inline void laser_coeffs(double complex w, double complex a, double complex b,
                              double G, double Q, double sq, double lam, int strat,
                              double complex *aw, double complex *aa, double complex *ab,
                              double complex *bw1, double complex *bw2) noexcept nogil:
    cdef double complex n = a * b
    cdef double complex kk = G - n
    cdef double gt, mod2
    aa[0] = kk * a
    ab[0] = kk * b
    if lam > 0 and n.real < 0:
        gt = -lam * n.real
        aa[0] = aa[0] - a * gt
        ab[0] = ab[0] - b * gt
        bw1[0] = w * ((a + b) * gt / (2.0 * sq))
        bw2[0] = w * ((a - b) * gt / (2j * sq))
        if strat:
            mod2 = a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
            aw[0] = w * (-n * gt * gt / (2.0 * Q)
                         + lam * (n.real + 0.5 * n + 0.25 * mod2))
        else:
            aw[0] = 0
    else:
        aw[0] = 0
        bw1[0] = 0
        bw2[0] = 0


def run_laser(double G, double Q, double lam, int strat, int iters, double dt, int64_t n_steps,
              int64_t stride, uint64_t seed, int64_t traj0, double guard,
              double complex[::1] omega, double complex[::1] alpha, double complex[::1] beta,
              uint8_t[::1] alive,
              double complex[:, ::1] rec_w, double complex[:, ::1] rec_a,
              double complex[:, ::1] rec_b, uint8_t[:, ::1] rec_alive,
              int64_t[::1] div_step, int32_t[::1] div_var, double[::1] div_mag):
    """Laser model, ``lam <= 0`` means no gauge; native time ``tau``."""
    cdef Py_ssize_t n = omega.shape[0]
    cdef Py_ssize_t i, r
    cdef int64_t k, left
    cdef int it, bad
    cdef double sq = sqrt(Q)
    cdef double complex w, a, b, wm, am, bm, aw, aa, ab, bw1, bw2, w1, a1, b1, na, nb
    cdef double sqdt = sqrt(dt), z0, z1, dw1, dw2, mag
    cdef uint64_t base = mix64(seed ^ GOLDEN)
    cdef uint64_t key
    cdef uint64_t[::1] cmix = np.empty(2 * max(n_steps, 1), dtype=np.uint64)
    for k in range(n_steps):
        cmix[2 * k] = mix64((<uint64_t>k) << 17)
        cmix[2 * k + 1] = mix64(((<uint64_t>k) << 17) | 1)
    with nogil:
        for i in range(n):
            w = omega[i]
            a = alpha[i]
            b = beta[i]
            rec_w[0, i] = w
            rec_a[0, i] = a
            rec_b[0, i] = b
            rec_alive[0, i] = alive[i]
            key = traj_key(base, <uint64_t>(traj0 + i))
            left = stride
            for k in range(n_steps):
                if alive[i]:
                    normal_pair(key, cmix[2 * k], cmix[2 * k + 1], &z0, &z1)
                    dw1 = sqdt * z0
                    dw2 = sqdt * z1
                    # additive noise: sqrt(Q) (dW1 + i dW2) and sqrt(Q) (dW1 - i dW2)
                    na = sq * dw1 + (1j * sq) * dw2
                    nb = sq * dw1 + (-1j * sq) * dw2
                    if strat:
                        wm = w
                        am = a
                        bm = b
                        for it in range(iters):
                            laser_coeffs(wm, am, bm, G, Q, sq, lam, 1, &aw, &aa, &ab, &bw1, &bw2)
                            wm = w + 0.5 * (aw * dt + (bw1 * dw1 + bw2 * dw2))
                            am = a + 0.5 * (aa * dt + na)
                            bm = b + 0.5 * (ab * dt + nb)
                        laser_coeffs(wm, am, bm, G, Q, sq, lam, 1, &aw, &aa, &ab, &bw1, &bw2)
                    else:
                        laser_coeffs(w, a, b, G, Q, sq, lam, 0, &aw, &aa, &ab, &bw1, &bw2)
                    w1 = w + aw * dt + (bw1 * dw1 + bw2 * dw2)
                    a1 = a + aa * dt + na
                    b1 = b + ab * dt + nb
                    bad = first_bad(w1, a1, b1, guard, &mag)
                    if bad >= 0:
                        alive[i] = 0
                        div_step[i] = k + 1
                        div_var[i] = bad
                        div_mag[i] = mag
                    else:
                        w = w1
                        a = a1
                        b = b1
                left -= 1
                if left == 0:
                    left = stride
                    r = (k + 1) // stride
                    rec_w[r, i] = w
                    rec_a[r, i] = a
                    rec_b[r, i] = b
                    rec_alive[r, i] = alive[i]
            omega[i] = w
            alpha[i] = a
            beta[i] = b


cdef inline double complex csqrt_(double complex z) noexcept nogil:
    # principal branch, cut along the negative real axis
    cdef double x = z.real, y = z.imag, r, s, t
    if x == 0 and y == 0:
        return 0
    r = sqrt(x * x + y * y)
    if x >= 0:
        s = sqrt(0.5 * (r + x))
        t = y / (2.0 * s)
    else:
        t = copysign(sqrt(0.5 * (r - x)), y)
        s = y / (2.0 * t)
    return s + 1j * t


cdef inline void number_coeffs(double complex w, double complex n, double G, double Q,
                               double sq, double lam, int strat,
                               double complex *aw, double complex *an,
                               double complex *bw, double complex *bn) noexcept nogil:
    cdef double complex s = csqrt_(n)
    cdef double complex g
    cdef double gt
    bn[0] = 2.0 * sq * s
    an[0] = 2.0 * n * (G - n) + (Q if strat else 2.0 * Q)
    if lam > 0 and n.real < 0:
        gt = -lam * n.real
        g = gt * (s / sq)
        an[0] = an[0] - bn[0] * g
        bw[0] = w * g
        if strat:
            aw[0] = w * (-n * gt * gt / (2.0 * Q) + lam * (n.real + n + zabs(n)) / 2.0)
        else:
            aw[0] = 0
    else:
        aw[0] = 0
        bw[0] = 0


cdef inline void align(double complex *bw, double complex *bn, double complex bw0,
                       double complex bn0) noexcept nogil:
    cdef double dot = (bn[0] * bn0.conjugate()).real + (bw[0] * bw0.conjugate()).real
    if dot < 0:
        bw[0] = -bw[0]
        bn[0] = -bn[0]


def run_laser_number(double G, double Q, double lam, int strat, int iters, double dt,
                     int64_t n_steps, int64_t stride, uint64_t seed, int64_t traj0, double guard,
                     double complex[::1] omega, double complex[::1] num,
                     uint8_t[::1] alive,
                     double complex[:, ::1] rec_w, double complex[:, ::1] rec_n,
                     uint8_t[:, ::1] rec_alive,
                     int64_t[::1] div_step, int32_t[::1] div_var, double[::1] div_mag):
    """Number-reduced laser ``x = (n, 1)``, one real noise; ``lam <= 0`` means no gauge."""
    cdef Py_ssize_t n = omega.shape[0]
    cdef Py_ssize_t i, r
    cdef int64_t k, left
    cdef int it, bad
    cdef double sq = sqrt(Q)
    cdef double complex w, v, wm, vm, aw, av, bw, bv, aw0, av0, bw0, bv0, w1, v1
    cdef double sqdt = sqrt(dt), z0, z1, dw, mag
    cdef uint64_t base = mix64(seed ^ GOLDEN)
    cdef uint64_t key
    cdef uint64_t[::1] cmix = np.empty(2 * max(n_steps, 1), dtype=np.uint64)
    for k in range(n_steps):
        cmix[2 * k] = mix64((<uint64_t>k) << 17)
        cmix[2 * k + 1] = mix64(((<uint64_t>k) << 17) | 1)
    with nogil:
        for i in range(n):
            w = omega[i]
            v = num[i]
            rec_w[0, i] = w
            rec_n[0, i] = v
            rec_alive[0, i] = alive[i]
            key = traj_key(base, <uint64_t>(traj0 + i))
            left = stride
            for k in range(n_steps):
                if alive[i]:
                    normal_pair(key, cmix[2 * k], cmix[2 * k + 1], &z0, &z1)
                    dw = sqdt * z0
                    if strat:
                        number_coeffs(w, v, G, Q, sq, lam, 1, &aw0, &av0, &bw0, &bv0)
                        wm = w
                        vm = v
                        for it in range(iters):
                            number_coeffs(wm, vm, G, Q, sq, lam, 1, &aw, &av, &bw, &bv)
                            align(&bw, &bv, bw0, bv0)
                            wm = w + 0.5 * (aw * dt + bw * dw)
                            vm = v + 0.5 * (av * dt + bv * dw)
                        number_coeffs(wm, vm, G, Q, sq, lam, 1, &aw, &av, &bw, &bv)
                        align(&bw, &bv, bw0, bv0)
                    else:
                        number_coeffs(w, v, G, Q, sq, lam, 0, &aw, &av, &bw, &bv)
                    w1 = w + aw * dt + bw * dw
                    v1 = v + av * dt + bv * dw
                    bad = first_bad(w1, v1, 1.0, guard, &mag)
                    if bad >= 0:
                        alive[i] = 0
                        div_step[i] = k + 1
                        div_var[i] = bad
                        div_mag[i] = mag
                    else:
                        w = w1
                        v = v1
                left -= 1
                if left == 0:
                    left = stride
                    r = (k + 1) // stride
                    rec_w[r, i] = w
                    rec_n[r, i] = v
                    rec_alive[r, i] = alive[i]
            omega[i] = w
            num[i] = v
