"""Vectorized numpy stepping engine (any model, any gauge).

This is both the general-purpose engine and the fallback for the compiled
absorber/laser kernels.
"""

import numpy as np

from . import backend

# variable codes in divergence reports: 0 = omega, 1..2M = x components
OMEGA = 0


def ito_step(sys, omega, x, t, dW, dt):
    aw, ax, bw, bx = sys.coefficients(omega, x, t, False)
    w1 = omega + aw * dt + np.einsum("nk,nk->n", bw, dW)
    x1 = x + ax * dt + np.einsum("njk,nk->nj", bx, dW)
    return w1, x1


def _aligned(coef, ref):
    # flip noise columns (with their weight noise) onto the branch of ``ref``
    aw, ax, bw, bx = coef
    dot = (np.einsum("njk,njk->nk", bx, np.conj(ref[1])).real
           + (bw * np.conj(ref[0])).real)
    sgn = np.where(dot < 0, -1.0, 1.0)
    return aw, ax, bw * sgn, bx * sgn[:, None, :]


def strat_step(sys, omega, x, t, dW, dt, iters):
    tm = t + 0.5 * dt
    wm, xm = omega, x
    ref = None
    if sys.model.sign_free_noise:
        c0 = sys.coefficients(omega, x, t, True)
        ref = (c0[2], c0[3])

    def coef(w, y):
        c = sys.coefficients(w, y, tm, True)
        return _aligned(c, ref) if ref is not None else c

    for _ in range(iters):
        aw, ax, bw, bx = coef(wm, xm)
        wm = omega + 0.5 * (aw * dt + np.einsum("nk,nk->n", bw, dW))
        xm = x + 0.5 * (ax * dt + np.einsum("njk,nk->nj", bx, dW))
    aw, ax, bw, bx = coef(wm, xm)
    w1 = omega + aw * dt + np.einsum("nk,nk->n", bw, dW)
    x1 = x + ax * dt + np.einsum("njk,nk->nj", bx, dW)
    return w1, x1


def check_divergence(omega, x, guard):
    """Return ``(bad_mask, var_code, magnitude)`` for the first offending variable."""
    mags = np.concatenate([np.abs(omega)[:, None], np.abs(x)], axis=1)
    bad_entries = ~np.isfinite(mags) | (mags > guard)
    bad = bad_entries.any(axis=1)
    var = np.argmax(bad_entries, axis=1)
    mag = mags[np.arange(mags.shape[0]), var]
    return bad, var, mag


def run_block(sys, omega, x, alive, seed, traj0, dt, n_steps, stride, strat, iters, guard,
              t0=0.0):
    """Advance one block in place; return records and divergence info.

    Records are taken at steps ``0, stride, 2*stride, ...`` up to ``n_steps``.
    """
    n = omega.shape[0]
    n_rec = n_steps // stride + 1
    rec_w = np.empty((n_rec, n), complex)
    rec_x = np.empty((n_rec, n) + x.shape[1:], complex)
    rec_alive = np.empty((n_rec, n), bool)
    div_step = np.full(n, -1, np.int64)
    div_var = np.zeros(n, np.int32)
    div_mag = np.zeros(n)
    rec_w[0], rec_x[0], rec_alive[0] = omega, x, alive
    idx = np.arange(traj0, traj0 + n)
    sqdt = np.sqrt(dt)
    W = sys.n_noises
    with np.errstate(all="ignore"):
        for k in range(n_steps):
            t = t0 + k * dt
            dW = sqdt * backend.normals(seed, idx, k, W)
            if strat:
                w1, x1 = strat_step(sys, omega, x, t, dW, dt, iters)
            else:
                w1, x1 = ito_step(sys, omega, x, t, dW, dt)
            bad, var, mag = check_divergence(w1, x1, guard)
            newly = bad & alive
            if newly.any():
                div_step[newly] = k + 1
                div_var[newly] = var[newly]
                div_mag[newly] = mag[newly]
                alive = alive & ~bad
            omega = np.where(alive, w1, omega)
            x = np.where(alive[:, None], x1, x)
            if (k + 1) % stride == 0:
                r = (k + 1) // stride
                rec_w[r], rec_x[r], rec_alive[r] = omega, x, alive
    return rec_w, rec_x, rec_alive, div_step, div_var, div_mag
