"""Counter-based Gaussian variates (numpy implementation).

Every variate is a pure function of ``(seed, trajectory, step, component)``.
The integer hashing is SplitMix64's finalizer; Gaussians come from the
Box-Muller transform, the cosine branch feeding even components and the sine
branch odd ones.  The compiled kernels implement the identical integer
pipeline, so the two backends agree to the last ulp of ``log``/``cos``.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53

# counters are (step << 17) | (pair << 1) | j in 64 bits, so steps are < 2**47;
# the last one is reserved for initial-condition sampling
MAX_STEP = 1 << 47
INIT_STEP = MAX_STEP - 1
MAX_PAIRS = 1 << 16


def mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def trajectory_keys(seed, trajectories):
    """Per-trajectory 64-bit keys derived from the master seed."""
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    base = mix64(np.array([seed ^ GOLDEN], dtype=np.uint64))[0]
    idx = np.asarray(trajectories, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base + idx * GOLDEN + np.uint64(1))


def _uniform_bits(keys, counter):
    c = mix64(np.array([counter], dtype=np.uint64))[0]
    return mix64(keys ^ c) >> _S11


def normals(seed, trajectories, step, width):
    """Standard normal variates, shape ``(len(trajectories), width)``."""
    keys = trajectory_keys(seed, trajectories)
    n_pairs = (width + 1) // 2
    if n_pairs > MAX_PAIRS:
        raise ValueError("too many noise components per step")
    if not 0 <= step < MAX_STEP:
        raise ValueError(f"step {step} outside [0, 2**47)")
    out = np.empty((keys.shape[0], 2 * n_pairs))
    base = int(step) << 17
    for p in range(n_pairs):
        h1 = _uniform_bits(keys, base | (p << 1))
        h2 = _uniform_bits(keys, base | (p << 1) | 1)
        u1 = (h1.astype(np.float64) + 1.0) * _TWO_M53
        u2 = h2.astype(np.float64) * _TWO_M53
        r = np.sqrt(-2.0 * np.log(u1))
        phase = 2.0 * np.pi * u2
        out[:, 2 * p] = r * np.cos(phase)
        out[:, 2 * p + 1] = r * np.sin(phase)
    return out[:, :width]
