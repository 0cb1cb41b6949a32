"""Deterministic random streams.

Every path owns one Philox-4x32 counter-based generator. Its 128-bit key is
derived from ``(master_seed, path_index)`` with two rounds of the SplitMix64
finalizer, so per-path streams are independent of execution order and of how
many paths run in parallel.

Normal variates use inverse-CDF sampling through Wichura's AS241 (PPND16)
rational approximation, accurate to about 1e-16 relative.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Uniforms are mapped into the open interval (0, 1) so that inverse CDFs
# never see 0 or 1.
_HALF_ULP53 = 2.0 ** -54


def splitmix64(x: int) -> int:
    """One SplitMix64 step: advance by the golden gamma, then finalize."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, path_index: int) -> tuple[int, int]:
    """Derive the two 64-bit Philox key words for one path.

    key0 = splitmix64(master_seed XOR splitmix64(path_index))
    key1 = splitmix64(key0)
    """
    if master_seed < 0 or master_seed > MASK64:
        raise ValueError(f"master_seed must fit in an unsigned 64-bit integer, got {master_seed}")
    if path_index < 0:
        raise ValueError(f"path_index must be nonnegative, got {path_index}")
    k0 = splitmix64((master_seed ^ splitmix64(path_index)) & MASK64)
    k1 = splitmix64(k0)
    return k0, k1


def path_generator(master_seed: int, path_index: int = 0) -> np.random.Generator:
    k0, k1 = mix_seed(master_seed, path_index)
    key = np.array([k0, k1], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniforms(rng: np.random.Generator, size=None):
    """Uniform draws on (0, 1): 53-bit grid shifted by half a step."""
    u = rng.random(size)
    return u + _HALF_ULP53


# AS241 coefficients, highest degree last.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _horner(coefs, r):
    acc = np.full_like(r, coefs[-1])
    for c in coefs[-2::-1]:
        acc = acc * r + c
    return acc


def normal_quantile(p):
    """Standard normal inverse CDF for p in (0, 1); scalar or array."""
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    q = p_arr - 0.5
    out = np.empty_like(p_arr)

    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _horner(_A, r) / _horner(_B, r)

    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.where(qt < 0.0, p_arr[tail], 1.0 - p_arr[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        val = np.empty_like(r)
        rn = r[near] - 1.6
        val[near] = _horner(_C, rn) / _horner(_D, rn)
        rf = r[~near] - 5.0
        val[~near] = _horner(_E, rf) / _horner(_F, rf)
        out[tail] = np.where(qt < 0.0, -val, val)

    if out.ndim == 0:
        return float(out)
    return out
