"""Counter-based random streams.

Every random number is a pure function of (master seed, realization index,
emitter index, channel, draw), so any partition of realizations across
workers reproduces the same values bit for bit.

The numpy functions here are the reference definition; ``field_block`` is
the fused compiled kernel used by the ensemble code and must agree with them.
"""
import numba
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(v) for v in (30, 27, 31, 11))
_FOUR = np.uint64(4)
_ONE = np.uint64(1)
_TWO_M53 = 2.0**-53

GAUSSIAN = "gaussian"
PHASOR = "phasor"
AMPLITUDE_MODELS = (GAUSSIAN, PHASOR)


def mix64(z):
    """SplitMix64 finaliser, elementwise on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def seed_key(master_seed: int) -> np.uint64:
    with np.errstate(over="ignore"):
        return mix64(np.uint64(master_seed) + GOLDEN)[()]


def stream_keys(master_seed: int, realizations, emitters, channels):
    """64-bit stream key per (realization, emitter, channel); broadcasts its inputs."""
    r = np.asarray(realizations, dtype=np.uint64)
    e = np.asarray(emitters, dtype=np.uint64)
    c = np.asarray(channels, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = mix64(seed_key(master_seed) ^ r)
        key = mix64(key ^ (e * _FOUR + c))
    return key


def uniforms(keys, draw: int):
    """Uniform doubles in (0, 1] for the given draw number of each stream."""
    with np.errstate(over="ignore"):
        h = mix64(keys + np.uint64(draw + 1) * GOLDEN)
    return ((h >> _S11).astype(np.float64) + 1.0) * _TWO_M53


def complex_amplitudes(keys, model: str = GAUSSIAN):
    """Per-stream complex amplitude with <|a|^2> = 1.

    Marsaglia polar sampling: draws (2t, 2t+1) give a point (u, v) in the
    square, the first one inside the unit disc is kept. ``gaussian`` scales it
    to a circular complex Gaussian, ``phasor`` to unit modulus.
    """
    if model not in AMPLITUDE_MODELS:
        raise ValueError(f"unknown amplitude model {model!r}")
    keys = np.asarray(keys, dtype=np.uint64)
    u = np.empty(keys.shape)
    v = np.empty(keys.shape)
    s = np.empty(keys.shape)
    pending = np.ones(keys.shape, dtype=bool)
    t = 0
    while pending.any():
        k = keys[pending]
        uu = 2.0 * uniforms(k, 2 * t) - 1.0
        vv = 2.0 * uniforms(k, 2 * t + 1) - 1.0
        ss = uu * uu + vv * vv
        ok = (ss < 1.0) & (ss > 0.0)
        idx = tuple(i[ok] for i in np.nonzero(pending))
        u[idx], v[idx], s[idx] = uu[ok], vv[ok], ss[ok]
        pending[idx] = False
        t += 1
    scale = np.sqrt(-np.log(s) / s) if model == GAUSSIAN else 1.0 / np.sqrt(s)
    return (u + 1j * v) * scale


@numba.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(inline="always")
def _uniform(key, draw):
    h = _mix(key + (np.uint64(draw) + _ONE) * GOLDEN)
    return (np.float64(h >> _S11) + 1.0) * _TWO_M53


@numba.njit(cache=True, nogil=True)
def field_block(key0, first, count, channels, kernel, n_channels, gaussian):
    """Fields of realizations first..first+count-1, shape (count, channels, detectors).

    ``kernel`` is (emitters, detectors); emitters are superposed in index order.
    """
    n_emit, n_det = kernel.shape
    out = np.zeros((count, n_channels, n_det), dtype=np.complex128)
    for r in range(count):
        rkey = _mix(key0 ^ np.uint64(first + r))
        for j in range(n_emit):
            c = channels[j]
            key = _mix(rkey ^ (np.uint64(j) * _FOUR + np.uint64(c)))
            t = 0
            while True:
                u = 2.0 * _uniform(key, 2 * t) - 1.0
                v = 2.0 * _uniform(key, 2 * t + 1) - 1.0
                s = u * u + v * v
                t += 1
                if 0.0 < s < 1.0:
                    break
            scale = np.sqrt(-np.log(s) / s) if gaussian else 1.0 / np.sqrt(s)
            a = complex(u * scale, v * scale)
            for p in range(n_det):
                out[r, c, p] += a * kernel[j, p]
    return out
