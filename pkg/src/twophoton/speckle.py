"""Monte Carlo pseudo-thermal fields.

Each emitter of the discretised spots gets an independent complex amplitude
per realization (a fresh ground-glass configuration) and radiates to the
detector plane through the Fraunhofer kernel exp(i k x x0 / z). Correlations
are ensemble averages over realizations.

Realizations are processed in fixed-size chunks; per-chunk sums are reduced
in chunk order, so the result does not depend on how many workers ran.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .geometry import (
    ExperimentConfig,
    Polarization,
    ScanPlan,
    SourceGeometry,
    Spot,
    discretize_sources,
)

CHUNK = 4096
MIN_REALIZATIONS = 100
MIN_MOMENT_REALIZATIONS = 10_000


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class FieldRealization:
    amplitudes: np.ndarray  # (channels, positions)
    realization_index: int


@dataclass(frozen=True)
class EnsembleEstimate:
    x1: np.ndarray
    x2: np.ndarray
    mean_I1: np.ndarray
    mean_I2: np.ndarray
    mean_I1I2: np.ndarray
    g1_estimate: np.ndarray
    g2_normalized: np.ndarray
    stderr_g2: np.ndarray
    n_realizations: int


def channel_map(config: ExperimentConfig, geometry: SourceGeometry) -> tuple[int, np.ndarray]:
    """Number of polarization channels and the channel of each emitter."""
    if config.polarization is Polarization.PARALLEL:
        return 1, np.zeros(len(geometry), dtype=np.int64)
    return 2, np.array([0 if lab is Spot.A else 1 for lab in geometry.labels], dtype=np.int64)


def propagation_kernel(config: ExperimentConfig, emitter_positions, detector_positions):
    """Fraunhofer phase factors, shape (emitters, detectors)."""
    x0 = np.asarray(emitter_positions, dtype=float)
    x = np.asarray(detector_positions, dtype=float)
    return np.exp(1j * config.wavenumber * np.outer(x0, x) / config.distance_z)


def _superpose(amplitudes, kernel, channels, n_channels):
    out = np.zeros((amplitudes.shape[0], n_channels, kernel.shape[1]), dtype=complex)
    for j in range(kernel.shape[0]):
        out[:, channels[j]] += amplitudes[:, j, None] * kernel[j]
    return out


def _check_model(model):
    if model not in rng.AMPLITUDE_MODELS:
        raise ValueError(f"unknown amplitude model {model!r}")


def field_samples(config, geometry, detector_positions, first, count, amplitude_model=rng.GAUSSIAN):
    """Fields of realizations first..first+count-1, shape (count, channels, detectors)."""
    _check_model(amplitude_model)
    n_channels, channels = channel_map(config, geometry)
    kernel = propagation_kernel(config, geometry.positions, detector_positions)
    return rng.field_block(
        rng.seed_key(config.seed), int(first), int(count), channels, kernel,
        n_channels, amplitude_model == rng.GAUSSIAN,
    )


def draw_realization(
    geometry: SourceGeometry,
    config: ExperimentConfig,
    detector_positions,
    index: int,
    amplitude_model: str = rng.GAUSSIAN,
    amplitudes=None,
) -> FieldRealization:
    """Fields of realization ``index`` at each detector position.

    ``amplitudes`` overrides the random emitter amplitudes (one per emitter).
    """
    if not 0 <= index < config.realizations:
        raise PreconditionError(f"realization index {index} outside [0, {config.realizations})")
    if amplitudes is None:
        fields = field_samples(config, geometry, detector_positions, index, 1, amplitude_model)
    else:
        n_channels, channels = channel_map(config, geometry)
        a = np.asarray(amplitudes, dtype=complex).reshape(1, len(geometry))
        kernel = propagation_kernel(config, geometry.positions, detector_positions)
        fields = _superpose(a, kernel, channels, n_channels)
    return FieldRealization(fields[0], index)


def _chunk_sums(f):
    """Moment sums of one chunk of fields at a detector pair, f: (R, channels, 2)."""
    e1, e2 = f[:, :, 0], f[:, :, 1]
    I1 = (np.abs(e1) ** 2).sum(axis=1)
    I2 = (np.abs(e2) ** 2).sum(axis=1)
    Y = I1 * I2
    g1c = np.conj(e1) * e2
    g1 = g1c.sum(axis=1)
    sums = {
        "n": float(f.shape[0]),
        "I1": I1.sum(),
        "I2": I2.sum(),
        "Y": Y.sum(),
        "I1I1": (I1 * I1).sum(),
        "I2I2": (I2 * I2).sum(),
        "YY": (Y * Y).sum(),
        "I1Y": (I1 * Y).sum(),
        "I2Y": (I2 * Y).sum(),
        "I1I2": Y.sum(),
        "g1": g1.sum(),
        "g1_re2": (g1.real**2).sum(),
        "g1_im2": (g1.imag**2).sum(),
        "g1c": g1c.sum(axis=0),
    }
    if f.shape[1] == 2:
        cross = np.conj(e1[:, 0]) * e2[:, 1]
        sums["cross"] = cross.sum()
        sums["cross_re2"] = (cross.real**2).sum()
        sums["cross_im2"] = (cross.imag**2).sum()
    return sums


def ensemble_sums(
    config: ExperimentConfig,
    x1,
    x2,
    n: int,
    geometry: SourceGeometry | None = None,
    workers: int = 1,
    amplitude_model: str = rng.GAUSSIAN,
) -> dict:
    """Raw moment sums for each detector pair (x1[i], x2[i]).

    Pair i uses its own block of realizations, indices i*n .. i*n+n-1, so
    estimates at different pairs are statistically independent.
    """
    _check_model(amplitude_model)
    if geometry is None:
        geometry = discretize_sources(config)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.ndim != 1:
        raise ValueError("x1 and x2 must be matching 1D sequences")
    n_channels, channels = channel_map(config, geometry)
    key0 = rng.seed_key(config.seed)
    gaussian = amplitude_model == rng.GAUSSIAN
    kernels = [propagation_kernel(config, geometry.positions, [a, b]) for a, b in zip(x1, x2)]
    units = [(i, start) for i in range(len(x1)) for start in range(0, n, CHUNK)]

    def work(unit):
        i, start = unit
        count = min(CHUNK, n - start)
        f = rng.field_block(key0, i * n + start, count, channels, kernels[i], n_channels, gaussian)
        return _chunk_sums(f)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(work, units))
    else:
        partials = [work(u) for u in units]

    total = {}
    for (i, _), part in zip(units, partials):
        if i not in total:
            total[i] = dict(part)
        else:
            for key in part:
                total[i][key] = total[i][key] + part[key]
    out = {key: np.array([total[i][key] for i in range(len(x1))]) for key in partials[0]}
    out["g1c"] = out["g1c"].T  # (channels, pairs)
    out["n"] = float(n)
    out["x1"], out["x2"] = x1, x2
    return out


def _means(sums):
    n = float(sums["n"])
    return {k: v / n for k, v in sums.items() if k not in ("n", "x1", "x2")}, n


def g2_from_sums(sums) -> tuple[np.ndarray, np.ndarray]:
    """Normalised g2 = <I1 I2>/(<I1><I2>) and its delta-method standard error."""
    m, n = _means(sums)
    m1, m2, mY = m["I1"], m["I2"], m["Y"]
    ratio = mY / (m1 * m2)
    c = n / (n - 1)
    var_Y = c * (m["YY"] - mY**2)
    var_1 = c * (m["I1I1"] - m1**2)
    var_2 = c * (m["I2I2"] - m2**2)
    cov_Y1 = c * (m["I1Y"] - mY * m1)
    cov_Y2 = c * (m["I2Y"] - mY * m2)
    cov_12 = c * (m["I1I2"] - m1 * m2)
    # gradient of mY/(m1 m2) w.r.t. (mY, m1, m2)
    gY, g1, g2 = 1 / (m1 * m2), -ratio / m1, -ratio / m2
    var = (
        gY**2 * var_Y
        + g1**2 * var_1
        + g2**2 * var_2
        + 2 * gY * g1 * cov_Y1
        + 2 * gY * g2 * cov_Y2
        + 2 * g1 * g2 * cov_12
    )
    return ratio, np.sqrt(np.maximum(var, 0.0) / n)


def _complex_mean_and_stderr(sums, key):
    m, n = _means(sums)
    mean = m[key]
    var_re = (m[key + "_re2"] - mean.real**2) * n / (n - 1)
    var_im = (m[key + "_im2"] - mean.imag**2) * n / (n - 1)
    err = np.sqrt(np.maximum(var_re, 0) / n) + 1j * np.sqrt(np.maximum(var_im, 0) / n)
    return mean, err


def estimate_g2(
    config: ExperimentConfig,
    plan: ScanPlan,
    geometry: SourceGeometry | None = None,
    workers: int = 1,
    amplitude_model: str = "gaussian",
) -> EnsembleEstimate:
    n = int(config.realizations)
    if n < MIN_REALIZATIONS:
        raise PreconditionError(f"realizations must be >= {MIN_REALIZATIONS}, got {n}")
    x1, x2 = plan.detector_pairs()
    sums = ensemble_sums(config, x1, x2, n, geometry, workers, amplitude_model)
    m, _ = _means(sums)
    g2n, err = g2_from_sums(sums)
    return EnsembleEstimate(x1, x2, m["I1"], m["I2"], m["Y"], m["g1"], g2n, err, n)


def estimate_g1(
    config: ExperimentConfig,
    x1,
    x2,
    n: int,
    geometry: SourceGeometry | None = None,
    workers: int = 1,
    amplitude_model: str = "gaussian",
):
    """<E*(x1) E(x2)> summed over channels; returns (value, stderr) with
    stderr = stderr_re + 1j * stderr_im."""
    if n < MIN_REALIZATIONS:
        raise PreconditionError(f"n must be >= {MIN_REALIZATIONS}, got {n}")
    sums = ensemble_sums(config, x1, x2, n, geometry, workers, amplitude_model)
    mean, err = _complex_mean_and_stderr(sums, "g1")
    if np.ndim(x1) == 0 and np.ndim(x2) == 0:
        return complex(mean[0]), complex(err[0])
    return mean, err


def cross_channel_g1(config: ExperimentConfig, x1, x2, n: int, geometry=None, workers: int = 1):
    """<E_A*(x1) E_B(x2)> between the two orthogonal channels, with stderr."""
    if config.polarization is not Polarization.ORTHOGONAL:
        raise PreconditionError("cross-channel correlation needs orthogonal polarization")
    if n < MIN_REALIZATIONS:
        raise PreconditionError(f"n must be >= {MIN_REALIZATIONS}, got {n}")
    sums = ensemble_sums(config, x1, x2, n, geometry, workers)
    return _complex_mean_and_stderr(sums, "cross")


def moment_theorem_check(
    config: ExperimentConfig,
    x1,
    x2,
    n: int,
    geometry: SourceGeometry | None = None,
    workers: int = 1,
    amplitude_model: str = "gaussian",
):
    """|<I1 I2> - (sum_c |<E_c*(x1) E_c(x2)>|^2 + <I1><I2>)| / (<I1><I2>).

    Zero in expectation for Gaussian fields. Vectorised over detector pairs.
    """
    if n < MIN_MOMENT_REALIZATIONS:
        raise PreconditionError(f"n must be >= {MIN_MOMENT_REALIZATIONS}, got {n}")
    sums = ensemble_sums(config, x1, x2, n, geometry, workers, amplitude_model)
    m, _ = _means(sums)
    product = m["I1"] * m["I2"]
    predicted = (np.abs(m["g1c"]) ** 2).sum(axis=0) + product
    residual = np.abs(m["Y"] - predicted) / product
    if np.ndim(x1) == 0 and np.ndim(x2) == 0:
        return float(residual[0])
    return residual
