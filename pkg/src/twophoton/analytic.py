"""Closed-form first- and second-order correlation functions.

Everything here is vectorised over the detector coordinates; scalars in give
numpy scalars out.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .geometry import ExperimentConfig, Polarization, ScanMode, Spot

SERIES_CUTOFF = 1e-6


class NoFringes(ValueError):
    """Raised when a fringe spacing is requested for orthogonal polarization."""


class G2Value(NamedTuple):
    raw: np.ndarray
    normalized: np.ndarray


def sinc(u):
    """Unnormalised sinc, sin(u)/u, with a series branch near zero."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    return np.where(small, 1.0 - u * u / 6.0, np.sin(safe) / safe)


def dc_level(config: ExperimentConfig) -> float:
    """G1 of one spot at zero separation, k s / (2 pi z)."""
    return config.wavenumber * config.spot_size_s / (2 * np.pi * config.distance_z)


def baseline(config: ExperimentConfig) -> float:
    """Far-field G2 level (k s / (pi z))**2, the normalisation of g2."""
    return (2 * dc_level(config)) ** 2


def g1_spot(config: ExperimentConfig, spot, x1, x2):
    """First-order correlation of one rectangular spot between x1 and x2.

    Equals (1/(pi dx)) sin(k dx s/2z) [cos(k dx d/2z) -/+ i sin(k dx d/2z)]
    with dx = x1 - x2; minus for spot A, plus for spot B.
    """
    k, z = config.wavenumber, config.distance_z
    dx = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    sign = -1.0 if Spot(spot) is Spot.A else 1.0
    envelope = dc_level(config) * sinc(k * dx * config.spot_size_s / (2 * z))
    phase = k * dx * config.source_separation_d / (2 * z)
    return envelope * (np.cos(phase) + 1j * sign * np.sin(phase))


def _dc_products(config, x1, x2, pairs):
    total = 0.0
    for m1, m2 in pairs:
        total = total + (g1_spot(config, m1, x1, x1) * g1_spot(config, m2, x2, x2)).real
    return total


_ALL_PAIRS = ((Spot.A, Spot.A), (Spot.A, Spot.B), (Spot.B, Spot.A), (Spot.B, Spot.B))


def g2_parallel(config: ExperimentConfig, x1, x2) -> G2Value:
    cross = g1_spot(config, Spot.A, x1, x2) + g1_spot(config, Spot.B, x1, x2)
    raw = np.abs(cross) ** 2 + _dc_products(config, x1, x2, _ALL_PAIRS)
    return G2Value(raw, raw / baseline(config))


def g2_orthogonal(config: ExperimentConfig, x1, x2) -> G2Value:
    # no A-B cross term: orthogonally polarised fields do not interfere
    raw = (
        np.abs(g1_spot(config, Spot.A, x1, x2)) ** 2
        + np.abs(g1_spot(config, Spot.B, x1, x2)) ** 2
        + _dc_products(config, x1, x2, _ALL_PAIRS)
    )
    return G2Value(raw, raw / baseline(config))


def g2(config: ExperimentConfig, x1, x2) -> G2Value:
    if config.polarization is Polarization.PARALLEL:
        return g2_parallel(config, x1, x2)
    return g2_orthogonal(config, x1, x2)


def g2_anti_scan_closed_form(config: ExperimentConfig, x) -> G2Value:
    """G2 on the opposite-scan line (x, -x) from the specialised closed forms."""
    x = np.asarray(x, dtype=float)
    half_lambda_z = config.wavelength / 2 * config.distance_z
    envelope = sinc(np.pi * config.spot_size_s * x / half_lambda_z) ** 2
    if config.polarization is Polarization.PARALLEL:
        modulation = envelope * np.cos(np.pi * config.source_separation_d * x / half_lambda_z) ** 2
    else:
        modulation = 0.5 * envelope
    normalized = 1.0 + modulation
    return G2Value(baseline(config) * normalized, normalized)


def predict_fringe_spacing(config: ExperimentConfig, mode) -> float:
    if config.polarization is Polarization.ORTHOGONAL:
        raise NoFringes("orthogonal polarization produces no second-order fringes")
    classical = config.wavelength * config.distance_z / config.source_separation_d
    return classical if ScanMode(mode) is ScanMode.FIXED_D2 else classical / 2
