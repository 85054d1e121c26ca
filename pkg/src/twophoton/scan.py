"""Scan drivers, fringe extraction and curve comparison."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import analytic, speckle
from .geometry import ExperimentConfig, Polarization, ScanMode, ScanPlan

ANALYTIC_PROMINENCE = 1e-6
# samples per predicted fringe period below which extraction refuses to run
MIN_SAMPLES_PER_FRINGE = 3


class Engine(str, enum.Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "montecarlo"


class GridTooCoarse(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationCurve:
    x: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    source: Engine
    mode: ScanMode
    polarization: Polarization
    config: ExperimentConfig | None = None
    raw: np.ndarray | None = None
    n_realizations: int = 0
    partner: np.ndarray | None = None  # x2 of each point; None means the mode's default

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve positions must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "g2", np.asarray(self.g2, dtype=float))
        object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))
        object.__setattr__(self, "source", Engine(self.source))
        object.__setattr__(self, "mode", ScanMode(self.mode))
        object.__setattr__(self, "polarization", Polarization(self.polarization))
        if self.source is Engine.ANALYTIC and np.any(self.stderr != 0):
            raise ValueError("analytic curves carry zero stderr")


@dataclass(frozen=True)
class FringeReport:
    peak_positions: np.ndarray
    fringe_spacing: float | None
    spacing_stderr: float | None
    visibility: float
    center_peak_value: float
    model_residual_rms: float
    prominence_threshold: float = field(default=0.0)

    @property
    def fringes_detected(self) -> bool:
        return self.fringe_spacing is not None

    @property
    def status(self) -> str:
        return "FringesDetected" if self.fringes_detected else "NoFringesDetected"


def run_scan(
    config: ExperimentConfig,
    plan: ScanPlan,
    engine=Engine.ANALYTIC,
    workers: int = 1,
    geometry=None,
) -> CorrelationCurve:
    engine = Engine(engine)
    x1, x2 = plan.detector_pairs()
    if engine is Engine.ANALYTIC:
        value = analytic.g2(config, x1, x2)
        return CorrelationCurve(
            plan.positions, value.normalized, np.zeros(len(x1)), engine, plan.mode,
            config.polarization, config, raw=value.raw, partner=x2,
        )
    est = speckle.estimate_g2(config, plan, geometry=geometry, workers=workers)
    return CorrelationCurve(
        plan.positions, est.g2_normalized, est.stderr_g2, engine, plan.mode,
        config.polarization, config, n_realizations=est.n_realizations, partner=x2,
    )


def analytic_model(curve: CorrelationCurve) -> np.ndarray:
    """Closed-form normalised g2 on the curve's grid (needs curve.config)."""
    cfg = curve.config.replace(polarization=curve.polarization)
    if curve.partner is not None:
        x2 = curve.partner
    elif curve.mode is ScanMode.OPPOSITE:
        x2 = -curve.x
    else:
        x2 = np.zeros_like(curve.x)
    return analytic.g2(cfg, curve.x, x2).normalized


def _parabolic_vertex(x, y, i):
    """Vertex of the parabola through samples i-1, i, i+1 (any spacing)."""
    xa, xb, xc = x[i - 1], x[i], x[i + 1]
    ya, yb, yc = y[i - 1], y[i], y[i + 1]
    denom = (xa - xb) * (xa - xc) * (xb - xc)
    a = (xc * (yb - ya) + xb * (ya - yc) + xa * (yc - yb)) / denom
    b = (xc**2 * (ya - yb) + xb**2 * (yc - ya) + xa**2 * (yb - yc)) / denom
    if a >= 0:
        return xb, yb
    c = (xb * xc * (xb - xc) * ya + xc * xa * (xc - xa) * yb + xa * xb * (xa - xb) * yc) / denom
    xv = -b / (2 * a)
    return xv, c - b * b / (4 * a)


def extract_fringes(curve: CorrelationCurve) -> FringeReport:
    """Locate peaks, fringe spacing and visibility of a g2 curve.

    Peaks are local maxima whose prominence exceeds 1e-6 (analytic) or three
    times the median stderr (Monte Carlo), refined by 3-point parabolic
    interpolation. With fewer than two such peaks the report carries no
    spacing (NoFringesDetected).
    """
    x, y = curve.x, curve.g2
    if len(x) < 7:
        raise ValueError("fringe extraction needs at least 7 scan points")
    if curve.config is not None and curve.polarization is Polarization.PARALLEL:
        cfg = curve.config.replace(polarization=curve.polarization)
        expected = analytic.predict_fringe_spacing(cfg, curve.mode)
        step = float(np.max(np.diff(x)))
        if step * MIN_SAMPLES_PER_FRINGE > expected:
            raise GridTooCoarse(
                f"grid step {step:.3e} m too coarse for expected fringe spacing {expected:.3e} m"
            )

    if curve.source is Engine.ANALYTIC:
        threshold = ANALYTIC_PROMINENCE
    else:
        threshold = 3.0 * float(np.median(curve.stderr))
    idx, _ = find_peaks(y, prominence=threshold)
    refined = [_parabolic_vertex(x, y, i) for i in idx]
    peaks = np.array([p for p, _ in refined])
    heights = np.array([h for _, h in refined])

    if len(peaks) >= 2:
        gaps = np.diff(peaks)
        spacing = float(gaps.mean())
        spacing_err = float(gaps.std(ddof=1) / np.sqrt(len(gaps))) if len(gaps) > 1 else 0.0
        centre = int(np.argmin(np.abs(peaks)))
        lo = peaks[max(centre - 1, 0)]
        hi = peaks[min(centre + 1, len(peaks) - 1)]
        region = (x >= lo) & (x <= hi)
        centre_value = float(heights[centre])
    else:
        spacing = spacing_err = None
        region = np.ones_like(x, dtype=bool)
        centre_value = float(heights[0]) if len(peaks) else float(y.max())

    p = float(y[region].max()) - 1.0
    q = float(y[region].min()) - 1.0
    visibility = float(np.clip((p - q) / (p + q), 0.0, 1.0)) if p + q > 0 else 0.0

    if curve.config is not None:
        residual = float(np.sqrt(np.mean((y - analytic_model(curve)) ** 2)))
    else:
        residual = float("nan")
    return FringeReport(peaks, spacing, spacing_err, visibility, centre_value, residual, threshold)


def compare_curves(a: CorrelationCurve, b: CorrelationCurve) -> dict:
    if a.mode is not b.mode or a.x.shape != b.x.shape or not np.array_equal(a.x, b.x):
        raise GridMismatch("curves must share scan mode and grid")
    diff = a.g2 - b.g2
    var = a.stderr**2 + b.stderr**2
    chi2 = float(np.mean(diff**2 / var)) if np.all(var > 0) else float("nan")
    return {
        "rms": float(np.sqrt(np.mean(diff**2))),
        "max_abs": float(np.max(np.abs(diff))),
        "chi2_per_point": chi2,
    }
