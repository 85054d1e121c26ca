"""Built-in verification checks run by ``twophoton verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytic, rng, speckle
from .geometry import (
    ExperimentConfig,
    Polarization,
    ScanMode,
    default_scan,
    discretize_sources,
    single_emitter_geometry,
)
from .scan import extract_fringes, run_scan

SCAN_HALF_RANGE = 3e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def moment_theorem(
    config: ExperimentConfig,
    n: int = 100_000,
    pairs: int = 20,
    amplitude_model: str = rng.GAUSSIAN,
    emitters: int | None = None,
    workers: int = 1,
) -> CheckResult:
    """Residual of <I1 I2> = |G1|^2 + <I1><I2> below 5/sqrt(n) at random pairs.

    ``emitters=1`` uses a single emitter in total; other values set the
    emitters per spot.
    """
    if emitters == 1:
        geometry = single_emitter_geometry(config)
    else:
        if emitters is not None:
            config = config.replace(emitters_per_spot=emitters)
        geometry = discretize_sources(config)
    picks = np.random.default_rng(config.seed).uniform(-SCAN_HALF_RANGE, SCAN_HALF_RANGE, size=(2, pairs))
    residual = speckle.moment_theorem_check(
        config, picks[0], picks[1], n, geometry=geometry, workers=workers, amplitude_model=amplitude_model
    )
    bound = 5 / np.sqrt(n)
    worst = float(np.max(residual))
    return CheckResult(
        "gaussian moment theorem",
        bool(worst < bound),
        f"max residual {worst:.3e} vs bound {bound:.3e} ({pairs} pairs, n={n}, {amplitude_model}, "
        f"{len(geometry)} emitters)",
    )


def closed_form_agreement(config: ExperimentConfig, points: int = 1000) -> CheckResult:
    x = np.random.default_rng(config.seed).uniform(-10e-3, 10e-3, size=points)
    worst = 0.0
    for pol in Polarization:
        cfg = config.replace(polarization=pol)
        general = analytic.g2(cfg, x, -x).normalized
        closed = analytic.g2_anti_scan_closed_form(cfg, x).normalized
        worst = max(worst, float(np.max(np.abs(general - closed) / np.abs(closed))))
    return CheckResult(
        "closed form vs general G2",
        worst < 1e-12,
        f"max relative error {worst:.2e} over {points} positions, both polarizations",
    )


def fringe_halving(config: ExperimentConfig) -> CheckResult:
    cfg = config.replace(polarization=Polarization.PARALLEL)
    fixed = extract_fringes(run_scan(cfg, default_scan(ScanMode.FIXED_D2))).fringe_spacing
    opposite = extract_fringes(run_scan(cfg, default_scan(ScanMode.OPPOSITE))).fringe_spacing
    if fixed is None or opposite is None:
        return CheckResult("fringe halving", False, "fringes not detected")
    ratio = opposite / fixed
    predicted = analytic.predict_fringe_spacing(cfg, ScanMode.OPPOSITE) / analytic.predict_fringe_spacing(
        cfg, ScanMode.FIXED_D2
    )
    return CheckResult(
        "fringe halving",
        abs(ratio - 0.5) <= 0.005 and predicted == 0.5,
        f"fixed-D2 {fixed * 1e3:.4f} mm, opposite {opposite * 1e3:.4f} mm, ratio {ratio:.4f}",
    )


def orthogonal_d_independence(config: ExperimentConfig, points: int = 200) -> CheckResult:
    s = config.spot_size_s
    gen = np.random.default_rng(config.seed)
    x1 = gen.uniform(-10e-3, 10e-3, size=points)
    x2 = gen.uniform(-10e-3, 10e-3, size=points)
    base = config.replace(polarization=Polarization.ORTHOGONAL)
    reference = analytic.g2_orthogonal(base, x1, x2).normalized
    reference_line = analytic.g2_orthogonal(base, x1, -x1).normalized
    worst = 0.0
    for d in (1.5 * s, 3 * s, 0.5 * config.source_separation_d + s, 2 * config.source_separation_d, 40 * s):
        cfg = base.replace(source_separation_d=d)
        for ref, other in (
            (reference, analytic.g2_orthogonal(cfg, x1, x2).normalized),
            (reference_line, analytic.g2_orthogonal(cfg, x1, -x1).normalized),
        ):
            worst = max(worst, float(np.max(np.abs(other - ref) / ref)))
    return CheckResult(
        "orthogonal d-independence", worst < 1e-12, f"max relative change {worst:.2e} over 5 separations"
    )


def run_all(
    config: ExperimentConfig,
    amplitude_model: str = rng.GAUSSIAN,
    emitters: int | None = None,
    n: int = 100_000,
    workers: int = 1,
) -> list[CheckResult]:
    return [
        moment_theorem(config, n=n, amplitude_model=amplitude_model, emitters=emitters, workers=workers),
        closed_form_agreement(config),
        fringe_halving(config),
        orthogonal_d_independence(config),
    ]


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)
