"""Two-photon interference from two independent pseudo-thermal sources.

Closed-form and Monte Carlo second-order correlation curves, fringe
extraction, and a command-line driver.
"""
__version__ = "0.1.0"

from .analytic import (
    G2Value,
    NoFringes,
    g1_spot,
    g2,
    g2_anti_scan_closed_form,
    g2_orthogonal,
    g2_parallel,
    predict_fringe_spacing,
)
from .geometry import (
    ConfigError,
    ExperimentConfig,
    Polarization,
    ScanMode,
    ScanPlan,
    SourceGeometry,
    Spot,
    discretize_sources,
    reference_paper_config,
    transmission,
)
from .scan import CorrelationCurve, FringeReport, compare_curves, extract_fringes, run_scan
from .speckle import estimate_g1, estimate_g2, moment_theorem_check
