"""Source, detector and scan geometry.

All lengths are SI metres. The two spots sit symmetrically about the origin
on the scan axis: spot A on the positive side, spot B on the negative side.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Polarization(str, enum.Enum):
    PARALLEL = "parallel"
    ORTHOGONAL = "orthogonal"


class Spot(str, enum.Enum):
    A = "A"
    B = "B"


class ScanMode(str, enum.Enum):
    FIXED_D2 = "fixed_d2"
    OPPOSITE = "opposite"


@dataclass(frozen=True)
class ExperimentConfig:
    wavelength: float
    source_separation_d: float
    spot_size_s: float
    distance_z: float
    polarization: Polarization = Polarization.PARALLEL
    emitters_per_spot: int = 64
    seed: int = 42
    realizations: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "polarization", Polarization(self.polarization))
        for name in ("wavelength", "distance_z", "spot_size_s", "source_separation_d"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(name, f"must be a positive length, got {value!r}")
        if self.source_separation_d <= self.spot_size_s:
            raise ConfigError(
                "source_separation_d",
                f"must exceed spot_size_s ({self.source_separation_d!r} <= {self.spot_size_s!r}); spots overlap",
            )
        if int(self.emitters_per_spot) != self.emitters_per_spot or self.emitters_per_spot < 2:
            raise ConfigError("emitters_per_spot", f"must be an integer >= 2, got {self.emitters_per_spot!r}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ConfigError("realizations", f"must be a positive integer, got {self.realizations!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SourceGeometry:
    positions: np.ndarray
    labels: tuple  # Spot per emitter
    spot_A_interval: tuple
    spot_B_interval: tuple

    def interval(self, spot) -> tuple:
        return self.spot_A_interval if Spot(spot) is Spot.A else self.spot_B_interval

    def emitters(self, spot) -> np.ndarray:
        spot = Spot(spot)
        mask = np.array([lab is spot for lab in self.labels], dtype=bool)
        return self.positions[mask]

    def only(self, spot) -> "SourceGeometry":
        """Same intervals, emitters restricted to one spot."""
        spot = Spot(spot)
        keep = [i for i, lab in enumerate(self.labels) if lab is spot]
        return SourceGeometry(
            self.positions[keep].copy(),
            tuple(self.labels[i] for i in keep),
            self.spot_A_interval,
            self.spot_B_interval,
        )

    def subset(self, indices) -> "SourceGeometry":
        idx = list(indices)
        return SourceGeometry(
            self.positions[idx].copy(),
            tuple(self.labels[i] for i in idx),
            self.spot_A_interval,
            self.spot_B_interval,
        )

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, SourceGeometry):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.spot_A_interval == other.spot_A_interval
            and self.spot_B_interval == other.spot_B_interval
            and self.positions.tobytes() == other.positions.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class ScanPlan:
    mode: ScanMode
    positions: np.ndarray
    fixed_x2: float = 0.0
    step: float | None = None  # grid step when built by ScanPlan.grid

    def __post_init__(self):
        object.__setattr__(self, "mode", ScanMode(self.mode))
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size == 0:
            raise ConfigError("positions", "scan needs a non-empty 1D list of positions")
        if np.any(np.diff(pos) <= 0):
            raise ConfigError("positions", "scan positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def grid(cls, mode, start: float, stop: float, step: float, fixed_x2: float = 0.0) -> "ScanPlan":
        if step <= 0:
            raise ConfigError("step", f"must be positive, got {step!r}")
        n = int(round((stop - start) / step))
        if n < 0 or not np.isclose(start + n * step, stop, rtol=0, atol=1e-9 * max(abs(step), 1e-30)):
            raise ConfigError("stop", "scan range must be an integer number of steps")
        pos = start + step * np.arange(n + 1)
        if np.isclose(start, -stop, rtol=0, atol=1e-9 * step):
            # exact mirror symmetry about zero
            pos = (pos - pos[::-1]) / 2
        pos[np.isclose(pos, 0.0, rtol=0, atol=step * 1e-9)] = 0.0
        return cls(mode, pos, fixed_x2, step)

    def detector_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(x1, x2) arrays, one pair per scan position."""
        if self.mode is ScanMode.OPPOSITE:
            return self.positions.copy(), -self.positions
        return self.positions.copy(), np.full_like(self.positions, self.fixed_x2)


def spot_interval(config: ExperimentConfig, spot) -> tuple[float, float]:
    d, s = config.source_separation_d, config.spot_size_s
    if Spot(spot) is Spot.A:
        return ((d - s) / 2, (d + s) / 2)
    return (-(d + s) / 2, -(d - s) / 2)


def transmission(geometry: SourceGeometry, spot, x0: float) -> int:
    lo, hi = geometry.interval(spot)
    return int(lo <= x0 <= hi)


def discretize_sources(config: ExperimentConfig) -> SourceGeometry:
    """Midpoint-rule emitters: ``emitters_per_spot`` per spot, spacing s/N.

    Spot B is the exact mirror image of spot A.
    """
    if not isinstance(config, ExperimentConfig):
        raise TypeError("discretize_sources expects an ExperimentConfig")
    n = int(config.emitters_per_spot)
    d, s = config.source_separation_d, config.spot_size_s
    # symmetric offsets (j + 1/2)/n - 1/2, exactly antisymmetric in j <-> n-1-j
    offsets = (np.arange(n) - (n - 1) / 2) * (s / n)
    pos_a = d / 2 + offsets
    positions = np.concatenate([pos_a, -pos_a[::-1]])
    labels = (Spot.A,) * n + (Spot.B,) * n
    positions.setflags(write=False)
    return SourceGeometry(positions, labels, spot_interval(config, Spot.A), spot_interval(config, Spot.B))


def single_emitter_geometry(config: ExperimentConfig, spot=Spot.A) -> SourceGeometry:
    """One emitter at the centre of ``spot``; used for non-Gaussian statistics checks."""
    lo, hi = spot_interval(config, spot)
    pos = np.array([(lo + hi) / 2])
    return SourceGeometry(pos, (Spot(spot),), spot_interval(config, Spot.A), spot_interval(config, Spot.B))


# fringe period 1.7 mm for the classical (fixed D2) scan fixes z = period * d / wavelength
REFERENCE_WAVELENGTH = 632.8e-9
REFERENCE_SEPARATION = 1.1e-3
REFERENCE_SPOT_SIZE = 0.11e-3
REFERENCE_CLASSICAL_PERIOD = 1.7e-3
REFERENCE_DISTANCE = 2.955


def reference_paper_config(**overrides) -> ExperimentConfig:
    params = dict(
        wavelength=REFERENCE_WAVELENGTH,
        source_separation_d=REFERENCE_SEPARATION,
        spot_size_s=REFERENCE_SPOT_SIZE,
        distance_z=REFERENCE_DISTANCE,
        polarization=Polarization.PARALLEL,
        emitters_per_spot=64,
        seed=42,
        realizations=200_000,
    )
    params.update(overrides)
    return ExperimentConfig(**params)


def default_scan(mode, engine: str = "analytic", fixed_x2: float = 0.0) -> ScanPlan:
    """Opposite: +-3 mm; fixed D2: +-4 mm. Step 0.05 mm analytic, 0.25 mm Monte Carlo."""
    mode = ScanMode(mode)
    step = 0.05e-3 if engine == "analytic" else 0.25e-3
    half = 3e-3 if mode is ScanMode.OPPOSITE else 4e-3
    return ScanPlan.grid(mode, -half, half, step, fixed_x2)
