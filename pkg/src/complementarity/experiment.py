"""Campaigns over slit widths, intensity maps and the complementarity check."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import __version__
from .photon_stats import (
    DetectorModel,
    SourceModel,
    derive_seed,
    estimate_record,
    fit_visibility,
    simulate_blocked_run,
    simulate_scan,
)
from .wave_optics import (
    ComplementarityRecord,
    GratingSpec,
    OpticalSetup,
    analytic_record,
    check_period,
    intensity_at,
)

MODES = ("analytic", "monte_carlo", "both")
VIOLATION_Z = 5.0


class CampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class Campaign:
    setup: OpticalSetup
    slit_widths_m: tuple = (20e-6, 50e-6, 70e-6, 80e-6)
    slit_count: int = 20
    x_step_m: float = 4e-6
    bin_time_s: float = 3.0
    scan_periods: float = 2.5
    source: SourceModel = field(default_factory=SourceModel)
    detectors: DetectorModel = field(default_factory=DetectorModel)
    seed: int = 0
    mode: str = "both"
    period_override_m: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "slit_widths_m", tuple(float(a) for a in self.slit_widths_m))
        if not self.slit_widths_m:
            raise ValueError("campaign needs at least one slit width")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for a in self.slit_widths_m:
            if not 0.0 <= a <= self.period_m * (1 + 1e-9):
                raise ValueError(f"slit width {a} outside [0, {self.period_m}]")
        if self.x_step_m <= 0 or self.bin_time_s <= 0 or self.scan_periods <= 0:
            raise ValueError("scan step, bin time and extent must be positive")

    @property
    def period_m(self):
        if self.period_override_m is not None:
            return self.period_override_m
        return self.setup.interfringe_m

    @property
    def n_points(self):
        return int(math.floor(self.scan_periods * self.period_m / self.x_step_m + 1e-9)) + 1

    def grating(self, slit_width, position=0.0):
        if self.period_override_m is None:
            return GratingSpec.matched(self.setup, slit_width, self.slit_count, position)
        return GratingSpec(self.period_override_m, slit_width, self.slit_count, position)


@dataclass
class WidthResult:
    slit_width_m: float
    analytic: ComplementarityRecord
    estimated: Optional[ComplementarityRecord] = None
    scan: object = None
    fit: object = None
    blocked_runs: tuple = ()

    @property
    def record(self):
        """Estimated record when available, else the analytic one."""
        return self.estimated if self.estimated is not None else self.analytic


@dataclass
class CampaignReport:
    campaign: Campaign
    widths: list
    mean_sum_sq: float
    mean_sum_sq_err: float
    provenance: dict


def run_width(campaign, index, slit_width):
    allow = campaign.period_override_m is not None
    grating = campaign.grating(slit_width)
    analytic = analytic_record(campaign.setup, grating, allow_mismatch=allow)
    result = WidthResult(slit_width, analytic)
    if campaign.mode == "analytic":
        return result
    seed = derive_seed(campaign.seed, index)
    scan = simulate_scan(campaign.setup, grating, campaign.source, campaign.detectors,
                         0.0, campaign.x_step_m, campaign.n_points, campaign.bin_time_s, seed)
    fit = fit_visibility(scan, campaign.period_m)
    runs = tuple(simulate_blocked_run(campaign.setup, grating, blocked, campaign.source,
                                      campaign.detectors, campaign.bin_time_s, seed)
                 for blocked in (2, 1))
    d = estimate_record(*runs)
    result.estimated = ComplementarityRecord(fit.visibility, d.distinguishability, d.d1, d.d2,
                                             fit.stderr, d.distinguishability_err,
                                             d.d1_err, d.d2_err)
    result.scan, result.fit, result.blocked_runs = scan, fit, runs
    return result


def run_campaign(campaign):
    """Evaluate every slit width and aggregate V^2 + D^2.

    The aggregate is the unweighted mean over widths of the primary record
    (estimated if simulated, else analytic) with the standard error of the
    mean; a single width reports its own propagated error.
    """
    if campaign.period_override_m is None:
        check_period(campaign.setup, campaign.grating(campaign.slit_widths_m[0]))
    widths = []
    for i, a in enumerate(campaign.slit_widths_m):
        try:
            widths.append(run_width(campaign, i, a))
        except Exception as exc:
            raise CampaignError(f"slit width {a:.9g} m: {exc}") from exc
    sums = np.array([w.record.sum_of_squares for w in widths])
    mean = float(sums.mean())
    if len(sums) > 1:
        err = float(sums.std(ddof=1) / math.sqrt(len(sums)))
    else:
        err = widths[0].record.sum_of_squares_err
    provenance = {
        "package_version": __version__,
        "seed": int(campaign.seed),
        "mode": campaign.mode,
        "aggregate": "unweighted mean over slit widths, standard error of the mean",
    }
    return CampaignReport(campaign, widths, mean, err, provenance)


class CheckResult(NamedTuple):
    passed: bool
    sum_of_squares: float
    excess: float
    z: float


def complementarity_check(record, threshold=VIOLATION_Z, atol=1e-12):
    """Test ``V^2 + D^2 <= 1`` with propagated uncertainty.

    A violation is flagged only when the excess over 1 exceeds ``threshold``
    standard errors. Excesses below ``atol`` count as rounding.
    """
    total = record.sum_of_squares
    excess = total - 1.0
    sigma = record.sum_of_squares_err
    if abs(excess) <= atol:
        z = 0.0
    elif sigma > 0:
        z = excess / sigma
    else:
        z = math.copysign(math.inf, excess)
    return CheckResult(bool(z <= threshold), float(total), float(excess), float(z))


@dataclass
class IntensityMap:
    u: np.ndarray            # spatial frequency axis, 1/m
    x: np.ndarray            # grating position axis, m
    intensity: np.ndarray    # shape (len(x), len(u))
    slit_width_m: float
    period_m: float


def generate_intensity_map(setup, slit_width, n_u, n_x, slit_count=20, u_extent=3.0,
                           x_periods=2.0):
    """Diffracted intensity over ``u in [-3 u0, 3 u0]`` and ``x in [0, 2 Lambda]``."""
    if n_u < 16 or n_x < 16:
        raise ValueError("intensity maps need at least 16 points per axis")
    grating = GratingSpec.matched(setup, slit_width, slit_count)
    u0 = setup.spatial_frequency
    u = np.linspace(-u_extent * u0, u_extent * u0, n_u)
    x = np.linspace(0.0, x_periods * grating.period_m, n_x)
    grid = np.stack([intensity_at(setup, grating.at(xi), u) for xi in x])
    return IntensityMap(u, x, grid, grating.slit_width_m, grating.period_m)
