"""Photon-counting simulation: grating scans, blocked-path runs and HBT.

Random streams
--------------
Every draw comes from ``stream(seed, *key)``: a Philox generator keyed by
``SeedSequence(seed, spawn_key=key)``. Keys used here:

* ``(SCAN, i)``        counts at scan point ``i``
* ``(DARK,)``          shutter-closed dark run of a scan
* ``(BLOCKED, path)``  blocked-path run with ``path`` blocked
* ``(BLOCKED_DARK, path)`` its dark run
* ``(HBT, chunk)``     chunk ``chunk`` of an HBT acquisition

Since each point or chunk owns its stream, results do not depend on the
order (or parallel schedule) in which points are simulated.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .wave_optics import GratingSpec, detector_intensity

SCAN, DARK, BLOCKED, BLOCKED_DARK, HBT = 1, 2, 3, 4, 5
DARK_RUN_FACTOR = 10
HBT_CHUNK = 250_000


class FitError(RuntimeError):
    """Visibility fit could not be trusted."""


class DegenerateRunError(ValueError):
    """A blocked-path run has no counts left to form a ratio."""


def stream(seed, *key):
    """Independent, reproducible generator for ``(seed, key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


def derive_seed(seed, *key):
    """Integer child seed, used to hand sub-experiments their own seeds."""
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SourceModel:
    """Pulsed single-photon source with Poissonian background.

    Defaults give desk-scale count rates; they are not measured values.
    """

    repetition_rate_hz: float = 4e6
    emission_probability: float = 0.02
    background_mean: float = 0.004
    collection_efficiency: float = 1.0

    def __post_init__(self):
        if not self.repetition_rate_hz > 0:
            raise ValueError("repetition rate must be positive")
        if not 0.0 <= self.emission_probability <= 1.0:
            raise ValueError("emission probability must lie in [0, 1]")
        if not self.background_mean >= 0.0:
            raise ValueError("background mean must be non-negative")
        if not 0.0 < self.collection_efficiency <= 1.0:
            raise ValueError("collection efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class DetectorModel:
    dark_rate_hz: float = 180.0
    quantum_efficiency: float = 1.0
    acceptance_halfwidth: float = 0.0  # in 1/m; 0 means point detectors

    def __post_init__(self):
        if not self.dark_rate_hz >= 0:
            raise ValueError("dark rate must be non-negative")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValueError("quantum efficiency must lie in (0, 1]")
        if not self.acceptance_halfwidth >= 0:
            raise ValueError("acceptance half-width must be non-negative")


def signal_rate(source, detectors):
    """Detected signal photons per second with both detectors combined."""
    return (source.repetition_rate_hz * source.emission_probability
            * source.collection_efficiency * detectors.quantum_efficiency)


def _rate_scale(setup, grating, source, detectors):
    # no grating: a slit as wide as the period; each detector then sees half the flux
    open_grating = GratingSpec(grating.period_m, grating.period_m, grating.slit_count, 0.0)
    reference = detector_intensity(setup, open_grating, 1, detectors.acceptance_halfwidth)
    return 0.5 * signal_rate(source, detectors) / reference


def expected_rates(setup, grating, source, detectors, blocked=None):
    """Mean signal rates (counts/s, without dark counts) at P1 and P2."""
    scale = _rate_scale(setup, grating, source, detectors)
    w = detectors.acceptance_halfwidth
    return (scale * detector_intensity(setup, grating, 1, w, blocked),
            scale * detector_intensity(setup, grating, 2, w, blocked))


@dataclass
class ScanResult:
    """Counts recorded while the grating is translated.

    In noiseless mode the count arrays hold expected values (floats).
    """

    positions_m: np.ndarray
    counts_p1: np.ndarray
    counts_p2: np.ndarray
    expected_rate_p1: np.ndarray
    expected_rate_p2: np.ndarray
    bin_time_s: float
    dark_estimate_hz: float
    dark_rate_hz: float
    rng_seed: int
    noiseless: bool = False
    dark_estimate_err_hz: float = 0.0

    def __post_init__(self):
        n = len(self.positions_m)
        for name in ("counts_p1", "counts_p2", "expected_rate_p1", "expected_rate_p2"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if n > 1:
            steps = np.diff(self.positions_m)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError("scan positions must increase with a constant step")

    def counts(self, detector):
        return {1: self.counts_p1, 2: self.counts_p2}[detector]


def simulate_scan(setup, grating_template, source, detectors, x_start, x_step, n_points,
                  bin_time, seed, noiseless=False):
    """Translate the grating and record counts at both detectors.

    Each point integrates ``bin_time`` seconds. A shutter-closed run of
    ``DARK_RUN_FACTOR * bin_time`` seconds provides the dark estimate stored
    in the result; in noiseless mode the exact dark rate is stored instead.
    """
    if n_points < 8:
        raise ValueError(f"a scan needs at least 8 points, got {n_points}")
    if not bin_time > 0:
        raise ValueError("bin time must be positive")
    if not x_step > 0:
        raise ValueError("scan step must be positive")
    positions = x_start + x_step * np.arange(n_points)
    rates = np.array([expected_rates(setup, grating_template.at(x), source, detectors)
                      for x in positions])
    dark = detectors.dark_rate_hz
    means = (rates + dark) * bin_time
    if noiseless:
        counts = means
        dark_estimate, dark_err = dark, 0.0
    else:
        counts = np.array([stream(seed, SCAN, i).poisson(means[i]) for i in range(n_points)])
        dark_estimate, dark_err = dark_run(dark, DARK_RUN_FACTOR * bin_time, stream(seed, DARK))
    return ScanResult(positions, counts[:, 0], counts[:, 1], rates[:, 0], rates[:, 1],
                      float(bin_time), dark_estimate, dark, int(seed), noiseless, dark_err)


def dark_run(dark_rate, duration, rng):
    """Shutter-closed acquisition on both detectors; returns (rate, stderr) per detector."""
    total = rng.poisson(dark_rate * duration, size=2).sum()
    exposure = 2.0 * duration
    return float(total / exposure), float(np.sqrt(total) / exposure)


class VisibilityFit(NamedTuple):
    visibility: float
    stderr: float
    phase: float
    offset: float
    amplitude: float
    reduced_chi2: float


def fit_cosine(x, counts, period, variance=None, dark_counts=0.0, dark_counts_err=0.0,
               max_reduced_chi2=None, iterations=3):
    """Linear least-squares fit of ``A + B cos(2 pi x / period + phi)``.

    ``dark_counts`` (per point) is subtracted before fitting. Without an
    explicit ``variance`` the fit is reweighted with the Poisson variance of
    the fitted model (raw counts including dark), which avoids the downward
    offset bias of weighting by the observed counts. Returns a
    :class:`VisibilityFit` with ``V = |B| / A``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(counts, dtype=float) - dark_counts
    k = 2.0 * np.pi / period
    basis = np.column_stack([np.ones_like(x), np.cos(k * x), np.sin(k * x)])
    if variance is None:
        var = np.ones_like(y)
        for _ in range(iterations):
            coef, cov = _weighted_lstsq(basis, y, var)
            var = np.maximum(basis @ coef + dark_counts, 1.0)
    else:
        var = np.broadcast_to(np.asarray(variance, dtype=float), y.shape)
    coef, cov = _weighted_lstsq(basis, y, var)
    offset, bc, bs = coef
    if offset <= 0:
        raise FitError(f"non-positive offset {offset:.6g} after dark subtraction")
    amplitude = float(np.hypot(bc, bs))
    visibility = amplitude / offset
    dof = len(x) - 3
    resid = (y - basis @ coef) / np.sqrt(var)
    reduced_chi2 = float(resid @ resid / dof) if dof > 0 else float("nan")
    if max_reduced_chi2 is not None and reduced_chi2 > max_reduced_chi2:
        raise FitError(f"reduced chi2 {reduced_chi2:.3g} exceeds {max_reduced_chi2}")
    if amplitude > 0:
        grad = np.array([-visibility / offset, bc / (amplitude * offset), bs / (amplitude * offset)])
    else:
        grad = np.array([0.0, 1.0 / offset, 0.0])
    var_v = float(grad @ cov @ grad)
    # a constant dark error shifts the offset only
    var_v += (visibility / offset * dark_counts_err) ** 2
    phase = float(np.arctan2(-bs, bc))
    return VisibilityFit(float(visibility), float(np.sqrt(var_v)), phase, float(offset),
                         amplitude, reduced_chi2)


def _weighted_lstsq(basis, y, variance):
    w = 1.0 / np.sqrt(variance)
    design = basis * w[:, None]
    coef, *_ = np.linalg.lstsq(design, y * w, rcond=None)
    return coef, np.linalg.inv(design.T @ design)


def fit_visibility(scan, known_period, detector=1, max_reduced_chi2=None):
    """Fringe visibility of a scan at one detector, dark counts removed."""
    span = scan.positions_m[-1] - scan.positions_m[0]
    if span < 1.5 * known_period * (1 - 1e-9):
        raise FitError(f"scan spans {span / known_period:.3g} periods; need at least 1.5")
    return fit_cosine(scan.positions_m, scan.counts(detector), known_period,
                      dark_counts=scan.dark_estimate_hz * scan.bin_time_s,
                      dark_counts_err=scan.dark_estimate_err_hz * scan.bin_time_s,
                      max_reduced_chi2=max_reduced_chi2)


class BlockedRun(NamedTuple):
    """Counts (and expected dark counts) with one path blocked."""

    n1: float
    n2: float
    blocked_path: int
    dark_counts: float = 0.0
    dark_counts_err: float = 0.0


def simulate_blocked_run(setup, grating, blocked_path, source, detectors, bin_time, seed,
                         noiseless=False):
    """Acquire ``bin_time`` seconds with ``blocked_path`` (1 or 2) blocked.

    A dark run of ``DARK_RUN_FACTOR * bin_time`` accompanies the acquisition,
    so the dark contribution can be removed by the estimator.
    """
    if blocked_path not in (1, 2):
        raise ValueError(f"blocked path must be 1 or 2, got {blocked_path!r}")
    if not bin_time > 0:
        raise ValueError("bin time must be positive")
    r1, r2 = expected_rates(setup, grating, source, detectors, blocked=blocked_path)
    dark = detectors.dark_rate_hz
    means = np.array([r1 + dark, r2 + dark]) * bin_time
    if noiseless:
        return BlockedRun(float(means[0]), float(means[1]), blocked_path, dark * bin_time, 0.0)
    n1, n2 = stream(seed, BLOCKED, blocked_path).poisson(means)
    rate, rate_err = dark_run(dark, DARK_RUN_FACTOR * bin_time,
                              stream(seed, BLOCKED_DARK, blocked_path))
    return BlockedRun(int(n1), int(n2), blocked_path, rate * bin_time, rate_err * bin_time)


def _half_contrast(n1, n2, dark, dark_err):
    """0.5 |m1 - m2| / (m1 + m2) for dark-corrected m_i, with its stderr."""
    m1, m2 = n1 - dark, n2 - dark
    total = m1 + m2
    if n1 + n2 <= 0 or total <= 0:
        raise DegenerateRunError(f"no counts left in run ({n1}, {n2}) after dark subtraction")
    value = 0.5 * abs(m1 - m2) / total
    sign = 1.0 if m1 >= m2 else -1.0
    g1 = sign * m2 / total**2
    g2 = -sign * m1 / total**2
    # Poisson variance of raw counts; the dark estimate enters both terms equally
    var = g1**2 * max(n1, 0) + g2**2 * max(n2, 0) + ((g1 + g2) * dark_err) ** 2
    return float(value), float(np.sqrt(var))


def estimate_distinguishability(run1, run2):
    """Distinguishability from two blocked-path runs.

    ``run1`` is the acquisition with path 2 blocked (gives D1), ``run2`` the
    one with path 1 blocked (gives D2). Runs may be ``(n1, n2)`` pairs or
    :class:`BlockedRun` records, whose dark counts are subtracted.

    Returns ``(D, D_stderr, d1, d2)``; the stderrs of ``d1`` and ``d2`` are
    available through :func:`estimate_record`.
    """
    rec = estimate_record(run1, run2)
    return rec.distinguishability, rec.distinguishability_err, rec.d1, rec.d2


class DistinguishabilityEstimate(NamedTuple):
    distinguishability: float
    distinguishability_err: float
    d1: float
    d2: float
    d1_err: float
    d2_err: float


def _unpack(run):
    if isinstance(run, BlockedRun):
        return run.n1, run.n2, run.dark_counts, run.dark_counts_err
    n1, n2 = run
    return n1, n2, 0.0, 0.0


def estimate_record(run1, run2):
    d1, e1 = _half_contrast(*_unpack(run1))
    d2, e2 = _half_contrast(*_unpack(run2))
    return DistinguishabilityEstimate(d1 + d2, float(np.hypot(e1, e2)), d1, d2, e1, e2)


@dataclass(frozen=True)
class HbtResult:
    n_triggers: int
    n1: int
    n2: int
    n_coincidence: int

    @property
    def alpha(self):
        if self.n1 == 0 or self.n2 == 0:
            return float("nan")
        return self.n_coincidence * self.n_triggers / (self.n1 * self.n2)

    @property
    def alpha_err(self):
        """Delta-method stderr with multinomial per-trigger outcomes."""
        nt, c = self.n_triggers, self.n_coincidence
        a1, a2 = self.n1 - c, self.n2 - c
        if self.n1 == 0 or self.n2 == 0:
            return float("nan")
        alpha = self.alpha
        d_c = alpha * (1 / c - 1 / self.n1 - 1 / self.n2) if c else nt / (self.n1 * self.n2)
        grad = np.array([d_c, -alpha / self.n1, -alpha / self.n2])
        p = np.array([c, a1, a2], dtype=float) / nt
        cov = nt * (np.diag(p) - np.outer(p, p))
        return float(np.sqrt(max(grad @ cov @ grad, 0.0)))


def simulate_hbt(source, detectors, n_triggers, seed):
    """Trigger-gated anticorrelation measurement without the grating.

    Per pulse: one signal photon with ``emission_probability`` plus
    Poisson(``background_mean``) background photons. Each photon goes to
    P1 or P2 with probability 1/2 and is detected with probability
    ``collection_efficiency * quantum_efficiency``. Detectors only click,
    they do not resolve photon number. Dark counts are ignored inside the
    coincidence gate.
    """
    if n_triggers < 10_000:
        raise ValueError(f"need at least 1e4 triggers, got {n_triggers}")
    eta = source.collection_efficiency * detectors.quantum_efficiency
    n1 = n2 = nc = 0
    for chunk, start in enumerate(range(0, n_triggers, HBT_CHUNK)):
        size = min(HBT_CHUNK, n_triggers - start)
        rng = stream(seed, HBT, chunk)
        photons = rng.binomial(1, source.emission_probability, size)
        if source.background_mean > 0:
            photons = photons + rng.poisson(source.background_mean, size)
        hits = rng.multinomial(photons, [eta / 2, eta / 2, 1.0 - eta])
        c1 = hits[:, 0] > 0
        c2 = hits[:, 1] > 0
        n1 += int(c1.sum())
        n2 += int(c2.sum())
        nc += int((c1 & c2).sum())
    return HbtResult(int(n_triggers), n1, n2, nc)


def expected_alpha(source, detectors):
    """Exact alpha implied by the source model (probability generating function)."""
    eta = source.collection_efficiency * detectors.quantum_efficiency
    p, mu = source.emission_probability, source.background_mean

    # with h = eta/2 and E = exp(-mu h) the generating function (1 - p + p z) exp(mu (z - 1))
    # gives P(no click on one detector) = (1 - p h) E, factorised to avoid cancellation
    h = eta / 2
    miss = -np.expm1(-mu * h)
    signal = p * h * np.exp(-mu * h)
    click = miss + signal
    both = miss * (miss + 2.0 * signal)
    if click <= 0:
        return float("nan")
    return float(both / click**2)


def calibrate_background(target_alpha, emission_probability, collection_efficiency=1.0,
                         quantum_efficiency=1.0, repetition_rate_hz=4e6):
    """Background mean that makes :func:`expected_alpha` equal ``target_alpha``."""
    if not 0.0 < target_alpha < 1.0:
        raise ValueError("target alpha must lie in (0, 1)")
    if not emission_probability > 0:
        raise ValueError("calibration needs a non-zero signal emission probability")
    det = DetectorModel(0.0, quantum_efficiency)

    def mismatch(mu):
        src = SourceModel(repetition_rate_hz, emission_probability, mu, collection_efficiency)
        return expected_alpha(src, det) - target_alpha

    hi = 1e-3
    while mismatch(hi) < 0:
        hi *= 2
        if hi > 1e3:
            raise ValueError(f"alpha {target_alpha} not reachable")
    mu = brentq(mismatch, 0.0, hi, xtol=1e-15, rtol=1e-13)
    return SourceModel(repetition_rate_hz, emission_probability, mu, collection_efficiency)
