"""Fraunhofer optics of a biprism interferometer followed by a transmission grating.

Two plane waves leave the biprism tilted by -alpha0 (path 1) and +alpha0
(path 2) and overlap on a grating of period ``Lambda`` made of ``N``
transmitting slits of width ``a``. Detector P1 looks along ``u = -u0`` and
P2 along ``u = +u0``, where ``u = alpha / lambda`` is the spatial frequency.

All lengths are in meters, spatial frequencies in 1/m. Amplitudes are in
units of the incident amplitude, so the zero-order peak of one path is ``N``.
"""

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

SINGULAR_TOLERANCE = 1e-9
PERIOD_RTOL = 1e-9
DETECTOR_QUADRATURE_POINTS = 16
MIN_SAMPLES_PER_SLIT = 32


class PeriodMismatchError(ValueError):
    """Grating period differs from the interfringe of the setup."""


class ResolutionError(ValueError):
    """Oracle sampling too coarse to be trusted."""


@dataclass(frozen=True)
class OpticalSetup:
    """Vacuum wavelength and Fresnel biprism parameters."""

    wavelength_m: float
    refractive_index: float
    summit_angle_rad: float

    def __post_init__(self):
        if not self.wavelength_m > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength_m}")
        if not self.refractive_index > 1:
            raise ValueError(f"refractive index must exceed 1, got {self.refractive_index}")
        if not self.summit_angle_rad > 0:
            raise ValueError(f"summit angle must be positive, got {self.summit_angle_rad}")

    @property
    def deviation_angle_rad(self):
        return (self.refractive_index - 1.0) * self.summit_angle_rad

    @property
    def spatial_frequency(self):
        """u0 = alpha0 / lambda, in 1/m."""
        return self.deviation_angle_rad / self.wavelength_m

    @property
    def interfringe_m(self):
        return self.wavelength_m / (2.0 * self.deviation_angle_rad)


def make_setup(wavelength, n, beta):
    """Build an :class:`OpticalSetup` from wavelength [m], index and summit angle [rad]."""
    return OpticalSetup(float(wavelength), float(n), float(beta))


@dataclass(frozen=True)
class GratingSpec:
    period_m: float
    slit_width_m: float
    slit_count: int = 20
    position_m: float = 0.0

    def __post_init__(self):
        if not self.period_m > 0:
            raise ValueError(f"grating period must be positive, got {self.period_m}")
        if not 0.0 <= self.slit_width_m <= self.period_m * (1 + PERIOD_RTOL):
            raise ValueError(
                f"slit width {self.slit_width_m} must lie in [0, period={self.period_m}]"
            )
        if int(self.slit_count) != self.slit_count or self.slit_count < 1:
            raise ValueError(f"slit count must be a positive integer, got {self.slit_count}")
        if not np.isfinite(self.position_m):
            raise ValueError("grating position must be finite")

    @classmethod
    def matched(cls, setup, slit_width, slit_count=20, position=0.0):
        """Grating whose period equals the interfringe of ``setup``."""
        width = float(slit_width)
        if abs(width - setup.interfringe_m) <= PERIOD_RTOL * setup.interfringe_m:
            width = setup.interfringe_m
        return cls(setup.interfringe_m, width, int(slit_count), float(position))

    def at(self, position):
        return replace(self, position_m=float(position))


class ComplementarityRecord(NamedTuple):
    """Visibility and distinguishability of one configuration.

    ``d1``/``d2`` are the path-wise contributions, ``D = d1 + d2``. Estimated
    values are stored raw (they may leave [0, 1] through noise); use the
    ``clamped_*`` properties for display.
    """

    visibility: float
    distinguishability: float
    d1: Optional[float] = None
    d2: Optional[float] = None
    visibility_err: float = 0.0
    distinguishability_err: float = 0.0
    d1_err: float = 0.0
    d2_err: float = 0.0

    @property
    def sum_of_squares(self):
        return self.visibility**2 + self.distinguishability**2

    @property
    def sum_of_squares_err(self):
        return float(np.hypot(2 * self.visibility * self.visibility_err,
                              2 * self.distinguishability * self.distinguishability_err))

    @property
    def clamped_visibility(self):
        return float(np.clip(self.visibility, 0.0, 1.0))

    @property
    def clamped_distinguishability(self):
        return float(np.clip(self.distinguishability, 0.0, 1.0))


class PathDistinguishability(NamedTuple):
    d1: float
    d2: float
    distinguishability: float


def sinc(z):
    """sin(z)/z with sinc(0) = 1 (unnormalized convention)."""
    return np.sinc(np.asarray(z, dtype=float) / np.pi)


def dirichlet(q, n):
    """Array factor ``sin(n*pi*q) / sin(pi*q)``.

    ``q`` is the phase step between neighbouring slits in cycles. The
    argument is reduced to ``q = m + f`` with integer ``m`` first, which keeps
    full relative precision next to the resonances; for ``|f| <
    SINGULAR_TOLERANCE`` the limit ``n * (-1)**((n-1)*m)`` is returned.
    """
    q = np.asarray(q, dtype=float)
    m = np.rint(q)
    f = q - m
    sign = np.where(np.mod((n - 1) * m, 2.0) == 0.0, 1.0, -1.0)
    near = np.abs(f) < SINGULAR_TOLERANCE
    f_safe = np.where(near, 0.5, f)
    ratio = np.sin(n * np.pi * f_safe) / np.sin(np.pi * f_safe)
    return sign * np.where(near, float(n), ratio)


def _same_shape(u, values):
    return complex(values) if np.ndim(u) == 0 else values


def _amplitude(setup, grating, u, tilt_sign):
    u = np.asarray(u, dtype=float)
    u0 = setup.spatial_frequency
    n = grating.slit_count
    # path 1 (tilt -u0) diffracts around u = -u0, path 2 around u = +u0
    q = u - tilt_sign * u0
    other = u + tilt_sign * u0
    envelope = sinc(np.pi * q * grating.slit_width_m)
    array = dirichlet(q * grating.period_m, n)
    static_phase = np.exp(1j * np.pi * (n - 1) * other / (2.0 * u0))
    position_phase = np.exp(-2j * np.pi * other * grating.position_m)
    return envelope * array * static_phase * position_phase


def amplitude_path1(setup, grating, u):
    """Far-field amplitude S1(u) of the beam travelling along path 1."""
    return _same_shape(u, _amplitude(setup, grating, u, -1))


def amplitude_path2(setup, grating, u):
    """Far-field amplitude S2(u) of the beam travelling along path 2."""
    return _same_shape(u, _amplitude(setup, grating, u, +1))


def amplitude(setup, grating, path, u):
    if path == 1:
        return amplitude_path1(setup, grating, u)
    if path == 2:
        return amplitude_path2(setup, grating, u)
    raise ValueError(f"path must be 1 or 2, got {path!r}")


def numeric_oracle_amplitude(setup, grating, path, u_grid, samples_per_slit=64):
    """Brute-force Fraunhofer amplitude of one path, by direct quadrature.

    The transmitted field ``t(y - x) * exp(-+2i*pi*u0*y)`` is integrated
    against ``exp(-2i*pi*u*y)`` slit by slit with Gauss-Legendre nodes. No
    closed-form sinc or array factor is used. Slits are centred on
    ``x - k*Lambda`` for ``k = 0..N-1``, i.e. on bright fringes when ``x = 0``;
    this is the layout whose array phase the closed form carries.
    The result is divided by the slit width so that the zero-order peak is
    ``N``; ``a = 0`` is treated as a comb of unit Dirac peaks.

    The global phase differs from :func:`amplitude_path1`/:func:`amplitude_path2`
    by a u-independent factor; intensities agree.
    """
    if path not in (1, 2):
        raise ValueError(f"path must be 1 or 2, got {path!r}")
    if samples_per_slit < MIN_SAMPLES_PER_SLIT:
        raise ResolutionError(
            f"need at least {MIN_SAMPLES_PER_SLIT} samples per slit, got {samples_per_slit}"
        )
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    if not np.all(np.isfinite(u)):
        raise ValueError("u grid must be finite")
    a = grating.slit_width_m
    centres = grating.position_m - grating.period_m * np.arange(grating.slit_count)
    if a == 0.0:
        y = centres
        w = np.ones_like(y)
        norm = 1.0
    else:
        nodes, weights = np.polynomial.legendre.leggauss(samples_per_slit)
        y = (centres[:, None] + 0.5 * a * nodes[None, :]).ravel()
        w = np.tile(0.5 * a * weights, grating.slit_count)
        norm = a
    tilt = -setup.spatial_frequency if path == 1 else setup.spatial_frequency
    field = w * np.exp(2j * np.pi * tilt * y)
    out = np.empty(u.shape, dtype=complex)
    # chunk over u to bound the size of the kernel matrix
    step = max(1, 2_000_000 // y.size)
    for start in range(0, u.size, step):
        chunk = u[start:start + step]
        out[start:start + step] = np.exp(-2j * np.pi * np.outer(chunk, y)) @ field
    return out / norm


def intensity_at(setup, grating, u, blocked=None):
    """|S1(u) + S2(u)|^2, optionally with one path (1 or 2) blocked."""
    s1 = np.asarray(amplitude_path1(setup, grating, u))
    s2 = np.asarray(amplitude_path2(setup, grating, u))
    if blocked == 1:
        s1 = np.zeros_like(s1)
    elif blocked == 2:
        s2 = np.zeros_like(s2)
    elif blocked is not None:
        raise ValueError(f"blocked must be None, 1 or 2, got {blocked!r}")
    total = np.abs(s1 + s2) ** 2
    return float(total) if np.ndim(u) == 0 else total


def detector_direction(setup, detector):
    if detector == 1:
        return -setup.spatial_frequency
    if detector == 2:
        return setup.spatial_frequency
    raise ValueError(f"detector must be 1 or 2, got {detector!r}")


def detector_intensity(setup, grating, detector, acceptance_halfwidth=0.0, blocked=None):
    """Intensity collected by detector P1 (u = -u0) or P2 (u = +u0).

    With a non-zero ``acceptance_halfwidth`` (1/m) the intensity is averaged
    over ``[u_d - w, u_d + w]`` with a 16-point Gauss-Legendre rule.
    """
    centre = detector_direction(setup, detector)
    if acceptance_halfwidth < 0:
        raise ValueError("acceptance half-width must be non-negative")
    if acceptance_halfwidth == 0:
        return intensity_at(setup, grating, centre, blocked=blocked)
    nodes, weights = np.polynomial.legendre.leggauss(DETECTOR_QUADRATURE_POINTS)
    values = intensity_at(setup, grating, centre + acceptance_halfwidth * nodes, blocked=blocked)
    return float(0.5 * np.dot(weights, values))


def check_period(setup, grating, allow_mismatch=False):
    rel = abs(grating.period_m - setup.interfringe_m) / setup.interfringe_m
    if rel > PERIOD_RTOL and not allow_mismatch:
        raise PeriodMismatchError(
            f"grating period {grating.period_m:.9g} m differs from interfringe "
            f"{setup.interfringe_m:.9g} m (relative {rel:.3g}); pass allow_mismatch=True to override"
        )


def _envelope_ratio(setup, grating, allow_mismatch):
    check_period(setup, grating, allow_mismatch)
    return float(sinc(2.0 * np.pi * setup.spatial_frequency * grating.slit_width_m))


def analytic_distinguishability(setup, grating, allow_mismatch=False):
    """D = (1 - s^2) / (1 + s^2) with s = sinc(2*pi*u0*a) = sinc(pi*a/Lambda)."""
    s = _envelope_ratio(setup, grating, allow_mismatch)
    return (1.0 - s * s) / (1.0 + s * s)


def analytic_visibility(setup, grating, allow_mismatch=False):
    """V = 2 s / (1 + s^2) with s = sinc(2*pi*u0*a)."""
    s = _envelope_ratio(setup, grating, allow_mismatch)
    return 2.0 * s / (1.0 + s * s)


def analytic_record(setup, grating, allow_mismatch=False):
    d = analytic_distinguishability(setup, grating, allow_mismatch)
    v = analytic_visibility(setup, grating, allow_mismatch)
    return ComplementarityRecord(v, d, d / 2.0, d / 2.0)


def probability_distinguishability(p11, p21, p12, p22):
    """Path-wise distinguishability from joint detection probabilities.

    ``pij`` is the probability that the photon follows path ``j`` and is
    detected on detector ``Pi``.
    """
    probs = np.array([p11, p21, p12, p22], dtype=float)
    if np.any(~np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
        raise ValueError(f"probabilities must lie in [0, 1], got {probs.tolist()}")
    if p11 + p21 > 1 + 1e-12 or p12 + p22 > 1 + 1e-12:
        raise ValueError("per-path probabilities sum to more than 1")
    d1 = abs(p11 - p21)
    d2 = abs(p12 - p22)
    return PathDistinguishability(float(d1), float(d2), float(d1 + d2))


def probabilities_from_intensities(i11, i21, i12, i22):
    """Joint probabilities from single-path detector intensities.

    ``iij`` is the intensity on detector ``Pi`` with only path ``j`` open.
    Both paths are equally likely, and only the two detector directions
    count as outcomes.
    """
    t1 = i11 + i21
    t2 = i12 + i22
    if t1 <= 0 or t2 <= 0:
        raise ValueError("a path delivers no light to either detector")
    return 0.5 * i11 / t1, 0.5 * i21 / t1, 0.5 * i12 / t2, 0.5 * i22 / t2


def detector_probabilities(setup, grating, acceptance_halfwidth=0.0):
    """(p11, p21, p12, p22) from the closed-form amplitudes."""
    i = {
        (det, path): detector_intensity(setup, grating, det, acceptance_halfwidth,
                                        blocked=3 - path)
        for det in (1, 2) for path in (1, 2)
    }
    return probabilities_from_intensities(i[1, 1], i[2, 1], i[1, 2], i[2, 2])
