"""Measurement chain: column integration, sinusoid fits, local spacing and chirp.

Profile positions are in micrometres; fitted spacings are reported in
nanometres and chirps in nm per mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    FitConvergenceError,
    FitError,
    InsufficientDataError,
    NoFringeError,
    ParameterError,
    ShapeError,
)
from .optics import LatticeProfile


class DegenerateProfileError(FitError):
    """The fitted offset is not positive, so contrast is undefined."""


@dataclass(frozen=True, eq=False)
class IntensityImage:
    """Camera frame, row-major ``(height, width)``, pitch referred to the object plane."""

    pixels: np.ndarray
    pixel_pitch_um: float = 3.45 / 100

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2:
            raise ShapeError("image pixels must be a 2D array")
        if not self.pixel_pitch_um > 0:
            raise ParameterError("pixel_pitch_um must be positive")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SinusoidFit:
    offset: float
    amplitude: float
    spacing_nm: float
    phase: float
    rms_residual: float
    spacing_se_nm: float = 0.0
    offset_se: float = 0.0
    amplitude_se: float = 0.0
    n_samples: int = 0

    @property
    def contrast(self) -> float:
        return contrast(self)

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "offset_se": self.offset_se,
            "amplitude": self.amplitude,
            "amplitude_se": self.amplitude_se,
            "spacing_nm": self.spacing_nm,
            "spacing_se_nm": self.spacing_se_nm,
            "phase_rad": self.phase,
            "rms_residual": self.rms_residual,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class ChirpFit:
    center_spacing_nm: float
    chirp_nm_per_mm: float
    chirp_se_nm_per_mm: float
    center_x_um: float = 0.0

    def to_dict(self) -> dict:
        return {
            "center_x_um": self.center_x_um,
            "center_spacing_nm": self.center_spacing_nm,
            "chirp_nm_per_mm": self.chirp_nm_per_mm,
            "chirp_se_nm_per_mm": self.chirp_se_nm_per_mm,
        }


@dataclass(frozen=True)
class LinearFit:
    intercept_nm: float
    slope_nm: float
    intercept_se_nm: float
    slope_se_nm: float

    def to_dict(self) -> dict:
        return {
            "intercept_nm": self.intercept_nm,
            "intercept_se_nm": self.intercept_se_nm,
            "slope_nm": self.slope_nm,
            "slope_se_nm": self.slope_se_nm,
        }


@dataclass(frozen=True)
class TiltFit:
    """Parameters of ``d = (Md0/2 + j*Mdelta/2) * cos(kappa)``."""

    md0_half_nm: float
    mdelta_half_nm: float
    md0_half_se_nm: float
    mdelta_half_se_nm: float

    def to_dict(self) -> dict:
        return {
            "Md0_over_2_nm": self.md0_half_nm,
            "Md0_over_2_se_nm": self.md0_half_se_nm,
            "Mdelta_over_2_nm": self.mdelta_half_nm,
            "Mdelta_over_2_se_nm": self.mdelta_half_se_nm,
        }


def integrate_columns(image: IntensityImage, background: IntensityImage | None = None) -> LatticeProfile:
    """Sum each column of the (background-subtracted) image.

    Negative column totals, which only arise from over-subtraction, are
    clamped to zero.
    """
    px = image.pixels
    if background is not None:
        if background.pixels.shape != px.shape:
            raise ShapeError(
                f"background shape {background.pixels.shape} differs from image shape {px.shape}"
            )
        px = px - background.pixels
    profile = np.clip(px.sum(axis=0), 0.0, None)
    return LatticeProfile(0.0, image.pixel_pitch_um, profile)


def _windowed(profile: LatticeProfile, window):
    x = profile.x_um
    y = profile.intensities
    if window is not None:
        lo, hi = window
        keep = (x >= lo) & (x <= hi)
        x, y = x[keep], y[keep]
    return x, y


def _initial_frequency(t, y, min_cycles):
    """Frequency (1/um) of the strongest spectral line, or raise NoFringeError."""
    n = y.size
    span = n * (t[1] - t[0])
    yc = y - y.mean()
    scale = np.sum(np.abs(y))
    if scale == 0 or not np.any(yc):
        raise NoFringeError("profile is constant")
    nfft = 1 << max(4, int(math.ceil(math.log2(4 * n))))
    mag = np.abs(np.fft.rfft(yc * np.hanning(n), nfft))
    freqs = np.fft.rfftfreq(nfft, t[1] - t[0])
    band = freqs >= min_cycles / span
    if band.sum() < 3:
        raise InsufficientDataError("window too short to resolve any fringe")
    idx = np.nonzero(band)[0]
    k = idx[np.argmax(mag[idx])]
    peak = mag[k]
    floor = np.median(mag[idx])
    if peak <= 10.0 * floor or peak <= 1e-9 * scale:
        raise NoFringeError(
            f"no spectral peak above the noise floor (peak {peak:.3g}, median {floor:.3g})"
        )
    if 0 < k < mag.size - 1:
        a, b, c = np.log(mag[k - 1 : k + 2] + 1e-300)
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        k = k + float(np.clip(shift, -0.5, 0.5))
    return k / (nfft * (t[1] - t[0]))


def _linear_at(t, y, f):
    c = np.cos(2 * np.pi * f * t)
    s = np.sin(2 * np.pi * f * t)
    A = np.column_stack([np.ones_like(t), c, s])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def _make_fit(params, cov, t, y, scale, xc, n_dof_params):
    off, a, b, f = params
    resid = off + a * np.cos(2 * np.pi * f * t) + b * np.sin(2 * np.pi * f * t) - y
    amp = math.hypot(a, b)
    phase_c = math.atan2(-b, a)
    phase = math.remainder(phase_c - 2 * np.pi * f * xc, 2 * np.pi)
    dof = max(t.size - n_dof_params, 1)
    s2 = float(resid @ resid) / dof
    se = np.sqrt(np.clip(np.diag(cov) * s2, 0, None)) if cov is not None else np.zeros(4)
    if amp > 0 and cov is not None:
        g = np.array([a, b]) / amp
        amp_se = math.sqrt(max(float(g @ (cov[1:3, 1:3] * s2) @ g), 0.0))
    else:
        amp_se = 0.0
    spacing = 1e3 / f
    return SinusoidFit(
        offset=off * scale,
        amplitude=amp * scale,
        spacing_nm=spacing,
        phase=phase,
        rms_residual=math.sqrt(float(np.mean(resid**2))) * scale,
        spacing_se_nm=float(spacing * se[3] / f),
        offset_se=float(se[0] * scale),
        amplitude_se=amp_se * scale,
        n_samples=int(t.size),
    )


def fit_sinusoid(
    profile: LatticeProfile,
    window: tuple[float, float] | None = None,
    max_iter: int = 200,
    min_periods: float = 10.0,
) -> SinusoidFit:
    """Least-squares fit of ``offset + amplitude*cos(2*pi*x/d + phase)``.

    The spacing is seeded from the strongest line of the Hann-windowed
    spectrum, the three linear parameters from a linear solve at that
    spacing, and all four are then refined together.

    Parameters
    ----------
    profile : LatticeProfile
    window : (float, float), optional
        Inclusive x interval in micrometres; default is the whole profile.
    max_iter : int
        Bound on function evaluations of the refinement.
    min_periods : float
        Minimum number of fitted periods the window must contain.

    Raises
    ------
    NoFringeError
        If no spectral line stands above the noise floor.
    FitConvergenceError
        If the refinement hits ``max_iter``; ``err.best`` holds the last iterate.
    InsufficientDataError
        If the window holds too few samples or fewer than ``min_periods`` periods.
    """
    x, y = _windowed(profile, window)
    if x.size < 16:
        raise InsufficientDataError(f"window holds {x.size} samples; need >= 16")
    xc = 0.5 * (x[0] + x[-1])
    t = x - xc
    scale = float(np.max(np.abs(y)))
    if scale == 0:
        raise NoFringeError("profile is identically zero")
    yn = y / scale
    f0 = _initial_frequency(t, yn, min_cycles=0.5 * min_periods)
    off0, a0, b0 = _linear_at(t, yn, f0)

    def resid(p):
        w = 2 * np.pi * p[3] * t
        return p[0] + p[1] * np.cos(w) + p[2] * np.sin(w) - yn

    def jac(p):
        w = 2 * np.pi * p[3] * t
        c, s = np.cos(w), np.sin(w)
        df = 2 * np.pi * t * (-p[1] * s + p[2] * c)
        return np.column_stack([np.ones_like(t), c, s, df])

    res = least_squares(
        resid,
        np.array([off0, a0, b0, f0]),
        jac=jac,
        method="lm",
        x_scale="jac",
        xtol=1e-10,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_iter,
    )
    J = res.jac
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = None
    fit = _make_fit(res.x, cov, t, yn, scale, xc, 4)
    if res.status == 0:
        raise FitConvergenceError(f"no convergence after {res.nfev} evaluations", best=fit)
    if not res.x[3] > 0:
        raise FitConvergenceError("fitted frequency is not positive", best=fit)
    span = x[-1] - x[0]
    if span * res.x[3] < min_periods:
        raise InsufficientDataError(
            f"window spans {span * res.x[3]:.3g} periods; need >= {min_periods}"
        )
    return fit


def project_sinusoid(
    profile: LatticeProfile, spacing_nm: float, window: tuple[float, float] | None = None
) -> SinusoidFit:
    """Linear fit of offset, amplitude and phase at a fixed spacing.

    Useful when there may be no fringes at all: the amplitude then measures
    how much of the known lattice frequency is present.
    """
    x, y = _windowed(profile, window)
    if x.size < 4:
        raise InsufficientDataError("window holds fewer than 4 samples")
    xc = 0.5 * (x[0] + x[-1])
    t = x - xc
    f = 1e3 / spacing_nm
    coef = _linear_at(t, y, f)
    return _make_fit(np.array([*coef, f]), None, t, y, 1.0, xc, 3)


def contrast(fit: SinusoidFit) -> float:
    """Fringe visibility ``amplitude/offset``, capped at 1."""
    if not fit.offset > 0:
        raise DegenerateProfileError(f"offset {fit.offset:.3g} is not positive")
    return min(fit.amplitude / fit.offset, 1.0)


def local_spacing(
    profile: LatticeProfile,
    window_width_um: float = 400.0,
    stride_um: float = 500.0,
    x_range: tuple[float, float] | None = None,
) -> list[tuple[float, float]]:
    """Spacing fitted in sliding windows, as ``(x_center_um, spacing_nm)`` pairs.

    Windows are laid out symmetrically about the middle of ``x_range`` (default:
    the whole profile).  Windows whose fit fails are skipped.
    """
    if not (window_width_um > 0 and stride_um > 0):
        raise ParameterError("window width and stride must be positive")
    lo, hi = x_range if x_range is not None else (profile.x_um[0], profile.x_um[-1])
    usable = (hi - lo) - window_width_um
    if usable < 0:
        raise InsufficientDataError("x range is narrower than one window")
    k = int(math.floor(usable / stride_um + 1e-9))
    mid = 0.5 * (lo + hi)
    centers = mid + stride_um * (np.arange(k + 1) - 0.5 * k)
    out = []
    for c in centers:
        try:
            fit = fit_sinusoid(profile, (c - 0.5 * window_width_um, c + 0.5 * window_width_um))
        except FitError:
            continue
        out.append((float(c), fit.spacing_nm))
    if len(out) < 3:
        raise InsufficientDataError(f"only {len(out)} windows converged; need >= 3")
    return out


def _ols(A, y):
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise ParameterError("design matrix is rank deficient")
    resid = y - A @ coef
    dof = y.size - A.shape[1]
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = np.linalg.inv(A.T @ A) * s2
    return coef, np.sqrt(np.clip(np.diag(cov), 0, None))


def chirp_fit(samples: Iterable[tuple[float, float]]) -> ChirpFit:
    """Straight-line fit of local spacing against position.

    ``samples`` are ``(x_um, spacing_nm)``; the slope is reported in nm/mm
    and the centre spacing is evaluated at the middle of the x range.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ParameterError("chirp fit needs at least 3 samples")
    x, d = data[:, 0], data[:, 1]
    if np.ptp(x) == 0:
        raise ParameterError("all samples share one x position")
    xm = 0.5 * (x.min() + x.max())
    A = np.column_stack([np.ones_like(x), (x - xm) * 1e-3])
    (c0, slope), (_, slope_se) = _ols(A, d)
    return ChirpFit(float(c0), float(slope), float(slope_se), float(xm))


def fit_spacing_vs_index(pairs: Iterable[tuple[int, float]]) -> LinearFit:
    """Ordinary least squares ``d = intercept + slope*j``."""
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or np.unique(data[:, 0]).size < 3:
        raise ParameterError("need at least 3 distinct grating indices")
    j, d = data[:, 0], data[:, 1]
    (b0, b1), (se0, se1) = _ols(np.column_stack([np.ones_like(j), j]), d)
    return LinearFit(float(b0), float(b1), float(se0), float(se1))


def fit_spacing_vs_tilt(samples: Sequence[tuple[int, float, float]]) -> TiltFit:
    """Fit ``d = (Md0/2 + j*Mdelta/2) * cos(kappa)`` to ``(j, kappa, d_nm)`` triples.

    The model is linear in both parameters, so the solve is direct.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ParameterError("need at least 3 samples")
    j, kappa, d = data.T
    if np.unique(j).size < 2:
        raise ParameterError("samples must span at least 2 grating indices")
    if np.unique(np.round(np.cos(kappa), 15)).size < 2:
        raise ParameterError("samples must span at least 2 distinct |kappa| (tilt-degenerate)")
    c = np.cos(kappa)
    (p0, p1), (se0, se1) = _ols(np.column_stack([c, j * c]), d)
    return TiltFit(float(p0), float(p1), float(se0), float(se1))
