"""Scalar 1D wave optics: sampled fields, Fraunhofer transforms and the 4f relay.

Internally every length is in micrometres.  The public dataclasses carry the
unit in the field name (``_um``, ``_mm``, ``_nm``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ParameterError
from .grating import BinaryPhaseGrating, phase_depth, structure_function


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SampledField1D:
    """Complex scalar field on the uniform grid ``x0_um + n*dx_um``.

    ``curvature_um`` records the radius of a quadratic phase
    ``exp(i*k*x**2/(2*R))`` that belongs to the field but was not multiplied
    into ``amplitudes``; ``None`` means no such factor.
    """

    x0_um: float
    dx_um: float
    amplitudes: np.ndarray
    wavelength_nm: float
    curvature_um: float | None = None

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 1:
            raise ParameterError("amplitudes must be one-dimensional")
        if not _is_pow2(amp.size):
            raise ParameterError(f"sample count must be a power of two >= 2, got {amp.size}")
        if not self.dx_um > 0:
            raise ParameterError(f"dx_um must be positive, got {self.dx_um}")
        if not self.wavelength_nm > 0:
            raise ParameterError(f"wavelength_nm must be positive, got {self.wavelength_nm}")
        if not np.all(np.isfinite(amp)):
            raise ParameterError("amplitudes must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def x_um(self) -> np.ndarray:
        return self.x0_um + self.dx_um * np.arange(self.n)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def power(self) -> float:
        return float(np.sum(self.intensity) * self.dx_um)

    def with_curvature(self) -> np.ndarray:
        """Amplitudes with the recorded quadratic phase applied."""
        if self.curvature_um is None:
            return self.amplitudes.copy()
        k = 2e3 * math.pi / self.wavelength_nm
        return self.amplitudes * np.exp(1j * k * self.x_um**2 / (2.0 * self.curvature_um))


@dataclass(frozen=True)
class GaussianIllumination:
    """Gaussian beam ``peak_amplitude * exp(-x**2 / waist**2)`` at the grating."""

    waist_mm: float = 3.8
    peak_amplitude: float = 1.0
    wavelength_nm: float = 775.0

    def __post_init__(self):
        if not self.waist_mm > 0:
            raise DomainError(f"waist_mm must be positive, got {self.waist_mm}")
        if not self.peak_amplitude >= 0:
            raise DomainError("peak_amplitude must be non-negative")
        if not self.wavelength_nm > 0:
            raise DomainError("wavelength_nm must be positive")


@dataclass(frozen=True)
class FourFRelay:
    """Spatially filtered 4f relay.

    Parameters
    ----------
    f1_mm, f2_mm : float
        Focal lengths of the first and second lens; magnification is f2/f1.
    kept_orders : sequence of int
        Diffraction orders transmitted by the Fourier-plane mask.
    pupil_halfwidth_mm : float
        Hard aperture of the Fourier plane.
    pupil_phase : sequence of float
        Coefficients ``c_k`` (rad) of the pupil phase ``sum c_k rho**k`` with
        ``rho = xi / pupil_halfwidth``.
    order_weights : mapping of int to float
        Optional power transmission per kept order (default 1), e.g. to
        unbalance the two lattice beams.
    """

    f1_mm: float = 200.0
    f2_mm: float = 100.0
    kept_orders: Sequence[int] = (-1, 1)
    pupil_halfwidth_mm: float = 60.0
    pupil_phase: Sequence[float] = ()
    order_weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.f1_mm > 0 and self.f2_mm > 0):
            raise ConfigurationError("focal lengths must be positive")
        if not self.pupil_halfwidth_mm > 0:
            raise ConfigurationError("pupil_halfwidth_mm must be positive")
        kept = tuple(sorted({int(m) for m in self.kept_orders}))
        if not kept:
            raise ConfigurationError("kept_orders must not be empty")
        object.__setattr__(self, "kept_orders", kept)
        object.__setattr__(self, "pupil_phase", tuple(float(c) for c in self.pupil_phase))
        weights = {int(m): float(w) for m, w in dict(self.order_weights).items()}
        for m, w in weights.items():
            if m not in kept:
                raise ConfigurationError(f"weight given for order {m}, which is not kept")
            if not 0.0 <= w <= 1.0:
                raise ConfigurationError(f"order weight must lie in [0, 1], got {w}")
        object.__setattr__(self, "order_weights", weights)

    @property
    def magnification(self) -> float:
        return self.f2_mm / self.f1_mm

    def weight(self, m: int) -> float:
        return self.order_weights.get(m, 1.0)


@dataclass(frozen=True, eq=False)
class LatticeProfile:
    """Real intensity on the uniform grid ``x0_um + n*dx_um``."""

    x0_um: float
    dx_um: float
    intensities: np.ndarray

    def __post_init__(self):
        arr = np.array(self.intensities, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ParameterError("a profile needs at least two samples")
        if not self.dx_um > 0:
            raise ParameterError("dx_um must be positive")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ParameterError("intensities must be finite and non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "intensities", arr)

    @property
    def n(self) -> int:
        return self.intensities.size

    @property
    def x_um(self) -> np.ndarray:
        return self.x0_um + self.dx_um * np.arange(self.n)

    def crop(self, x_min_um: float, x_max_um: float) -> "LatticeProfile":
        """Samples with ``x_min_um <= x <= x_max_um``."""
        x = self.x_um
        idx = np.nonzero((x >= x_min_um) & (x <= x_max_um))[0]
        if idx.size < 2:
            raise ParameterError("crop window holds fewer than two samples")
        return LatticeProfile(float(x[idx[0]]), self.dx_um, self.intensities[idx[0] : idx[-1] + 1])


class Grid(NamedTuple):
    x0_um: float
    dx_um: float
    count: int


def default_grid(illum: GaussianIllumination, log2_samples: int = 20, span_waists: float = 8.0) -> Grid:
    """Centred power-of-two grid spanning ``span_waists`` beam waists.

    2**20 samples over 8 waists of the 3.8 mm beam give about 100 samples per
    3 um period; coarser grids alias high orders into the kept windows and
    cost fringe contrast.
    """
    n = 2 ** int(log2_samples)
    dx = span_waists * illum.waist_mm * 1e3 / n
    return Grid(-0.5 * n * dx, dx, n)


def check_grid(grating: BinaryPhaseGrating, illum: GaussianIllumination, grid: Grid) -> None:
    """Raise :class:`ParameterError` unless ``grid`` resolves the grating and beam."""
    dx, n = float(grid[1]), int(grid[2])
    d = grating.period_um
    if not _is_pow2(n):
        raise ParameterError(f"grid count must be a power of two, got {n}")
    if not dx > 0:
        raise ParameterError("grid dx must be positive")
    if dx > d / 16:
        raise ParameterError(f"grid too coarse: dx={dx:.6g} um, need dx <= {d / 16:.6g} um (period/16)")
    span_needed = max(6.0 * illum.waist_mm * 1e3, 64.0 * d)
    if n * dx < span_needed * (1 - 1e-12):
        raise ParameterError(
            f"grid spans {n * dx:.6g} um, need >= {span_needed:.6g} um (6 waists or 64 periods)"
        )


def illuminate(
    grating: BinaryPhaseGrating,
    illum: GaussianIllumination,
    phase: float,
    grid: Grid | None = None,
) -> SampledField1D:
    """Gaussian beam multiplied by the grating's structure function."""
    if grid is None:
        grid = default_grid(illum)
    check_grid(grating, illum, grid)
    x0, dx, n = float(grid[0]), float(grid[1]), int(grid[2])
    w = illum.waist_mm * 1e3
    x = x0 + dx * np.arange(n)
    amp = illum.peak_amplitude * np.exp(-((x / w) ** 2)) * structure_function(grating, x, phase)
    return SampledField1D(x0, dx, amp, illum.wavelength_nm)


def _fourier(field: SampledField1D, z_um: float) -> tuple[np.ndarray, float]:
    """Scaled DFT of ``field`` onto the plane ``x = u*lambda*z``.

    Returns ``(amplitudes, dx_out)`` for the centred output grid
    ``x = (k - N/2)*dx_out``.  The ``1/sqrt(i*lambda*z)`` factor makes the map
    unitary in the sense of sum(|E|**2)*dx.
    """
    n = field.n
    lam = field.wavelength_nm * 1e-3
    u = (np.arange(n) - n // 2) / (n * field.dx_um)
    alt = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    spec = np.fft.fft(field.amplitudes * alt)
    spec *= field.dx_um * np.exp(-2j * np.pi * u * field.x0_um)
    spec /= np.sqrt(1j * lam * z_um)
    return spec, lam * z_um / (n * field.dx_um)


def far_field(field: SampledField1D, z_mm: float) -> SampledField1D:
    """Fraunhofer far field at distance ``z_mm``.

    The constant phase ``exp(i*k*z)`` is applied; the quadratic phase is
    recorded in ``curvature_um`` instead of being sampled.
    """
    if not z_mm > 0:
        raise DomainError(f"z must be positive, got {z_mm}")
    z = z_mm * 1e3
    spec, dx_out = _fourier(field, z)
    k = 2e3 * np.pi / field.wavelength_nm
    spec *= np.exp(1j * math.fmod(k * z, 2 * math.pi))
    return SampledField1D(-0.5 * field.n * dx_out, dx_out, spec, field.wavelength_nm, curvature_um=z)


def order_position_um(m: int, period_um: float, wavelength_nm: float, f_mm: float) -> float:
    """Fourier-plane coordinate of order ``m`` behind a lens of focal length f."""
    return -m * wavelength_nm * 1e-3 * f_mm * 1e3 / period_um


def fourier_plane(field: SampledField1D, relay: FourFRelay) -> SampledField1D:
    """Field in the back focal plane of the first lens.

    A lens placed one focal length after the object produces the exact
    Fourier transform, so no quadratic phase remains.
    """
    spec, dx_out = _fourier(field, relay.f1_mm * 1e3)
    return SampledField1D(-0.5 * field.n * dx_out, dx_out, spec, field.wavelength_nm)


def pupil_function(relay: FourFRelay, xi_um: np.ndarray, period_um: float, wavelength_nm: float) -> np.ndarray:
    """Complex transmission of the Fourier-plane filter on the coordinates ``xi_um``."""
    h = relay.pupil_halfwidth_mm * 1e3
    spacing = wavelength_nm * 1e-3 * relay.f1_mm * 1e3 / period_um
    amp = np.zeros(xi_um.shape)
    for m in relay.kept_orders:
        c = order_position_um(m, period_um, wavelength_nm, relay.f1_mm)
        inside = np.abs(xi_um - c) < 0.5 * spacing
        amp[inside] = math.sqrt(relay.weight(m))
    amp[np.abs(xi_um) > h] = 0.0
    out = amp.astype(complex)
    if any(relay.pupil_phase):
        rho = xi_um / h
        phase = np.polynomial.polynomial.polyval(rho, relay.pupil_phase)
        open_ = amp > 0
        out[open_] *= np.exp(1j * phase[open_])
    return out


def check_orders(relay: FourFRelay, period_um: float, wavelength_nm: float, grid_halfwidth_um: float | None = None):
    """Raise :class:`ConfigurationError` if a kept order cannot pass the pupil."""
    h = relay.pupil_halfwidth_mm * 1e3
    for m in relay.kept_orders:
        s = m * wavelength_nm * 1e-3 / period_um
        if abs(s) > 1:
            raise ConfigurationError(f"order {m} is evanescent for period {period_um} um")
        c = abs(order_position_um(m, period_um, wavelength_nm, relay.f1_mm))
        if c > h:
            raise ConfigurationError(
                f"order {m} lands at {c / 1e3:.4g} mm in the Fourier plane; "
                f"pupil_halfwidth_mm must be >= {c / 1e3:.4g} (is {relay.pupil_halfwidth_mm})"
            )
        if grid_halfwidth_um is not None and c >= grid_halfwidth_um:
            raise ConfigurationError(
                f"order {m} at {c / 1e3:.4g} mm lies outside the sampled Fourier plane "
                f"(+-{grid_halfwidth_um / 1e3:.4g} mm); refine the object grid"
            )


def relay_4f(field: SampledField1D, relay: FourFRelay, period_um: float) -> SampledField1D:
    """Image-plane field of the filtered 4f relay.

    ``period_um`` is the (projected) grating period, which fixes where the
    orders land and the half-spacing width of each transmission window.  The
    image grid has pitch ``M*dx`` and is inverted with respect to the object.
    """
    fp = fourier_plane(field, relay)
    check_orders(relay, period_um, field.wavelength_nm, 0.5 * fp.n * fp.dx_um)
    filtered = fp.amplitudes * pupil_function(relay, fp.x_um, period_um, field.wavelength_nm)
    fp = SampledField1D(fp.x0_um, fp.dx_um, filtered, fp.wavelength_nm)
    img, dx_img = _fourier(fp, relay.f2_mm * 1e3)
    return SampledField1D(-0.5 * fp.n * dx_img, dx_img, img, field.wavelength_nm)


def kept_power_fraction(field: SampledField1D, relay: FourFRelay, period_um: float) -> float:
    """Fraction of the object power transmitted by the Fourier-plane filter."""
    fp = fourier_plane(field, relay)
    t = pupil_function(relay, fp.x_um, period_um, field.wavelength_nm)
    return float(np.sum(np.abs(fp.amplitudes * t) ** 2) * fp.dx_um / field.power)


def lattice_intensity_closed_form(x_um, magnification: float, period_um: float, e0: float = 1.0):
    """Ideal two-beam lattice ``16 E0**2/(pi**2 M**2) * sin(2 pi x/(M d))**2``."""
    if magnification <= 0 or period_um <= 0:
        raise DomainError("magnification and period must be positive")
    x = np.asarray(x_um, dtype=float)
    out = 16.0 * e0**2 / (np.pi**2 * magnification**2) * np.sin(2 * np.pi * x / (magnification * period_um)) ** 2
    return out[()] if out.ndim == 0 else out


def simulate_lattice(
    grating: BinaryPhaseGrating,
    illum: GaussianIllumination,
    relay: FourFRelay,
    tilt_rad: float = 0.0,
    grid: Grid | None = None,
    phase: float | None = None,
) -> LatticeProfile:
    """Image-plane intensity for a grating row illuminated at tilt ``tilt_rad``.

    The tilt enters through the projected period ``d*cos(kappa)`` and the
    tilt-dependent phase depth (``phase`` overrides the latter).
    """
    if phase is None:
        phase = phase_depth(grating, illum.wavelength_nm, tilt_rad)
    g = grating.tilted(tilt_rad)
    obj = illuminate(g, illum, phase, grid)
    img = relay_4f(obj, relay, g.period_um)
    return LatticeProfile(img.x0_um, img.dx_um, img.intensity)
