"""Analytic model of a binary phase transmission grating.

Lengths follow the unit suffix in each name: grating periods in micrometres,
relief depths and wavelengths in nanometres.  Angles are in radians.

The structure function is ``exp(i*phi)`` on the ridge ``[0, l)`` of every
period and ``1`` on the groove ``[l, d)``; its Fourier series is written as
``f(x) = sum_m a_m exp(-2j*pi*m*x/d)`` so that order ``m`` leaves the grating
at ``sin(xi_m) = -m*lambda/d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class BinaryPhaseGrating:
    """One grating row: period, duty factor, relief depth and refractive index."""

    period_um: float
    duty: float = 0.5
    relief_nm: float = 390.0
    index: float = 2.0

    def __post_init__(self):
        for name in ("period_um", "duty", "relief_nm", "index"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.period_um <= 0:
            raise DomainError(f"period_um must be positive, got {self.period_um}")
        if not 0.0 < self.duty < 1.0:
            raise DomainError(f"duty must lie in (0, 1), got {self.duty}")
        if self.relief_nm <= 0:
            raise DomainError(f"relief_nm must be positive, got {self.relief_nm}")
        # n0 == 1 is the index-matched plate; it is kept legal on purpose.
        if self.index < 1.0:
            raise DomainError(f"index must be >= 1, got {self.index}")

    @property
    def ridge_um(self) -> float:
        return self.duty * self.period_um

    def tilted(self, tilt_rad: float) -> "BinaryPhaseGrating":
        """Grating as projected onto the x axis after rotation by ``tilt_rad``.

        The period shrinks by ``cos(tilt)``; the duty factor is unchanged
        because ridge and groove are foreshortened alike.
        """
        _check_tilt(tilt_rad)
        return replace(self, period_um=self.period_um * math.cos(tilt_rad))

    @classmethod
    def from_dict(cls, data: dict) -> "BinaryPhaseGrating":
        allowed = {"period_um", "duty", "relief_nm", "index"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterError(f"unknown grating keys: {sorted(unknown)}")
        if "period_um" not in data:
            raise ParameterError("grating requires 'period_um'")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {
            "period_um": self.period_um,
            "duty": self.duty,
            "relief_nm": self.relief_nm,
            "index": self.index,
        }


def _check_tilt(tilt_rad):
    if not math.isfinite(tilt_rad):
        raise DomainError("tilt must be finite")
    if abs(tilt_rad) >= math.pi / 2:
        raise DomainError(f"|tilt| must be below pi/2, got {tilt_rad}")


def phase_depth(grating: BinaryPhaseGrating, wavelength_nm: float, tilt_rad: float = 0.0) -> float:
    """Phase step imposed by the ridges, in radians.

    At normal incidence this is ``2*pi*h*(n0 - 1)/lambda``.  A tilted plate is
    treated as a thin parallel slab: the excess optical path through the ridge
    is ``h*(n0*cos(theta_t) - cos(kappa))`` with ``sin(kappa) = n0*sin(theta_t)``.
    """
    if not (math.isfinite(wavelength_nm) and math.isfinite(tilt_rad)):
        raise DomainError("wavelength and tilt must be finite")
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm}")
    _check_tilt(tilt_rad)
    n0 = grating.index
    k = 2.0 * math.pi / wavelength_nm
    if tilt_rad == 0.0:
        return k * grating.relief_nm * (n0 - 1.0)
    theta_t = math.asin(math.sin(tilt_rad) / n0)
    return k * grating.relief_nm * (n0 * math.cos(theta_t) - math.cos(tilt_rad))


def structure_function(grating: BinaryPhaseGrating, x_um, phase: float):
    """Transmission ``exp(i*phase)`` on ridges and ``1`` on grooves.

    Accepts scalars or arrays; ``x_um`` is reduced modulo the period.
    """
    x = np.mod(np.asarray(x_um, dtype=float), grating.period_um)
    out = np.where(x < grating.ridge_um, np.exp(1j * phase), 1.0 + 0.0j)
    return out[()] if out.ndim == 0 else out


def fourier_coefficient(grating: BinaryPhaseGrating, m: int, phase: float) -> complex:
    """Closed-form Fourier coefficient ``a_m`` of the structure function."""
    D = grating.duty
    e_phi = np.exp(1j * phase)
    if m == 0:
        return complex(D * e_phi + (1.0 - D))
    e_dm = np.exp(2j * np.pi * D * m)
    e_m = np.exp(2j * np.pi * m)
    return complex(-1j * (e_phi * (-1.0 + e_dm) - e_dm + e_m) / (2.0 * np.pi * m))


def diffraction_efficiency(grating: BinaryPhaseGrating, m: int, phase: float) -> float:
    """Power fraction ``|a_m|**2`` diffracted into order ``m``."""
    if m == 0:
        return abs(fourier_coefficient(grating, 0, phase)) ** 2
    return (
        4.0
        / (math.pi**2 * m**2)
        * math.sin(math.pi * m * grating.duty) ** 2
        * math.sin(phase / 2.0) ** 2
    )


def diffraction_angle(grating: BinaryPhaseGrating, m: int, wavelength_nm: float):
    """Angle of order ``m`` from the grating equation, or ``None`` if evanescent."""
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm}")
    s = -m * wavelength_nm * 1e-3 / grating.period_um
    if abs(s) > 1.0:
        return None
    return math.asin(s)


def fourier_coefficients_numeric(
    grating: BinaryPhaseGrating,
    phase: float,
    orders: Iterable[int],
    samples_per_period: int = 4096,
) -> list[complex]:
    """Midpoint-rule estimate of ``a_m`` from samples of one period.

    Used as an independent oracle for :func:`fourier_coefficient`.  The phase
    discontinuities limit convergence to first order in the sample spacing.
    """
    orders = list(orders)
    if not orders:
        return []
    n = int(samples_per_period)
    max_order = max(abs(m) for m in orders)
    if n < 64 or n < 8 * max_order:
        raise ParameterError(
            f"samples_per_period={n} too small; need >= max(64, 8*{max_order})"
        )
    d = grating.period_um
    x = (np.arange(n) + 0.5) * d / n
    f = structure_function(grating, x, phase)
    return [complex(np.mean(f * np.exp(2j * np.pi * m * x / d))) for m in orders]


@dataclass(frozen=True)
class DiffractionOrder:
    m: int
    coefficient: complex
    efficiency: float
    angle_rad: float | None

    @property
    def propagating(self) -> bool:
        return self.angle_rad is not None


@dataclass(frozen=True)
class DiffractionOrderSpectrum:
    wavelength_nm: float
    tilt_rad: float
    phase: float
    entries: tuple[DiffractionOrder, ...]

    def propagating_efficiency(self) -> float:
        return sum(e.efficiency for e in self.entries if e.propagating)

    def order(self, m: int) -> DiffractionOrder:
        for e in self.entries:
            if e.m == m:
                return e
        raise KeyError(m)


def order_spectrum(
    grating: BinaryPhaseGrating,
    wavelength_nm: float,
    tilt_rad: float = 0.0,
    orders: Sequence[int] | None = None,
    phase: float | None = None,
) -> DiffractionOrderSpectrum:
    """Coefficients, efficiencies and angles for a set of orders.

    ``orders`` defaults to ``-10..10``.  The tilt shortens the projected
    period and alters the phase depth; ``phase`` overrides the latter.
    """
    if orders is None:
        orders = range(-10, 11)
    if phase is None:
        phase = phase_depth(grating, wavelength_nm, tilt_rad)
    g = grating.tilted(tilt_rad) if tilt_rad else grating
    entries = []
    for m in orders:
        a = fourier_coefficient(g, m, phase)
        entries.append(
            DiffractionOrder(
                m=int(m),
                coefficient=a,
                efficiency=diffraction_efficiency(g, m, phase),
                angle_rad=diffraction_angle(g, m, wavelength_nm),
            )
        )
    return DiffractionOrderSpectrum(wavelength_nm, tilt_rad, phase, tuple(entries))
