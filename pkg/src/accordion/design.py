"""Indexed grating plate and the inverse problem of choosing a row and tilt."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CoverageGapError, DesignIndexError, DomainError, ParameterError, UnreachableTargetError
from .grating import BinaryPhaseGrating, diffraction_efficiency, phase_depth

# Relative slack when comparing a target with a row spacing or a tilt with its limit.
_REL_TOL = 1e-12


@dataclass(frozen=True)
class PlateDesign:
    """Stack of gratings with periods ``d0 + j*delta`` for ``j_min <= j <= j_max``."""

    d0_um: float = 3.0
    delta_nm: float = 20.0
    j_min: int = 0
    j_max: int = 250
    row_width_um: float = 100.0
    row_length_mm: float = 10.0

    def __post_init__(self):
        if not self.d0_um > 0:
            raise DomainError("d0_um must be positive")
        if not self.delta_nm > 0:
            raise DomainError("delta_nm must be positive")
        if self.j_min > self.j_max:
            raise DomainError("j_min must not exceed j_max")
        if self.d0_um + self.j_min * self.delta_nm * 1e-3 <= 0:
            raise DomainError("the first row would have a non-positive period")

    def period_um(self, j: int) -> float:
        self._check(j)
        return self.d0_um + j * self.delta_nm * 1e-3

    def row(self, j: int, template: BinaryPhaseGrating | None = None) -> BinaryPhaseGrating:
        """Grating of row ``j``; duty, relief and index come from ``template``."""
        if template is None:
            return BinaryPhaseGrating(self.period_um(j))
        return replace(template, period_um=self.period_um(j))

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def _check(self, j):
        if not (self.j_min <= j <= self.j_max) or int(j) != j:
            raise DesignIndexError(f"row index {j} outside [{self.j_min}, {self.j_max}]")

    @classmethod
    def from_dict(cls, data: dict) -> "PlateDesign":
        allowed = {"d0_um", "delta_nm", "j_min", "j_max", "row_width_um", "row_length_mm"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterError(f"unknown plate keys: {sorted(unknown)}")
        kw = dict(data)
        for k in ("j_min", "j_max"):
            if k in kw:
                if int(kw[k]) != kw[k]:
                    raise ParameterError(f"{k} must be an integer")
                kw[k] = int(kw[k])
        return cls(**kw)


@dataclass(frozen=True)
class TuningSolution:
    j: int
    kappa_rad: float
    predicted_spacing_nm: float
    efficiency_penalty: float

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "kappa_rad": self.kappa_rad,
            "predicted_spacing_nm": self.predicted_spacing_nm,
            "efficiency_penalty": self.efficiency_penalty,
        }


def designed_spacing(plate: PlateDesign, j: int, magnification: float, kappa_rad: float = 0.0) -> float:
    """Lattice spacing in nm, ``(M/2) * cos(kappa) * (d0 + j*delta)``."""
    if not magnification > 0:
        raise DomainError("magnification must be positive")
    return 0.5 * magnification * math.cos(kappa_rad) * plate.period_um(j) * 1e3


def _row_spacings(plate, magnification):
    return np.array([designed_spacing(plate, j, magnification) for j in plate.indices])


def efficiency_penalty(grating: BinaryPhaseGrating, wavelength_nm: float, kappa_rad: float) -> float:
    """Relative loss of first-order efficiency caused by the tilt (never negative)."""
    eta0 = diffraction_efficiency(grating, 1, phase_depth(grating, wavelength_nm, 0.0))
    if eta0 == 0:
        return 0.0
    eta = diffraction_efficiency(grating, 1, phase_depth(grating, wavelength_nm, kappa_rad))
    return max(0.0, 1.0 - eta / eta0)


def _check_kappa_max(kappa_max):
    if not 0.0 <= kappa_max < 0.5:
        raise DomainError(f"kappa_max must lie in [0, 0.5) rad, got {kappa_max}")


def reachable_interval(plate: PlateDesign, magnification: float, kappa_max: float) -> tuple[float, float]:
    s = _row_spacings(plate, magnification)
    return float(s[0] * math.cos(kappa_max)), float(s[-1])


def select_grating(
    plate: PlateDesign,
    target_nm: float,
    magnification: float,
    kappa_max: float = 0.1,
    grating: BinaryPhaseGrating | None = None,
    wavelength_nm: float = 775.0,
) -> TuningSolution:
    """Smallest row whose untilted spacing is at least ``target_nm``, plus the tilt.

    ``grating`` supplies the duty, relief and index used for the efficiency
    penalty (the plate only fixes periods).

    Raises
    ------
    UnreachableTargetError
        If the target exceeds the largest row spacing.
    CoverageGapError
        If the row found needs more tilt than ``kappa_max``.  This includes
        targets below the reach of the first row.
    """
    if not target_nm > 0:
        raise DomainError("target must be positive")
    _check_kappa_max(kappa_max)
    spacings = _row_spacings(plate, magnification)
    reach = reachable_interval(plate, magnification, kappa_max)
    i = int(np.searchsorted(spacings, target_nm * (1 - _REL_TOL), side="left"))
    if i == spacings.size:
        raise UnreachableTargetError(
            f"target {target_nm:g} nm exceeds the largest spacing {spacings[-1]:g} nm; "
            f"reachable interval is [{reach[0]:.6g}, {reach[1]:.6g}] nm",
            target_nm,
            reach,
        )
    j = plate.j_min + i
    kappa = math.acos(min(1.0, target_nm / spacings[i]))
    if kappa > kappa_max * (1 + _REL_TOL) + 1e-15:
        cmax = math.cos(kappa_max)
        above = (float(spacings[i] * cmax), float(spacings[i]))
        below = (float(spacings[i - 1] * cmax), float(spacings[i - 1])) if i > 0 else None
        where = f"between [{below[0]:.6g}, {below[1]:.6g}] and " if below else "below "
        raise CoverageGapError(
            f"target {target_nm:g} nm needs kappa = {kappa:.4f} rad at row {j} "
            f"(> kappa_max {kappa_max:g}); it falls {where}[{above[0]:.6g}, {above[1]:.6g}] nm",
            target_nm,
            reach,
            kappa,
            below,
            above,
        )
    kappa = min(kappa, kappa_max)
    if grating is None:
        grating = BinaryPhaseGrating(plate.period_um(j))
    return TuningSolution(
        j=j,
        kappa_rad=kappa,
        predicted_spacing_nm=designed_spacing(plate, j, magnification, kappa),
        efficiency_penalty=efficiency_penalty(grating, wavelength_nm, kappa),
    )


def coverage_report(plate: PlateDesign, magnification: float, kappa_max: float = 0.1) -> list[tuple[float, float]]:
    """Open intervals inside the plate's untilted range that no row can reach.

    A gap lies between row ``j``'s untilted spacing and row ``j+1``'s
    maximally tilted spacing whenever the latter is the larger.
    """
    _check_kappa_max(kappa_max)
    s = _row_spacings(plate, magnification)
    c = math.cos(kappa_max)
    gaps = []
    for lo, nxt in zip(s[:-1], s[1:]):
        hi = nxt * c
        if hi > lo * (1 + _REL_TOL):
            gaps.append((float(lo), float(hi)))
    return gaps
