"""Composite runs: simulate a configured row, then measure it like the experiment."""

from __future__ import annotations

import math
from dataclasses import replace

from .analysis import FitError, NoFringeError, chirp_fit, contrast, fit_sinusoid, local_spacing, project_sinusoid
from .config import ConfigError, RunConfig
from .errors import AccordionError
from .grating import diffraction_efficiency, phase_depth
from .optics import LatticeProfile, check_grid, check_orders, simulate_lattice


def _setup(cfg: RunConfig, j=None, tilt_rad=None, pupil_phase=None):
    grating = cfg.grating_for(j)
    tilt = cfg.tilt_rad if tilt_rad is None else tilt_rad
    relay = cfg.relay if pupil_phase is None else replace(cfg.relay, pupil_phase=tuple(pupil_phase))
    return grating, tilt, relay


def validate_point(cfg: RunConfig, j=None, tilt_rad=None, pupil_phase=None) -> None:
    """Check every precondition of a simulation without running it."""
    try:
        grating, tilt, relay = _setup(cfg, j, tilt_rad, pupil_phase)
        g = grating.tilted(tilt)
        grid = cfg.grid()
        check_grid(g, cfg.illumination, grid)
        check_orders(relay, g.period_um, cfg.wavelength_nm, 0.5 * cfg.wavelength_nm * 1e-3 * relay.f1_mm * 1e3 / grid.dx_um)
    except ConfigError:
        raise
    except AccordionError as exc:
        raise ConfigError(str(exc)) from exc


def kept_efficiency(cfg: RunConfig, grating, tilt, relay) -> float:
    """Analytic power fraction in the transmitted orders."""
    phase = cfg.phase_rad if cfg.phase_rad is not None else phase_depth(grating, cfg.wavelength_nm, tilt)
    g = grating.tilted(tilt)
    return sum(relay.weight(m) * diffraction_efficiency(g, m, phase) for m in relay.kept_orders)


def measure(profile: LatticeProfile, cfg: RunConfig, expected_spacing_nm: float) -> dict:
    """Central sinusoid fit and windowed chirp of a simulated profile."""
    fh = cfg.fit_halfwidth_um
    out = {"fringes": True}
    try:
        fit = fit_sinusoid(profile, (-fh, fh))
    except NoFringeError:
        fit = project_sinusoid(profile, expected_spacing_nm, (-fh, fh))
        out["fringes"] = False
    out["spacing_nm"] = fit.spacing_nm if out["fringes"] else None
    out["spacing_se_nm"] = fit.spacing_se_nm if out["fringes"] else None
    out["contrast"] = contrast(fit) if fit.offset > 0 else 0.0
    out["chirp_nm_per_mm"] = None
    out["chirp_se_nm_per_mm"] = None
    if out["fringes"]:
        ch = cfg.chirp_halfwidth_um
        try:
            samples = local_spacing(profile, cfg.window_um, cfg.stride_um, (-ch, ch))
            c = chirp_fit(samples)
            out["chirp_nm_per_mm"] = c.chirp_nm_per_mm
            out["chirp_se_nm_per_mm"] = c.chirp_se_nm_per_mm
        except (FitError, AccordionError):
            pass
    return out


def run_point(cfg: RunConfig, j=None, tilt_rad=None, pupil_phase=None) -> tuple[LatticeProfile, dict]:
    """Simulate one configuration and return its profile and summary record."""
    grating, tilt, relay = _setup(cfg, j, tilt_rad, pupil_phase)
    profile = simulate_lattice(grating, cfg.illumination, relay, tilt, cfg.grid(), cfg.phase_rad)
    expected = 0.5 * relay.magnification * grating.period_um * math.cos(tilt) * 1e3
    summary = {
        "j": j if j is not None else cfg.row_j,
        "tilt_rad": tilt,
        "pupil_phase": list(relay.pupil_phase),
        "period_um": grating.period_um,
        "designed_spacing_nm": expected,
        "efficiency": kept_efficiency(cfg, grating, tilt, relay),
    }
    summary.update(measure(profile, cfg, expected))
    return profile, summary
