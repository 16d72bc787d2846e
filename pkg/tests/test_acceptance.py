"""Acceptance gate: eight end-to-end criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or directly as a script.
"""

import math
import sys

import numpy as np
import pytest

from accordion.analysis import (
    chirp_fit,
    contrast,
    fit_sinusoid,
    fit_spacing_vs_index,
    fit_spacing_vs_tilt,
    local_spacing,
)
from accordion.design import PlateDesign, coverage_report, designed_spacing, efficiency_penalty, select_grating
from accordion.errors import CoverageGapError
from accordion.grating import BinaryPhaseGrating, diffraction_efficiency, fourier_coefficient, fourier_coefficients_numeric
from accordion.optics import (
    FourFRelay,
    GaussianIllumination,
    LatticeProfile,
    SampledField1D,
    default_grid,
    far_field,
    simulate_lattice,
)

BEAM = GaussianIllumination()
PLATE = PlateDesign()
M = 0.5
FIT_WINDOW = (-200.0, 200.0)
CHIRP_RANGE = (-1000.0, 1000.0)


def _spacing(prof):
    return fit_sinusoid(prof, FIT_WINDOW).spacing_nm


def _chirp(prof):
    return chirp_fit(local_spacing(prof, 400.0, 500.0, CHIRP_RANGE))


def criterion_1():
    g = BinaryPhaseGrating(3.0)
    eta_p, eta_m = (diffraction_efficiency(g, m, math.pi) for m in (1, -1))
    even = max(diffraction_efficiency(g, m, math.pi) for m in range(-20, 21, 2))
    orders = list(range(-10, 11))
    num = np.abs(fourier_coefficients_numeric(g, math.pi, orders, 4096)) ** 2
    peak = num.max()
    even_num = max(num[i] for i, m in enumerate(orders) if m % 2 == 0)
    ok = abs(eta_p - 0.405285) < 1e-6 and abs(eta_m - 0.405285) < 1e-6 and even < 1e-20 and even_num < 1e-8 * peak
    return ok, f"eta+1={eta_p:.7f} eta-1={eta_m:.7f} max even {even:.1e} (analytic) {even_num / peak:.1e} of peak (DFT)"


def criterion_2():
    grid = default_grid(BEAM, log2_samples=18)
    js = [0, 50, 100, 150, 200, 250]
    pairs, worst = [], 0.0
    for j in js:
        d = _spacing(simulate_lattice(PLATE.row(j), BEAM, FourFRelay(), 0.0, grid))
        worst = max(worst, abs(d / (750.0 + 5.0 * j) - 1))
        pairs.append((j, d))
    line = fit_spacing_vs_index(pairs)
    e0, e1 = abs(line.intercept_nm / 750.0 - 1), abs(line.slope_nm / 5.0 - 1)
    ok = worst < 1e-3 and e0 < 2e-3 and e1 < 2e-3
    return ok, (
        f"worst point {worst:.1e} rel; fit {line.intercept_nm:.4f} + {line.slope_nm:.5f} j nm "
        f"(rel err {e0:.1e}, {e1:.1e})"
    )


def criterion_3():
    g = PLATE.row(0)
    base = _spacing(simulate_lattice(g, BEAM, FourFRelay(), 0.0))
    worst = 0.0
    for k in (0.05, 0.1):
        d = _spacing(simulate_lattice(g, BEAM, FourFRelay(), k))
        worst = max(worst, abs(d / (base * math.cos(k)) - 1))
    kappas = (0.0, 0.02, -0.02, 0.05, -0.05, 0.08, -0.08)
    samples = [
        (j, k, _spacing(simulate_lattice(PLATE.row(j), BEAM, FourFRelay(), k)))
        for j in (84, 85, 86)
        for k in kappas
    ]
    fit = fit_spacing_vs_tilt(samples)
    e0 = abs(fit.md0_half_nm / (0.5 * M * PLATE.d0_um * 1e3) - 1)
    e1 = abs(fit.mdelta_half_nm / (0.5 * M * PLATE.delta_nm) - 1)
    ok = worst < 5e-4 and e0 < 2e-3 and e1 < 2e-3
    return ok, (
        f"cos scaling worst {worst:.1e} rel; Md0/2={fit.md0_half_nm:.4f} nm ({e0:.1e}), "
        f"Mdelta/2={fit.mdelta_half_nm:.6f} nm ({e1:.1e})"
    )


def criterion_4():
    g = BinaryPhaseGrating(3.0, relief_nm=390.0, index=2.0)
    p = efficiency_penalty(g, 780.0, 0.1)
    return 0 <= p < 1e-4, f"relative eta1 reduction at 0.1 rad = {p:.3e}"


def criterion_5():
    g = BinaryPhaseGrating(3.0)
    c0 = contrast(fit_sinusoid(simulate_lattice(g, BEAM, FourFRelay()), FIT_WINDOW))
    worst = 0.0
    for r in (0.9, 0.5, 0.25):
        prof = simulate_lattice(g, BEAM, FourFRelay(order_weights={1: r}))
        c = contrast(fit_sinusoid(prof, FIT_WINDOW))
        worst = max(worst, abs(c - 2 * math.sqrt(r) / (1 + r)))
    return c0 > 0.999 and worst < 1e-3, f"balanced contrast {c0:.6f}; imbalance worst deviation {worst:.1e}"


def _chirped_profile(d0_nm=750.0, slope=2.0, half_um=1200.0, dx_um=0.05):
    x = np.arange(-half_um, half_um, dx_um)
    a, b = d0_nm * 1e-3, slope * 1e-6
    return LatticeProfile(float(x[0]), dx_um, 1.0 + np.cos(2 * np.pi * np.log1p(b * x / a) / b))


def criterion_6():
    g = BinaryPhaseGrating(3.0)
    chirps = []
    for c2 in (0.0, 1.0, 2.0):
        prof = simulate_lattice(g, BEAM, FourFRelay(pupil_phase=[0.0, 0.0, c2]))
        chirps.append(abs(_chirp(prof).chirp_nm_per_mm))
    a = chirps[0] < 0.01
    synth = _chirp(_chirped_profile()).chirp_nm_per_mm
    b = abs(synth / 2.0 - 1) < 0.02
    c = chirps[0] < chirps[1] < chirps[2]
    parts = " ".join(f"{v:.2e}" for v in chirps)
    return a and b and c, (
        f"(a) {'ok' if a else 'FAIL'} |chirp|={chirps[0]:.1e}; (b) {'ok' if b else 'FAIL'} recovered {synth:.4f}; "
        f"(c) {'ok' if c else 'FAIL'} |chirp| vs c2=0,1,2: {parts} nm/mm"
    )


def criterion_7():
    kmax = 0.1
    gaps = coverage_report(PLATE, M, kmax)
    lo = designed_spacing(PLATE, 0, M) * math.cos(kmax)
    worst, checked = 0.0, 0
    for t in np.linspace(lo, designed_spacing(PLATE, PLATE.j_max, M), 20001):
        try:
            sol = select_grating(PLATE, float(t), M, kmax)
        except CoverageGapError:
            if not any(a < t < b for a, b in gaps):
                return False, f"unexpected gap error at {t} nm"
            continue
        worst = max(worst, abs(designed_spacing(PLATE, sol.j, M, sol.kappa_rad) / t - 1))
        checked += 1
    c = math.cos(kmax)
    analytic = 0.5 * M * PLATE.delta_nm / (1 - c)
    boundary = gaps[-1][1] / c
    ok = worst < 1e-6 and abs(boundary - analytic) < 1.0
    return ok, (
        f"{checked} targets round-trip to {worst:.1e}; last gapped row {boundary:.3f} nm "
        f"vs analytic {analytic:.3f} nm"
    )


def criterion_8():
    rng = np.random.default_rng(20241014)
    worst = 0.0
    for _ in range(20):
        g = BinaryPhaseGrating(3.0, duty=float(rng.uniform(0.05, 0.95)))
        phi = float(rng.uniform(0, 2 * math.pi))
        orders = list(range(-10, 11))
        num = fourier_coefficients_numeric(g, phi, orders, 4096)
        worst = max(worst, max(abs(n - fourier_coefficient(g, m, phi)) for n, m in zip(num, orders)))
    parse = 0.0
    for _ in range(10):
        n = 2 ** int(rng.integers(8, 15))
        f = SampledField1D(
            float(rng.uniform(-100, 100)), float(rng.uniform(0.01, 1.0)), rng.normal(size=n) + 1j * rng.normal(size=n), 775.0
        )
        parse = max(parse, abs(far_field(f, float(rng.uniform(1, 500))).power / f.power - 1))
    return worst < 1e-3 and parse < 1e-10, f"max |a_num - a| = {worst:.1e}; max Parseval error {parse:.1e}"


CRITERIA = [
    (1, "diffraction efficiency", criterion_1),
    (2, "lattice spacing law", criterion_2),
    (3, "tilt tuning", criterion_3),
    (4, "tilt efficiency penalty", criterion_4),
    (5, "contrast", criterion_5),
    (6, "chirp analysis", criterion_6),
    (7, "coverage solver", criterion_7),
    (8, "oracle equivalence", criterion_8),
]


def _line(num, name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {num} ({name}): {detail}"


@pytest.mark.parametrize("num,name,check", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(num, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(num, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [(n, name, *check()) for n, name, check in CRITERIA]
    for r in results:
        print(_line(*r))
    sys.exit(0 if all(r[2] for r in results) else 1)
