"""Command-line front end.

Exit status: 0 success, 2 configuration error, 3 unreachable design target,
4 fit failure.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as aio
from .analysis import chirp_fit, contrast, fit_sinusoid, integrate_columns, local_spacing
from .config import ConfigError, RunConfig, load_config
from .design import PlateDesign, coverage_report, reachable_interval, select_grating
from .errors import AccordionError, CoverageGapError, FitError, UnreachableTargetError
from .grating import order_spectrum
from .pipeline import run_point, validate_point

log = logging.getLogger("accordion")

EXIT_OK, EXIT_CONFIG, EXIT_UNREACHABLE, EXIT_FIT = 0, 2, 3, 4


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_efficiency(args, cfg: RunConfig) -> int:
    grating = cfg.grating_for()
    max_order = cfg.efficiency.get("max_order", 10)
    phase = cfg.phase_rad
    spectrum = order_spectrum(grating, cfg.wavelength_nm, cfg.tilt_rad, range(-max_order, max_order + 1), phase)
    path = _out_dir(args, cfg) / "spectrum.csv"
    aio.write_spectrum(path, spectrum, cfg.digest)
    print(path)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    validate_point(cfg)
    out = _out_dir(args, cfg)
    profile, summary = run_point(cfg)
    hw = cfg.output.get("profile_halfwidth_um", 1000.0)
    aio.write_profile(out / "profile.csv", profile.crop(-hw, hw), cfg.digest)
    aio.write_json(out / "summary.json", summary, cfg.digest)
    sys.stdout.write(aio.dumps_json(summary, cfg.digest))
    return EXIT_OK


def _target(args, cfg):
    target = args.target_nm if args.target_nm is not None else cfg.design.get("target_nm")
    if target is None:
        raise ConfigError("design needs --target-nm or design.target_nm")
    if not target > 0:
        raise ConfigError("target must be positive")
    return target


def _plate(cfg):
    return cfg.plate if cfg.plate is not None else PlateDesign()


def cmd_design(args, cfg: RunConfig) -> int:
    target = _target(args, cfg)
    plate = _plate(cfg)
    out = _out_dir(args, cfg)
    tmpl = cfg._template()
    try:
        sol = select_grating(plate, target, cfg.magnification, cfg.kappa_max, tmpl, cfg.wavelength_nm)
    except UnreachableTargetError as exc:
        report = {
            "error": "coverage_gap" if isinstance(exc, CoverageGapError) else "unreachable",
            "message": str(exc),
            "target_nm": exc.target_nm,
            "reachable_nm": list(exc.reachable),
        }
        if isinstance(exc, CoverageGapError):
            report["required_kappa_rad"] = exc.required_kappa
            report["adjacent_below_nm"] = list(exc.below) if exc.below else None
            report["adjacent_above_nm"] = list(exc.above) if exc.above else None
        aio.write_json(out / "solution.json", report, cfg.digest)
        sys.stdout.write(aio.dumps_json(report, cfg.digest))
        return EXIT_UNREACHABLE
    payload = {"target_nm": target, **sol.to_dict()}
    aio.write_json(out / "solution.json", payload, cfg.digest)
    sys.stdout.write(aio.dumps_json(payload, cfg.digest))
    return EXIT_OK


def cmd_coverage(args, cfg: RunConfig) -> int:
    plate = _plate(cfg)
    gaps = coverage_report(plate, cfg.magnification, cfg.kappa_max)
    path = _out_dir(args, cfg) / "coverage.csv"
    aio.write_csv(path, ["gap_start_nm", "gap_end_nm"], gaps, cfg.digest)
    lo, hi = reachable_interval(plate, cfg.magnification, cfg.kappa_max)
    print(f"{path}: {len(gaps)} gaps, reachable [{lo:.6g}, {hi:.6g}] nm")
    return EXIT_OK


def _load_profile(path: Path, cfg: RunConfig):
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return integrate_columns(aio.read_pgm(path, cfg.pixel_pitch_um))
    header, _ = aio.read_csv(path)
    if header == ["x_um", "intensity"]:
        return aio.read_profile(path)
    return integrate_columns(aio.read_csv_grid(path, cfg.pixel_pitch_um))


def cmd_analyze(args, cfg: RunConfig) -> int:
    path = Path(args.input)
    if not path.exists():
        raise ConfigError(f"input {path} does not exist")
    out = _out_dir(args, cfg)
    try:
        profile = _load_profile(path, cfg)
    except AccordionError as exc:
        raise ConfigError(str(exc)) from exc
    window = cfg.analysis.get("fit_window_um")
    fit = fit_sinusoid(profile, tuple(window) if window else None)
    report = {"input": path.name, "fit": fit.to_dict(), "contrast": contrast(fit)}
    if cfg.analysis.get("chirp", False):
        samples = local_spacing(profile, cfg.window_um, cfg.stride_um)
        report["local_spacing"] = [{"x_um": x, "spacing_nm": d} for x, d in samples]
        report["chirp"] = chirp_fit(samples).to_dict()
    aio.write_json(out / "fit.json", report, cfg.digest)
    sys.stdout.write(aio.dumps_json(report, cfg.digest))
    return EXIT_OK


SWEEP_COLUMNS = [
    "j",
    "tilt_rad",
    "pupil_phase",
    "period_um",
    "designed_spacing_nm",
    "spacing_nm",
    "spacing_se_nm",
    "contrast",
    "efficiency",
    "chirp_nm_per_mm",
    "chirp_se_nm_per_mm",
]


def sweep_points(cfg: RunConfig):
    js = cfg.sweep.get("j", [cfg.row_j])
    tilts = cfg.sweep.get("tilt_rad", [cfg.tilt_rad])
    phases = cfg.sweep.get("pupil_phase", [list(cfg.relay.pupil_phase)])
    return list(itertools.product(js, tilts, phases))


def run_sweep(cfg: RunConfig, threads: int = 1) -> list[dict]:
    points = sweep_points(cfg)
    for j, tilt, pp in points:
        validate_point(cfg, j, tilt, pp)

    def one(point):
        return run_point(cfg, *point)[1]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]


def cmd_sweep(args, cfg: RunConfig) -> int:
    rows = run_sweep(cfg, args.threads)
    out = _out_dir(args, cfg)
    table = []
    for r in rows:
        rec = dict(r, pupil_phase=";".join(aio.fmt(c) for c in r["pupil_phase"]))
        table.append([rec[c] for c in SWEEP_COLUMNS])
    path = out / "sweep.csv"
    aio.write_csv(path, SWEEP_COLUMNS, table, cfg.digest)
    print(path)
    return EXIT_OK


COMMANDS = {
    "efficiency": cmd_efficiency,
    "simulate": cmd_simulate,
    "design": cmd_design,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "coverage": cmd_coverage,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (default: config out_dir or .)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    p = argparse.ArgumentParser(prog="accordion", description="Accordion-lattice simulation and analysis")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("efficiency", parents=[common], help="diffraction-order table")
    sub.add_parser("simulate", parents=[common], help="simulate one lattice")
    d = sub.add_parser("design", parents=[common], help="choose grating row and tilt")
    d.add_argument("--target-nm", type=float, dest="target_nm")
    a = sub.add_parser("analyze", parents=[common], help="fit an image or profile")
    a.add_argument("input", help="PGM image, CSV image grid or x_um,intensity profile")
    sub.add_parser("sweep", parents=[common], help="simulate over j, tilt and pupil phase")
    sub.add_parser("coverage", parents=[common], help="report unreachable spacings")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnreachableTargetError as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except AccordionError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
