"""JSON run configuration: strict parsing into the toolkit's dataclasses.

Every length key carries its unit as a suffix (``_um``, ``_nm``, ``_mm``).
Unknown keys anywhere in the document are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .design import PlateDesign
from .errors import AccordionError
from .grating import BinaryPhaseGrating
from .optics import FourFRelay, GaussianIllumination, Grid, default_grid


class ConfigError(AccordionError, ValueError):
    """The run configuration is malformed or violates a precondition."""


_SCHEMA: dict[str, Any] = {
    "wavelength_nm": float,
    "phase_rad": float,
    "tilt_rad": float,
    "row_j": int,
    "out_dir": str,
    "grating": {"period_um": float, "duty": float, "relief_nm": float, "index": float},
    "plate": {
        "d0_um": float,
        "delta_nm": float,
        "j_min": int,
        "j_max": int,
        "row_width_um": float,
        "row_length_mm": float,
    },
    "illumination": {"waist_mm": float, "peak_amplitude": float},
    "relay": {
        "f1_mm": float,
        "f2_mm": float,
        "kept_orders": list,
        "pupil_halfwidth_mm": float,
        "pupil_phase": list,
        "order_weights": dict,
    },
    "grid": {"log2_samples": int, "span_waists": float, "x0_um": float, "dx_um": float, "count": int},
    "analysis": {
        "fit_halfwidth_um": float,
        "window_um": float,
        "stride_um": float,
        "chirp_halfwidth_um": float,
        "pixel_pitch_um": float,
        "chirp": bool,
        "fit_window_um": list,
    },
    "design": {"kappa_max_rad": float, "target_nm": float},
    "efficiency": {"max_order": int},
    "sweep": {"j": object, "tilt_rad": object, "pupil_phase": list},
    "output": {"profile_halfwidth_um": float},
}


def _check_type(path, value, kind):
    if kind is object:
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _validate(doc, schema, prefix=""):
    if not isinstance(doc, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    out = {}
    for key, value in doc.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in schema:
            raise ConfigError(f"unknown key '{path}'")
        kind = schema[key]
        out[key] = _validate(value, kind, path) if isinstance(kind, dict) else _check_type(path, value, kind)
    return out


def _expand_range(path, spec, integer=False):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [spec]
    if isinstance(spec, list):
        vals = [_check_type(path, v, int if integer else float) for v in spec]
        if not vals:
            raise ConfigError(f"{path}: empty list")
        return vals
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "step", "num"}
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            start, stop = float(spec["start"]), float(spec["stop"])
        except KeyError as exc:
            raise ConfigError(f"{path}: range needs 'start' and 'stop'") from exc
        if "num" in spec:
            num = int(spec["num"])
            if num < 1:
                raise ConfigError(f"{path}.num must be >= 1")
            vals = list(np.linspace(start, stop, num))
        elif "step" in spec:
            step = float(spec["step"])
            if step <= 0 or stop < start:
                raise ConfigError(f"{path}: need step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(count)]
        else:
            raise ConfigError(f"{path}: range needs 'step' or 'num'")
        if integer:
            if any(abs(v - round(v)) > 1e-9 for v in vals):
                raise ConfigError(f"{path}: range does not produce integers")
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]
    raise ConfigError(f"{path}: expected a number, list or range object")


@dataclass
class RunConfig:
    """Parsed configuration plus its provenance digest."""

    raw: dict
    digest: str
    wavelength_nm: float = 775.0
    phase_rad: float | None = None
    tilt_rad: float = 0.0
    row_j: int | None = None
    out_dir: str | None = None
    grating: BinaryPhaseGrating | None = None
    plate: PlateDesign | None = None
    illumination: GaussianIllumination = field(default_factory=GaussianIllumination)
    relay: FourFRelay = field(default_factory=FourFRelay)
    grid_spec: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    design: dict = field(default_factory=dict)
    efficiency: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    # analysis defaults
    @property
    def fit_halfwidth_um(self) -> float:
        return self.analysis.get("fit_halfwidth_um", 200.0)

    @property
    def window_um(self) -> float:
        return self.analysis.get("window_um", 400.0)

    @property
    def stride_um(self) -> float:
        return self.analysis.get("stride_um", 500.0)

    @property
    def chirp_halfwidth_um(self) -> float:
        return self.analysis.get("chirp_halfwidth_um", 1000.0)

    @property
    def pixel_pitch_um(self) -> float:
        return self.analysis.get("pixel_pitch_um", 3.45 / 100)

    @property
    def kappa_max(self) -> float:
        return self.design.get("kappa_max_rad", 0.1)

    @property
    def magnification(self) -> float:
        return self.relay.magnification

    def grating_for(self, j: int | None = None) -> BinaryPhaseGrating:
        """Grating for plate row ``j`` (default ``row_j``) or the explicit grating."""
        if j is None:
            j = self.row_j
        if j is not None:
            if self.plate is None:
                raise ConfigError("a row index needs a 'plate'")
            try:
                return self.plate.row(j, self._template())
            except AccordionError as exc:
                raise ConfigError(str(exc)) from exc
        if self.grating is None:
            raise ConfigError("config needs 'grating.period_um' or 'plate' with 'row_j'")
        return self.grating

    def _template(self) -> BinaryPhaseGrating:
        tmpl = {k: v for k, v in self.raw.get("grating", {}).items() if k != "period_um"}
        return BinaryPhaseGrating(period_um=1.0, **tmpl)

    def grid(self) -> Grid:
        g = self.grid_spec
        explicit = {"x0_um", "dx_um", "count"} & set(g)
        if explicit:
            if explicit != {"x0_um", "dx_um", "count"} or {"log2_samples", "span_waists"} & set(g):
                raise ConfigError("grid: give either x0_um/dx_um/count or log2_samples/span_waists")
            return Grid(g["x0_um"], g["dx_um"], g["count"])
        return default_grid(self.illumination, g.get("log2_samples", 20), g.get("span_waists", 8.0))


def canonical_digest(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_config(doc: dict) -> RunConfig:
    """Validate a decoded JSON document and build the run objects."""
    doc = _validate(doc, _SCHEMA)
    cfg = RunConfig(raw=doc, digest=canonical_digest(doc))
    try:
        cfg.wavelength_nm = doc.get("wavelength_nm", 775.0)
        if cfg.wavelength_nm <= 0:
            raise ConfigError("wavelength_nm must be positive")
        cfg.phase_rad = doc.get("phase_rad")
        cfg.tilt_rad = doc.get("tilt_rad", 0.0)
        if abs(cfg.tilt_rad) >= math.pi / 2:
            raise ConfigError("tilt_rad must satisfy |tilt| < pi/2")
        cfg.row_j = doc.get("row_j")
        cfg.out_dir = doc.get("out_dir")
        if "grating" in doc and "period_um" in doc["grating"]:
            cfg.grating = BinaryPhaseGrating.from_dict(doc["grating"])
        elif "grating" in doc:
            cfg._template()
        if "plate" in doc:
            cfg.plate = PlateDesign.from_dict(doc["plate"])
        elif cfg.row_j is not None or "j" in doc.get("sweep", {}):
            cfg.plate = PlateDesign()
        if cfg.row_j is not None:
            cfg.grating_for(cfg.row_j)
        ill = doc.get("illumination", {})
        cfg.illumination = GaussianIllumination(wavelength_nm=cfg.wavelength_nm, **ill)
        rel = dict(doc.get("relay", {}))
        if "kept_orders" in rel:
            rel["kept_orders"] = [_check_type("relay.kept_orders[]", m, int) for m in rel["kept_orders"]]
        if "pupil_phase" in rel:
            rel["pupil_phase"] = [_check_type("relay.pupil_phase[]", c, float) for c in rel["pupil_phase"]]
        if "order_weights" in rel:
            try:
                rel["order_weights"] = {int(k): float(v) for k, v in rel["order_weights"].items()}
            except (TypeError, ValueError) as exc:
                raise ConfigError("relay.order_weights maps integer orders to numbers") from exc
        cfg.relay = FourFRelay(**rel)
        cfg.grid_spec = doc.get("grid", {})
        grid = cfg.grid()
        if not (grid.count >= 2 and grid.count & (grid.count - 1) == 0 and grid.dx_um > 0):
            raise ConfigError("grid: count must be a power of two and dx_um positive")
        cfg.analysis = doc.get("analysis", {})
        fw = cfg.analysis.get("fit_window_um")
        if fw is not None and (len(fw) != 2 or not all(isinstance(v, (int, float)) for v in fw) or fw[0] >= fw[1]):
            raise ConfigError("analysis.fit_window_um must be [lo, hi] with lo < hi")
        for key in ("fit_halfwidth_um", "window_um", "stride_um", "chirp_halfwidth_um", "pixel_pitch_um"):
            if key in cfg.analysis and not cfg.analysis[key] > 0:
                raise ConfigError(f"analysis.{key} must be positive")
        cfg.design = doc.get("design", {})
        if not 0 <= cfg.kappa_max < 0.5:
            raise ConfigError("design.kappa_max_rad must lie in [0, 0.5)")
        cfg.efficiency = doc.get("efficiency", {})
        if cfg.efficiency.get("max_order", 10) < 0:
            raise ConfigError("efficiency.max_order must be >= 0")
        cfg.output = doc.get("output", {})
        sw = doc.get("sweep", {})
        sweep = {}
        if "j" in sw:
            sweep["j"] = _expand_range("sweep.j", sw["j"], integer=True)
        if "tilt_rad" in sw:
            sweep["tilt_rad"] = _expand_range("sweep.tilt_rad", sw["tilt_rad"])
        if "pupil_phase" in sw:
            pp = sw["pupil_phase"]
            if not pp or not all(isinstance(c, list) for c in pp):
                raise ConfigError("sweep.pupil_phase must be a non-empty list of coefficient lists")
            sweep["pupil_phase"] = [[_check_type("sweep.pupil_phase[][]", v, float) for v in c] for c in pp]
        cfg.sweep = sweep
    except ConfigError:
        raise
    except (AccordionError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)
