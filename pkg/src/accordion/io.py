"""File formats: CSV tables, JSON reports, 16-bit PGM images."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import IntensityImage
from .errors import ParameterError, ShapeError
from .grating import DiffractionOrderSpectrum
from .optics import LatticeProfile, SampledField1D


def fmt(value) -> str:
    """12 significant digits, '.' decimal, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v == 0:
        return "0"
    return format(v, ".12g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], digest: str | None = None) -> None:
    buf = io.StringIO()
    if digest is not None:
        buf.write(f"# config_sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV file, skipping '#' comment lines."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ParameterError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(type(o).__name__)


def _round12(obj):
    if isinstance(obj, float):
        return float(format(obj, ".12g")) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, np.floating):
        return _round12(float(obj))
    return obj


def dumps_json(payload: dict, digest: str | None = None) -> str:
    if digest is not None:
        payload = {"config_sha256": digest, **payload}
    return json.dumps(_round12(payload), indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, payload: dict, digest: str | None = None) -> None:
    Path(path).write_text(dumps_json(payload, digest), encoding="utf-8")


def write_spectrum(path, spectrum: DiffractionOrderSpectrum, digest: str | None = None) -> None:
    rows = [
        (e.m, e.coefficient.real, e.coefficient.imag, e.efficiency, e.angle_rad)
        for e in spectrum.entries
    ]
    write_csv(path, ["m", "re_a", "im_a", "eta", "xi_rad"], rows, digest)


def write_field(path, field: SampledField1D, digest: str | None = None) -> None:
    a = field.amplitudes
    write_csv(path, ["x_um", "re", "im"], zip(field.x_um, a.real, a.imag), digest)


def read_field(path, wavelength_nm: float) -> SampledField1D:
    header, rows = read_csv(path)
    if header != ["x_um", "re", "im"]:
        raise ParameterError(f"{path}: expected header x_um,re,im")
    data = np.array(rows, dtype=float)
    x = data[:, 0]
    return SampledField1D(float(x[0]), float(x[1] - x[0]), data[:, 1] + 1j * data[:, 2], wavelength_nm)


def write_profile(path, profile: LatticeProfile, digest: str | None = None) -> None:
    write_csv(path, ["x_um", "intensity"], zip(profile.x_um, profile.intensities), digest)


def read_profile(path) -> LatticeProfile:
    header, rows = read_csv(path)
    if header != ["x_um", "intensity"]:
        raise ParameterError(f"{path}: expected header x_um,intensity")
    data = np.array(rows, dtype=float)
    if data.shape[0] < 2:
        raise ParameterError(f"{path}: profile needs at least two rows")
    x = data[:, 0]
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise ParameterError(f"{path}: x_um is not uniformly spaced")
    return LatticeProfile(float(x[0]), float((x[-1] - x[0]) / (x.size - 1)), data[:, 1])


def read_csv_grid(path, pixel_pitch_um: float) -> IntensityImage:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        px = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    except ValueError as exc:
        raise ParameterError(f"{path}: not a numeric CSV grid") from exc
    if px.ndim != 2:
        raise ShapeError(f"{path}: rows have unequal length")
    return IntensityImage(px, pixel_pitch_um)


def _pgm_tokens(data: bytes, count: int):
    """Parse ``count`` whitespace-separated header tokens; return tokens and body offset."""
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1


def read_pgm(path, pixel_pitch_um: float) -> IntensityImage:
    """Binary (P5) PGM with 8- or 16-bit samples; 16-bit samples are big-endian."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise ParameterError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed PGM header") from exc
    if not (width > 0 and height > 0 and 0 < maxval < 65536):
        raise ParameterError(f"{path}: invalid PGM dimensions or maxval")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    if len(data) - offset < width * height * dtype.itemsize:
        raise ParameterError(f"{path}: PGM body is truncated")
    body = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
    return IntensityImage(body.reshape(height, width).astype(float), pixel_pitch_um)


def write_pgm(path, pixels: np.ndarray, maxval: int = 65535) -> None:
    px = np.asarray(pixels)
    if px.ndim != 2:
        raise ShapeError("PGM needs a 2D array")
    if np.any(px < 0) or np.any(px > maxval):
        raise ParameterError("pixel values outside [0, maxval]")
    h, w = px.shape
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + np.rint(px).astype(dtype).tobytes())
