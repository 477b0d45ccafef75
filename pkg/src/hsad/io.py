"""ENVI-style cube ingestion and score-map emission."""
from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .cube import HsiCube, ScoreMap, TruthMask
from .exceptions import DataError, FormatError, HsadError, SizeError

__all__ = [
    "read_envi_header", "load_envi", "save_envi", "load_mask", "save_mask",
    "save_scoremap", "load_scoremap",
]

ENVI_DTYPES = {1: np.uint8, 4: np.float32, 5: np.float64}
INTERLEAVES = ("bsq", "bil", "bip")
SCOREMAP_MAGIC = b"HSAD"
_RAW_EXTENSIONS = (".raw", ".img", ".dat", ".bsq", ".bil", ".bip", ".bin")


def read_envi_header(path) -> Dict[str, object]:
    """Parse an ENVI header into a dict with lower-cased keys.

    Brace-delimited values may span lines and come back as lists of strings.
    """
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise FormatError(f"{path}: not a text header")
    except OSError as exc:
        raise FormatError(f"{path}: cannot read header ({exc.strerror})")
    out: Dict[str, object] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line.startswith(";") or "=" not in line:
            continue
        key, _, val = line.partition("=")
        key = " ".join(key.strip().lower().split())
        val = val.strip()
        if val.startswith("{"):
            while not val.rstrip().endswith("}") and i < len(lines):
                val += "\n" + lines[i].strip()
                i += 1
            if not val.rstrip().endswith("}"):
                raise FormatError(f"{path}: unterminated brace value for '{key}'")
            inner = val.strip()[1:-1]
            if key == "description":
                out[key] = inner.strip()
            else:
                out[key] = [v.strip() for v in inner.split(",") if v.strip()]
        else:
            out[key] = val
    return out


def _int_key(hdr, key, path, default=None) -> int:
    if key not in hdr:
        if default is not None:
            return default
        raise FormatError(f"{path}: missing header key '{key}'")
    try:
        return int(str(hdr[key]).strip())
    except ValueError:
        raise FormatError(f"{path}: unparsable value for header key '{key}': {hdr[key]!r}")


def _resolve_raw(header_path: Path, hdr) -> Path:
    candidates = []
    if "data file" in hdr:
        df = Path(str(hdr["data file"]).strip())
        candidates.append(df if df.is_absolute() else header_path.parent / df)
    base = header_path.with_suffix("")
    candidates.append(base)
    candidates.extend(base.with_suffix(ext) for ext in _RAW_EXTENSIONS)
    for c in candidates:
        if c != header_path and c.is_file():
            return c
    raise FormatError(f"{header_path}: no companion raw file found (tried {', '.join(map(str, candidates))})")


def _read_raw(header_path, allowed_types) -> tuple:
    header_path = Path(header_path)
    hdr = read_envi_header(header_path)
    samples = _int_key(hdr, "samples", header_path)
    lines = _int_key(hdr, "lines", header_path)
    bands = _int_key(hdr, "bands", header_path)
    dtype_code = _int_key(hdr, "data type", header_path)
    byte_order = _int_key(hdr, "byte order", header_path, default=0)
    offset = _int_key(hdr, "header offset", header_path, default=0)
    if "interleave" not in hdr:
        raise FormatError(f"{header_path}: missing header key 'interleave'")
    interleave = str(hdr["interleave"]).strip().lower()
    if interleave not in INTERLEAVES:
        raise FormatError(f"{header_path}: unparsable value for header key 'interleave': {interleave!r}")
    if dtype_code not in allowed_types:
        raise FormatError(
            f"{header_path}: unsupported data type {dtype_code} "
            f"(accepted: {', '.join(map(str, sorted(allowed_types)))})"
        )
    if byte_order not in (0, 1):
        raise FormatError(f"{header_path}: unparsable value for header key 'byte order': {byte_order}")
    if min(samples, lines, bands) < 1:
        raise FormatError(f"{header_path}: samples, lines and bands must be positive")
    dt = np.dtype(ENVI_DTYPES[dtype_code]).newbyteorder("<" if byte_order == 0 else ">")
    raw_path = _resolve_raw(header_path, hdr)
    expected = samples * lines * bands * dt.itemsize
    actual = os.path.getsize(raw_path) - offset
    if actual != expected:
        raise SizeError(
            f"{raw_path}: size {actual} bytes does not match "
            f"samples*lines*bands*elemsize = {samples}*{lines}*{bands}*{dt.itemsize} = {expected}"
        )
    flat = np.fromfile(raw_path, dtype=dt, offset=offset).astype(np.float64)
    if interleave == "bsq":
        arr = flat.reshape(bands, lines, samples).transpose(1, 2, 0)
    elif interleave == "bil":
        arr = flat.reshape(lines, bands, samples).transpose(0, 2, 1)
    else:
        arr = flat.reshape(lines, samples, bands)
    return np.ascontiguousarray(arr), hdr


def load_envi(header_path) -> HsiCube:
    """Load a 32- or 64-bit float ENVI cube into pixel-major layout."""
    arr, hdr = _read_raw(header_path, allowed_types=(4, 5))
    bad = ~np.isfinite(arr)
    if bad.any():
        first = int(np.flatnonzero(bad.ravel())[0])
        raise DataError(f"{header_path}: non-finite value at pixel-major index {first}")
    wl = None
    if "wavelength" in hdr and isinstance(hdr["wavelength"], list):
        try:
            wl = np.array([float(v) for v in hdr["wavelength"]])
        except ValueError:
            raise FormatError(f"{header_path}: unparsable value for header key 'wavelength'")
    return HsiCube(arr, wavelengths=wl, name=Path(header_path).stem)


def load_mask(header_path) -> TruthMask:
    """Load a single-band 8-bit ENVI truth mask; nonzero means anomaly."""
    arr, _ = _read_raw(header_path, allowed_types=(1, 4, 5))
    if arr.shape[2] != 1:
        raise FormatError(f"{header_path}: a mask must have exactly 1 band, got {arr.shape[2]}")
    return TruthMask(arr[:, :, 0] != 0)


def _write_header(path: Path, samples, lines, bands, dtype_code, interleave, extra=None):
    body = [
        "ENVI",
        f"samples = {samples}",
        f"lines = {lines}",
        f"bands = {bands}",
        "header offset = 0",
        "file type = ENVI Standard",
        f"data type = {dtype_code}",
        f"interleave = {interleave}",
        "byte order = 0",
    ]
    body.extend(extra or [])
    path.write_text("\n".join(body) + "\n")


def _raw_path(header_path: Path) -> Path:
    return header_path.with_suffix(".raw")


def save_envi(cube: HsiCube, header_path, interleave: str = "bsq", dtype: str = "float64") -> Path:
    """Write ``cube`` as an ENVI header plus ``.raw`` companion; returns the header path."""
    header_path = Path(header_path)
    interleave = interleave.lower()
    if interleave not in INTERLEAVES:
        raise FormatError(f"unknown interleave {interleave!r}")
    code = {"float32": 4, "float64": 5}.get(dtype)
    if code is None:
        raise FormatError(f"unsupported dtype {dtype!r}; use float32 or float64")
    data = cube.data.astype(np.dtype(ENVI_DTYPES[code]).newbyteorder("<"))
    if interleave == "bsq":
        data = data.transpose(2, 0, 1)
    elif interleave == "bil":
        data = data.transpose(0, 2, 1)
    extra = []
    if cube.wavelengths is not None:
        extra.append("wavelength = {" + ", ".join(repr(float(w)) for w in cube.wavelengths) + "}")
    if cube.name:
        extra.append("description = {" + cube.name + "}")
    raw = _raw_path(header_path)
    try:
        _write_header(header_path, cube.width, cube.height, cube.bands, code, interleave, extra)
        np.ascontiguousarray(data).tofile(raw)
    except OSError as exc:
        raise HsadError(f"{header_path}: write failed ({exc.strerror})") from exc
    return header_path


def save_mask(mask: TruthMask, header_path) -> Path:
    header_path = Path(header_path)
    raw = _raw_path(header_path)
    try:
        _write_header(header_path, mask.width, mask.height, 1, 1, "bsq")
        mask.labels.astype(np.uint8).tofile(raw)
    except OSError as exc:
        raise HsadError(f"{header_path}: write failed ({exc.strerror})") from exc
    return header_path


def save_scoremap(smap: ScoreMap, path, format: str = "flat-f64") -> None:
    """Write a score map as ``flat-f64`` (HSAD container) or ``pgm16``."""
    path = Path(path)
    s = smap.scores
    h, w = s.shape
    if format == "flat-f64":
        payload = SCOREMAP_MAGIC + struct.pack("<III", w, h, 0) + s.astype("<f8").tobytes()
    elif format == "pgm16":
        lo, hi = float(s.min()), float(s.max())
        header = f"P5\n{w} {h}\n65535\n"
        if hi == lo:
            # degenerate scaling: constant maps render black
            header = f"P5\n# hsad constant-map {lo!r}\n{w} {h}\n65535\n"
            pix = np.zeros(s.shape, dtype=">u2")
        else:
            pix = np.rint((s - lo) / (hi - lo) * 65535.0).astype(">u2")
        payload = header.encode("ascii") + pix.tobytes()
    else:
        raise FormatError(f"unknown score-map format {format!r}; use flat-f64 or pgm16")
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise HsadError(f"{path}: write failed ({exc.strerror})") from exc


def load_scoremap(path, source: Optional[str] = None) -> ScoreMap:
    """Read a ``flat-f64`` score container written by :func:`save_scoremap`."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if len(blob) < 16 or blob[:4] != SCOREMAP_MAGIC:
        raise FormatError(f"{path}: missing HSAD magic")
    w, h, _ = struct.unpack("<III", blob[4:16])
    if len(blob) != 16 + 8 * w * h:
        raise SizeError(f"{path}: payload is {len(blob) - 16} bytes, expected {8 * w * h}")
    scores = np.frombuffer(blob, dtype="<f8", offset=16).reshape(h, w).astype(np.float64)
    return ScoreMap(scores, source=source if source is not None else path.stem)
