"""Cube and signature I/O, band masking, and radiance to TOA reflectance."""
from __future__ import annotations

import csv
import logging
import math
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import SpectralSignature
from .errors import (
    AlreadyReflectance,
    EmptyLibrary,
    IoFailure,
    LengthMismatch,
    MalformedHeader,
    MissingEsun,
    NonMonotonicWavelengths,
    RangeOutOfBounds,
    SizeMismatch,
    SunBelowHorizon,
    UnsupportedDataType,
    InputError,
)

log = logging.getLogger(__name__)

RADIANCE = "radiance"
REFLECTANCE = "reflectance"

ENVI_DTYPES = {
    1: np.dtype(np.uint8),
    2: np.dtype(np.int16),
    4: np.dtype(np.float32),
    5: np.dtype(np.float64),
}
_DTYPE_CODES = {v: k for k, v in ENVI_DTYPES.items()}
INTERLEAVES = ("bsq", "bil", "bip")
_REQUIRED = ("samples", "lines", "bands", "interleave", "data type", "byte order")


@dataclass
class HyperspectralCube:
    """Pixel grid of spectra, stored as a (rows, cols, bands) array."""

    data: np.ndarray
    wavelengths: np.ndarray
    unit: str = REFLECTANCE
    band_mask: np.ndarray | None = None
    valid_mask: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.data.ndim != 3:
            raise LengthMismatch(f"cube data must be 3-D, got shape {self.data.shape}")
        self.wavelengths = np.asarray(self.wavelengths, dtype=float)
        if self.wavelengths.size != self.bands:
            raise LengthMismatch(f"{self.wavelengths.size} wavelengths for {self.bands} bands")
        if self.bands > 1 and not np.all(np.diff(self.wavelengths) > 0):
            raise NonMonotonicWavelengths("cube wavelengths must be strictly ascending")
        if self.unit not in (RADIANCE, REFLECTANCE):
            raise InputError(f"unknown unit flag {self.unit!r}")
        if self.band_mask is None:
            self.band_mask = np.ones(self.bands, dtype=bool)
        self.band_mask = np.asarray(self.band_mask, dtype=bool)
        if self.valid_mask is None:
            self.valid_mask = compute_valid_mask(self.data, self.band_mask)

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def bands(self):
        return self.data.shape[2]

    @property
    def used_wavelengths(self):
        return self.wavelengths[self.band_mask]

    def pixel_matrix(self):
        """Valid pixels as float64 rows over masked-in bands, plus their flat indices."""
        flat_valid = np.flatnonzero(self.valid_mask.ravel())
        X = self.data.reshape(-1, self.bands)[flat_valid][:, self.band_mask]
        return X.astype(np.float64), flat_valid


def compute_valid_mask(data, band_mask):
    sub = data[..., band_mask]
    if sub.shape[-1] == 0:
        return np.zeros(data.shape[:2], dtype=bool)
    finite = np.all(np.isfinite(sub), axis=-1) if sub.dtype.kind == "f" else True
    nonzero = np.any(sub != 0, axis=-1)
    return np.asarray(finite & nonzero, dtype=bool)


# ---------------------------------------------------------------- ENVI


def parse_envi_header(text):
    lines = text.splitlines()
    if not lines or lines[0].strip().upper() != "ENVI":
        raise MalformedHeader("header must start with 'ENVI'")
    header = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        if "=" not in line:
            raise MalformedHeader(f"line without '=': {line!r}")
        key, value = line.split("=", 1)
        value = value.strip()
        if value.startswith("{"):
            while "}" not in value:
                if i >= len(lines):
                    raise MalformedHeader(f"unterminated brace for key {key.strip()!r}")
                value += " " + lines[i].strip()
                i += 1
        header[key.strip().lower()] = value
    return header


def _brace_list(value, cast=float):
    inner = value.strip().lstrip("{").rstrip("}")
    return [cast(v) for v in inner.split(",") if v.strip()]


def _int_key(header, key):
    try:
        return int(header[key])
    except KeyError:
        raise MalformedHeader(f"missing required key {key!r}") from None
    except ValueError:
        raise MalformedHeader(f"key {key!r} is not an integer: {header[key]!r}") from None


def read_envi_header(header_path):
    try:
        text = Path(header_path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read header {header_path}: {exc}") from exc
    header = parse_envi_header(text)
    for key in _REQUIRED:
        if key not in header:
            raise MalformedHeader(f"missing required key {key!r}")
    return header


def read_envi(header_path, data_path=None) -> HyperspectralCube:
    """Read a BSQ/BIL/BIP cube. Integer payloads are kept as stored."""
    header_path = Path(header_path)
    data_path = Path(data_path) if data_path else default_data_path(header_path)
    header = read_envi_header(header_path)
    samples = _int_key(header, "samples")
    lines = _int_key(header, "lines")
    bands = _int_key(header, "bands")
    code = _int_key(header, "data type")
    order = _int_key(header, "byte order")
    offset = int(header.get("header offset", 0))
    interleave = header["interleave"].strip().lower()
    if interleave not in INTERLEAVES:
        raise MalformedHeader(f"unknown interleave {interleave!r}")
    if code not in ENVI_DTYPES:
        raise UnsupportedDataType(f"ENVI data type {code} is not supported")
    if order not in (0, 1):
        raise MalformedHeader(f"byte order must be 0 or 1, got {order}")
    dtype = ENVI_DTYPES[code].newbyteorder("<" if order == 0 else ">")

    try:
        size = os.path.getsize(data_path)
    except OSError as exc:
        raise IoFailure(f"cannot stat data file {data_path}: {exc}") from exc
    expected = samples * lines * bands * dtype.itemsize
    if size - offset != expected:
        raise SizeMismatch(
            f"{data_path}: {size - offset} payload bytes, header implies {expected}"
        )
    raw = np.fromfile(data_path, dtype=dtype, offset=offset)
    if interleave == "bsq":
        arr = raw.reshape(bands, lines, samples).transpose(1, 2, 0)
    elif interleave == "bil":
        arr = raw.reshape(lines, bands, samples).transpose(0, 2, 1)
    else:
        arr = raw.reshape(lines, samples, bands)
    arr = np.ascontiguousarray(arr).astype(dtype.newbyteorder("="), copy=False)

    if "wavelength" in header:
        wl = np.array(_brace_list(header["wavelength"]))
        if wl.size != bands:
            raise MalformedHeader(f"{wl.size} wavelengths for {bands} bands")
        if header.get("wavelength units", "micrometers").strip().lower() in ("nanometers", "nm"):
            wl = wl / 1000.0
    else:
        wl = np.arange(1, bands + 1, dtype=float)
    band_mask = None
    if "bbl" in header:
        bbl = _brace_list(header["bbl"])
        if len(bbl) != bands:
            raise MalformedHeader(f"bbl has {len(bbl)} entries for {bands} bands")
        band_mask = np.array(bbl) != 0
    unit = header.get("unit flag", "").strip().lower()
    if not unit:
        unit = RADIANCE if code in (1, 2) and bands > 1 else REFLECTANCE
    ignore = header.get("data ignore value")
    meta = {"data ignore value": float(ignore)} if ignore is not None else {}
    return HyperspectralCube(arr, wl, unit=unit, band_mask=band_mask, meta=meta)


def default_data_path(header_path):
    header_path = Path(header_path)
    if header_path.suffix == ".hdr":
        return header_path.with_suffix(".img")
    return header_path.with_name(header_path.name + ".img")


def header_path_for(path):
    """Accept either 'x.hdr' or 'x.img' and return the header path."""
    path = Path(path)
    return path if path.suffix == ".hdr" else path.with_suffix(".hdr")


def write_envi(cube: HyperspectralCube, header_path, data_path=None, interleave="bsq",
               description=None, ignore_value=None):
    header_path = Path(header_path)
    data_path = Path(data_path) if data_path else default_data_path(header_path)
    interleave = interleave.lower()
    if interleave not in INTERLEAVES:
        raise MalformedHeader(f"unknown interleave {interleave!r}")
    data = cube.data
    dt = data.dtype.newbyteorder("=")
    code = _DTYPE_CODES.get(np.dtype(dt.type))
    if code is None:
        raise UnsupportedDataType(f"cannot write dtype {data.dtype}")
    if interleave == "bsq":
        out = data.transpose(2, 0, 1)
    elif interleave == "bil":
        out = data.transpose(0, 2, 1)
    else:
        out = data
    out = np.ascontiguousarray(out, dtype=np.dtype(dt.type).newbyteorder("<"))

    lines = [
        "ENVI",
        f"description = {{{description or 'litmap output'}}}",
        f"samples = {cube.cols}",
        f"lines = {cube.rows}",
        f"bands = {cube.bands}",
        "header offset = 0",
        "file type = ENVI Standard",
        f"data type = {code}",
        f"interleave = {interleave}",
        "byte order = 0",
        "wavelength units = micrometers",
        "wavelength = {" + ", ".join(repr(float(w)) for w in cube.wavelengths) + "}",
        "bbl = {" + ", ".join("1" if b else "0" for b in cube.band_mask) + "}",
        f"unit flag = {cube.unit}",
    ]
    if ignore_value is not None:
        lines.append(f"data ignore value = {ignore_value}")
    try:
        header_path.parent.mkdir(parents=True, exist_ok=True)
        header_path.write_text("\n".join(lines) + "\n")
        out.tofile(data_path)
    except OSError as exc:
        raise IoFailure(f"cannot write {header_path}: {exc}") from exc


def write_raster(array2d, header_path, ignore_value=None, description=None):
    """Write a single-band (rows, cols) raster; NaN becomes ignore_value."""
    a = np.asarray(array2d)
    if ignore_value is not None and a.dtype.kind == "f":
        a = np.where(np.isnan(a), ignore_value, a)
    cube = HyperspectralCube(a[:, :, None], np.array([1.0]), unit=REFLECTANCE,
                             valid_mask=np.ones(a.shape, bool))
    write_envi(cube, header_path, description=description, ignore_value=ignore_value)


def read_raster(header_path):
    """Read a single-band raster; the ignore value (if declared) becomes NaN."""
    cube = read_envi(header_path_for(header_path))
    a = cube.data[:, :, 0].astype(np.float64)
    ignore = cube.meta.get("data ignore value")
    if ignore is not None:
        a[a == ignore] = np.nan
    return a


# ---------------------------------------------------------------- band mask


def parse_mask_spec(spec):
    """'0-6,57-75,100' -> [(0, 6), (57, 75), (100, 100)]."""
    if spec is None:
        return []
    if not isinstance(spec, str):
        return [tuple(r) for r in spec]
    ranges = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*(?:-\s*(\d+))?", part)
        if not m:
            raise RangeOutOfBounds(f"cannot parse band range {part!r}")
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) is not None else a
        if b < a:
            raise RangeOutOfBounds(f"descending band range {part!r}")
        ranges.append((a, b))
    return ranges


def apply_band_mask(cube: HyperspectralCube, mask_spec) -> HyperspectralCube:
    """Drop inclusive 0-based band ranges from all downstream vector math."""
    mask = cube.band_mask.copy()
    for a, b in parse_mask_spec(mask_spec):
        if a < 0 or b >= cube.bands:
            raise RangeOutOfBounds(f"range {a}-{b} outside 0-{cube.bands - 1}")
        mask[a:b + 1] = False
    return replace(cube, band_mask=mask, valid_mask=compute_valid_mask(cube.data, mask))


# ---------------------------------------------------------------- radiometry


@dataclass
class RadiometricParams:
    earth_sun_distance: float
    solar_zenith_deg: float
    esun: np.ndarray
    radiance_scale: np.ndarray

    def __post_init__(self):
        self.esun = np.asarray(self.esun, dtype=float)
        self.radiance_scale = np.asarray(self.radiance_scale, dtype=float)
        if not 0.9 < self.earth_sun_distance < 1.1:
            raise InputError(f"earth-sun distance {self.earth_sun_distance} AU is implausible")
        if self.solar_zenith_deg < 0:
            raise InputError("solar zenith must be non-negative")
        if self.solar_zenith_deg >= 90:
            raise SunBelowHorizon(f"solar zenith {self.solar_zenith_deg} deg")


def to_reflectance(cube: HyperspectralCube, p: RadiometricParams) -> HyperspectralCube:
    """Top-of-atmosphere reflectance: pi * L * d^2 / (ESUN * cos(zenith)).

    L is the stored value divided by the per-band radiance scale. Negative
    results are clamped to zero; the count lands in ``meta['clamped']``.
    """
    if cube.unit != RADIANCE:
        raise AlreadyReflectance("cube is already reflectance")
    if p.esun.size != cube.bands or p.radiance_scale.size != cube.bands:
        raise LengthMismatch(
            f"cube has {cube.bands} bands; esun has {p.esun.size}, scale has {p.radiance_scale.size}"
        )
    bad = cube.band_mask & ~(np.isfinite(p.esun) & (p.esun > 0))
    if np.any(bad):
        raise MissingEsun(f"no ESUN for masked-in bands {np.flatnonzero(bad).tolist()}")
    cos_z = math.cos(math.radians(p.solar_zenith_deg))
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = math.pi * p.earth_sun_distance ** 2 / (p.esun * cos_z * p.radiance_scale)
    gain = np.where(cube.band_mask, gain, np.nan)
    rho = cube.data.astype(np.float64) * gain
    neg = rho < 0
    clamped = int(np.sum(neg[..., cube.band_mask]))
    rho[neg] = 0.0
    if clamped:
        log.info("clamped %d negative reflectance values to 0", clamped)
    meta = dict(cube.meta, clamped=clamped)
    out = replace(cube, data=rho, unit=REFLECTANCE, meta=meta, valid_mask=None)
    out.valid_mask = compute_valid_mask(rho, cube.band_mask) & cube.valid_mask
    return out


def parse_scale_spec(spec, bands):
    """'0-69:40, 70-241:80' -> per-band divisor array."""
    scale = np.full(bands, np.nan)
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        rng, _, value = part.partition(":")
        if not value:
            raise InputError(f"radiance scale entry needs 'range:value', got {part!r}")
        for a, b in parse_mask_spec(rng):
            if b >= bands:
                raise RangeOutOfBounds(f"scale range {a}-{b} outside 0-{bands - 1}")
            scale[a:b + 1] = float(value)
    if np.any(np.isnan(scale)):
        raise InputError(f"radiance scale undefined for bands {np.flatnonzero(np.isnan(scale)).tolist()}")
    return scale


def load_esun(path, bands=None):
    """ESUN CSV with columns band,esun (extra columns ignored)."""
    path = Path(path)
    if not path.exists():
        raise MissingEsun(f"ESUN file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(row for row in fh if not row.startswith("#")))
    if not rows or "band" not in rows[0] or "esun" not in rows[0]:
        raise MissingEsun(f"{path} must have 'band' and 'esun' columns")
    n = bands if bands is not None else max(int(r["band"]) for r in rows) + 1
    esun = np.full(n, np.nan)
    for r in rows:
        b = int(r["band"])
        if 0 <= b < n and r["esun"].strip():
            esun[b] = float(r["esun"])
    return esun


def read_kv_file(path):
    """Flat 'key = value' text; '#' starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip().lower().replace("-", "_")] = v.strip()
    return out


def load_radiometric_params(path, bands) -> RadiometricParams:
    """Read a radiometry file: earth_sun_distance, solar_zenith_deg, esun_file, radiance_scale."""
    path = Path(path)
    kv = read_kv_file(path)
    for key in ("earth_sun_distance", "solar_zenith_deg", "radiance_scale"):
        if key not in kv:
            raise InputError(f"{path}: missing '{key}'")
    if "esun_file" not in kv:
        raise MissingEsun(f"{path}: missing 'esun_file'")
    esun_path = Path(kv["esun_file"])
    if not esun_path.is_absolute():
        esun_path = path.parent / esun_path
    return RadiometricParams(
        earth_sun_distance=float(kv["earth_sun_distance"]),
        solar_zenith_deg=float(kv["solar_zenith_deg"]),
        esun=load_esun(esun_path, bands),
        radiance_scale=parse_scale_spec(kv["radiance_scale"], bands),
    )


# ---------------------------------------------------------------- signatures


def load_library_signature(csv_path) -> SpectralSignature:
    """Laboratory spectrum from a wavelength_um,reflectance CSV."""
    csv_path = Path(csv_path)
    try:
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"wavelength_um", "reflectance"} <= set(reader.fieldnames):
                raise InputError(f"{csv_path}: header must be wavelength_um,reflectance")
            pairs = [(r["wavelength_um"], r["reflectance"]) for r in reader]
    except OSError as exc:
        raise IoFailure(f"cannot read {csv_path}: {exc}") from exc
    arr = np.array([[_float_or_nan(a), _float_or_nan(b)] for a, b in pairs]).reshape(-1, 2)
    keep = np.all(np.isfinite(arr), axis=1)
    dropped = int(np.sum(~keep))
    if dropped:
        log.warning("%s: dropped %d rows with missing values", csv_path.name, dropped)
    arr = arr[keep]
    if arr.shape[0] == 0:
        raise EmptyLibrary(f"{csv_path} has no usable rows")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise NonMonotonicWavelengths(f"{csv_path}: wavelengths must be strictly ascending")
    return SpectralSignature(arr[:, 0], arr[:, 1], csv_path.stem)


def _float_or_nan(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return np.nan


def read_signatures_csv(path):
    """Multi-column CSV: wavelength_um plus one column per named signature."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        rows = [r for r in reader if r]
    if not head or head[0] != "wavelength_um" or len(head) < 2:
        raise InputError(f"{path}: first column must be wavelength_um")
    if not rows:
        raise EmptyLibrary(f"{path} has no rows")
    arr = np.array([[_float_or_nan(v) for v in r] for r in rows])
    wl = arr[:, 0]
    if np.any(np.diff(wl) <= 0):
        raise NonMonotonicWavelengths(f"{path}: wavelengths must be strictly ascending")
    return [SpectralSignature(wl, arr[:, j], head[j]) for j in range(1, len(head))]


def write_signatures_csv(path, signatures):
    """All signatures must share one wavelength grid."""
    if not signatures:
        return
    wl = signatures[0].wavelengths
    for s in signatures[1:]:
        if s.wavelengths.shape != wl.shape or not np.array_equal(s.wavelengths, wl):
            raise LengthMismatch(f"signature {s.label!r} is on a different grid")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wavelength_um"] + [s.label for s in signatures])
        for i in range(wl.size):
            w.writerow([repr(float(wl[i]))] + [repr(float(s.values[i])) for s in signatures])
