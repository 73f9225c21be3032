"""Synthetic scenes and brute-force oracles for desk-scale verification.

A scene has three macroscopic regions (water, vegetation, soil). Soil is a
linear mix of a mineral and an impurity spectrum: a pure-impurity patch, a
pure-mineral patch and a mixed strip in between with alpha in [0.3, 0.7].

The pure patches also carry a zero-mean "texture" c * tau * q, written as a
mix of two extra generators (x + tau q) and (x - tau q) with weights
(1 +/- c) / 2, so every pixel stays an exact convex combination. The
direction q is orthogonal to the mineral-impurity difference, so it never
moves the least-squares alpha, but it spreads the patch correlations with
the laboratory signature. Without that spread a noiseless soil cloud is a
single line segment, whose VCA endpoints bound every pixel correlation and
leave one subclass empty.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SpectralSignature
from .errors import InvalidSpec
from .ingest import REFLECTANCE, HyperspectralCube, read_kv_file, write_envi, write_raster, write_signatures_csv
from .project import fisher_ratio

GENERATOR_NAMES = ("water", "vegetation", "mineral", "impurity",
                   "mineral_hi", "mineral_lo", "impurity_hi", "impurity_lo")
MINERAL_GENERATORS = (2, 4, 5)
TRUTH_CLASSES = {0: "water", 1: "vegetation", 2: "soil"}


@dataclass
class SceneSpec:
    rows: int = 64
    cols: int = 64
    bands: int = 100
    wl_min: float = 0.4
    wl_max: float = 2.5
    noise_snr_db: float = math.inf
    texture: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.rows < 16 or self.cols < 16:
            raise InvalidSpec("scene needs at least 16 x 16 pixels")
        if self.bands < 8:
            raise InvalidSpec("scene needs at least 8 bands")
        if not 0 < self.wl_min < self.wl_max:
            raise InvalidSpec("wavelength range must be positive and ascending")
        if self.texture < 0:
            raise InvalidSpec("texture amplitude must be non-negative")

    @classmethod
    def from_file(cls, path, **overrides):
        kv = read_kv_file(path)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(kv) - known
        if unknown:
            raise InvalidSpec(f"unknown scene keys: {sorted(unknown)}")
        casts = {"rows": int, "cols": int, "bands": int, "seed": int}
        args = {k: casts.get(k, float)(v) for k, v in kv.items()}
        args.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**args)


@dataclass
class Scene:
    cube: HyperspectralCube
    generators: dict
    abundances: np.ndarray      # (rows, cols, len(GENERATOR_NAMES))
    texture: np.ndarray         # (rows, cols) texture coefficient c in [-1, 1]
    truth_classes: np.ndarray   # (rows, cols) ids of TRUTH_CLASSES
    truth_alpha: np.ndarray     # (rows, cols), NaN outside soil
    lab_signature: SpectralSignature
    references: list = field(default_factory=list)


def _gauss(wl, center, width):
    return np.exp(-0.5 * ((wl - center) / width) ** 2)


def water_spectrum(wl):
    return 0.02 + 0.20 * np.exp(-(wl - 0.4) / 0.15)


def vegetation_spectrum(wl):
    edge = 1.0 / (1.0 + np.exp(-(wl - 0.72) / 0.015))
    v = 0.04 + 0.04 * _gauss(wl, 0.55, 0.03) + 0.40 * edge * np.exp(-np.clip(wl - 1.1, 0, None) / 1.2)
    return v * (1 - 0.5 * _gauss(wl, 1.45, 0.05)) * (1 - 0.6 * _gauss(wl, 1.94, 0.06))


def soil_base(wl):
    return 0.25 + 0.08 * (1.0 - np.exp(-(wl - 0.2) / 0.5))


def mineral_feature(wl):
    """Mineral features: a broad undulation plus absorptions near 0.9 and 2.2 um."""
    return 0.05 * np.sin(2 * np.pi * (wl - 0.4) / 0.9) - 0.06 * _gauss(wl, 2.2, 0.06) - 0.04 * _gauss(wl, 0.9, 0.1)


def generator_spectra(wl):
    """Water, vegetation, mineral and impurity spectra on grid ``wl``.

    Mineral and impurity are base +/- a zero-mean feature, so they share
    the same band sum and are anti-correlated around the base.
    """
    f = mineral_feature(wl)
    offset = f.mean()
    base = soil_base(wl)
    return {
        "water": water_spectrum(wl),
        "vegetation": vegetation_spectrum(wl),
        "mineral": base + (f - offset),
        "impurity": base - (f - offset),
    }, offset


def _texture_direction(wl, rng, lab_values, m, r):
    """Unit vector: a brightness component plus a part orthogonal to 1, m, r and lab."""
    B = wl.size
    ones = np.ones(B) / math.sqrt(B)
    raw = np.convolve(rng.standard_normal(B + 8), np.ones(9) / 9, mode="valid")
    basis = np.linalg.qr(np.column_stack([ones, m, r, lab_values]))[0]
    perp = raw - basis @ (basis.T @ raw)
    perp /= np.linalg.norm(perp)
    q = 0.6 * ones + 0.8 * perp
    return q / np.linalg.norm(q)


def lab_grid():
    """480-sample laboratory grid spanning 0.2-3.0 um."""
    return np.linspace(0.2, 3.0, 480)


def generate_scene(spec: SceneSpec) -> Scene:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    wl = np.linspace(spec.wl_min, spec.wl_max, spec.bands)
    gens, offset = generator_spectra(wl)

    lwl = lab_grid()
    lab_values_fine = soil_base(lwl) + mineral_feature(lwl) - offset
    lab = SpectralSignature(lwl, lab_values_fine, "lab_mineral")
    lab_on_cube = np.interp(wl, lwl, lab_values_fine)  # edge-clamped if the cube grid is wider

    R, C = spec.rows, spec.cols
    ab = np.zeros((R, C, len(GENERATOR_NAMES)))
    classes = np.zeros((R, C), dtype=np.uint8)
    alpha = np.full((R, C), np.nan)
    c_field = np.zeros((R, C))

    water_end = R // 4
    veg_end = water_end + R // 5
    ab[:water_end, :, 0] = 1.0
    classes[:water_end] = 0
    ab[water_end:veg_end, :, 1] = 1.0
    classes[water_end:veg_end] = 1
    classes[veg_end:] = 2

    patch = (C // 4) & ~1  # even width so texture signs pair up within every row
    soil_rows = np.arange(veg_end, R)
    a = np.empty((soil_rows.size, C))
    a[:, :patch] = 0.0
    a[:, C - patch:] = 1.0
    mid_cols = np.arange(patch, C - patch)
    frac = (mid_cols - patch + 0.5) / mid_cols.size
    ripple = 0.05 * np.sin(2 * np.pi * (soil_rows - veg_end) / 11.0)
    a[:, patch:C - patch] = np.clip(0.3 + 0.4 * frac[None, :] + ripple[:, None], 0.3, 0.7)
    alpha[veg_end:] = a
    ab[veg_end:, :, 2] = a
    ab[veg_end:, :, 3] = 1.0 - a

    mag = ((soil_rows - veg_end) // 2 % 4 + 1) / 4.0
    sign = np.where(np.arange(patch) % 2 == 0, 1.0, -1.0)
    pure_c = mag[:, None] * sign[None, :]
    c_field[veg_end:, :patch] = pure_c
    c_field[veg_end:, C - patch:] = pure_c

    tau = spec.texture
    q = _texture_direction(wl, rng, lab_on_cube, gens["mineral"], gens["impurity"])
    for name in ("mineral", "impurity"):
        gens[f"{name}_hi"] = gens[name] + tau * q
        gens[f"{name}_lo"] = gens[name] - tau * q
    G = np.stack([gens[n] for n in GENERATOR_NAMES])

    # pure patches move their weight onto the textured pair
    hi, lo = (1 + c_field) / 2, (1 - c_field) / 2
    for col0, col1, plain, g_hi, g_lo in ((C - patch, C, 2, 4, 5), (0, patch, 3, 6, 7)):
        block = (slice(veg_end, R), slice(col0, col1))
        ab[block + (g_hi,)] = hi[block]
        ab[block + (g_lo,)] = lo[block]
        ab[block + (plain,)] = 0.0

    clean = np.einsum("rcg,gb->rcb", ab, G)
    data = clean
    if np.isfinite(spec.noise_snr_db):
        sigma = math.sqrt(np.mean(clean ** 2) / 10 ** (spec.noise_snr_db / 10))
        data = clean + sigma * rng.standard_normal(clean.shape)

    cube = HyperspectralCube(data, wl, unit=REFLECTANCE)
    refs = [
        SpectralSignature(wl, gens["water"], "water"),
        SpectralSignature(wl, gens["vegetation"], "vegetation"),
        SpectralSignature(wl, 0.5 * (gens["mineral"] + gens["impurity"]), "soil"),
    ]
    return Scene(cube, gens, ab, c_field, classes, alpha, lab, refs)


def write_scene(scene: Scene, out_dir):
    """Cube, ground truth, library CSV, class references, sites and a map config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cube = scene.cube
    f32 = HyperspectralCube(cube.data.astype(np.float32), cube.wavelengths, unit=REFLECTANCE)
    write_envi(f32, out / "cube.hdr", description="synthetic scene")
    write_raster(scene.truth_alpha.astype(np.float32), out / "truth_alpha.hdr", ignore_value=-1)
    write_raster(scene.truth_classes.astype(np.uint8), out / "truth_classes.hdr")
    lab = scene.lab_signature
    with open(out / "library.csv", "w") as fh:
        fh.write("wavelength_um,reflectance\n")
        for w, v in zip(lab.wavelengths, lab.values):
            fh.write(f"{float(w)!r},{float(v)!r}\n")
    write_signatures_csv(out / "class_references.csv", scene.references)

    soil = np.argwhere(np.isfinite(scene.truth_alpha))
    pick = soil[np.linspace(0, len(soil) - 1, 8).astype(int)]
    with open(out / "sites.csv", "w") as fh:
        fh.write("site_id,row,col,ground_truth_pct\n")
        for i, (r, c) in enumerate(pick, 1):
            fh.write(f"site{i},{r},{c},{100 * scene.truth_alpha[r, c]:.6f}\n")
    (out / "map.cfg").write_text(
        "# pipeline config for this synthetic scene\n"
        "cube = cube.hdr\n"
        "library = library.csv\n"
        "class_references = class_references.csv\n"
        "soil_class = soil\n"
        "k_override = 3\n"
    )
    return out


# ---------------------------------------------------------------- oracles


def grid_search_alpha(s, m, r, step=1e-4):
    """Exhaustive minimizer of 1/2 ||alpha m + (1 - alpha) r - s||^2 over an alpha grid."""
    if step <= 0:
        raise ValueError("step must be positive")
    s, m, r = (np.asarray(v, dtype=float) for v in (s, m, r))
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    e = m - r
    g = r - s
    # ||alpha e + g||^2 expanded; each grid value is evaluated, no closed form
    obj = 0.5 * (grid ** 2 * (e @ e) + 2 * grid * (e @ g) + g @ g)
    return float(grid[int(np.argmin(obj))])


def random_direction_fisher(mineral_pixels, impurity_pixels, n_draws=1000, seed=0, directions=None):
    """Largest Fisher ratio over random unit directions."""
    M = np.asarray(mineral_pixels, dtype=float)
    I = np.asarray(impurity_pixels, dtype=float)
    if directions is None:
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((n_draws, M.shape[1]))
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    return max(fisher_ratio(d, M, I) for d in D)
