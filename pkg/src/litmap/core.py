"""Spectral-vector math shared by every stage.

Vectors are 1-D float arrays; matrices hold one spectrum per row. All
functions are pure and assume band masking has already been applied.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import LengthMismatch, OutOfRangeBand, ZeroVariance, ZeroVector

# fixed chunk size so per-pixel work splits identically for any thread count
CHUNK = 4096


@dataclass(frozen=True)
class SpectralSignature:
    """One spectrum on a wavelength grid (micrometers)."""

    wavelengths: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if wl.ndim != 1 or v.ndim != 1:
            raise LengthMismatch("wavelengths and values must be 1-D")
        if wl.size != v.size:
            raise LengthMismatch(f"{wl.size} wavelengths vs {v.size} values")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _values(v):
    return v.values if isinstance(v, SpectralSignature) else np.asarray(v, dtype=float)


def _check_lengths(a, b):
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape} vs {b.shape}")


def l2_normalize(v):
    """Scale to unit Euclidean norm; returns the same type it was given."""
    x = _values(v)
    n = np.linalg.norm(x)
    if n == 0.0:
        raise ZeroVector("cannot normalize an all-zero spectrum")
    out = x / n
    if isinstance(v, SpectralSignature):
        return replace(v, values=out)
    return out


def l2_normalize_rows(X):
    """Row-wise L2 normalization. Zero rows raise ZeroVector."""
    X = np.asarray(X, dtype=float)
    n = np.linalg.norm(X, axis=1)
    if np.any(n == 0.0):
        raise ZeroVector(f"{int(np.sum(n == 0.0))} all-zero rows")
    return X / n[:, None]


def euclidean_distance(a, b):
    a, b = _values(a), _values(b)
    _check_lengths(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pearson_correlation(x, s):
    """Pearson correlation coefficient between two spectra."""
    x, s = _values(x), _values(s)
    _check_lengths(x, s)
    if x.size < 2:
        raise LengthMismatch("need at least two bands")
    if np.ptp(x) == 0.0 or np.ptp(s) == 0.0:
        raise ZeroVariance("correlation with a constant spectrum is undefined")
    xc = x - x.mean()
    sc = s - s.mean()
    r = np.dot(xc, sc) / np.sqrt(np.dot(xc, xc) * np.dot(sc, sc))
    return float(np.clip(r, -1.0, 1.0))


def pearson_rows(X, s):
    """Correlation of every row of X with s.

    Constant rows get NaN instead of raising; callers use the NaN as the
    exclusion flag. A constant reference still raises ZeroVariance.
    """
    X = np.asarray(X, dtype=float)
    s = _values(s)
    if X.shape[1] != s.size:
        raise LengthMismatch(f"rows have {X.shape[1]} bands, reference has {s.size}")
    if np.ptp(s) == 0.0:
        raise ZeroVariance("reference spectrum is constant")
    sc = s - s.mean()
    sc = sc / np.sqrt(np.dot(sc, sc))
    Xc = X - X.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", Xc, Xc))
    const = np.ptp(X, axis=1) == 0.0
    num = Xc @ sc
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(const, np.nan, num / np.where(const, 1.0, norms))
    return np.clip(r, -1.0, 1.0)


def spectral_angle(a, b):
    """Angle in radians between two spectra."""
    a, b = _values(a), _values(b)
    _check_lengths(a, b)
    c = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def resample_to_grid(sig: SpectralSignature, target_wavelengths) -> SpectralSignature:
    """Piecewise-linear resampling onto another wavelength grid.

    Raises OutOfRangeBand with the offending target indices when any target
    band lies outside the source support; those bands must be masked first.
    """
    target = np.asarray(target_wavelengths, dtype=float)
    lo, hi = sig.wavelengths[0], sig.wavelengths[-1]
    outside = np.flatnonzero((target < lo) | (target > hi))
    if outside.size:
        raise OutOfRangeBand(outside.tolist())
    values = np.interp(target, sig.wavelengths, sig.values)
    return SpectralSignature(target, values, sig.label)


def chunked_apply(fn, X, threads=1, chunk=CHUNK):
    """Apply a row-wise function over fixed-size chunks of X.

    Chunk boundaries do not depend on ``threads``, so the concatenated
    output is bit-identical for any worker count.
    """
    n = X.shape[0]
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)] or [(0, 0)]
    if threads <= 1 or len(bounds) == 1:
        parts = [fn(X[a:b]) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(X[ab[0]:ab[1]]), bounds))
    return np.concatenate(parts, axis=0)
