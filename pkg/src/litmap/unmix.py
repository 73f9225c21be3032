"""Two-endmember sum-to-one non-negative least squares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpectralSignature, chunked_apply
from .errors import EmptyBand, IdenticalEndmembers, InputError
from .subclass import RepresentativePair


@dataclass(frozen=True)
class MixtureModel:
    mineral: np.ndarray
    impurity: np.ndarray
    ra_high: float = 0.8
    ra_low: float = 0.2

    def __post_init__(self):
        m = np.asarray(self.mineral, dtype=float)
        r = np.asarray(self.impurity, dtype=float)
        object.__setattr__(self, "mineral", m)
        object.__setattr__(self, "impurity", r)
        if not self.ra_low < self.ra_high:
            raise InputError(f"ra_low {self.ra_low} must be below ra_high {self.ra_high}")
        if m.shape != r.shape:
            raise InputError("mineral and impurity signatures differ in length")
        if not np.any(m != r):
            raise IdenticalEndmembers("mineral and impurity signatures are identical")

    @property
    def A(self):
        return np.column_stack([self.mineral, self.impurity])


def refine_representatives(soil_pixels, ra, ra_high=0.8, ra_low=0.2, wavelengths=None) -> RepresentativePair:
    """Means of the pixels with RA above ra_high and below ra_low."""
    X = np.asarray(soil_pixels, dtype=float)
    ra = np.asarray(ra, dtype=float)
    hi = ra > ra_high
    lo = ra < ra_low
    counts = {"high": int(hi.sum()), "low": int(lo.sum()), "total": int(ra.size)}
    if not hi.any():
        raise EmptyBand("high", counts)
    if not lo.any():
        raise EmptyBand("low", counts)
    wl = np.arange(X.shape[1], dtype=float) if wavelengths is None else wavelengths
    return RepresentativePair(
        SpectralSignature(wl, X[hi].mean(axis=0), "mineral_refined"),
        SpectralSignature(wl, X[lo].mean(axis=0), "impurity_refined"),
        "ra_refined",
    )


def solve_alpha_rows(S, m, r):
    """Closed-form minimizer of ||alpha m + (1 - alpha) r - s|| over alpha in [0, 1].

    Substituting beta = 1 - alpha leaves a 1-D convex problem whose
    constrained optimum is the clamped unconstrained one.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    e = m - r
    ee = float(e @ e)
    if ee == 0:
        raise IdenticalEndmembers("mineral and impurity signatures are identical")
    alpha = np.clip(((S - r) @ e) / ee, 0.0, 1.0)
    resid = S - (alpha[:, None] * m + (1.0 - alpha)[:, None] * r)
    return alpha, np.sqrt(np.einsum("ij,ij->i", resid, resid))


def solve_alpha(s, model: MixtureModel):
    alpha, resid = solve_alpha_rows(np.asarray(s, dtype=float)[None, :], model.mineral, model.impurity)
    return float(alpha[0]), float(resid[0])


@dataclass
class AbundanceMap:
    alpha: np.ndarray
    residual: np.ndarray

    @property
    def beta(self):
        return 1.0 - self.alpha


def abundance_map(soil_pixels, indices, model: MixtureModel, shape, threads=1) -> AbundanceMap:
    """Alpha for each soil pixel painted into a (rows, cols) raster; other pixels are NaN."""
    X = np.asarray(soil_pixels, dtype=float)
    m, r = model.mineral, model.impurity
    out = chunked_apply(lambda c: np.column_stack(solve_alpha_rows(c, m, r)), X, threads) \
        if X.shape[0] else np.zeros((0, 2))
    alpha = np.full(shape[0] * shape[1], np.nan)
    resid = np.full(shape[0] * shape[1], np.nan)
    alpha[indices] = out[:, 0]
    resid[indices] = out[:, 1]
    return AbundanceMap(alpha.reshape(shape), resid.reshape(shape))
