"""Split soil pixels into mineral- and impurity-representative subclasses.

Two VCA endmembers of the soil cloud set the correlation bounds. Pixels
correlating with the laboratory signature above the higher bound are
mineral representatives, below the lower bound impurity representatives,
and everything in between stays soil but joins neither subclass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpectralSignature, chunked_apply, l2_normalize, pearson_correlation, pearson_rows
from .errors import EmptySubclass, GridMismatch
from .preclassify import vca

IMPURITY_REP = 0
MIDDLE = 1
MINERAL_REP = 2
NON_SOIL = 255

SUBCLASS_NAMES = {IMPURITY_REP: "impurity", MIDDLE: "middle", MINERAL_REP: "mineral"}


@dataclass(frozen=True)
class SubclassThresholds:
    lower: float
    upper: float
    corr_rep_1: float
    corr_rep_2: float


@dataclass
class SubclassMap:
    labels: np.ndarray
    correlation: np.ndarray

    def counts(self):
        return {name: int(np.sum(self.labels == code)) for code, name in SUBCLASS_NAMES.items()}


@dataclass(frozen=True)
class RepresentativePair:
    mineral: SpectralSignature
    impurity: SpectralSignature
    source: str


def _lab_values(lab, bands):
    s = lab.values if isinstance(lab, SpectralSignature) else np.asarray(lab, dtype=float)
    if s.size != bands:
        raise GridMismatch(f"laboratory signature has {s.size} bands, pixels have {bands}")
    return s


def correlate_soil(soil_pixels, lab_signature, threads=1):
    """Pearson r of each soil pixel with the laboratory signature.

    Constant pixels come back as NaN; callers drop them.
    """
    X = np.asarray(soil_pixels, dtype=float)
    s = _lab_values(lab_signature, X.shape[1])
    return chunked_apply(lambda chunk: pearson_rows(chunk, s), X, threads)


def derive_thresholds(soil_pixels, lab_signature, seed=0) -> SubclassThresholds:
    X = np.asarray(soil_pixels, dtype=float)
    s = _lab_values(lab_signature, X.shape[1])
    reps, _ = vca(X, 2, seed=seed)
    c1 = pearson_correlation(l2_normalize(reps[0]), s)
    c2 = pearson_correlation(l2_normalize(reps[1]), s)
    return SubclassThresholds(lower=min(c1, c2), upper=max(c1, c2), corr_rep_1=c1, corr_rep_2=c2)


def label_subclasses(correlations, thresholds: SubclassThresholds) -> SubclassMap:
    r = np.asarray(correlations, dtype=float)
    labels = np.full(r.shape, MIDDLE, dtype=np.uint8)
    labels[r > thresholds.upper] = MINERAL_REP
    labels[r < thresholds.lower] = IMPURITY_REP
    return SubclassMap(labels, r)


def mean_representatives(soil_pixels, subclass_map: SubclassMap, wavelengths=None) -> RepresentativePair:
    X = np.asarray(soil_pixels, dtype=float)
    wl = np.arange(X.shape[1], dtype=float) if wavelengths is None else wavelengths
    mineral = X[subclass_map.labels == MINERAL_REP]
    impurity = X[subclass_map.labels == IMPURITY_REP]
    if mineral.shape[0] == 0:
        raise EmptySubclass("mineral")
    if impurity.shape[0] == 0:
        raise EmptySubclass("impurity")
    return RepresentativePair(
        SpectralSignature(wl, mineral.mean(axis=0), "mineral_subclass_mean"),
        SpectralSignature(wl, impurity.mean(axis=0), "impurity_subclass_mean"),
        "subclass_mean",
    )
