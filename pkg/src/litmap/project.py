"""Fisher projection of soil pixels and relative availability."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRepresentatives, SingularScatter, TooFewPixels
from .subclass import IMPURITY_REP, MINERAL_REP, RepresentativePair


@dataclass(frozen=True)
class FisherDirection:
    w: np.ndarray
    mu_mineral_proj: float
    mu_impurity_proj: float
    fisher_ratio: float


def within_scatter(*classes):
    B = classes[0].shape[1]
    S = np.zeros((B, B))
    for X in classes:
        Xc = X - X.mean(axis=0)
        S += Xc.T @ Xc
    return S


def fisher_ratio(w, mineral_pixels, impurity_pixels):
    """Between-class over within-class scatter of the 1-D projection."""
    w = np.asarray(w, dtype=float)
    tm = np.asarray(mineral_pixels, dtype=float) @ w
    ti = np.asarray(impurity_pixels, dtype=float) @ w
    between = (tm.mean() - ti.mean()) ** 2
    within = np.sum((tm - tm.mean()) ** 2) + np.sum((ti - ti.mean()) ** 2)
    if within == 0:
        return np.inf if between > 0 else 0.0
    return float(between / within)


def fisher_direction(mineral_pixels, impurity_pixels, ridge=1e-6) -> FisherDirection:
    """Two-class Fisher discriminant, w ~ (S_w + ridge * tr(S_w)/B * I)^-1 (mu_m - mu_i).

    The result is unit length and oriented so the mineral class projects
    higher.
    """
    M = np.asarray(mineral_pixels, dtype=float)
    I = np.asarray(impurity_pixels, dtype=float)
    if M.shape[0] < 2 or I.shape[0] < 2:
        raise TooFewPixels(f"each class needs at least 2 pixels, got {M.shape[0]} and {I.shape[0]}")
    B = M.shape[1]
    S = within_scatter(M, I)
    reg = S + ridge * np.trace(S) / B * np.eye(B)
    delta = M.mean(axis=0) - I.mean(axis=0)
    try:
        w = np.linalg.solve(reg, delta)
    except np.linalg.LinAlgError as exc:
        raise SingularScatter(f"within-class scatter is singular: {exc}") from exc
    n = np.linalg.norm(w)
    if not np.isfinite(n) or n == 0:
        raise SingularScatter("Fisher direction is zero or non-finite")
    w = w / n
    mu_m, mu_i = float(M.mean(axis=0) @ w), float(I.mean(axis=0) @ w)
    if mu_m < mu_i:
        w, mu_m, mu_i = -w, -mu_m, -mu_i
    return FisherDirection(w, mu_m, mu_i, fisher_ratio(w, M, I))


def relative_availability(t, t_mineral, t_impurity):
    """d_i / (d_m + d_i) with distances measured along the projection."""
    if t_mineral == t_impurity:
        raise DegenerateRepresentatives("projected representatives coincide")
    t = np.asarray(t, dtype=float)
    d_m = np.abs(t - t_mineral)
    d_i = np.abs(t - t_impurity)
    return d_i / (d_m + d_i)


@dataclass
class Projection:
    t: np.ndarray
    d_m: np.ndarray
    d_i: np.ndarray
    ra: np.ndarray
    t_mineral: float
    t_impurity: float


def project_soil(soil_pixels, representatives: RepresentativePair, direction: FisherDirection) -> Projection:
    X = np.asarray(soil_pixels, dtype=float)
    w = direction.w
    t = X @ w
    tm = float(representatives.mineral.values @ w)
    ti = float(representatives.impurity.values @ w)
    ra = relative_availability(t, tm, ti)
    return Projection(t, np.abs(t - tm), np.abs(t - ti), ra, tm, ti)


def separation_report(t, subclass_labels):
    """Gap between projected subclass means, raw and in pooled-std units."""
    t = np.asarray(t, dtype=float)
    labels = np.asarray(subclass_labels)
    tm = t[labels == MINERAL_REP]
    ti = t[labels == IMPURITY_REP]
    if tm.size == 0 or ti.size == 0:
        raise TooFewPixels("both subclasses must be non-empty")
    gap = abs(tm.mean() - ti.mean())
    pooled = np.sqrt((tm.var() * tm.size + ti.var() * ti.size) / (tm.size + ti.size))
    stats = {
        "mineral": {"n": int(tm.size), "mean": float(tm.mean()), "var": float(tm.var())},
        "impurity": {"n": int(ti.size), "mean": float(ti.mean()), "var": float(ti.var())},
        "gap": float(gap),
        "gap_pooled_std": float(gap / pooled) if pooled > 0 else float("inf") if gap > 0 else 0.0,
    }
    return float(gap), stats
