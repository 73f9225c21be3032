"""End-to-end mapping run: pre-classify, split soil, project, unmix."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .core import SpectralSignature, resample_to_grid, spectral_angle
from .errors import LitmapError, PreconditionError
from .ingest import HyperspectralCube, apply_band_mask
from .preclassify import (ClassMap, ElbowCurve, elbow_select, isolate_class, similarity_assign, vca,
                          wcss_curve)
from .project import FisherDirection, Projection, fisher_direction, project_soil, separation_report
from .subclass import (IMPURITY_REP, MINERAL_REP, NON_SOIL, RepresentativePair, SubclassMap,
                       SubclassThresholds, correlate_soil, derive_thresholds, label_subclasses,
                       mean_representatives)
from .unmix import AbundanceMap, MixtureModel, abundance_map, refine_representatives


@dataclass
class PipelineResult:
    cube: HyperspectralCube
    k: int
    curve: ElbowCurve | None
    candidates: np.ndarray
    class_map: ClassMap
    soil_class: int
    soil_idx: np.ndarray
    lab: SpectralSignature
    thresholds: SubclassThresholds
    subclasses: SubclassMap
    subclass_reps: RepresentativePair
    direction: FisherDirection
    projection: Projection
    separation: dict
    refined: RepresentativePair
    abundance: AbundanceMap
    ra_map: np.ndarray
    subclass_raster: np.ndarray
    timings: dict = field(default_factory=dict)

    @property
    def alpha_map(self):
        return self.abundance.alpha


class StageFailure(Exception):
    """A pipeline error tagged with the stage that raised it."""

    def __init__(self, stage, error: LitmapError):
        super().__init__(f"stage {stage!r}: {error}")
        self.stage = stage
        self.error = error
        self.exit_code = error.exit_code


@contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except LitmapError as exc:
        raise StageFailure(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def name_candidates(candidates, wavelengths, references):
    """Name each candidate after its nearest reference by spectral angle.

    Repeated names get a numeric suffix. Without references the names are
    ``class_<i>``.
    """
    if not references:
        return {i: f"class_{i}" for i in range(len(candidates))}
    refs = [resample_to_grid(r, wavelengths) for r in references]
    names, seen = {}, {}
    for i, c in enumerate(candidates):
        best = min(refs, key=lambda r: spectral_angle(c, r.values))
        n = seen.get(best.label, 0) + 1
        seen[best.label] = n
        names[i] = best.label if n == 1 else f"{best.label}_{n}"
    return names


def choose_k(X, config: PipelineConfig):
    if config.k_override is not None:
        return config.k_override, None
    if X.shape[0] > config.elbow_sample:
        rng = np.random.default_rng(config.seed)
        X = X[np.sort(rng.choice(X.shape[0], config.elbow_sample, replace=False))]
    curve = wcss_curve(X, k_max=min(config.k_max, X.shape[0]), seed=config.seed, restarts=config.restarts)
    return elbow_select(curve), curve


def run_pipeline(cube: HyperspectralCube, lab: SpectralSignature, config: PipelineConfig,
                 references=None, timings=None) -> PipelineResult:
    """Run every stage on a reflectance cube. Errors surface as StageFailure."""
    timings = {} if timings is None else timings
    with _stage("mask", timings):
        if config.band_mask:
            cube = apply_band_mask(cube, config.band_mask)
        wl = cube.used_wavelengths
        X, _ = cube.pixel_matrix()
        if X.shape[0] == 0:
            raise PreconditionError("cube has no valid pixels")

    with _stage("elbow", timings):
        k, curve = choose_k(X, config)

    with _stage("endmembers", timings):
        candidates, _ = vca(X, k, seed=config.seed)

    with _stage("similarity", timings):
        names = name_candidates(candidates, wl, references)
        class_map = similarity_assign(cube, candidates, config.similarity_threshold, names, config.threads)

    with _stage("soil", timings):
        if config.soil_class is None:
            raise PreconditionError(f"soil_class not set; classes are {sorted(names.values())}")
        soil_id = class_map.resolve(config.soil_class)
        S, soil_idx = isolate_class(cube, class_map, soil_id)
        lab_grid = resample_to_grid(lab, wl)
        corr = correlate_soil(S, lab_grid, config.threads)
        keep = np.isfinite(corr)
        S, soil_idx, corr = S[keep], soil_idx[keep], corr[keep]
        if S.shape[0] < 2:
            raise PreconditionError("soil class has fewer than two usable pixels")

    with _stage("subclass", timings):
        thresholds = derive_thresholds(S, lab_grid, seed=config.seed)
        subclasses = label_subclasses(corr, thresholds)
        reps = mean_representatives(S, subclasses, wl)

    with _stage("projection", timings):
        direction = fisher_direction(S[subclasses.labels == MINERAL_REP],
                                     S[subclasses.labels == IMPURITY_REP], ridge=config.ridge)
        proj = project_soil(S, reps, direction)
        _, separation = separation_report(proj.t, subclasses.labels)

    with _stage("unmix", timings):
        refined = refine_representatives(S, proj.ra, config.ra_high, config.ra_low, wl)
        model = MixtureModel(refined.mineral.values, refined.impurity.values, config.ra_high, config.ra_low)
        shape = (cube.rows, cube.cols)
        abundance = abundance_map(S, soil_idx, model, shape, config.threads)

    ra_map = np.full(cube.rows * cube.cols, np.nan)
    ra_map[soil_idx] = proj.ra
    sub_raster = np.full(cube.rows * cube.cols, NON_SOIL, dtype=np.uint8)
    sub_raster[soil_idx] = subclasses.labels
    return PipelineResult(
        cube=cube, k=k, curve=curve, candidates=candidates, class_map=class_map, soil_class=soil_id,
        soil_idx=soil_idx, lab=lab_grid, thresholds=thresholds, subclasses=subclasses, subclass_reps=reps,
        direction=direction, projection=proj, separation=separation, refined=refined, abundance=abundance,
        ra_map=ra_map.reshape(shape), subclass_raster=sub_raster.reshape(shape), timings=timings,
    )
