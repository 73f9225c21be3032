"""Site validation: compare laboratory percentages with RA and alpha rasters."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import pearson_correlation
from .errors import InputError, SiteOnNonSoilPixel, SiteOutsideRaster, ZeroVariance
from .ingest import read_raster

log = logging.getLogger(__name__)

SITE_COLUMNS = ("site_id", "row", "col", "ground_truth_pct")
PUBLISHED_TABLES = ("jaffna", "pulmoddai", "mannar", "giants_tank")


@dataclass(frozen=True)
class Site:
    site_id: str
    row: int
    col: int
    ground_truth_pct: float


@dataclass
class SiteRow:
    site: Site
    ra: float
    alpha: float


@dataclass
class SiteReport:
    rows: list
    skipped: list = field(default_factory=list)   # (site, reason)
    r_ra: float = math.nan
    r_alpha: float = math.nan

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["site_id", "row", "col", "ground_truth_pct", "relative_availability", "alpha"])
            for r in self.rows:
                s = r.site
                w.writerow([s.site_id, s.row, s.col, repr(s.ground_truth_pct), repr(r.ra), repr(r.alpha)])
            w.writerow([])
            w.writerow(["pearson_ground_truth_vs_ra", repr(self.r_ra)])
            w.writerow(["pearson_ground_truth_vs_alpha", repr(self.r_alpha)])

    def format_table(self):
        lines = [f"{'site':<12}{'row':>6}{'col':>6}{'truth %':>10}{'RA':>10}{'alpha':>10}"]
        for r in self.rows:
            s = r.site
            lines.append(f"{s.site_id:<12}{s.row:>6}{s.col:>6}{s.ground_truth_pct:>10.2f}{r.ra:>10.4f}{r.alpha:>10.4f}")
        for s, why in self.skipped:
            lines.append(f"{s.site_id:<12}{s.row:>6}{s.col:>6}  skipped: {why}")
        lines.append(f"r(truth, RA)    = {self.r_ra:.4f}")
        lines.append(f"r(truth, alpha) = {self.r_alpha:.4f}")
        return "\n".join(lines)


def read_sites_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(c.strip() for c in reader.fieldnames) != SITE_COLUMNS:
            raise InputError(f"{path}: sites header must be {','.join(SITE_COLUMNS)}")
        sites = []
        for n, rec in enumerate(reader, 2):
            try:
                sites.append(Site(rec["site_id"].strip(), int(rec["row"]), int(rec["col"]),
                                  float(rec["ground_truth_pct"])))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}:{n}: bad site record ({exc})") from None
    return sites


def sample_site(site: Site, ra, alpha):
    rows, cols = ra.shape
    if not (0 <= site.row < rows and 0 <= site.col < cols):
        raise SiteOutsideRaster(f"site {site.site_id} at ({site.row}, {site.col}) is outside {rows}x{cols}")
    v_ra, v_alpha = float(ra[site.row, site.col]), float(alpha[site.row, site.col])
    if not (np.isfinite(v_ra) and np.isfinite(v_alpha)):
        raise SiteOnNonSoilPixel(f"site {site.site_id} at ({site.row}, {site.col}) is not a soil pixel")
    return v_ra, v_alpha


def _corr(x, y):
    if len(x) < 2:
        return math.nan
    try:
        return pearson_correlation(np.array(x), np.array(y))
    except ZeroVariance:
        return math.nan


def build_report(sites, ra, alpha) -> SiteReport:
    ra = np.asarray(ra, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if ra.shape != alpha.shape:
        raise InputError(f"RA raster {ra.shape} and alpha raster {alpha.shape} differ in shape")
    report = SiteReport(rows=[])
    for site in sites:
        try:
            v_ra, v_alpha = sample_site(site, ra, alpha)
        except (SiteOutsideRaster, SiteOnNonSoilPixel) as exc:
            log.warning("skipping site: %s", exc)
            report.skipped.append((site, type(exc).__name__))
            continue
        report.rows.append(SiteRow(site, v_ra, v_alpha))
    truth = [r.site.ground_truth_pct for r in report.rows]
    report.r_ra = _corr(truth, [r.ra for r in report.rows])
    report.r_alpha = _corr(truth, [r.alpha for r in report.rows])
    return report


def report_from_files(sites_csv, ra_path, alpha_path) -> SiteReport:
    return build_report(read_sites_csv(sites_csv), read_raster(ra_path), read_raster(alpha_path))


def published_table_dir(name):
    if name not in PUBLISHED_TABLES:
        raise InputError(f"unknown published table {name!r}; choose from {', '.join(PUBLISHED_TABLES)}")
    return Path(str(resources.files("litmap") / "data" / "published_tables" / name))


def published_table_paths(name):
    """(sites.csv, ra.hdr, alpha.hdr) of a bundled published site table."""
    d = published_table_dir(name)
    return d / "sites.csv", d / "ra.hdr", d / "alpha.hdr"
