import csv
import math

import numpy as np
import pytest

import oracles
from litmap.errors import InputError
from litmap.report import (PUBLISHED_TABLES, Site, build_report, published_table_paths, read_sites_csv, report_from_files,
                           sample_site)

PUBLISHED_RA_R = {"jaffna": 0.9853, "pulmoddai": 0.8115, "mannar": 0.5640, "giants_tank": 0.6504}


def test_report_correlation_matches_oracle():
    ra = np.array([[0.1, 0.5, 0.9]])
    alpha = np.array([[0.2, 0.4, 0.7]])
    sites = [Site(f"s{i}", 0, i, t) for i, t in enumerate([1.0, 2.0, 3.5])]
    rep = build_report(sites, ra, alpha)
    assert rep.r_ra == pytest.approx(oracles.pearson([1.0, 2.0, 3.5], [0.1, 0.5, 0.9]), abs=1e-12)
    assert rep.r_alpha == pytest.approx(oracles.pearson([1.0, 2.0, 3.5], [0.2, 0.4, 0.7]), abs=1e-12)


def test_bad_sites_are_skipped(caplog):
    ra = np.array([[0.1, np.nan, 0.9, 0.4]])
    alpha = np.array([[0.2, np.nan, 0.7, 0.3]])
    sites = [Site("a", 0, 0, 1.0), Site("b", 0, 1, 2.0), Site("c", 5, 0, 3.0), Site("d", 0, 2, 4.0),
             Site("e", 0, 3, 2.5)]
    rep = build_report(sites, ra, alpha)
    assert [r.site.site_id for r in rep.rows] == ["a", "d", "e"]
    assert [why for _, why in rep.skipped] == ["SiteOnNonSoilPixel", "SiteOutsideRaster"]
    assert "skipping site" in caplog.text


def test_too_few_sites_gives_nan():
    rep = build_report([Site("a", 0, 0, 1.0)], np.ones((1, 1)), np.ones((1, 1)))
    assert math.isnan(rep.r_ra)


def test_shape_mismatch():
    with pytest.raises(InputError):
        build_report([], np.ones((2, 2)), np.ones((2, 3)))


def test_sample_site_bounds():
    ra = np.zeros((2, 2))
    assert sample_site(Site("x", 1, 1, 0.0), ra, ra) == (0.0, 0.0)


def test_sites_csv(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("site_id,row,col,ground_truth_pct\nA,1,2,3.5\n")
    assert read_sites_csv(f) == [Site("A", 1, 2, 3.5)]
    f.write_text("id,row,col,pct\nA,1,2,3.5\n")
    with pytest.raises(InputError):
        read_sites_csv(f)
    f.write_text("site_id,row,col,ground_truth_pct\nA,one,2,3.5\n")
    with pytest.raises(InputError):
        read_sites_csv(f)


@pytest.mark.parametrize("name", PUBLISHED_TABLES)
def test_published_tables(name):
    rep = report_from_files(*published_table_paths(name))
    assert not rep.skipped
    assert rep.r_ra == pytest.approx(PUBLISHED_RA_R[name], abs=5e-4)


@pytest.mark.parametrize("name", PUBLISHED_TABLES)
def test_fixture_rasters_match_table(name):
    sites, ra, alpha = published_table_paths(name)
    rep = report_from_files(sites, ra, alpha)
    with open(sites.parent / "table.csv", newline="") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == len(rep.rows)
    for row, t in zip(rep.rows, table):
        assert row.site.site_id == t["site_id"]
        assert row.ra == float(t["relative_availability"])
        assert row.alpha == float(t["alpha"])


def test_report_csv(tmp_path):
    rep = report_from_files(*published_table_paths("jaffna"))
    rep.to_csv(tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.startswith("site_id,row,col,ground_truth_pct,relative_availability,alpha")
    assert "pearson_ground_truth_vs_ra" in text
    assert "r(truth, RA)    = 0.9853" in rep.format_table()
