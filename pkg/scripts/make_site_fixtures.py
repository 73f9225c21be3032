"""Turn each bundled site table into a sites CSV plus 1 x n RA and alpha rasters.

Site i sits at row 0, column i, so `litmap report` reads the published
columns back through the same code path as a real run.
"""
import csv
import sys
from pathlib import Path

import numpy as np

from litmap.ingest import write_raster
from litmap.report import PUBLISHED_TABLES, published_table_dir


def build(table_dir: Path):
    with open(table_dir / "table.csv", newline="") as fh:
        recs = list(csv.DictReader(fh))
    ra = np.array([[float(r["relative_availability"]) for r in recs]])
    alpha = np.array([[float(r["alpha"]) for r in recs]])
    with open(table_dir / "sites.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_id", "row", "col", "ground_truth_pct"])
        for i, r in enumerate(recs):
            w.writerow([r["site_id"], 0, i, r["ground_truth_pct"]])
    write_raster(ra, table_dir / "ra.hdr", ignore_value=-1, description="published relative availability")
    write_raster(alpha, table_dir / "alpha.hdr", ignore_value=-1, description="published abundance")


def main(argv):
    names = argv or PUBLISHED_TABLES
    for name in names:
        build(published_table_dir(name))
        print(f"wrote fixtures for {name}")


if __name__ == "__main__":
    main(sys.argv[1:])
