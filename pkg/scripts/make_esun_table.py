"""Write an approximate Hyperion ESUN table.

Exo-atmospheric irradiance is modelled as a 5778 K blackbody seen from
1 AU, sampled at nominal band centres (VNIR bands 0-69, SWIR 70-241).
Replace the output with the published per-band table for real scenes.
"""
import sys
from pathlib import Path

import numpy as np
from scipy.constants import c, h, k

SUN_T = 5778.0
SUN_RADIUS = 6.957e8
AU = 1.495978707e11


def nominal_centres_um():
    vnir = 0.35559 + 0.010178 * np.arange(70)
    swir = 0.85192 + 0.010088 * np.arange(172)
    return np.concatenate([vnir, swir])


def blackbody_esun(wl_um):
    """W m-2 um-1 at 1 AU."""
    lam = wl_um * 1e-6
    radiance = 2 * h * c ** 2 / lam ** 5 / np.expm1(h * c / (lam * k * SUN_T))  # W m-2 sr-1 m-1
    return np.pi * radiance * (SUN_RADIUS / AU) ** 2 * 1e-6


def main(argv):
    out = Path(argv[0]) if argv else Path(__file__).resolve().parents[1] / "src/litmap/data/radiometry/hyperion_esun_approx.csv"
    wl = nominal_centres_um()
    esun = blackbody_esun(wl)
    with open(out, "w") as fh:
        fh.write("# APPROXIMATION: 5778 K blackbody at 1 AU, not the published sensor table\n")
        fh.write("band,wavelength_um,esun\n")
        for i, (w, e) in enumerate(zip(wl, esun)):
            fh.write(f"{i},{w:.5f},{e:.3f}\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv[1:])
