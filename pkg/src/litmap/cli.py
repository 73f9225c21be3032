"""Command line: convert, map, report, synth.

Exit codes: 0 ok, 1 usage, 2 input error, 3 precondition violated,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .core import SpectralSignature
from .errors import InputError, IoFailure, LitmapError
from .ingest import (apply_band_mask, default_data_path, load_library_signature, load_radiometric_params,
                     read_envi, read_signatures_csv, to_reflectance, write_envi, write_raster,
                     write_signatures_csv)
from .pipeline import PipelineResult, StageFailure, run_pipeline
from .preclassify import INVALID, UNASSIGNED
from .report import PUBLISHED_TABLES, published_table_paths, report_from_files
from .synth import SceneSpec, generate_scene, write_scene

log = logging.getLogger("litmap")

EXIT_OK, EXIT_USAGE = 0, 1
CLASS_UNASSIGNED, CLASS_INVALID = 254, 255
RASTER_IGNORE = -1.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shared(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = _Parser(prog="litmap", description="Mineral mapping from hyperspectral cubes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("convert", help="radiance cube to TOA reflectance")
    _shared(p)
    p.add_argument("--in", dest="in_cube", required=True, help="radiance ENVI header")
    p.add_argument("--params", required=True, help="radiometry file")
    p.add_argument("--band-mask", help="bands to exclude, e.g. 0-6,57-75")

    p = sub.add_parser("map", help="run the full mapping pipeline")
    _shared(p)
    p.add_argument("--cube", help="reflectance ENVI header")
    p.add_argument("--library", help="laboratory signature CSV")
    p.add_argument("--class-references", help="CSV of reference spectra used to name classes")
    p.add_argument("--soil-class", help="soil class name or id")
    p.add_argument("--k-override", type=int)
    p.add_argument("--band-mask")
    p.add_argument("--pixel-csv", action="store_true", help="also write per-pixel soil results")

    p = sub.add_parser("report", help="validate RA and alpha against site measurements")
    _shared(p)
    p.add_argument("--sites")
    p.add_argument("--ra")
    p.add_argument("--alpha")
    p.add_argument("--published-table", choices=PUBLISHED_TABLES, help="use a bundled published site table")

    p = sub.add_parser("synth", help="write a synthetic scene with ground truth")
    _shared(p)
    p.add_argument("--snr", type=float, help="noise SNR in dB; omit for a noiseless scene")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--bands", type=int)
    return parser


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------- convert


def cmd_convert(args):
    cube = read_envi(args.in_cube)
    if args.band_mask:
        cube = apply_band_mask(cube, args.band_mask)
    params = load_radiometric_params(args.params, cube.bands)
    refl = to_reflectance(cube, params)
    out = Path(args.out or ".")
    target = out if out.suffix == ".hdr" else _out_dir(out) / (Path(args.in_cube).stem + "_reflectance.hdr")
    refl.data = refl.data.astype(np.float32)
    write_envi(refl, target, description="TOA reflectance")
    print(f"wrote {target} ({refl.meta.get('clamped', 0)} negative values clamped to 0)")
    return EXIT_OK


# ---------------------------------------------------------------- map


def pgm_quicklook(values, path):
    """8-bit greyscale of a [0, 1] field; NaN is black."""
    v = np.nan_to_num(np.clip(values, 0.0, 1.0), nan=0.0)
    img = np.round(v * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def class_raster(labels):
    out = labels.astype(np.int64).copy()
    out[labels == UNASSIGNED] = CLASS_UNASSIGNED
    out[labels == INVALID] = CLASS_INVALID
    return out.astype(np.uint8)


def _write_map_outputs(res: PipelineResult, out: Path, pixel_csv=False):
    cm = res.class_map
    write_raster(class_raster(cm.labels), out / "class_map.hdr", description="pre-classification")
    (out / "class_map.json").write_text(json.dumps({
        "classes": {str(k): v for k, v in cm.class_names.items()},
        "unassigned": CLASS_UNASSIGNED, "invalid": CLASS_INVALID,
        "soil_class": res.soil_class,
    }, indent=2, sort_keys=True) + "\n")
    write_raster(res.subclass_raster, out / "subclass_map.hdr",
                 description="0 impurity rep, 1 middle, 2 mineral rep, 255 non-soil")
    write_raster(res.ra_map.astype(np.float32), out / "ra.hdr", ignore_value=RASTER_IGNORE,
                 description="relative availability")
    write_raster(res.alpha_map.astype(np.float32), out / "alpha.hdr", ignore_value=RASTER_IGNORE,
                 description="mineral abundance")
    pgm_quicklook(res.ra_map, out / "ra.pgm")
    pgm_quicklook(res.alpha_map, out / "alpha.pgm")

    wl = res.cube.used_wavelengths
    sigs = [SpectralSignature(wl, c, f"candidate_{cm.class_names[i]}") for i, c in enumerate(res.candidates)]
    sigs += [cm.class_means[i] for i in sorted(cm.class_means)]
    sigs += [res.lab, res.subclass_reps.mineral, res.subclass_reps.impurity,
             res.refined.mineral, res.refined.impurity]
    write_signatures_csv(out / "signatures.csv", sigs)

    th = res.thresholds
    counts = res.subclasses.counts()
    with open(out / "thresholds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lower", "upper", "corr_rep_1", "corr_rep_2", "n_mineral", "n_middle", "n_impurity"])
        w.writerow([repr(th.lower), repr(th.upper), repr(th.corr_rep_1), repr(th.corr_rep_2),
                    counts["mineral"], counts["middle"], counts["impurity"]])
    if res.curve is not None:
        with open(out / "elbow.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "wcss"])
            for k, v in zip(res.curve.k_values, res.curve.wcss):
                w.writerow([int(k), repr(float(v))])
    if pixel_csv:
        with open(out / "soil_pixels.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "subclass", "correlation", "ra", "alpha", "residual"])
            cols = res.cube.cols
            for j, flat in enumerate(res.soil_idx):
                r, c = divmod(int(flat), cols)
                w.writerow([r, c, int(res.subclasses.labels[j]), repr(float(res.subclasses.correlation[j])),
                            repr(float(res.projection.ra[j])), repr(float(res.abundance.alpha[r, c])),
                            repr(float(res.abundance.residual[r, c]))])


def _manifest_core(res: PipelineResult):
    th = res.thresholds
    names = res.class_map.class_names
    counts = res.class_map.counts()
    return {
        "k": res.k,
        "thresholds": {"lower": th.lower, "upper": th.upper, "corr_rep_1": th.corr_rep_1,
                       "corr_rep_2": th.corr_rep_2},
        "class_counts": {names.get(i, "unassigned" if i == UNASSIGNED else "invalid"): n
                         for i, n in sorted(counts.items())},
        "soil_class": names[res.soil_class],
        "subclass_counts": res.subclasses.counts(),
        "fisher_ratio": res.direction.fisher_ratio,
        "separation": res.separation,
        "soil_pixels": int(res.soil_idx.size),
    }


def cmd_map(args):
    cfg = PipelineConfig.from_file(
        args.config, seed=args.seed, threads=args.threads, out=args.out, cube=args.cube,
        library=args.library, class_references=args.class_references, soil_class=args.soil_class,
        k_override=args.k_override, band_mask=args.band_mask,
    )
    if cfg.cube is None or cfg.library is None:
        raise InputError("map needs both a cube and a library signature (--cube, --library)")
    out = _out_dir(cfg.out)
    manifest = {
        "config": cfg.to_dict(), "config_sha256": cfg.digest(), "seed": cfg.seed,
        "inputs": {}, "status": "running",
    }
    timings = {}
    inputs = {"cube_header": cfg.cube, "library": cfg.library, "class_references": cfg.class_references}
    try:
        cube = read_envi(cfg.cube)
        lab = load_library_signature(cfg.library)
        refs = read_signatures_csv(cfg.class_references) if cfg.class_references else None
        inputs["cube_data"] = str(default_data_path(cfg.cube))
        for key, p in inputs.items():
            if p:
                manifest["inputs"][key] = {"path": str(p), "sha256": sha256_file(p)}
        res = run_pipeline(cube, lab, cfg, refs, timings)
        _write_map_outputs(res, out, args.pixel_csv)
        manifest.update(_manifest_core(res))
        manifest["status"] = "ok"
        code = EXIT_OK
        print(f"K = {res.k}; soil pixels {res.soil_idx.size}; subclasses {res.subclasses.counts()}")
        print(f"thresholds C1 = {res.thresholds.lower:.4f}, C2 = {res.thresholds.upper:.4f}")
        print(f"outputs in {out}")
    except StageFailure as exc:
        manifest.update(status="failed", error_stage=exc.stage, error=type(exc.error).__name__,
                        message=str(exc.error))
        code = exc.exit_code
        print(f"error in stage {exc.stage}: {type(exc.error).__name__}: {exc.error}", file=sys.stderr)
    except (LitmapError, OSError) as exc:
        if isinstance(exc, OSError):
            exc = IoFailure(str(exc))
        manifest.update(status="failed", error_stage="input", error=type(exc).__name__, message=str(exc))
        code = exc.exit_code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    finally:
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        with open(out / "timings.json", "w") as fh:
            json.dump(timings, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return code


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


# ---------------------------------------------------------------- report, synth


def cmd_report(args):
    if args.published_table:
        sites, ra, alpha = published_table_paths(args.published_table)
    else:
        sites, ra, alpha = args.sites, args.ra, args.alpha
    if not (sites and ra and alpha):
        raise UsageError("report needs --sites, --ra and --alpha (or --published-table)")
    report = report_from_files(sites, ra, alpha)
    print(report.format_table())
    if args.out:
        path = _out_dir(args.out) / "site_report.csv"
        report.to_csv(path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_synth(args):
    overrides = dict(seed=args.seed, rows=args.rows, cols=args.cols, bands=args.bands,
                     noise_snr_db=args.snr)
    spec = SceneSpec.from_file(args.config, **overrides) if args.config else \
        SceneSpec(**{k: v for k, v in overrides.items() if v is not None})
    out = write_scene(generate_scene(spec), args.out or "synthetic_scene")
    snr = "noiseless" if math.isinf(spec.noise_snr_db) else f"{spec.noise_snr_db:g} dB"
    print(f"wrote {spec.rows}x{spec.cols}x{spec.bands} scene ({snr}) to {out}")
    return EXIT_OK


COMMANDS = {"convert": cmd_convert, "map": cmd_map, "report": cmd_report, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("choose a subcommand: " + ", ".join(COMMANDS))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"litmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"litmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LitmapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: IoFailure: {exc}", file=sys.stderr)
        return IoFailure.exit_code


if __name__ == "__main__":
    sys.exit(main())
