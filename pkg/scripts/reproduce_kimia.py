#!/usr/bin/env python3
"""Reproduce the mFLIP + chi-square retrieval numbers on KIMIA Path24 / Path960.

The datasets are not bundled. Prepare ``path,label`` manifests first:

* Path24 training patches: cut each of the 24 scans into 1000x1000 patches with
  0% overlap (``flipkit patch scan_XX.tif --size 1000 --out-dir train``), labels
  are scan ids. Test manifest: the 1,325 provided test patches, labelled with
  the same scan ids.
* Path960: one manifest listing all 960 images with their class labels.

Usage::

    python scripts/reproduce_kimia.py --path24 train.csv test.csv --path960 all.csv --workers 8

Targets: Path24 eta_total 0.5993 +/- 0.05, Path960 accuracy 0.88 +/- 0.04.
"""
import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

from flipkit.cli import read_manifest
from flipkit.descriptor import mflip
from flipkit.evaluation import evaluate_patch_to_scan, leave_one_out
from flipkit.imaging import load_image
from flipkit.index import DescriptorRecord, IndexConfig, build_index
from flipkit.metrics import MetricKind

PATH24_TARGET, PATH24_TOL = 0.5993, 0.05
PATH960_TARGET, PATH960_TOL = 0.88, 0.04
CONFIG = IndexConfig()  # w=3, stride=3, L=128, n_p=4, scales 1/0.75/0.5/0.25


def _describe(row):
    path, name, label = row
    return DescriptorRecord.from_mflip(mflip(load_image(path), CONFIG.scales, CONFIG.flip),
                                       label, name)


def describe(manifest, workers=1):
    rows = read_manifest(manifest)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_describe, rows, chunksize=16))
    return [_describe(r) for r in rows]


def path24(train_manifest, test_manifest, workers=1):
    index = build_index(describe(train_manifest, workers), CONFIG)
    queries = [(r.flat, r.label) for r in describe(test_manifest, workers)]
    return evaluate_patch_to_scan(index, queries, MetricKind.CHI_SQUARE, workers=workers)


def path960(manifest, workers=1):
    index = build_index(describe(manifest, workers), CONFIG)
    return leave_one_out(index, MetricKind.CHI_SQUARE, workers=workers).accuracy


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--path24", nargs=2, metavar=("TRAIN", "TEST"))
    ap.add_argument("--path960", metavar="MANIFEST")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    if not (args.path24 or args.path960):
        ap.error("give --path24 and/or --path960")

    ok = True
    if args.path24:
        report = path24(*args.path24, workers=args.workers)
        print(report.format_table())
        hit = abs(report.eta_total - PATH24_TARGET) <= PATH24_TOL
        ok &= hit
        print(f"Path24 eta_total {report.eta_total:.4f} vs {PATH24_TARGET} +/- {PATH24_TOL}: "
              f"{'PASS' if hit else 'FAIL'}")
    if args.path960:
        acc = path960(args.path960, workers=args.workers)
        hit = abs(acc - PATH960_TARGET) <= PATH960_TOL
        ok &= hit
        print(f"Path960 accuracy {acc:.4f} vs {PATH960_TARGET} +/- {PATH960_TOL}: "
              f"{'PASS' if hit else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
