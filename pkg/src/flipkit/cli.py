"""Command-line interface: ``flipkit {extract,patch,search,eval,kernel}``.

Exit codes: 0 success, 1 usage error, 2 runtime or data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .descriptor import DEFAULT_SCALES, mflip
from .errors import ConfigError, FlipkitError
from .evaluation import eta_metrics, evaluate_patch_to_scan, leave_one_out
from .imaging import PatchSpec, grid_patches, load_image, save_png
from .index import DescriptorIndex, DescriptorRecord, FingerprintMismatch, IndexConfig
from .metrics import MetricKind, gram_matrix

MANIFEST_HEADER = ["path", "label"]

DEFAULTS = {
    "w": 3,
    "stride": 3,
    "L": 128,
    "np": 4,
    "scales": list(DEFAULT_SCALES),
    "metric": "chi_square",
    "k": 3,
    "workers": 1,
    "strict": False,
    "json": False,
    "out": None,
    "reject_mean_above": None,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    index_config: IndexConfig
    metric: MetricKind
    k: int
    workers: int
    strict: bool
    json: bool
    out: Optional[str]
    reject_mean_above: Optional[float]


def _parse_scales(value):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid scale list {value!r}") from None


def resolve_config(args) -> RunConfig:
    """Merge built-in defaults, ``FLIPKIT_WORKERS``, the JSON config file and flags."""
    merged = dict(DEFAULTS)
    env_workers = os.environ.get("FLIPKIT_WORKERS")
    if env_workers:
        try:
            merged["workers"] = int(env_workers)
        except ValueError:
            raise UsageError(f"FLIPKIT_WORKERS must be an integer, got {env_workers!r}") from None
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(file_cfg)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    try:
        index_config = IndexConfig(int(merged["w"]), int(merged["stride"]), int(merged["L"]),
                                   int(merged["np"]), _parse_scales(merged["scales"]))
        metric = MetricKind.parse(merged["metric"])
    except FlipkitError as exc:
        raise UsageError(str(exc)) from None
    if int(merged["k"]) < 1:
        raise UsageError("--k must be >= 1")
    if int(merged["workers"]) < 1:
        raise UsageError("--workers must be >= 1")
    reject = merged["reject_mean_above"]
    return RunConfig(index_config, metric, int(merged["k"]), int(merged["workers"]),
                     bool(merged["strict"]), bool(merged["json"]), merged["out"],
                     None if reject is None else float(reject))


def warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def read_manifest(path):
    """Rows ``(resolved_path, name_as_written, label)`` of a ``path,label`` CSV."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return []
            if [h.strip() for h in header] != MANIFEST_HEADER:
                raise DataError(f"{path}: manifest header must be 'path,label', got {header}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 2:
                    raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
                name, label = row
                rows.append((path.parent / name, name, label))
            return rows
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None


def _describe(job):
    """Worker body: load one image and describe it. Returns (record, warnings, error)."""
    path, name, label, index_config, reject = job
    try:
        img = load_image(path)
        if reject is not None and img.mean() > reject:
            return None, [f"{name}: mean intensity {img.mean():.1f} > {reject}, rejected as background"], None
        desc = mflip(img, index_config.scales, index_config.flip)
    except (FlipkitError, OSError) as exc:
        return None, [], str(exc)
    warnings = [f"{name}: degenerate (constant) histogram at scale {s:g}"
                for s, d in zip(desc.scales, desc.degenerate) if d]
    return DescriptorRecord.from_mflip(desc, label, name), warnings, None


def describe_manifest(rows, run: RunConfig):
    jobs = [(p, name, label, run.index_config, run.reject_mean_above) for p, name, label in rows]
    if run.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(_describe, jobs, chunksize=max(1, len(jobs) // (4 * run.workers))))
    else:
        results = [_describe(j) for j in jobs]

    records = []
    for (_, name, _), (rec, warnings, error) in zip(rows, results):
        for w in warnings:
            warn(w)
        if error is not None:
            if run.strict:
                raise DataError(error)
            warn(f"skipping {name}: {error}")
            continue
        if rec is not None:
            records.append(rec)
    return records


def cmd_extract(args, run: RunConfig) -> int:
    if not run.out:
        raise UsageError("extract needs --out INDEX_FILE")
    rows = read_manifest(args.manifest)
    if not rows:
        warn(f"manifest {args.manifest} lists no images; writing an empty index")
    records = describe_manifest(rows, run)
    index = DescriptorIndex(records, run.index_config)
    index.save(run.out)
    print(f"extract: indexed {len(index)} of {len(rows)} images -> {run.out}", file=sys.stderr)
    return 0


def cmd_patch(args, run: RunConfig) -> int:
    spec = PatchSpec.from_overlap(args.size, args.overlap)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(run.out) if run.out else out_dir / "manifest.csv"
    rows = []
    for scan_path in args.scans:
        scan_id = Path(scan_path).stem
        try:
            scan = load_image(scan_path)
        except FlipkitError as exc:
            if run.strict:
                raise DataError(str(exc)) from None
            warn(f"skipping scan: {exc}")
            continue
        patches = grid_patches(scan, spec, scan_id)
        if not patches:
            warn(f"{scan_path}: {scan.shape[1]}x{scan.shape[0]} scan is smaller than the "
                 f"{args.size}px patch size; no patches")
        for p in patches:
            if run.reject_mean_above is not None and p.image.mean() > run.reject_mean_above:
                continue
            fname = f"{scan_id}_{p.row}_{p.col}.png"
            save_png(p.image, out_dir / fname)
            rel = os.path.relpath(out_dir / fname, manifest_path.parent)
            rows.append((Path(rel).as_posix(), scan_id))
    with open(manifest_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    print(f"patch: wrote {len(rows)} patches, manifest {manifest_path}", file=sys.stderr)
    return 0


def _load_index(path) -> DescriptorIndex:
    try:
        return DescriptorIndex.load(path)
    except OSError as exc:
        raise DataError(f"cannot read index {path}: {exc}") from None


def _check_fingerprint(index: DescriptorIndex, run: RunConfig) -> None:
    if index.config != run.index_config:
        raise FingerprintMismatch(index.config, run.index_config)


def cmd_search(args, run: RunConfig) -> int:
    index = _load_index(args.index)
    _check_fingerprint(index, run)
    cfg = run.index_config
    query = mflip(load_image(args.query), cfg.scales, cfg.flip)
    result = index.search(query, run.metric, run.k)
    if run.json:
        payload = result.to_dict()
        payload["query"] = str(args.query)
        print(json.dumps(payload, indent=2))
    else:
        print(f"{'rank':>4}  {'id':>6}  {'label':<16}  {'distance':>12}  name")
        for rank, hit in enumerate(result, 1):
            print(f"{rank:>4}  {hit.id:>6}  {hit.label:<16}  {hit.distance:>12.6g}  {hit.name}")
    return 0


def _emit_report(payload: dict, table: str, run: RunConfig) -> None:
    text = json.dumps(payload, indent=2)
    if run.out:
        Path(run.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    print(table, file=sys.stderr)


def cmd_eval(args, run: RunConfig) -> int:
    index = _load_index(args.index)
    if args.protocol == "loo":
        result = leave_one_out(index, run.metric, workers=run.workers)
        report = eta_metrics(result.outcomes)
        payload = {"protocol": "loo", "config": index.config.to_dict(), "metric": str(run.metric),
                   "n_test": len(result.outcomes), "accuracy": result.accuracy,
                   "per_class": [t._asdict() for t in report.per_class]}
        table = report.format_table().rsplit("\n", 1)[0]
        table += f"\nleave-one-out accuracy={result.accuracy:.4f}  (n={len(result.outcomes)})"
        _emit_report(payload, table, run)
        return 0

    if not args.test:
        raise UsageError("the patch2scan protocol needs --test MANIFEST")
    _check_fingerprint(index, run)
    records = describe_manifest(read_manifest(args.test), run)
    if not records:
        raise DataError("test manifest produced no usable patches")
    if len(index) == 0:
        raise DataError("cannot evaluate against an empty index")
    queries = [(r.flat, r.label) for r in records]
    report = evaluate_patch_to_scan(index, queries, run.metric, workers=run.workers)
    payload = {"protocol": "patch2scan", **report.to_dict()}
    _emit_report(payload, report.format_table(), run)
    return 0


def cmd_kernel(args, run: RunConfig) -> int:
    if not run.out:
        raise UsageError("kernel needs --out CSV_FILE")
    index = _load_index(args.index)
    if len(index) == 0:
        raise DataError("cannot export a kernel matrix for an empty index")
    G = gram_matrix(index.matrix, args.beta)
    with open(run.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for rec, row in zip(index.records, G):
            cells = [repr(float(v)) for v in row]
            writer.writerow([rec.label, *cells] if args.labels else cells)
    print(f"kernel: wrote {len(G)}x{len(G)} matrix -> {run.out}", file=sys.stderr)
    return 0


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("descriptor and run options")
    g.add_argument("--config", help="JSON file with option defaults (flags win)")
    g.add_argument("--w", type=int, help="window side in pixels (odd, default 3)")
    g.add_argument("--stride", type=int, help="window stride in pixels (default 3)")
    g.add_argument("--L", type=int, dest="L", help="histogram parameter; L-1 bins per scale (default 128)")
    g.add_argument("--np", type=int, dest="np", help="projections per window (default 4)")
    g.add_argument("--scales", help="comma-separated scale ratios (default 1,0.75,0.5,0.25)")
    g.add_argument("--metric", help="chi_square, hist_intersect, pearson, cosine, l1 or l2")
    g.add_argument("--k", type=int, help="number of results to return (default 3)")
    g.add_argument("--workers", type=int, help="worker processes (default $FLIPKIT_WORKERS or 1)")
    g.add_argument("--strict", action="store_const", const=True,
                   help="abort on unreadable images instead of skipping them")
    g.add_argument("--json", action="store_const", const=True, help="machine-readable output")
    g.add_argument("--out", help="output path")
    g.add_argument("--reject-mean-above", type=float, dest="reject_mean_above",
                   help="skip images whose mean intensity exceeds this value (background)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="flipkit", description="FLIP / mFLIP descriptors for image search.")
    parser.add_argument("--version", action="version", version=f"flipkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", parents=[common], help="describe images listed in a manifest")
    p.add_argument("manifest", help="CSV with header 'path,label'")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("patch", parents=[common], help="cut scans into grid patches")
    p.add_argument("scans", nargs="+", help="scan image files")
    p.add_argument("--size", type=int, required=True, help="patch side in pixels")
    p.add_argument("--overlap", type=float, default=0.0, help="overlap percentage in [0, 100)")
    p.add_argument("--out-dir", required=True, dest="out_dir", help="directory for patch PNGs")
    p.set_defaults(func=cmd_patch)

    p = sub.add_parser("search", parents=[common], help="top-k search for a query image")
    p.add_argument("index")
    p.add_argument("query")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", parents=[common], help="retrieval accuracy")
    p.add_argument("index")
    p.add_argument("--test", help="test manifest (patch2scan protocol)")
    p.add_argument("--protocol", choices=["patch2scan", "loo"], default="patch2scan")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kernel", parents=[common], help="export the GHI kernel Gram matrix")
    p.add_argument("index")
    p.add_argument("--beta", type=float, default=1.0, help="kernel exponent (default 1)")
    p.add_argument("--labels", action="store_true", help="prepend a label column")
    p.set_defaults(func=cmd_kernel)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = resolve_config(args)
        if args.command == "patch":
            try:
                PatchSpec.from_overlap(args.size, args.overlap)
            except FlipkitError as exc:
                raise UsageError(str(exc)) from None
        return args.func(args, run)
    except UsageError as exc:
        print(f"flipkit: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        if isinstance(exc, FingerprintMismatch):
            print(f"flipkit: error: descriptor config does not match the index\n"
                  f"  index: {exc.expected}\n  query: {exc.got}", file=sys.stderr)
            return 2
        print(f"flipkit: error: {exc}", file=sys.stderr)
        return 2
    except (FlipkitError, DataError, OSError) as exc:
        print(f"flipkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
