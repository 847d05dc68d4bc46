"""Command-line interface: ``pmsci <command> ...``.

Exit codes: 0 success, 1 data error (bad/missing files, size mismatches),
2 usage error. Arguments ending in ``.txt`` are read as list files and
directories expand to the images they contain.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, imgcore
from .dataset import expand_inputs, pm_names, simulate_dataset
from .denoise import DEFAULT_SIGMA0, extract_residue
from .errors import DataError
from .fingerprint import generate_fingerprint, load_fingerprint, load_images, save_fingerprint
from .fusion import DEFAULT_K, DEFAULT_N_VALUES, EvidenceSet, ResidueBank, default_threads
from .patchmatch import (
    DEFAULT_INIT_SAMPLES, DEFAULT_ITERATIONS, DEFAULT_MIN_OFFSET, DEFAULT_PATCH,
    DEFAULT_SEARCH_SAMPLES, anonymize,
)
from .pce import DEFAULT_TAU, EXCLUSION, pce
from .report import attribute, csv_rows, fingerprint_meta, write_csv, write_json

log = logging.getLogger("pmsci")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _paths(items, what: str) -> list[Path]:
    paths = expand_inputs(items)
    if not paths:
        raise UsageError(f"no {what} given")
    return paths


def cmd_fingerprint(args) -> int:
    paths = _paths(args.images, "input images")
    fp = generate_fingerprint(paths, sigma0=args.sigma0, trim=args.trim,
                              postprocess=not args.no_zero_mean, label=args.label)
    save_fingerprint(fp, args.out)
    if args.dump_residues:
        dump = Path(args.dump_residues)
        dump.mkdir(parents=True, exist_ok=True)
        for p, img in zip(paths, load_images(paths, args.trim)):
            extract_residue(img, args.sigma0).astype("<f8").tofile(dump / f"{Path(p).stem}.f64")
    _emit({"out": str(args.out), **fingerprint_meta(fp),
           "zero_denominator": fp.zero_denominator})
    return 0


def cmd_pce(args) -> int:
    fp = load_fingerprint(args.fp)
    sigma0 = fp.sigma0 if args.sigma0 is None else args.sigma0
    if args.set:
        paths = _paths(args.set, "set images")
        fs = generate_fingerprint(paths, sigma0=sigma0, trim=args.trim)
        res = pce(fs, fp, peak=args.peak)
        mode, extra = "set", {"n": len(paths)}
    else:
        if not args.image:
            raise UsageError("give an image or --set")
        img = load_images([args.image], args.trim)[0]
        res = pce(extract_residue(img, sigma0), fp, None if args.no_premultiply else img,
                  peak=args.peak)
        mode, extra = "image", {"image": str(args.image)}
    _emit({"pce": res.pce, "peak": [res.peak_row, res.peak_col], "peak_corr": res.peak_corr,
           "energy": res.energy, "mode": mode, "peak_mode": args.peak, "exclusion": EXCLUSION,
           "tau": args.tau, "match": res.pce >= args.tau, **extra})
    return 0


def cmd_anonymize(args) -> int:
    paths = _paths(args.images, "input images")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for i, p in enumerate(paths):
        img = imgcore.load_image(p)
        pm, rep = anonymize(img, args.patch, args.iterations, args.min_offset, args.seed, stream=i,
                            init_samples=args.init_samples, search_samples=args.search_samples)
        before = imgcore.trim_border(img, args.patch - 1)
        b_name, a_name = pm_names(Path(p).stem)
        imgcore.save_image(before, out / b_name)
        imgcore.save_image(pm, out / a_name)
        doc = {"input": str(p), "before": b_name, "after": a_name, "stream": i, **rep.to_dict()}
        write_json(doc, out / f"out-pm-report-{Path(p).stem}.json")
        summary.append(doc)
        log.info("%s: PSNR %.2f dB, MPR %.1f%%", p, rep.psnr_db, rep.mpr_percent)
    _emit(summary)
    return 0


def cmd_attribute(args) -> int:
    alpha = [str(p) for p in _paths(args.alpha, "--alpha images")]
    beta = [str(p) for p in expand_inputs(args.beta or [])]
    fp = load_fingerprint(args.fp)
    sigma0 = fp.sigma0 if args.sigma0 is None else args.sigma0
    ev = EvidenceSet(alpha, beta, case_id=args.case)
    threads = default_threads() if args.threads is None else args.threads
    config = {"command": "attribute", "fingerprint": str(args.fp), "sigma0": sigma0,
              "trim": args.trim}
    rep = attribute(ev, fp, args.n, args.K, args.tau, args.seed,
                    ResidueBank(sigma0=sigma0, trim=args.trim), threads, args.prefilter,
                    args.sweep, config)
    out = Path(args.out)
    write_json(rep, out / "report.json")
    rows = csv_rows(rep)
    write_csv(rows, out / "report.csv")
    if args.sweep:
        write_csv(rep["sweep"], out / "sweep.csv",
                  ["K", "n", "fused_size", "metric", "metric_value", "metric_pct", "cases"])
    _emit({"report": str(out / "report.json"), "rows": rows,
           "intersection": rep["intersection"]})
    return 0


def cmd_simulate(args) -> int:
    threads = default_threads() if args.threads is None else args.threads
    manifest = simulate_dataset(args.out, args.cameras, args.images, args.size, args.seed,
                                threads=threads)
    _emit(manifest)
    return 0


def cmd_harness(args) -> int:
    from .harness import run_harness

    res = run_harness(args.dataset, args.out, args.n, args.K, args.tau, args.seed,
                      threads=args.threads, scenario2=not args.scenario1_only,
                      prefilter=not args.no_prefilter)
    _emit({"out": str(args.out), "pm_median_pce": res["pm_median"],
           "tables": sorted(res["tables"])})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmsci", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fingerprint", help="estimate a camera fingerprint from pristine images")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma0", type=float, default=DEFAULT_SIGMA0)
    p.add_argument("--trim", type=int, default=0, help="pixels removed from each side first")
    p.add_argument("--label", default="")
    p.add_argument("--no-zero-mean", action="store_true")
    p.add_argument("--dump-residues", metavar="DIR", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("pce", help="PCE of one image (or an image set) against a fingerprint")
    p.add_argument("image", nargs="?")
    p.add_argument("--set", nargs="+", metavar="IMAGE")
    p.add_argument("--fp", required=True)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--trim", type=int, default=0)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--peak", choices=["aligned", "global"], default="aligned")
    p.add_argument("--no-premultiply", action="store_true",
                   help="correlate with the fingerprint instead of image * fingerprint")
    p.set_defaults(func=cmd_pce)

    p = sub.add_parser("anonymize", help="apply the Patch-Match attack")
    p.add_argument("images", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patch", type=int, default=DEFAULT_PATCH)
    p.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--min-offset", type=int, default=DEFAULT_MIN_OFFSET)
    p.add_argument("--init-samples", type=int, default=DEFAULT_INIT_SAMPLES)
    p.add_argument("--search-samples", type=int, default=DEFAULT_SEARCH_SAMPLES)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("attribute", help="subset + fusion attribution of an evidence set")
    p.add_argument("--alpha", nargs="+", required=True, help="query-camera evidence")
    p.add_argument("--beta", nargs="+", help="unknown-camera evidence")
    p.add_argument("--fp", required=True)
    p.add_argument("--n", type=_int_list, default=list(DEFAULT_N_VALUES))
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--trim", type=int, default=0)
    p.add_argument("--case", type=int, default=1)
    p.add_argument("--threads", type=int)
    p.add_argument("--sweep", type=_int_list, metavar="K,K,...")
    p.add_argument("--prefilter", action="store_true",
                   help="drop images individually matching the fingerprint first")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("simulate", help="write a synthetic camera dataset tree")
    p.add_argument("--cameras", type=int, default=2)
    p.add_argument("--images", type=int, default=55)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("harness", help="table-shaped runs over a camera-folder dataset")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=_int_list, default=list(DEFAULT_N_VALUES))
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--scenario1-only", action="store_true")
    p.add_argument("--no-prefilter", action="store_true")
    p.set_defaults(func=cmd_harness)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"pmsci: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"pmsci: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
