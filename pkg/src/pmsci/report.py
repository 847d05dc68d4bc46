"""Case reports: the JSON document and its table-shaped CSV flattening.

A report is a plain dict written in a fixed key order, so
two runs with the same configuration differ only in ``timestamp``.
"""
from __future__ import annotations

import csv
import io
import json
import os
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, imgcore
from .denoise import LEVELS, WAVELET, WINDOWS
from .fingerprint import Fingerprint
from .fusion import (
    DEFAULT_K, CaseResult, EvidenceSet, ResidueBank, case_metrics, intersect_fusion_sets,
    intersection_precision, per_image_pce, run_case, sweep_K,
)
from .pce import DEFAULT_TAU, EXCLUSION

SCHEMA = "pm-sci/1"
CSV_COLUMNS = ["case", "n", "median_pce", "max_pce", "fused_size", "fused_pce", "metric", "value",
               "pct"]


def environment_stamp() -> dict:
    import numba
    import pywt
    import scipy

    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pywavelets": pywt.__version__,
        "numba": numba.__version__,
        "platform": platform.platform(terse=True),
        "gray_conversion": imgcore.GRAY_CONVERSION,
        "denoiser": {"wavelet": WAVELET, "levels": LEVELS, "windows": list(WINDOWS)},
        "pce_exclusion": EXCLUSION,
    }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _stats(values) -> dict:
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        return {"median_pce": None, "max_pce": None}
    return {"median_pce": float(np.median(v)), "max_pce": float(v.max())}


def fingerprint_meta(fp: Fingerprint) -> dict:
    return {"rows": fp.shape[0], "cols": fp.shape[1], "n": fp.n, "sigma0": fp.sigma0,
            "zero_mean": fp.zero_mean, "label": fp.label}


def _run_entry(ev: EvidenceSet, res: CaseResult, tau: float) -> dict:
    m = case_metrics(ev, res.fusion)
    fusion = None
    if res.fusion is not None and not res.fusion.empty:
        fusion = {"members": list(res.fusion.members), "fused_pce": _num(res.fusion.fused_pce),
                  "hits": list(res.fusion.hits)}
    return {
        "n": res.n,
        **_stats(res.scores),
        "above_tau": int(np.sum(res.scores >= tau)),
        "truncated": res.truncated,
        "excluded": list(res.excluded),
        "fusion": fusion,
        "metrics": {
            "fused_size": m.fused_size, "fused_query": m.fused_query, "n_alpha": m.n_alpha,
            "n_total": m.n_total,
            "recall_pct": m.recall_pct, "precision_pct": m.precision_pct,
            "selection_pct": m.selection_pct,
        },
        "subsets": [{"k": r.k, "members": list(r.members), "score": r.score} for r in res.records],
    }


def attribute(ev: EvidenceSet, reference: Fingerprint, n_values: Sequence[int] = (5, 10, 15, 20),
              K: int = DEFAULT_K, tau: float = DEFAULT_TAU, seed: int = 0,
              bank: ResidueBank | None = None, threads: int | None = None,
              prefilter: bool = False, sweep: Sequence[int] | None = None,
              config: dict | None = None) -> dict:
    """Run every subset size of one case and assemble its report."""
    bank = bank if bank is not None else ResidueBank(sigma0=reference.sigma0)
    single = per_image_pce(ev.ids, reference, bank)
    runs = []
    fusions = []
    for n in n_values:
        if n > len(ev.ids):
            runs.append({"n": n, "skipped": f"only {len(ev.ids)} images"})
            continue
        res = run_case(ev, reference, n, K, tau, seed, bank, threads, prefilter)
        runs.append(_run_entry(ev, res, tau))
        fusions.append(res.fusion)
    inter = intersect_fusion_sets(fusions)
    report = {
        "schema": SCHEMA,
        "config": {
            "case_id": ev.case_id, "n_values": list(n_values), "K": K, "tau": tau, "seed": seed,
            "prefilter": prefilter, "sweep": list(sweep) if sweep else None, **(config or {}),
        },
        "environment": environment_stamp(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "reference": fingerprint_meta(reference),
        "evidence": {"alpha": list(ev.alpha), "beta": list(ev.beta)},
        "scenario": 2 if ev.beta else 1,
        "single_image": {"pce": {i: single[i] for i in ev.ids}, **_stats(single.values()),
                         "above_tau": sum(v >= tau for v in single.values())},
        "runs": runs,
        "intersection": None if inter is None else {
            "members": list(inter), "precision_pct": intersection_precision(ev, inter),
        },
    }
    if sweep:
        ns = [n for n in n_values if n <= len(ev.ids)]
        report["sweep"] = sweep_K([(ev, reference)], ns, sorted(sweep), tau, seed, bank, threads)
    return report


def csv_rows(report: dict) -> list[dict]:
    """One row per subset size, plus the single-image reference row ``n = 1*``."""
    case = report["config"]["case_id"]
    metric = "precision" if report["scenario"] == 2 else "recall"
    s = report["single_image"]
    rows = [{"case": case, "n": "1*", "median_pce": s["median_pce"], "max_pce": s["max_pce"],
             "fused_size": None, "fused_pce": None, "metric": None, "value": None, "pct": None}]
    for run in report["runs"]:
        if "skipped" in run:
            continue
        m = run["metrics"]
        fus = run["fusion"]
        if fus is None:
            value = pct = None
        elif metric == "recall":
            value, pct = f"{m['fused_query']}/{m['n_alpha']}", m["recall_pct"]
        else:
            value, pct = f"{m['fused_query']}/{m['fused_size']}", m["precision_pct"]
        rows.append({
            "case": case, "n": run["n"], "median_pce": run["median_pce"],
            "max_pce": run["max_pce"], "fused_size": m["fused_size"] if fus else None,
            "fused_pce": fus["fused_pce"] if fus else None, "metric": metric, "value": value, "pct": pct,
        })
    return rows


def _fmt(v):
    if v is None:
        return "--"
    if isinstance(v, float):
        return f"{v:.4f}".rstrip("0").rstrip(".")
    return str(v)


def write_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else CSV_COLUMNS))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    _atomic_write(path, buf.getvalue())


def write_json(obj, path) -> None:
    _atomic_write(path, json.dumps(obj, indent=2) + "\n")


def strip_volatile(report: dict) -> dict:
    """Copy without the fields expected to change between identical runs."""
    out = dict(report)
    out.pop("timestamp", None)
    return out


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
