"""Randomized subset + fusion-set attribution.

For every subset size ``n``, ``K`` distinct random ``n``-subsets of the
evidence are drawn. Each subset's joint fingerprint is compared with the
query fingerprint; members of every subset reaching the threshold are
pooled into a fusion set, whose own fingerprint is then scored. All
above-threshold subsets are collected before fusing (no early exit).

Per-image estimator terms are cached in a :class:`ResidueBank`, so each
subset fingerprint is a sum over cached arrays rather than a re-extraction.
"""
from __future__ import annotations

import math
import os
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import imgcore
from .denoise import DEFAULT_SIGMA0, extract_residue
from .errors import DataError, DimensionMismatchError
from .fingerprint import Fingerprint, combine_terms, content_key
from .pce import DEFAULT_TAU, pce
from .validation import unique_ids

DEFAULT_K = 100
DEFAULT_N_VALUES = (5, 10, 15, 20)
MAX_REJECTIONS = 10 ** 6


class CaseError(DataError):
    """A case aborted; the message names the offending subset or image."""


def default_threads() -> int:
    return max(1, int(os.environ.get("PMSCI_THREADS", "1")))


@dataclass
class EvidenceSet:
    """Evidence of one case: query-camera PM images and unknown-camera images."""

    alpha: list[str]
    beta: list[str] = field(default_factory=list)
    case_id: int = 1

    def __post_init__(self):
        self.alpha = list(self.alpha)
        self.beta = list(self.beta)
        unique_ids(self.alpha + self.beta)

    @property
    def ids(self) -> list[str]:
        return self.alpha + self.beta


@dataclass(frozen=True)
class SubsetRecord:
    k: int
    members: tuple[str, ...]
    score: float


@dataclass
class FusionSet:
    case_id: int
    n: int
    members: tuple[str, ...]
    fused_pce: float | None
    hits: tuple[int, ...] = ()

    @property
    def empty(self) -> bool:
        return not self.members


@dataclass
class CaseResult:
    case_id: int
    n: int
    records: list[SubsetRecord]
    fusion: FusionSet | None
    truncated: bool = False
    excluded: tuple[str, ...] = ()

    @property
    def scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records])


@dataclass
class CaseMetrics:
    """Percentages with the counts behind them; ``None`` when undefined."""

    fused_size: int
    fused_query: int
    n_alpha: int
    n_total: int
    recall_pct: float | None = None
    precision_pct: float | None = None
    selection_pct: float | None = None


@dataclass
class TotalMetrics:
    cases: list[int]
    fused_size: int
    fused_query: int
    n_alpha: int
    n_total: int
    total_precision_pct: float | None
    total_recall_pct: float | None
    selection_pct: float | None
    average_fused: float | None


def _pct(num: int, den: int) -> float | None:
    return None if den == 0 else 100.0 * num / den


class ResidueBank:
    """Lazily computed ``(image, residue)`` pairs keyed by image id.

    ``loader`` maps an id to a gray image (default: read the id as a path).
    """

    def __init__(self, loader: Callable[[str], np.ndarray] | Mapping | None = None,
                 sigma0: float = DEFAULT_SIGMA0, trim: int = 0):
        if loader is None:
            loader = imgcore.load_image
        elif isinstance(loader, Mapping):
            loader = loader.__getitem__
        self._loader = loader
        self.sigma0 = float(sigma0)
        self.trim = int(trim)
        self._cache: dict[str, tuple[np.ndarray, np.ndarray, bytes]] = {}

    def _load(self, i: str):
        try:
            img = np.asarray(self._loader(i), dtype=np.float64)
            if self.trim:
                img = imgcore.trim_border(img, self.trim)
            res = extract_residue(img, self.sigma0)
        except FileNotFoundError as exc:
            raise CaseError(f"{i}: file not found") from exc
        except DataError as exc:
            raise CaseError(f"{i}: {exc}") from exc
        return img, res, content_key(img)

    def entry(self, i: str):
        hit = self._cache.get(i)
        if hit is None:
            hit = self._cache[i] = self._load(i)
        return hit

    def prefetch(self, ids: Sequence[str], threads: int = 1) -> None:
        todo = [i for i in dict.fromkeys(ids) if i not in self._cache]
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(threads) as ex:
                for i, e in zip(todo, ex.map(self._load, todo)):
                    self._cache[i] = e
        else:
            for i in todo:
                self._cache[i] = self._load(i)

    def image(self, i: str) -> np.ndarray:
        return self.entry(i)[0]

    def residue(self, i: str) -> np.ndarray:
        return self.entry(i)[1]

    def fingerprint(self, ids: Sequence[str], label: str = "") -> Fingerprint:
        """Joint fingerprint of ``ids``; bit-identical to estimating it from the images."""
        entries = sorted((self.entry(i) for i in ids), key=lambda e: e[2])
        terms = [(res * img, img * img) for img, res, _ in entries]
        return combine_terms(terms, self.sigma0, label=label)


def sample_subsets(ids: Sequence[str], n: int, K: int, seed: int = 0,
                   ) -> tuple[list[tuple[str, ...]], bool]:
    """Draw ``K`` pairwise-distinct ``n``-subsets of ``ids`` uniformly.

    Returns ``(subsets, truncated)``; ``truncated`` is set when fewer than
    ``K`` distinct subsets exist (all of them are returned, shuffled) or the
    rejection cap was hit. Members keep the order of ``ids``.
    """
    ids = list(ids)
    N = len(ids)
    if n < 1 or n > N:
        raise DataError(f"subset size {n} impossible with {N} images")
    if K < 1:
        raise DataError("K must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(n)])))
    total = math.comb(N, n)
    if total <= K:
        every = list(combinations(range(N), n))
        order = rng.permutation(len(every))
        return [tuple(ids[j] for j in every[i]) for i in order], total < K

    seen: set[tuple[int, ...]] = set()
    picked: list[tuple[int, ...]] = []
    rejections = 0
    while len(picked) < K:
        idx = tuple(sorted(int(j) for j in rng.choice(N, size=n, replace=False)))
        if idx in seen:
            rejections += 1
            if rejections > MAX_REJECTIONS:
                break
            continue
        seen.add(idx)
        picked.append(idx)
    return [tuple(ids[j] for j in s) for s in picked], len(picked) < K


def per_image_pce(ids: Sequence[str], reference: Fingerprint, bank: ResidueBank) -> dict[str, float]:
    """Conventional single-image PCE of every id (the ``n = 1`` reference column)."""
    out = {}
    for i in ids:
        img, res, _ = bank.entry(i)
        _check_shape(img, reference, i)
        out[i] = pce(res, reference, img).pce
    return out


def _check_shape(img, reference, what):
    if img.shape != reference.shape:
        raise DimensionMismatchError(
            f"{what} is {img.shape[0]}x{img.shape[1]} but the reference fingerprint is "
            f"{reference.shape[0]}x{reference.shape[1]}"
        )


def score_subsets(subsets: Sequence[tuple[str, ...]], reference: Fingerprint, bank: ResidueBank,
                  threads: int = 1) -> list[SubsetRecord]:
    def one(item):
        k, members = item
        try:
            fk = bank.fingerprint(members)
            _check_shape(fk, reference, f"subset {k}")
            return SubsetRecord(k=k, members=tuple(members), score=pce(fk, reference).pce)
        except CaseError as exc:
            raise CaseError(f"subset {k}: {exc}") from exc

    items = list(enumerate(subsets, start=1))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, items))
    return [one(it) for it in items]


def fuse(records: Sequence[SubsetRecord], reference: Fingerprint, bank: ResidueBank,
         tau: float = DEFAULT_TAU, case_id: int = 1, n: int = 0) -> FusionSet | None:
    """Pool members of all subsets with ``score >= tau`` and score the pooled fingerprint."""
    hits = [r for r in records if r.score >= tau]
    if not hits:
        return None
    members = sorted({m for r in hits for m in r.members})
    fused_pce = pce(bank.fingerprint(members), reference).pce
    return FusionSet(case_id=case_id, n=n, members=tuple(members), fused_pce=fused_pce,
                     hits=tuple(r.k for r in hits))


def run_case(ev: EvidenceSet, reference: Fingerprint, n: int, K: int = DEFAULT_K,
             tau: float = DEFAULT_TAU, seed: int = 0, bank: ResidueBank | None = None,
             threads: int | None = None, prefilter: bool = False) -> CaseResult:
    """Subset scoring and fusion for one case and one subset size.

    With ``prefilter``, images individually matching the reference
    (single-image PCE >= ``tau``) are removed from the evidence first.
    """
    bank = bank if bank is not None else ResidueBank(sigma0=reference.sigma0)
    threads = default_threads() if threads is None else threads
    ids = ev.ids
    bank.prefetch(ids, threads)
    excluded: tuple[str, ...] = ()
    if prefilter:
        single = per_image_pce(ids, reference, bank)
        excluded = tuple(i for i in ids if single[i] >= tau)
        ids = [i for i in ids if single[i] < tau]
    subsets, truncated = sample_subsets(ids, n, K, seed)
    records = score_subsets(subsets, reference, bank, threads)
    fusion = fuse(records, reference, bank, tau, case_id=ev.case_id, n=n)
    return CaseResult(case_id=ev.case_id, n=n, records=records, fusion=fusion,
                      truncated=truncated, excluded=excluded)


def case_metrics(ev: EvidenceSet, fusion: FusionSet | None) -> CaseMetrics:
    """Recall, precision and selection of one fusion set.

    Recall counts query-camera members over ``|S_alpha|``; selection is only
    defined when the evidence includes unknown-camera images.
    """
    n_alpha, n_total = len(ev.alpha), len(ev.ids)
    if fusion is None or fusion.empty:
        return CaseMetrics(fused_size=0, fused_query=0, n_alpha=n_alpha, n_total=n_total)
    alpha = set(ev.alpha)
    fused_size = len(fusion.members)
    fused_query = sum(1 for m in fusion.members if m in alpha)
    return CaseMetrics(
        fused_size=fused_size, fused_query=fused_query, n_alpha=n_alpha, n_total=n_total,
        recall_pct=_pct(fused_query, n_alpha),
        precision_pct=_pct(fused_query, fused_size),
        selection_pct=_pct(fused_size, n_total) if ev.beta else None,
    )


def total_metrics(outcomes: Sequence[tuple[EvidenceSet, FusionSet | None]]) -> TotalMetrics:
    """Totals over the cases that produced a fusion set."""
    cases, fused_size, fq, n_a, n_t = [], 0, 0, 0, 0
    for ev, fs in outcomes:
        if fs is None or fs.empty:
            continue
        m = case_metrics(ev, fs)
        cases.append(ev.case_id)
        fused_size += m.fused_size
        fq += m.fused_query
        n_a += m.n_alpha
        n_t += m.n_total
    return TotalMetrics(
        cases=cases, fused_size=fused_size, fused_query=fq, n_alpha=n_a, n_total=n_t,
        total_precision_pct=_pct(fq, fused_size), total_recall_pct=_pct(fq, n_a),
        selection_pct=_pct(fused_size, n_t), average_fused=(fused_size / len(cases)) if cases else None,
    )


def intersect_fusion_sets(fusion_sets: Sequence[FusionSet | None]) -> tuple[str, ...] | None:
    """Members common to all present fusion sets; ``None`` if fewer than two exist."""
    present = [fs for fs in fusion_sets if fs is not None and not fs.empty]
    if len(present) < 2:
        return None
    common = set(present[0].members)
    for fs in present[1:]:
        common &= set(fs.members)
    return tuple(sorted(common))


def intersection_precision(ev: EvidenceSet, members: Sequence[str] | None) -> float | None:
    if not members:
        return None
    alpha = set(ev.alpha)
    return _pct(sum(1 for m in members if m in alpha), len(members))


def sweep_K(cases: Sequence[tuple[EvidenceSet, Fingerprint]], n_values: Sequence[int],
            K_values: Sequence[int], tau: float = DEFAULT_TAU, seed: int = 0,
            bank: ResidueBank | None = None, threads: int | None = None) -> list[dict]:
    """Fusion-set statistics against the number of subsets ``K``.

    Subsets are drawn once for ``max(K_values)``; each smaller ``K`` reuses
    the prefix of that draw. The metric is total recall when no case has
    unknown-camera images, total precision otherwise.
    """
    K_values = list(K_values)
    if K_values != sorted(K_values) or not K_values:
        raise DataError("K values must be non-empty and ascending")
    threads = default_threads() if threads is None else threads
    homogeneous = all(not ev.beta for ev, _ in cases)
    full = {}
    for ev, ref in cases:
        b = bank if bank is not None else ResidueBank(sigma0=ref.sigma0)
        for n in n_values:
            full[(ev.case_id, n)] = run_case(ev, ref, n, K_values[-1], tau, seed, b, threads).records
    rows = []
    for K in K_values:
        for n in n_values:
            outcomes = []
            for ev, _ in cases:
                hits = [r for r in full[(ev.case_id, n)][:K] if r.score >= tau]
                members = tuple(sorted({m for r in hits for m in r.members}))
                fs = FusionSet(case_id=ev.case_id, n=n, members=members, fused_pce=None) if hits else None
                outcomes.append((ev, fs))
            tot = total_metrics(outcomes)
            metric = tot.total_recall_pct if homogeneous else tot.total_precision_pct
            rows.append({
                "K": K, "n": n,
                "fused_size": tot.average_fused,
                "metric": "total_recall" if homogeneous else "total_precision",
                "metric_pct": metric,
                "metric_value": (f"{tot.fused_query}/{tot.n_alpha if homogeneous else tot.fused_size}"
                                 if tot.cases else None),
                "cases": len(tot.cases),
            })
    return rows
