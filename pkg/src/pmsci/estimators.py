"""scikit-learn style wrappers around the functional API.

``X`` is always a collection of equally sized gray images: a 3-D array
stacked along axis 0 or a list of 2-D arrays.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .denoise import DEFAULT_SIGMA0, MIN_SIZE, extract_residue
from .fingerprint import Fingerprint, estimate_fingerprint
from .fusion import (
    DEFAULT_K, EvidenceSet, ResidueBank, case_metrics, run_case,
)
from .patchmatch import (
    DEFAULT_INIT_SAMPLES, DEFAULT_ITERATIONS, DEFAULT_MIN_OFFSET, DEFAULT_PATCH,
    DEFAULT_SEARCH_SAMPLES, anonymize,
)
from .pce import DEFAULT_TAU, pce
from .validation import check_image_stack, check_positive


class ResidueExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping images to their wavelet noise residues."""

    def __init__(self, sigma0: float = DEFAULT_SIGMA0):
        self.sigma0 = sigma0

    def fit(self, X, y=None):
        check_positive(self.sigma0, "sigma0")
        check_image_stack(X, MIN_SIZE)
        return self

    def transform(self, X):
        images = check_image_stack(X, MIN_SIZE)
        return np.stack([extract_residue(im, self.sigma0) for im in images])


class CameraFingerprint(BaseEstimator):
    """Fingerprint of one camera, fitted from its pristine images.

    After ``fit``, ``decision_function`` returns the per-image PCE of new
    images and ``predict`` flags those reaching ``tau``.

    Attributes
    ----------
    fingerprint_ : Fingerprint
    n_images_ : int
    """

    def __init__(self, sigma0: float = DEFAULT_SIGMA0, zero_mean: bool = True,
                 tau: float = DEFAULT_TAU, label: str = ""):
        self.sigma0 = sigma0
        self.zero_mean = zero_mean
        self.tau = tau
        self.label = label

    def fit(self, X, y=None):
        images = check_image_stack(X, MIN_SIZE)
        self.fingerprint_ = estimate_fingerprint(images, check_positive(self.sigma0, "sigma0"),
                                                 postprocess=self.zero_mean, label=self.label)
        self.n_images_ = len(images)
        return self

    @classmethod
    def from_fingerprint(cls, fp: Fingerprint, tau: float = DEFAULT_TAU) -> "CameraFingerprint":
        est = cls(sigma0=fp.sigma0, zero_mean=fp.zero_mean, tau=tau, label=fp.label)
        est.fingerprint_ = fp
        est.n_images_ = fp.n
        return est

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "fingerprint_")
        images = check_image_stack(X, MIN_SIZE)
        fp = self.fingerprint_
        return np.array([pce(extract_residue(im, fp.sigma0), fp, im).pce for im in images])

    def predict(self, X) -> np.ndarray:
        return self.decision_function(X) >= self.tau

    def score_set(self, X) -> float:
        """PCE between the joint fingerprint of ``X`` and the fitted one."""
        check_is_fitted(self, "fingerprint_")
        fs = estimate_fingerprint(check_image_stack(X, MIN_SIZE), self.fingerprint_.sigma0)
        return pce(fs, self.fingerprint_).pce


class PatchMatchAnonymizer(TransformerMixin, BaseEstimator):
    """Applies the attack; image ``i`` of a batch uses random stream ``i``.

    ``reports_`` holds the :class:`AttackReport` of the last transform.
    """

    def __init__(self, patch_size: int = DEFAULT_PATCH, iterations: int = DEFAULT_ITERATIONS,
                 min_offset: int = DEFAULT_MIN_OFFSET, seed: int = 0,
                 init_samples: int = DEFAULT_INIT_SAMPLES,
                 search_samples: int = DEFAULT_SEARCH_SAMPLES):
        self.patch_size = patch_size
        self.iterations = iterations
        self.min_offset = min_offset
        self.seed = seed
        self.init_samples = init_samples
        self.search_samples = search_samples

    def fit(self, X, y=None):
        check_image_stack(X)
        return self

    def transform(self, X):
        images = check_image_stack(X)
        out, reports = [], []
        for i, im in enumerate(images):
            pm, rep = anonymize(im, self.patch_size, self.iterations, self.min_offset,
                                self.seed, stream=i, init_samples=self.init_samples,
                                search_samples=self.search_samples)
            out.append(pm)
            reports.append(rep)
        self.reports_ = reports
        return np.stack(out)


class SubsetFusionAttributor(ClusterMixin, BaseEstimator):
    """Subset + fusion attribution of an image set to a reference camera.

    ``fit(X)`` scores ``K`` random ``n``-subsets of ``X`` against
    ``reference`` and pools the above-threshold ones. ``labels_`` is 1 for
    fusion-set members and 0 otherwise. If ``y`` is given (1 = query
    camera), ``metrics_`` holds recall, precision and selection.

    Attributes
    ----------
    records_ : list of SubsetRecord
    fusion_set_ : FusionSet or None
    labels_ : ndarray of int
    """

    def __init__(self, reference: Fingerprint | None = None, n: int = 10, K: int = DEFAULT_K,
                 tau: float = DEFAULT_TAU, seed: int = 0):
        self.reference = reference
        self.n = n
        self.K = K
        self.tau = tau
        self.seed = seed

    def fit(self, X, y=None):
        if self.reference is None:
            raise ValueError("a reference fingerprint is required")
        images = check_image_stack(X, MIN_SIZE)
        ids = [f"{i:06d}" for i in range(len(images))]
        bank = ResidueBank(dict(zip(ids, images)), sigma0=self.reference.sigma0)
        if y is None:
            ev = EvidenceSet(ids, [])
        else:
            y = np.asarray(y).astype(bool)
            if y.shape != (len(ids),):
                raise ValueError("y must have one entry per image")
            ev = EvidenceSet([i for i, t in zip(ids, y) if t], [i for i, t in zip(ids, y) if not t])
        # keep subset draws independent of the label split
        ev_all = EvidenceSet(ids, [], ev.case_id)
        res = run_case(ev_all, self.reference, self.n, self.K, self.tau, self.seed, bank, threads=1)
        self.records_ = res.records
        self.fusion_set_ = res.fusion
        self.truncated_ = res.truncated
        members = set(res.fusion.members) if res.fusion is not None else set()
        self.labels_ = np.array([int(i in members) for i in ids])
        self.metrics_ = case_metrics(ev, res.fusion) if y is not None else None
        return self

    @property
    def fused_pce_(self) -> float | None:
        check_is_fitted(self, "records_")
        return None if self.fusion_set_ is None else self.fusion_set_.fused_pce
