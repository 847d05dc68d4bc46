"""Source camera attribution of Patch-Match anonymized image sets.

Modules: ``imgcore`` (IO, trimming, PSNR/MPR), ``denoise`` (wavelet
residues), ``fingerprint`` (MLE estimate and file format), ``pce``,
``patchmatch`` (the attack), ``fusion`` (subset + fusion-set attribution),
``simcam`` (synthetic camera oracle) and ``cli``.
"""
__version__ = "0.1.0"

from .errors import DataError  # noqa: E402
from .fingerprint import (  # noqa: E402
    Fingerprint, estimate_fingerprint, generate_fingerprint, load_fingerprint, save_fingerprint,
)
from .pce import pce, pce_of_set  # noqa: E402
from .patchmatch import anonymize, compute_nnf  # noqa: E402
from .fusion import EvidenceSet, ResidueBank, run_case  # noqa: E402

__all__ = [
    "DataError", "Fingerprint", "estimate_fingerprint", "generate_fingerprint",
    "load_fingerprint", "save_fingerprint", "pce", "pce_of_set", "anonymize", "compute_nnf",
    "EvidenceSet", "ResidueBank", "run_case",
]
