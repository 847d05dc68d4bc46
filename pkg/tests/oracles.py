"""Brute-force reference implementations used only by the tests."""
import numpy as np
from numba import njit


@njit(cache=True)
def _ncc_loops(a0, b0, norm):
    R, C = a0.shape
    out = np.zeros((R, C))
    for dr in range(R):
        for dc in range(C):
            s = 0.0
            for i in range(R):
                for j in range(C):
                    s += a0[(i + dr) % R, (j + dc) % C] * b0[i, j]
            out[dr, dc] = s / norm
    return out


def ncc_direct(a, b):
    """Circular normalized cross-correlation by explicit quadruple loop."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a0 = a - a.mean()
    b0 = b - b.mean()
    norm = np.sqrt((a0 ** 2).sum()) * np.sqrt((b0 ** 2).sum())
    return _ncc_loops(a0, b0, norm)


def pce_direct(surface, exclusion=11):
    """PCE at the zero-shift cell, written out cell by cell."""
    R, C = surface.shape
    half = exclusion // 2
    total, count = 0.0, 0
    for r in range(R):
        for c in range(C):
            dr = min(r, R - r)
            dc = min(c, C - c)
            if dr <= half and dc <= half:
                continue
            total += surface[r, c] ** 2
            count += 1
    peak = surface[0, 0]
    return np.sign(peak) * peak ** 2 / (total / count)


@njit(cache=True)
def exhaustive_nnf_costs(img, p, m):
    """Best SSD of every patch over all targets at Chebyshev distance >= m."""
    h, w = img.shape
    ny, nx = h - p + 1, w - p + 1
    best = np.full((ny, nx), np.inf)
    for ay in range(ny):
        for ax in range(nx):
            b = np.inf
            for by in range(ny):
                for bx in range(nx):
                    if max(abs(by - ay), abs(bx - ax)) < m:
                        continue
                    s = 0.0
                    for i in range(p):
                        for j in range(p):
                            d = img[ay + i, ax + j] - img[by + i, bx + j]
                            s += d * d
                    if s < b:
                        b = s
            best[ay, ax] = b
    return best


def mle_scalar(residues, images):
    """Elementwise MLE estimate with explicit scalar loops (no post-processing)."""
    R, C = images[0].shape
    out = np.zeros((R, C))
    for r in range(R):
        for c in range(C):
            num = sum(float(w[r, c]) * float(l[r, c]) for w, l in zip(residues, images))
            den = sum(float(l[r, c]) ** 2 for l in images)
            out[r, c] = num / den if den else 0.0
    return out
