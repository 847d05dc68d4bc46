"""Freeze 256x256 gray crops of scikit-image sample photographs as PNG fixtures.

Run once; the PNGs are committed so the tests do not need scikit-image.
"""
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

NAMES = ["camera", "astronaut", "coffee", "chelsea", "coins", "moon", "rocket",
         "immunohistochemistry", "brick", "grass"]
SIZE = 256


def gray(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.299, 0.587, 0.114])
    if img.max() <= 1.0:
        img = img * 255.0
    return img


def main(out=Path(__file__).parent / "natural"):
    out.mkdir(exist_ok=True)
    for name in NAMES:
        g = gray(getattr(data, name)())
        r0 = (g.shape[0] - SIZE) // 2
        c0 = (g.shape[1] - SIZE) // 2
        crop = g[r0:r0 + SIZE, c0:c0 + SIZE]
        Image.fromarray(np.clip(np.floor(crop + 0.5), 0, 255).astype(np.uint8)).save(out / f"{name}.png")


if __name__ == "__main__":
    main()
