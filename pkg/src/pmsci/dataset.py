"""On-disk evidence layout: list files, the synthetic tree and dataset discovery.

A camera folder holds ``out-pm-before-<name>.<ext>`` (trimmed gray original)
and ``out-pm-after-<name>.<ext>`` (attacked) for every capture, plus
optional list files::

    fingerprint_list.txt    before-images used to build the reference
    test_list.txt           after-images forming the query evidence
    unknown_mix_list.txt    test images as an unknown camera: half PM, half pristine

The synthetic tree written by :func:`simulate_dataset` follows the same
layout, so one harness serves both it and the released dataset.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import imgcore, patchmatch, simcam
from .errors import DataError
from .fingerprint import generate_fingerprint, save_fingerprint

IMAGE_SUFFIXES = {".png", ".pgm", ".jpg", ".jpeg", ".ppm"}
BEFORE = "out-pm-before-"
AFTER = "out-pm-after-"
N_FINGERPRINT = 25


def read_list_file(path) -> list[Path]:
    """Paths listed one per line; relative entries resolve against the list's folder."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: list file not found") from exc
    base = path.parent
    out = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        out.append(p if p.is_absolute() else base / p)
    return out


def write_list_file(path, entries: Iterable) -> None:
    path = Path(path)
    path.write_text("".join(f"{e}\n" for e in entries), encoding="utf-8")


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def expand_inputs(items: Sequence) -> list[Path]:
    """Expand image files, ``.txt`` list files and directories, keeping order."""
    out: list[Path] = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            out.extend(list_images(p))
        elif p.suffix.lower() == ".txt":
            out.extend(read_list_file(p))
        else:
            out.append(p)
    return out


def pm_names(name: str, suffix: str = ".png") -> tuple[str, str]:
    return f"{BEFORE}{name}{suffix}", f"{AFTER}{name}{suffix}"


# -- synthetic tree ---------------------------------------------------------

def camera_seed(seed: int, index: int) -> int:
    """Seed of camera ``index`` in a tree simulated with ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def synthesize_captures(cam: simcam.SynthCamera, count: int, patch: int = patchmatch.DEFAULT_PATCH,
                        threads: int = 1, start: int = 0, attack: bool = True):
    """Captures ``start .. start+count-1`` of ``cam`` as (before, after, report) triples.

    ``before`` is the trimmed original, ``after`` the attacked image; the
    attack seed is the camera seed and capture ``i`` uses random stream ``i``.
    With ``attack=False`` only ``before`` is computed and the rest is None.
    """
    def one(i):
        scene = simcam.synth_scene(*cam.shape, seed=cam.seed * 100_003 + i)
        raw = simcam.capture(cam, scene, seed=i)
        before = imgcore.trim_border(raw, patch - 1)
        if not attack:
            return before, None, None
        after, report = patchmatch.anonymize(raw, patch=patch, seed=cam.seed, stream=i)
        return before, after, report

    idx = range(start, start + count)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, idx))
    return [one(i) for i in idx]


def simulate_dataset(out, cameras: int = 2, images: int = 55, size: int = 256, seed: int = 0,
                     n_fingerprint: int = N_FINGERPRINT, patch: int = patchmatch.DEFAULT_PATCH,
                     threads: int = 1) -> dict:
    """Write a synthetic evidence tree and return its manifest.

    Every capture gets a before/after pair; the first ``n_fingerprint``
    before-images build ``fingerprint.bin``, the rest form the test list.
    """
    if cameras < 1:
        raise DataError("at least one camera is required")
    if images <= n_fingerprint:
        raise DataError(f"need more than {n_fingerprint} images per camera, got {images}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": seed, "size": size, "images": images, "n_fingerprint": n_fingerprint,
                "patch": patch, "camera_model": {
                    "strength": simcam.DEFAULT_STRENGTH, "noise_std": simcam.DEFAULT_NOISE_STD,
                    "texture": simcam.DEFAULT_TEXTURE, "texture_scale": simcam.DEFAULT_TEXTURE_SCALE,
                }, "cameras": []}
    for c in range(cameras):
        label = f"cam{c + 1:02d}"
        cam_seed = camera_seed(seed, c)
        cam = simcam.make_camera(size, size, seed=cam_seed)
        folder = out / label
        folder.mkdir(exist_ok=True)
        pairs = synthesize_captures(cam, images, patch, threads)

        names, reports = [], {}
        for i, (before, after, rep) in enumerate(pairs):
            name = f"{label}_{i:04d}"
            b, a = pm_names(name)
            imgcore.save_image(before, folder / b)
            imgcore.save_image(after, folder / a)
            names.append(name)
            reports[a] = rep.to_dict()
        fp_names = names[:n_fingerprint]
        test_names = names[n_fingerprint:]
        write_list_file(folder / "fingerprint_list.txt", [pm_names(n)[0] for n in fp_names])
        write_list_file(folder / "test_list.txt", [pm_names(n)[1] for n in test_names])
        half = len(test_names) // 2
        mix = [pm_names(n)[1] for n in test_names[:half]] + [pm_names(n)[0] for n in test_names[half:]]
        write_list_file(folder / "unknown_mix_list.txt", mix)
        fp = generate_fingerprint([folder / pm_names(n)[0] for n in fp_names], label=label)
        save_fingerprint(fp, folder / "fingerprint.bin")
        (folder / "attack_reports.json").write_text(json.dumps(reports, indent=2) + "\n")
        manifest["cameras"].append({"label": label, "seed": cam_seed, "folder": label,
                                    "fingerprint_images": len(fp_names),
                                    "test_images": len(test_names)})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


# -- discovery --------------------------------------------------------------

@dataclass
class CameraFolder:
    label: str
    folder: Path
    fingerprint_images: list[Path]
    test_before: list[Path]
    test_after: list[Path]
    fingerprint_file: Path | None = None


def _pairs(folder: Path) -> dict[str, dict[str, Path]]:
    pairs: dict[str, dict[str, Path]] = {}
    for p in list_images(folder):
        for tag, prefix in (("before", BEFORE), ("after", AFTER)):
            if p.name.startswith(prefix):
                pairs.setdefault(p.name[len(prefix):], {})[tag] = p
    return pairs


def discover_camera(folder, n_fingerprint: int = N_FINGERPRINT) -> CameraFolder:
    """Read one camera folder, honouring list files when present."""
    folder = Path(folder)
    pairs = _pairs(folder)
    complete = {k: v for k, v in sorted(pairs.items()) if len(v) == 2}
    fp_list = folder / "fingerprint_list.txt"
    test_list = folder / "test_list.txt"
    if fp_list.exists():
        fp_images = read_list_file(fp_list)
    else:
        fp_images = [v["before"] for v in list(complete.values())[:n_fingerprint]]
    if test_list.exists():
        after = read_list_file(test_list)
    else:
        used = {p.name[len(BEFORE):] for p in fp_images if p.name.startswith(BEFORE)}
        after = [v["after"] for k, v in complete.items() if k not in used]
    before = []
    for p in after:
        key = p.name[len(AFTER):] if p.name.startswith(AFTER) else None
        if key is None or key not in complete:
            raise DataError(f"{p}: no matching {BEFORE} file")
        before.append(complete[key]["before"])
    if not fp_images or not after:
        raise DataError(f"{folder}: no usable before/after image pairs")
    fp_file = folder / "fingerprint.bin"
    return CameraFolder(label=folder.name, folder=folder, fingerprint_images=fp_images,
                        test_before=before, test_after=after,
                        fingerprint_file=fp_file if fp_file.exists() else None)


def discover_dataset(root, n_fingerprint: int = N_FINGERPRINT) -> list[CameraFolder]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    cams = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        if any(q.name.startswith(AFTER) for q in sub.iterdir()):
            cams.append(discover_camera(sub, n_fingerprint))
    if not cams:
        raise DataError(f"{root}: no camera folders with {AFTER}* files")
    return cams
