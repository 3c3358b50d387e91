"""Grayscale image input and output.

Images travel through the package as 2-D float64 arrays with intensities
in [0, 1].  On disk they are PNG or TIFF at 8 or 16 bits per sample; color
inputs are collapsed to gray by the unweighted channel mean.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

__all__ = ["load_image", "save_image", "bottom_crop"]


def load_image(path) -> np.ndarray:
    """Read an image file and return it as float64 in [0, 1].

    8-bit samples are divided by 255, 16-bit samples by 65535.  RGB images
    are averaged across channels (equal weights) before scaling.  Raises
    OSError if the file cannot be read and ValueError for sample formats
    outside 8/16-bit integer grayscale or RGB.
    """
    with Image.open(path) as im:
        mode = im.mode
        if mode == "P":
            im = im.convert("RGB")
            mode = "RGB"
        if mode == "L":
            arr = np.asarray(im, dtype=np.float64) / 255.0
        elif mode in ("I;16", "I;16B", "I;16L"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        elif mode == "I":
            arr = np.asarray(im, dtype=np.float64)
            if arr.min() < 0 or arr.max() > 65535:
                raise ValueError(f"unsupported sample range in {path!r}")
            arr = arr / 65535.0
        elif mode in ("RGB", "RGBA"):
            rgb = np.asarray(im, dtype=np.float64)[..., :3]
            arr = rgb.mean(axis=2) / 255.0
        else:
            raise ValueError(f"unsupported image mode {mode!r} in {path!r}")
    if arr.ndim != 2:
        raise ValueError(f"expected a single image plane, got shape {arr.shape}")
    return arr


def save_image(img: np.ndarray, path, bit_depth: int = 8) -> None:
    """Write a [0, 1] float image as 8- or 16-bit grayscale.

    Values are clamped to [0, 1] and quantized by round-half-up, so 0.5
    maps to 128 at 8 bits.  The container format follows the file suffix
    (PNG or TIFF both round-trip losslessly at either depth).
    """
    if bit_depth not in (8, 16):
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    peak = 255.0 if bit_depth == 8 else 65535.0
    codes = np.floor(np.clip(img, 0.0, 1.0) * peak + 0.5)
    if bit_depth == 8:
        Image.fromarray(codes.astype(np.uint8)).save(path)
    else:
        Image.fromarray(codes.astype(np.uint16)).save(path)


def bottom_crop(img: np.ndarray, fraction: float) -> np.ndarray:
    """Remove the bottom ``floor(H * fraction)`` rows (info banner strip).

    fraction must lie in [0, 1); fraction 0 returns the image unchanged
    (as a copy).  SEM tools typically stamp a status bar along the bottom
    edge, so e.g. fraction=0.0667 trims 64 rows from a 960-row frame.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    img = np.asarray(img, dtype=np.float64)
    rows = int(np.floor(img.shape[0] * fraction))
    return img[: img.shape[0] - rows].copy()
