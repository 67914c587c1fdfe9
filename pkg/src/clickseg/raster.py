"""Raster types, PNG I/O, and the intersection-over-union metric.

Array conventions used throughout the package:

* image: uint8 array of shape (H, W, 3), channel order RGB
* mask:  uint8 array of shape (H, W) with values in {0, 1}
* probability map: float64 array of shape (H, W) with values in [0, 1]
"""

import os

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError


class RasterError(Exception):
    """Base class for raster decode problems."""


class UnsupportedFormatError(RasterError):
    """File decodes, but is not one of the supported raster formats."""


class CorruptDataError(RasterError):
    """File cannot be decoded at all."""


_SUPPORTED_FORMATS = {"PNG", "PPM"}  # Pillow reports PGM/PBM as PPM


def ensure_image(image) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"expected uint8 (H, W, 3) image, got {image.dtype} {image.shape}")
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return image


def ensure_mask(mask, shape=None) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype == bool:
        mask = mask.astype(np.uint8)
    if mask.ndim != 2 or mask.dtype != np.uint8:
        raise ValueError(f"expected uint8 (H, W) mask, got {mask.dtype} {mask.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask values must be 0 or 1")
    if shape is not None and mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} does not match {tuple(shape)}")
    return mask


def ensure_prob_map(q, shape=None) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError(f"expected (H, W) probability map, got shape {q.shape}")
    if not np.isfinite(q).all():
        raise ValueError("probability map contains non-finite values")
    if q.min() < 0.0 or q.max() > 1.0:
        raise ValueError("probability map values must lie in [0, 1]")
    if shape is not None and q.shape != tuple(shape):
        raise ValueError(f"probability map shape {q.shape} does not match {tuple(shape)}")
    return q


def _open_raster(path: str) -> PILImage.Image:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        img = PILImage.open(path)
    except UnidentifiedImageError as exc:
        raise CorruptDataError(f"{path}: not a decodable raster file") from exc
    if img.format not in _SUPPORTED_FORMATS:
        raise UnsupportedFormatError(f"{path}: format {img.format!r} not supported (want PNG or PPM/PGM)")
    try:
        img.load()
    except OSError as exc:
        raise CorruptDataError(f"{path}: truncated or corrupt data") from exc
    return img


def load_image(path: str) -> np.ndarray:
    """Decode a PNG (or PPM/PGM) file into a uint8 RGB image array."""
    img = _open_raster(path)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_image(image, path: str) -> None:
    image = ensure_image(image)
    PILImage.fromarray(image, mode="RGB").save(path, format="PNG")


def load_mask(path: str) -> np.ndarray:
    """Decode a mask PNG written by save_mask; bytes >127 count as object."""
    img = _open_raster(path)
    arr = np.asarray(img.convert("L"))
    return (arr > 127).astype(np.uint8)


def save_mask(mask, path: str) -> None:
    """Write a binary mask as a single-channel PNG with 0/255 coding."""
    mask = ensure_mask(mask)
    PILImage.fromarray(mask * np.uint8(255), mode="L").save(path, format="PNG")


def iou(a, b) -> float:
    """Intersection over union of the object pixels of two masks.

    Both masks empty counts as a perfect match (1.0) rather than 0/0.
    """
    a = ensure_mask(a)
    b = ensure_mask(b, shape=a.shape)
    a = a.astype(bool)
    b = b.astype(bool)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union
