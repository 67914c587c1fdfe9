"""Procedural desk-scale scenes: a textured background plus 1-3 colored
filled shapes (ellipse / rectangle / triangle) with per-shape instance masks.

Shapes are mutually separated, at least minimally thick (so spaced click
sampling never degenerates), and their mean color stays well away from the
background's.
"""

import numpy as np

from . import kernels
from .sampling import InstanceScene

SIZE = 64
MIN_COLOR_DIST_BG = 60.0
MIN_COLOR_DIST_SHAPES = 50.0
MIN_AREA = 40
MIN_THICKNESS = 6.0  # max inscribed distance-to-boundary


def _bilinear_upsample(coarse, out_h, out_w):
    ch, cw = coarse.shape[:2]
    ys = np.linspace(0, ch - 1, out_h)
    xs = np.linspace(0, cw - 1, out_w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, ch - 1)
    x1 = np.minimum(x0 + 1, cw - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    a = coarse[y0][:, x0]
    b = coarse[y0][:, x1]
    c = coarse[y1][:, x0]
    d = coarse[y1][:, x1]
    return a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx + c * fy * (1 - fx) + d * fy * fx


def _pick_color(rng, taken):
    for _ in range(200):
        color = rng.uniform(20, 236, 3)
        dists = [np.linalg.norm(color - t) for t in taken]
        if not dists:
            return color
        if dists[0] >= MIN_COLOR_DIST_BG and all(d >= MIN_COLOR_DIST_SHAPES for d in dists[1:]):
            return color
    raise RuntimeError("could not find a separated color")


def _shape_mask(rng, size):
    rr, cc = np.mgrid[0:size, 0:size]
    kind = int(rng.integers(0, 3))
    if kind == 0:  # ellipse
        r0, c0 = rng.uniform(12, size - 12, 2)
        a, b = rng.uniform(7, 15, 2)
        mask = ((rr - r0) / a) ** 2 + ((cc - c0) / b) ** 2 <= 1.0
    elif kind == 1:  # rectangle
        h, w = rng.integers(13, 24, 2)
        r0 = int(rng.integers(1, size - h - 1))
        c0 = int(rng.integers(1, size - w - 1))
        mask = np.zeros((size, size), bool)
        mask[r0 : r0 + h, c0 : c0 + w] = True
    else:  # triangle via half-plane tests
        base_r, base_c = rng.uniform(6, size - 30, 2)
        pts = np.stack([base_r, base_c]) + rng.uniform(0, 26, (3, 2))
        mask = np.ones((size, size), bool)
        for i in range(3):
            p, q, o = pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]
            edge = q - p
            side = edge[0] * (cc - p[1]) - edge[1] * (rr - p[0])
            ref = edge[0] * (o[1] - p[1]) - edge[1] * (o[0] - p[0])
            mask &= (side * ref) >= 0
    return mask


def _acceptable(mask, placed):
    if mask.sum() < MIN_AREA:
        return False
    if np.sqrt(kernels.edt_sq(~mask)[mask].max()) < MIN_THICKNESS:
        return False
    if placed.any():
        # keep >2 px of clearance so instances stay clearly separate
        if (kernels.edt_sq(placed)[mask] <= 4).any():
            return False
    return True


def synth_scene(seed: int, size: int = SIZE) -> InstanceScene:
    """Deterministic random scene with disjoint instance masks."""
    rng = np.random.default_rng(np.random.SeedSequence([0x5CE4E, seed]))
    bg_color = rng.uniform(30, 226, 3)
    noise = _bilinear_upsample(rng.normal(0.0, 1.0, (9, 9, 3)), size, size)
    image = np.clip(bg_color + noise * 14.0, 0, 255)

    n_shapes = int(rng.integers(1, 4))
    colors_taken = [bg_color]
    placed = np.zeros((size, size), bool)
    masks = []
    attempts = 0
    while len(masks) < n_shapes and attempts < 80:
        attempts += 1
        mask = _shape_mask(rng, size)
        if not _acceptable(mask, placed):
            continue
        color = _pick_color(rng, colors_taken)
        colors_taken.append(color)
        image[mask] = np.clip(color + rng.normal(0, 5.0, (int(mask.sum()), 3)), 0, 255)
        placed |= mask
        masks.append(mask.astype(np.uint8))
    if not masks:  # guaranteed fallback: a centered rectangle always fits
        mask = np.zeros((size, size), bool)
        mask[size // 4 : size // 4 + 16, size // 4 : size // 4 + 16] = True
        color = _pick_color(rng, colors_taken)
        image[mask] = np.clip(color + rng.normal(0, 5.0, (int(mask.sum()), 3)), 0, 255)
        masks.append(mask.astype(np.uint8))
    return InstanceScene(image.astype(np.uint8), masks)
