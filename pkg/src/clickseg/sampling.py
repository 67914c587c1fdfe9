"""Synthesized user interactions: positive clicks inside the object and
three negative-click strategies, mixed uniformly into training pairs.

Negative strategies: (1) random picks in the margin band around the object,
(2) random picks on the other object instances, (3) greedy farthest-point
placements that spread clicks around the object outline.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .clicks import Click, ClickSet
from .raster import ensure_image, ensure_mask


@dataclass
class SamplingParams:
    d: int = 40
    n_pos: int = 5
    n_neg1: int = 10
    n_neg2: int = 5
    n_neg3: int = 10
    n_pairs: int = 15
    d_step: int = 10
    d_margin: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.d <= 0:
            raise ValueError("d must be positive")
        if self.n_pos < 1:
            raise ValueError("n_pos must be at least 1")
        for name in ("n_neg1", "n_neg2", "n_neg3", "n_pairs"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.d_step < 1:
            raise ValueError("d_step must be at least 1")
        if self.d_margin < 0:
            raise ValueError("d_margin must be non-negative")


@dataclass
class InstanceScene:
    """An image plus pairwise-disjoint nonempty instance masks."""

    image: np.ndarray
    instances: list

    def __post_init__(self):
        self.image = ensure_image(self.image)
        shape = self.image.shape[:2]
        self.instances = [ensure_mask(m, shape=shape) for m in self.instances]
        taken = np.zeros(shape, dtype=np.uint8)
        for i, m in enumerate(self.instances):
            if not m.any():
                raise ValueError(f"instance {i} is empty")
            if (taken & m).any():
                raise ValueError(f"instance {i} overlaps an earlier instance")
            taken |= m


@dataclass
class TrainingPair:
    clicks: ClickSet
    target: np.ndarray
    strategy_used: int
    source_id: str

    def __post_init__(self):
        self.target = ensure_mask(self.target)
        for c in self.clicks.positives:
            if not self.target[c.row, c.col]:
                raise ValueError(f"positive click {c.point} outside target")
        for c in self.clicks.negatives:
            if self.target[c.row, c.col]:
                raise ValueError(f"negative click {c.point} inside target")


def rng_for(seed: int, source_id: str, stream: int = 0) -> np.random.Generator:
    """Private RNG stream per (seed, source id); parallel calls stay independent."""
    digest = hashlib.blake2s(source_id.encode(), digest_size=8).digest()
    return np.random.default_rng(
        np.random.SeedSequence([seed, int.from_bytes(digest, "little"), stream])
    )


def margin_sets(object_mask, d: int):
    """Split the grid into G (object + far background) and its complement Gc.

    Gc is the band of background pixels whose exact Euclidean distance to the
    object is in (0, d); negative clicks of strategies 1 and 3 live there.
    """
    object_mask = ensure_mask(object_mask)
    if not object_mask.any():
        raise ValueError("object mask is empty")
    dist_sq = kernels.edt_sq(object_mask)
    gc = (dist_sq > 0) & (dist_sq < d * d)
    return ~gc, gc


def filter_candidates(region_mask, boundary_dist, d_step: int, d_margin: int, rng, limit=None) -> np.ndarray:
    """Greedy spaced selection over a region, in seeded-random scan order.

    A pixel is kept iff its boundary distance is >= d_margin and it is at
    least d_step away (Euclidean) from every pixel kept before it. Returns an
    (k, 2) array of (row, col); may be empty. `limit` stops the greedy scan
    early; the first `limit` picks are identical to the unlimited run's.
    """
    pix = np.argwhere(region_mask)
    if len(pix) == 0:
        return pix.reshape(0, 2)
    pix = pix[rng.permutation(len(pix))]
    ok_margin = boundary_dist[pix[:, 0], pix[:, 1]] >= d_margin
    pix = pix[ok_margin]
    if d_step <= 1 or len(pix) == 0:
        return pix if limit is None else pix[:limit]
    kept = []
    step_sq = d_step * d_step
    for r, c in pix:
        if all((r - kr) ** 2 + (c - kc) ** 2 >= step_sq for kr, kc in kept):
            kept.append((int(r), int(c)))
            if limit is not None and len(kept) >= limit:
                break
    return np.array(kept, dtype=np.int64).reshape(-1, 2)


def _boundary_dist_inside(mask) -> np.ndarray:
    # distance from inside the region to the nearest outside pixel
    return np.sqrt(kernels.edt_sq(~mask.astype(bool)))


def sample_positive(object_mask, params: SamplingParams, rng, boundary_dist=None) -> list:
    """1..n_pos spaced clicks inside the object; degenerate objects fall back
    to relaxed spacing so a nonempty object always yields at least one click."""
    object_mask = ensure_mask(object_mask)
    if not object_mask.any():
        raise ValueError("object mask is empty")
    n = int(rng.integers(1, params.n_pos + 1))
    bd = boundary_dist if boundary_dist is not None else _boundary_dist_inside(object_mask)
    cands = filter_candidates(object_mask, bd, params.d_step, params.d_margin, rng, limit=n)
    if len(cands) == 0:
        cands = filter_candidates(object_mask, bd, params.d_step, 0, rng, limit=n)
    if len(cands) == 0:
        cands = filter_candidates(object_mask, bd, 1, 0, rng, limit=n)
    return [Click(int(r), int(c), True) for r, c in cands[:n]]


def sample_negative_strategy1(gc_mask, object_mask, params: SamplingParams, rng, dist_to_object=None) -> list:
    """0..n_neg1 spaced clicks in the margin band around the object."""
    n = int(rng.integers(0, params.n_neg1 + 1))
    if n == 0 or not gc_mask.any():
        return []
    if dist_to_object is None:
        dist_to_object = np.sqrt(kernels.edt_sq(object_mask))
    cands = filter_candidates(gc_mask, dist_to_object, params.d_step, params.d_margin, rng, limit=n)
    return [Click(int(r), int(c), False) for r, c in cands[:n]]


def sample_negative_strategy2(scene: InstanceScene, target_index: int, params: SamplingParams, rng, boundary_cache=None) -> list:
    """0..n_neg2 spaced clicks on each non-target instance, concatenated."""
    out = []
    boundary_cache = boundary_cache if boundary_cache is not None else {}
    for i, inst in enumerate(scene.instances):
        if i == target_index:
            continue
        n = int(rng.integers(0, params.n_neg2 + 1))
        if n == 0:
            continue
        if i not in boundary_cache:
            boundary_cache[i] = _boundary_dist_inside(inst)
        cands = filter_candidates(inst, boundary_cache[i], params.d_step, params.d_margin, rng, limit=n)
        out.extend(Click(int(r), int(c), False) for r, c in cands[:n])
    return out


def sample_negative_strategy3(gc_mask, g_mask, params: SamplingParams, rng, g_dist_sq=None) -> list:
    """Greedy outline coverage: first click uniform in the band, then each
    click maximizes the distance to everything already covered (previous
    negatives plus G), ties broken by smallest (row, col)."""
    gc_pix = np.argwhere(gc_mask)
    if len(gc_pix) == 0 or params.n_neg3 == 0:
        return []
    total = min(params.n_neg3, len(gc_pix))
    r0, c0 = gc_pix[int(rng.integers(len(gc_pix)))]
    picked = [(int(r0), int(c0))]
    # distance to G union the picked clicks; a new click only needs a
    # pointwise min against its own distance cone, not a fresh transform
    if g_dist_sq is None:
        g_dist_sq = kernels.edt_sq(g_mask.astype(np.uint8))
    h, w = gc_mask.shape
    rr, cc = np.mgrid[0:h, 0:w]
    dist_sq = np.where(gc_mask, g_dist_sq, -1.0)
    for _ in range(total):
        r, c = picked[-1]
        np.minimum(dist_sq, np.where(gc_mask, (rr - r) ** 2 + (cc - c) ** 2, -1.0), out=dist_sq)
        if len(picked) == total:
            break
        flat = int(np.argmax(dist_sq))  # first max in row-major order = smallest (row, col)
        picked.append(divmod(flat, w))
    return [Click(int(r), int(c), False) for r, c in picked]


def generate_pairs(scene: InstanceScene, target_index: int, params: SamplingParams, source_id: str = "") -> list:
    """n_pairs training pairs for one target instance, each pairing a fresh
    positive sample with one negative strategy drawn uniformly."""
    target = scene.instances[target_index]
    if not target.any():
        raise ValueError("target instance is empty")
    rng = rng_for(params.seed, source_id, target_index)
    g_mask, gc_mask = margin_sets(target, params.d)
    # per-call caches: these transforms are click-independent
    bd_inside = _boundary_dist_inside(target)
    dist_to_target_sq = kernels.edt_sq(target)
    dist_to_target = np.sqrt(dist_to_target_sq)
    g_dist_sq = kernels.edt_sq(g_mask.astype(np.uint8))
    boundary_cache: dict = {}
    pairs = []
    for _ in range(params.n_pairs):
        strategy = int(rng.integers(1, 4))
        positives = sample_positive(target, params, rng, boundary_dist=bd_inside)
        if strategy == 1:
            negatives = sample_negative_strategy1(
                gc_mask, target, params, rng, dist_to_object=dist_to_target
            )
        elif strategy == 2:
            negatives = sample_negative_strategy2(
                scene, target_index, params, rng, boundary_cache=boundary_cache
            )
        else:
            negatives = sample_negative_strategy3(gc_mask, g_mask, params, rng, g_dist_sq=g_dist_sq)
        pairs.append(
            TrainingPair(
                clicks=ClickSet(tuple(positives) + tuple(negatives)),
                target=target,
                strategy_used=strategy,
                source_id=source_id,
            )
        )
    return pairs
