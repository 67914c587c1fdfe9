"""On-disk layouts: scene datasets, deterministic splits, flip augmentation,
and persisted training pairs.

Dataset layout::

    root/manifest.json
    root/images/<id>.png
    root/masks/<id>/<k>.png      one binary PNG per instance

Pair layout::

    out/pairs_manifest.json
    out/images/<source>.png      shared per source scene
    out/masks/<source>_<k>.png   shared per target instance
    out/clicks/<pair>.json       ordered {row, col} arrays per polarity
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .clicks import ClickSet
from .raster import load_image, load_mask, save_image, save_mask
from .sampling import InstanceScene, TrainingPair

MANIFEST_VERSION = 1
SPLITS = ("train", "val", "test")


class DatasetError(Exception):
    """Manifest or dataset content violates the layout contract."""


@dataclass
class SceneRecord:
    scene_id: str
    split: str
    scene: InstanceScene


def write_manifest(root: str, entries) -> None:
    with open(os.path.join(root, "manifest.json"), "w") as f:
        json.dump({"format_version": MANIFEST_VERSION, "entries": list(entries)}, f, indent=2)
        f.write("\n")


def read_manifest(root: str) -> dict:
    path = os.path.join(root, "manifest.json")
    if not os.path.exists(path):
        raise DatasetError(f"no manifest.json under {root}")
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise DatasetError(f"{path}: unsupported format_version {manifest.get('format_version')}")
    for entry in manifest.get("entries", []):
        for key in ("id", "image", "masks", "split"):
            if key not in entry:
                raise DatasetError(f"{path}: entry missing {key!r}: {entry}")
        if entry["split"] not in SPLITS:
            raise DatasetError(f"{path}: bad split tag {entry['split']!r} on {entry['id']}")
    return manifest


def save_scene(root: str, scene_id: str, scene: InstanceScene, split: str = "train") -> dict:
    """Write one scene's image and instance masks; returns its manifest entry."""
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    mask_dir = os.path.join(root, "masks", scene_id)
    os.makedirs(mask_dir, exist_ok=True)
    image_rel = f"images/{scene_id}.png"
    save_image(scene.image, os.path.join(root, image_rel))
    mask_rels = []
    for k, mask in enumerate(scene.instances):
        rel = f"masks/{scene_id}/{k}.png"
        save_mask(mask, os.path.join(root, rel))
        mask_rels.append(rel)
    return {"id": scene_id, "image": image_rel, "masks": mask_rels, "split": split}


def load_dataset(root: str) -> list:
    """Decode every manifest entry, in manifest order, validating as it goes."""
    manifest = read_manifest(root)
    records = []
    for entry in manifest["entries"]:
        image = load_image(os.path.join(root, entry["image"]))
        masks = [load_mask(os.path.join(root, rel)) for rel in entry["masks"]]
        for rel, mask in zip(entry["masks"], masks):
            if mask.shape != image.shape[:2]:
                raise DatasetError(
                    f"scene {entry['id']}: mask {rel} is {mask.shape}, image is {image.shape[:2]}"
                )
        try:
            scene = InstanceScene(image, masks)
        except ValueError as exc:
            raise DatasetError(f"scene {entry['id']}: {exc}") from exc
        records.append(SceneRecord(entry["id"], entry["split"], scene))
    return records


def split_manifest(manifest: dict, val_count: int, seed: int) -> dict:
    """Retag a seeded uniform sample of train entries as validation."""
    entries = [dict(e) for e in manifest["entries"]]
    train_idx = [i for i, e in enumerate(entries) if e["split"] == "train"]
    if val_count > len(train_idx):
        raise ValueError(f"val_count {val_count} exceeds {len(train_idx)} train entries")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(train_idx), size=val_count, replace=False)
    for i in chosen:
        entries[train_idx[i]]["split"] = "val"
    return {"format_version": manifest["format_version"], "entries": entries}


def flip_augment(scene: InstanceScene) -> InstanceScene:
    """Horizontal mirror of the image and every instance mask."""
    return InstanceScene(
        np.ascontiguousarray(scene.image[:, ::-1]),
        [np.ascontiguousarray(m[:, ::-1]) for m in scene.instances],
    )


@dataclass
class LoadedPair:
    image: np.ndarray
    clicks: ClickSet
    target: np.ndarray
    strategy_used: int
    source_id: str

    def as_sample(self):
        return (self.image, self.clicks, self.target)


def save_pairs(out_dir: str, scene_pairs) -> None:
    """Persist (source_id, image, target_index, pairs) groups with a manifest.

    Images and target masks are shared across the pairs that reference them;
    each pair owns only its clicks JSON plus a manifest row carrying the
    strategy audit fields.
    """
    for sub in ("images", "masks", "clicks"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    entries = []
    seen_images = set()
    seen_masks = set()
    for source_id, image, target_index, pairs in scene_pairs:
        image_rel = f"images/{source_id}.png"
        if source_id not in seen_images:
            save_image(image, os.path.join(out_dir, image_rel))
            seen_images.add(source_id)
        mask_rel = f"masks/{source_id}_{target_index}.png"
        if mask_rel not in seen_masks:
            if pairs:
                save_mask(pairs[0].target, os.path.join(out_dir, mask_rel))
            seen_masks.add(mask_rel)
        for j, pair in enumerate(pairs):
            pair_id = f"{source_id}_{target_index}_{j}"
            clicks_rel = f"clicks/{pair_id}.json"
            with open(os.path.join(out_dir, clicks_rel), "w") as f:
                f.write(pair.clicks.to_json())
                f.write("\n")
            entries.append(
                {
                    "id": pair_id,
                    "image": image_rel,
                    "mask": mask_rel,
                    "clicks": clicks_rel,
                    "strategy_used": pair.strategy_used,
                    "source_id": pair.source_id,
                }
            )
    with open(os.path.join(out_dir, "pairs_manifest.json"), "w") as f:
        json.dump({"format_version": MANIFEST_VERSION, "entries": entries}, f, indent=2)
        f.write("\n")


def load_pairs(out_dir: str) -> list:
    path = os.path.join(out_dir, "pairs_manifest.json")
    if not os.path.exists(path):
        raise DatasetError(f"no pairs_manifest.json under {out_dir}")
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise DatasetError(f"{path}: unsupported format_version")
    images = {}
    masks = {}
    out = []
    for entry in manifest["entries"]:
        if entry["image"] not in images:
            images[entry["image"]] = load_image(os.path.join(out_dir, entry["image"]))
        if entry["mask"] not in masks:
            masks[entry["mask"]] = load_mask(os.path.join(out_dir, entry["mask"]))
        with open(os.path.join(out_dir, entry["clicks"])) as f:
            clicks = ClickSet.from_json(f.read())
        out.append(
            LoadedPair(
                image=images[entry["image"]],
                clicks=clicks,
                target=masks[entry["mask"]],
                strategy_used=int(entry["strategy_used"]),
                source_id=entry["source_id"],
            )
        )
    return out


def pairs_from_records(records, params, flip: bool = True, splits=("train",), threads: int = 1) -> list:
    """Sample pairs for every instance of the selected records, optionally
    doubling the stream with the mirrored scenes.

    Returns (source_id, image, target_index, pairs) groups ready for
    save_pairs or direct training; group order is independent of `threads`.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .sampling import generate_pairs

    jobs = []
    for rec in records:
        if rec.split not in splits:
            continue
        variants = [(rec.scene_id, rec.scene)]
        if flip:
            variants.append((rec.scene_id + "_flip", flip_augment(rec.scene)))
        for source_id, scene in variants:
            for ti in range(len(scene.instances)):
                jobs.append((source_id, scene, ti))

    def one(job):
        source_id, scene, ti = job
        return (source_id, scene.image, ti, generate_pairs(scene, ti, params, source_id=source_id))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]
