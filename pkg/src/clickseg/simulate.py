"""Automatic clicker and evaluation protocol.

The simulated user always clicks the mislabeled pixel farthest from the
boundary of the mislabeled region and from the image frame (the middle of
the worst error), positive on false negatives and negative on false
positives. Sequences stop at a click budget (default 20) or on a perfect
mask; IU-vs-clicks curves and clicks-to-threshold statistics aggregate the
runs over a dataset.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .clicks import Click, ClickSet, encode
from .graphcut import EnergyParams, refine, threshold_mask
from .raster import ensure_mask, iou

DEFAULT_MAX_CLICKS = 20


class NoMislabeledPixels(Exception):
    """The current mask already matches the ground truth."""


def next_click(gt, current) -> Click:
    """Click in the middle of the largest error region.

    Scores every mislabeled pixel by its exact Euclidean distance to the
    nearest correctly labeled pixel or to the 1-pixel frame just outside the
    image, and returns the argmax (ties to the smallest (row, col)).
    """
    gt = ensure_mask(gt)
    current = ensure_mask(current, shape=gt.shape)
    mislabeled = gt != current
    if not mislabeled.any():
        raise NoMislabeledPixels()
    h, w = gt.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mislabeled
    dist_sq = kernels.edt_sq(~padded)[1:-1, 1:-1]
    dist_sq[~mislabeled] = -1.0
    r, c = divmod(int(np.argmax(dist_sq)), w)
    return Click(r, c, positive=bool(gt[r, c]))


class ComposedSegmenter:
    """Default pipeline: encode clicks, predict, then graph-cut refine.

    Single-pixel clicks feed the backend; the refinement stage is what
    enlarges them into radius-`hard_radius` constraint disks.
    """

    def __init__(self, backend, params: EnergyParams | None = None, use_graphcut: bool = True):
        self.backend = backend
        self.params = params or EnergyParams()
        self.use_graphcut = use_graphcut

    def probability(self, image, clicks: ClickSet) -> np.ndarray:
        return self.backend.predict(encode(image, clicks))

    def __call__(self, image, clicks: ClickSet) -> np.ndarray:
        q = self.probability(image, clicks)
        if self.use_graphcut:
            return refine(image, q, clicks, self.params)
        return threshold_mask(q)


@dataclass
class EvalCurve:
    object_id: str
    ious: list
    final_mask: np.ndarray
    clicks: ClickSet
    max_clicks: int = DEFAULT_MAX_CLICKS


def run_sequence(segmenter, image, gt, max_clicks: int = DEFAULT_MAX_CLICKS, object_id: str = "") -> EvalCurve:
    """Click -> segment -> measure, until perfect or out of budget."""
    if max_clicks < 1:
        raise ValueError("max_clicks must be at least 1")
    gt = ensure_mask(gt)
    current = np.zeros_like(gt)
    clicks = ClickSet()
    ious = []
    for _ in range(max_clicks):
        try:
            click = next_click(gt, current)
        except NoMislabeledPixels:
            break
        # A degenerate segmenter can leave the worst error unchanged; the
        # repeat still spends a click but the set only holds unique clicks.
        if not clicks.contains(click):
            clicks = clicks.with_click(click)
        current = ensure_mask(segmenter(image, clicks), shape=gt.shape)
        ious.append(iou(gt, current))
        if ious[-1] == 1.0:
            break
    return EvalCurve(object_id, ious, current, clicks, max_clicks)


def pad_curve(ious, max_clicks: int):
    """Carry the final IU forward so dataset means average equal-length rows."""
    if not ious:
        raise ValueError("empty curve")
    return list(ious) + [ious[-1]] * (max_clicks - len(ious))


def clicks_to_threshold(curve: EvalCurve, threshold: float) -> int:
    """Smallest click count reaching the IU threshold, capped at the budget."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if not curve.ious:
        raise ValueError("empty curve")
    for k, v in enumerate(curve.ious, start=1):
        if v >= threshold:
            return k
    return curve.max_clicks


@dataclass
class EvalReport:
    mean_curve: list
    mean_clicks: dict
    rows: list
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "mean_curve": self.mean_curve,
                "mean_clicks": {str(k): v for k, v in self.mean_clicks.items()},
                "rows": self.rows,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        return cls(
            mean_curve=data["mean_curve"],
            mean_clicks={float(k): v for k, v in data["mean_clicks"].items()},
            rows=data["rows"],
            config=data.get("config", {}),
        )

    def text_table(self, name: str = "reference + graph cut") -> str:
        headers = ["segmentation model"] + [f"{t:.0%} IU" for t in sorted(self.mean_clicks)]
        values = [name] + [f"{self.mean_clicks[t]:.2f}" for t in sorted(self.mean_clicks)]
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
        rule = "-+-".join("-" * w for w in widths)
        vals = " | ".join(v.ljust(w) for v, w in zip(values, widths))
        return f"{line}\n{rule}\n{vals}\n"

    def curves_csv(self) -> str:
        lines = ["clicks,mean_iu"]
        lines += [f"{k},{v:.6f}" for k, v in enumerate(self.mean_curve, start=1)]
        return "\n".join(lines) + "\n"


def aggregate_rows(rows, thresholds, max_clicks: int):
    """Plain means over per-object rows; reused to audit emitted reports."""
    curves = np.array([r["ious"] for r in rows], dtype=np.float64)
    mean_curve = curves.mean(axis=0).tolist()
    mean_clicks = {
        t: float(np.mean([r["clicks_to"][_tkey(t)] for r in rows])) for t in thresholds
    }
    return mean_curve, mean_clicks


def _tkey(threshold: float) -> str:
    return f"{threshold:g}"


def evaluate_dataset(
    segmenter,
    dataset,
    thresholds=(0.85, 0.9),
    max_clicks: int = DEFAULT_MAX_CLICKS,
    threads: int = 1,
    config: dict | None = None,
) -> EvalReport:
    """Run the clicker over (object_id, image, gt) triples and average.

    Per-object curves are padded to max_clicks by carrying the final IU
    forward; aggregates are exact means over objects.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("empty dataset")

    def one(item):
        object_id, image, gt = item
        curve = run_sequence(segmenter, image, gt, max_clicks, object_id)
        padded = pad_curve(curve.ious, max_clicks)
        return {
            "object_id": object_id,
            "n_clicks_used": len(curve.ious),
            "ious": padded,
            "clicks_to": {_tkey(t): clicks_to_threshold(curve, t) for t in thresholds},
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, dataset))
    else:
        rows = [one(item) for item in dataset]

    mean_curve, mean_clicks = aggregate_rows(rows, thresholds, max_clicks)
    return EvalReport(mean_curve, mean_clicks, rows, config=dict(config or {}))
