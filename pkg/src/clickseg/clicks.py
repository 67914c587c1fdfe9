"""Click sets and their distance-channel encoding.

A click marks one pixel as object (positive) or background (negative). The
encoder turns the positive and negative sets into two truncated Euclidean
distance channels and stacks them under the scaled RGB planes, producing the
5-plane tensor consumed by probability backends.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .raster import ensure_image

TRUNCATION = 255.0


@dataclass(frozen=True)
class Click:
    row: int
    col: int
    positive: bool

    @property
    def point(self):
        return (self.row, self.col)


@dataclass(frozen=True)
class ClickSet:
    """Ordered sequence of clicks; order is the user's click sequence."""

    clicks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "clicks", tuple(self.clicks))
        seen = set()
        for c in self.clicks:
            key = (c.row, c.col, c.positive)
            if key in seen:
                raise ValueError(f"duplicate click {key}")
            seen.add(key)

    @classmethod
    def from_points(cls, positives=(), negatives=()):
        cs = [Click(int(r), int(c), True) for r, c in positives]
        cs += [Click(int(r), int(c), False) for r, c in negatives]
        return cls(tuple(cs))

    @property
    def positives(self):
        return tuple(c for c in self.clicks if c.positive)

    @property
    def negatives(self):
        return tuple(c for c in self.clicks if not c.positive)

    def contains(self, click: Click) -> bool:
        return any(
            c.row == click.row and c.col == click.col and c.positive == click.positive
            for c in self.clicks
        )

    def with_click(self, click: Click) -> "ClickSet":
        return ClickSet(self.clicks + (click,))

    def without_last(self) -> "ClickSet":
        if not self.clicks:
            raise ValueError("no clicks to remove")
        return ClickSet(self.clicks[:-1])

    def __len__(self):
        return len(self.clicks)

    def to_json(self) -> str:
        return json.dumps(
            {
                "positives": [[c.row, c.col] for c in self.positives],
                "negatives": [[c.row, c.col] for c in self.negatives],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ClickSet":
        # The on-disk schema keeps per-polarity order only; reloaded sets
        # replay positives first, then negatives.
        data = json.loads(text)
        return cls.from_points(data.get("positives", ()), data.get("negatives", ()))


def distance_map(points, height: int, width: int) -> np.ndarray:
    """Exact Euclidean distance to the nearest of `points`, truncated at 255.

    `points` is an iterable of (row, col). An empty set yields the all-255
    channel. Out-of-bounds points raise ValueError.
    """
    src = np.zeros((height, width), dtype=np.uint8)
    for r, c in points:
        if not (0 <= r < height and 0 <= c < width):
            raise ValueError(f"point ({r}, {c}) outside {height}x{width} grid")
        src[r, c] = 1
    return np.minimum(np.sqrt(kernels.edt_sq(src)), TRUNCATION)


def encode(image, clicks: ClickSet) -> np.ndarray:
    """Build the (5, H, W) input tensor: RGB/255, then U1/255, U0/255."""
    image = ensure_image(image)
    h, w = image.shape[:2]
    u1 = distance_map([c.point for c in clicks.positives], h, w)
    u0 = distance_map([c.point for c in clicks.negatives], h, w)
    out = np.empty((5, h, w), dtype=np.float64)
    out[:3] = image.astype(np.float64).transpose(2, 0, 1) / 255.0
    out[3] = u1 / TRUNCATION
    out[4] = u0 / TRUNCATION
    return out
