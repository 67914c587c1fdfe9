"""Timing comparison between the compiled kernels and their pure-Python twins."""

import time

import numpy as np

from . import _fallback
from .clicks import ClickSet
from .graphcut import EnergyParams, build_energy
from .model import ReferenceModel

try:
    from . import _speedups
except ImportError:
    _speedups = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _edt_case(size, rng):
    src = rng.random((size, size)) < 0.01
    src.flat[0] = True
    return src


def _flow_case(size, rng):
    img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    q = rng.uniform(0.02, 0.98, (size, size))
    g = build_energy(img, q, ClickSet(), EnergyParams())
    return g.cost_bg, g.cost_obj, g.offsets, g.pair_cap


def run_benchmarks(sizes=(64, 128, 256), repeats=3) -> str:
    rng = np.random.default_rng(0)
    rows = [("kernel", "size", "compiled", "pure", "speedup")]
    for size in sizes:
        src = _edt_case(size, rng)
        pure = _time(lambda: _fallback.edt_sq(src), repeats)
        if _speedups is not None:
            comp = _time(lambda: _speedups.edt_sq(src), repeats)
            rows.append(("edt", f"{size}x{size}", f"{comp * 1e3:.2f} ms", f"{pure * 1e3:.2f} ms",
                         f"{pure / comp:.1f}x"))
        else:
            rows.append(("edt", f"{size}x{size}", "n/a", f"{pure * 1e3:.2f} ms", "-"))
    for size in sizes:
        if size > 128:
            continue  # pure-Python max-flow gets slow well before this
        case = _flow_case(size, rng)
        pure = _time(lambda: _fallback.grid_maxflow(*case), 1)
        if _speedups is not None:
            comp = _time(lambda: _speedups.grid_maxflow(*case), repeats)
            rows.append(("maxflow", f"{size}x{size}", f"{comp * 1e3:.2f} ms",
                         f"{pure * 1e3:.2f} ms", f"{pure / comp:.1f}x"))
        else:
            rows.append(("maxflow", f"{size}x{size}", "n/a", f"{pure * 1e3:.2f} ms", "-"))
    model = ReferenceModel.initialize(seed=0)
    for size in sizes:
        x = rng.random((5, size, size))
        fwd = _time(lambda: model.forward(x), repeats)
        rows.append(("model fwd", f"{size}x{size}", f"{fwd * 1e3:.2f} ms", "(shared numpy path)", "-"))

    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
