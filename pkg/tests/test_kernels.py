"""Compiled extension vs pure-Python fallback: identical outputs."""

import numpy as np
import pytest

from clickseg import _fallback, kernels
from clickseg.bench import run_benchmarks

_speedups = pytest.importorskip("clickseg._speedups")


def test_backend_selected():
    assert kernels.backend_name() in ("compiled", "pure")


@pytest.mark.parametrize("shape", [(1, 1), (1, 17), (23, 1), (13, 29), (64, 64)])
def test_edt_backends_identical(shape):
    rng = np.random.default_rng(hash(shape) % (1 << 32))
    for density in (0.0, 0.02, 0.5):
        src = rng.random(shape) < density
        a = _speedups.edt_sq(src.astype(np.uint8))
        b = _fallback.edt_sq(src)
        assert np.array_equal(a, b)


def test_maxflow_backends_identical():
    rng = np.random.default_rng(0)
    for trial in range(15):
        h, w = int(rng.integers(2, 14)), int(rng.integers(2, 14))
        conn8 = trial % 2 == 0
        offsets = np.array([[0, 1], [1, 0], [1, 1], [1, -1]] if conn8 else [[0, 1], [1, 0]], np.int64)
        src = rng.random((h, w)) * 5
        sink = rng.random((h, w)) * 5
        pair = rng.random((len(offsets), h, w)) * 2
        la, fa, na = _speedups.grid_maxflow(src, sink, offsets, pair)
        lb, fb, nb = _fallback.grid_maxflow(src, sink, offsets, pair)
        assert np.array_equal(la, lb)
        assert fa == fb
        assert na == nb


def test_maxflow_with_sentinels_identical():
    rng = np.random.default_rng(1)
    h = w = 10
    offsets = np.array([[0, 1], [1, 0], [1, 1], [1, -1]], np.int64)
    src = rng.random((h, w))
    sink = rng.random((h, w))
    src[2, 2] = 1e6  # forced object
    sink[2, 2] = 0.0
    sink[7, 7] = 1e6  # forced background
    src[7, 7] = 0.0
    pair = rng.random((4, h, w))
    la, fa, _ = _speedups.grid_maxflow(src, sink, offsets, pair)
    lb, fb, _ = _fallback.grid_maxflow(src, sink, offsets, pair)
    assert np.array_equal(la, lb)
    assert la[2, 2] == 1 and la[7, 7] == 0
    assert fa == fb


def test_forced_backend_env(monkeypatch):
    import importlib
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from clickseg import kernels; print(kernels.backend_name())"],
        env={"CLICKSEG_PURE": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
    )
    assert out.stdout.strip() == "pure"
    importlib  # keep the import grouped; subprocess isolation is the point


def test_benchmark_smoke():
    table = run_benchmarks(sizes=(16,), repeats=1)
    assert "edt" in table and "maxflow" in table and "speedup" in table
