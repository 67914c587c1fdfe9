import numpy as np
import pytest

from clickseg.sampling import (
    InstanceScene,
    SamplingParams,
    filter_candidates,
    generate_pairs,
    margin_sets,
    sample_negative_strategy1,
    sample_negative_strategy2,
    sample_negative_strategy3,
    sample_positive,
)
from oracle_utils import brute_distance_sq


def _square_scene(size=64, lo=20, hi=40, n_extra=0, seed=0):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    target = np.zeros((size, size), np.uint8)
    target[lo:hi, lo:hi] = 1
    instances = [target]
    if n_extra >= 1:
        other = np.zeros((size, size), np.uint8)
        other[2:12, 2:12] = 1
        instances.append(other)
    if n_extra >= 2:
        other2 = np.zeros((size, size), np.uint8)
        other2[50:60, 50:60] = 1
        instances.append(other2)
    return InstanceScene(img, instances)


def test_margin_sets_full_frame():
    obj = np.ones((10, 10), np.uint8)
    g, gc = margin_sets(obj, 40)
    assert not gc.any()
    assert g.all()


def test_margin_sets_single_pixel():
    obj = np.zeros((120, 120), np.uint8)
    obj[60, 60] = 1
    g, gc = margin_sets(obj, 40)
    rr, cc = np.mgrid[0:120, 0:120]
    dist_sq = (rr - 60) ** 2 + (cc - 60) ** 2
    expected = (dist_sq > 0) & (dist_sq < 1600)
    assert np.array_equal(gc, expected)


def test_margin_sets_matches_brute_force():
    rng = np.random.default_rng(17)
    obj = np.zeros((24, 24), np.uint8)
    for _ in range(4):
        r, c = rng.integers(4, 20, 2)
        obj[r - 2 : r + 3, c - 2 : c + 3] = 1
    pts = [tuple(p) for p in np.argwhere(obj)]
    dist_sq = brute_distance_sq(pts, 24, 24)
    _, gc = margin_sets(obj, 6)
    assert np.array_equal(gc, (dist_sq > 0) & (dist_sq < 36))


def test_filter_unconstrained_returns_whole_region():
    rng = np.random.default_rng(1)
    region = np.zeros((9, 9), bool)
    region[2:5, 3:8] = True
    bd = np.ones((9, 9)) * 99
    out = filter_candidates(region, bd, d_step=1, d_margin=0, rng=rng)
    got = {tuple(p) for p in out}
    assert got == {tuple(p) for p in np.argwhere(region)}


def test_filter_two_pixels_close_together():
    region = np.zeros((10, 10), bool)
    region[4, 2] = True
    region[4, 5] = True  # 3 apart < d_step
    bd = np.full((10, 10), 99.0)
    out = filter_candidates(region, bd, d_step=10, d_margin=0, rng=np.random.default_rng(0))
    assert len(out) == 1


def test_filter_constraints_hold():
    rng = np.random.default_rng(23)
    for _ in range(15):
        region = rng.random((20, 20)) < 0.5
        if not region.any():
            continue
        bd = rng.random((20, 20)) * 10
        d_step, d_margin = int(rng.integers(1, 7)), int(rng.integers(0, 5))
        out = filter_candidates(region, bd, d_step, d_margin, rng)
        for i, (r, c) in enumerate(out):
            assert region[r, c]
            assert bd[r, c] >= d_margin
            for r2, c2 in out[i + 1 :]:
                assert (r - r2) ** 2 + (c - c2) ** 2 >= d_step * d_step


def test_sample_positive_count_and_constraints():
    scene = _square_scene()
    params = SamplingParams(seed=4)
    rng = np.random.default_rng(4)
    for _ in range(20):
        clicks = sample_positive(scene.instances[0], params, rng)
        assert 1 <= len(clicks) <= params.n_pos
        for i, c in enumerate(clicks):
            assert scene.instances[0][c.row, c.col] == 1
            assert c.positive
            # >= d_margin from the square boundary: bd(r) = min(r-19, 40-r) >= 5
            assert 24 <= c.row <= 35 and 24 <= c.col <= 35
            for c2 in clicks[i + 1 :]:
                assert (c.row - c2.row) ** 2 + (c.col - c2.col) ** 2 >= 100


def test_sample_positive_n_pos_one():
    scene = _square_scene()
    params = SamplingParams(n_pos=1)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert len(sample_positive(scene.instances[0], params, rng)) == 1


def test_sample_positive_single_pixel_fallback():
    obj = np.zeros((16, 16), np.uint8)
    obj[7, 9] = 1
    clicks = sample_positive(obj, SamplingParams(), np.random.default_rng(0))
    assert [(c.row, c.col) for c in clicks] == [(7, 9)]


def test_strategy1_membership_and_zero_draws():
    scene = _square_scene()
    target = scene.instances[0]
    g, gc = margin_sets(target, 40)
    params = SamplingParams()
    rng = np.random.default_rng(12)
    sizes = set()
    for _ in range(40):
        clicks = sample_negative_strategy1(gc, target, params, rng)
        sizes.add(len(clicks))
        for c in clicks:
            assert gc[c.row, c.col]
            assert not c.positive
    assert 0 in sizes and max(sizes) > 0  # n=0 occurs, and so do real draws


def test_strategy1_full_frame_object():
    obj = np.ones((12, 12), np.uint8)
    _, gc = margin_sets(obj, 40)
    out = sample_negative_strategy1(gc, obj, SamplingParams(), np.random.default_rng(0))
    assert out == []


def test_strategy2_membership():
    scene = _square_scene(n_extra=2)
    params = SamplingParams()
    rng = np.random.default_rng(3)
    negatives_seen = False
    for _ in range(30):
        clicks = sample_negative_strategy2(scene, 0, params, rng)
        for c in clicks:
            assert scene.instances[0][c.row, c.col] == 0
            assert scene.instances[1][c.row, c.col] or scene.instances[2][c.row, c.col]
        negatives_seen = negatives_seen or clicks
    assert negatives_seen


def test_strategy2_single_instance_scene():
    scene = _square_scene(n_extra=0)
    assert sample_negative_strategy2(scene, 0, SamplingParams(), np.random.default_rng(0)) == []


def test_strategy2_zero_budget():
    scene = _square_scene(n_extra=2)
    params = SamplingParams(n_neg2=0)
    for s in range(5):
        assert sample_negative_strategy2(scene, 0, params, np.random.default_rng(s)) == []


def _oracle_strategy3(gc_mask, g_mask, first, k):
    """Quadratic re-evaluation of the greedy coverage rule."""
    gc_pix = np.argwhere(gc_mask)  # row-major: argmax tie -> smallest (row, col)
    sources = [tuple(p) for p in np.argwhere(g_mask)] + [first]
    picked = [first]
    for _ in range(k - 1):
        src = np.array(sources)
        d = ((gc_pix[:, None, :] - src[None, :, :]) ** 2).sum(-1).min(1)
        r, c = gc_pix[int(np.argmax(d))]
        picked.append((int(r), int(c)))
        sources.append((int(r), int(c)))
    return picked


def test_strategy3_single_candidate():
    gc = np.zeros((8, 8), bool)
    gc[2, 5] = True
    g = ~gc
    out = sample_negative_strategy3(gc, g, SamplingParams(), np.random.default_rng(0))
    assert [(c.row, c.col) for c in out] == [(2, 5)]


def test_strategy3_matches_greedy_oracle():
    obj = np.zeros((32, 32), np.uint8)
    obj[12:20, 12:20] = 1
    g, gc = margin_sets(obj, 8)
    params = SamplingParams(n_neg3=8)
    for seed in range(5):
        out = sample_negative_strategy3(gc, g, params, np.random.default_rng(seed))
        assert len(out) == 8
        first = (out[0].row, out[0].col)
        assert gc[first]
        expected = _oracle_strategy3(gc, g, first, 8)
        assert [(c.row, c.col) for c in out] == expected


def test_strategy3_coverage_monotone():
    obj = np.zeros((32, 32), np.uint8)
    obj[10:22, 14:24] = 1
    g, gc = margin_sets(obj, 9)
    out = sample_negative_strategy3(gc, g, SamplingParams(n_neg3=10), np.random.default_rng(7))
    gc_pix = np.argwhere(gc)
    sources = [tuple(p) for p in np.argwhere(g)]
    prev = np.inf
    for c in out:
        sources.append((c.row, c.col))
        src = np.array(sources)
        worst = ((gc_pix[:, None, :] - src[None, :, :]) ** 2).sum(-1).min(1).max()
        assert worst <= prev
        prev = worst


def test_generate_pairs_count_and_membership():
    scene = _square_scene(n_extra=1)
    params = SamplingParams(seed=99)
    pairs = generate_pairs(scene, 0, params, source_id="scene0")
    assert len(pairs) == params.n_pairs
    assert {p.strategy_used for p in pairs} <= {1, 2, 3}
    for p in pairs:
        for c in p.clicks.positives:
            assert p.target[c.row, c.col] == 1
        for c in p.clicks.negatives:
            assert p.target[c.row, c.col] == 0


def test_generate_pairs_deterministic():
    scene = _square_scene(n_extra=1)
    params = SamplingParams(seed=5)
    a = generate_pairs(scene, 0, params, source_id="sceneX")
    b = generate_pairs(scene, 0, params, source_id="sceneX")
    assert [(p.strategy_used, p.clicks.clicks) for p in a] == [
        (p.strategy_used, p.clicks.clicks) for p in b
    ]
    c = generate_pairs(scene, 0, params, source_id="sceneY")
    assert [(p.strategy_used, p.clicks.clicks) for p in a] != [
        (p.strategy_used, p.clicks.clicks) for p in c
    ]


def test_params_validation():
    with pytest.raises(ValueError):
        SamplingParams(d=0)
    with pytest.raises(ValueError):
        SamplingParams(n_pos=0)
    with pytest.raises(ValueError):
        SamplingParams(d_step=0)


def test_scene_rejects_overlap():
    img = np.zeros((8, 8, 3), np.uint8)
    a = np.zeros((8, 8), np.uint8)
    b = np.zeros((8, 8), np.uint8)
    a[2:5, 2:5] = 1
    b[4:7, 4:7] = 1
    with pytest.raises(ValueError):
        InstanceScene(img, [a, b])
