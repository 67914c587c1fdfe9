import numpy as np
import pytest
from PIL import Image as PILImage

from clickseg.raster import (
    CorruptDataError,
    UnsupportedFormatError,
    iou,
    load_image,
    load_mask,
    save_mask,
)


def test_load_identity_2x2(tmp_path):
    pixels = np.array(
        [[[10, 20, 30], [40, 50, 60]], [[70, 80, 90], [100, 110, 120]]], dtype=np.uint8
    )
    path = tmp_path / "px.png"
    PILImage.fromarray(pixels, mode="RGB").save(path)
    assert np.array_equal(load_image(str(path)), pixels)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(str(tmp_path / "nope.png"))


def test_text_file_named_png(tmp_path):
    path = tmp_path / "fake.png"
    path.write_text("definitely not a png")
    with pytest.raises(CorruptDataError):
        load_image(str(path))


def test_unsupported_format(tmp_path):
    path = tmp_path / "sneaky.png"
    PILImage.new("RGB", (4, 4)).save(path, format="BMP")
    with pytest.raises(UnsupportedFormatError):
        load_image(str(path))


def test_truncated_png(tmp_path):
    path = tmp_path / "ok.png"
    PILImage.fromarray(np.zeros((32, 32, 3), np.uint8)).save(path)
    data = path.read_bytes()
    (tmp_path / "cut.png").write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptDataError):
        load_image(str(tmp_path / "cut.png"))


def test_mask_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    for i in range(5):
        mask = (rng.random((16, 16)) < 0.4).astype(np.uint8)
        path = tmp_path / f"m{i}.png"
        save_mask(mask, str(path))
        assert np.array_equal(load_mask(str(path)), mask)


@pytest.mark.parametrize("value,byte", [(0, 0), (1, 255)])
def test_mask_byte_coding(tmp_path, value, byte):
    mask = np.full((8, 8), value, dtype=np.uint8)
    path = tmp_path / "m.png"
    save_mask(mask, str(path))
    raw = np.asarray(PILImage.open(path))
    assert raw.shape == (8, 8)
    assert (raw == byte).all()


def test_iou_identical():
    m = np.zeros((5, 5), np.uint8)
    m[1:3, 1:4] = 1
    assert iou(m, m) == 1.0


def test_iou_disjoint():
    a = np.zeros((4, 4), np.uint8)
    b = np.zeros((4, 4), np.uint8)
    a[0, 0] = 1
    b[3, 3] = 1
    assert iou(a, b) == 0.0


def test_iou_hand_case():
    # a: top row (3 px), b: top-left 2x2 block (4 px); overlap 2, union 5.
    a = np.zeros((3, 3), np.uint8)
    a[0, :] = 1
    b = np.zeros((3, 3), np.uint8)
    b[:2, :2] = 1
    assert iou(a, b) == pytest.approx(2 / 5)
    assert iou(b, a) == pytest.approx(2 / 5)


def test_iou_empty_masks():
    z = np.zeros((6, 6), np.uint8)
    assert iou(z, z) == 1.0


def test_iou_symmetry_and_bounds():
    rng = np.random.default_rng(11)
    for _ in range(50):
        h, w = rng.integers(1, 12, 2)
        a = (rng.random((h, w)) < rng.random()).astype(np.uint8)
        b = (rng.random((h, w)) < rng.random()).astype(np.uint8)
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0


def test_iou_dimension_mismatch():
    with pytest.raises(ValueError):
        iou(np.zeros((3, 3), np.uint8), np.zeros((3, 4), np.uint8))
