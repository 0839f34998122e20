import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conicpose import raster


def test_luma_examples():
    px = lambda rgb: raster.to_gray(np.array([[rgb]], dtype=float))[0, 0]
    assert px((1, 1, 1)) == pytest.approx(1.0)
    assert px((0, 0, 0)) == 0.0
    assert px((1, 0, 0)) == pytest.approx(0.299)


def test_luma_of_8bit_input():
    img = np.array([[[255, 255, 255], [0, 0, 255]]], dtype=np.uint8)
    assert np.allclose(raster.to_gray(img), [[1.0, 0.114]])


@pytest.mark.parametrize("shape", [(0, 4, 3), (3, 0, 3)])
def test_empty_colour_image(shape):
    with pytest.raises(ValueError, match="empty image"):
        raster.to_gray(np.zeros(shape))


def test_empty_gray_image():
    with pytest.raises(ValueError, match="empty image"):
        raster.as_gray(np.zeros((0, 5)))


def test_integral_of_ones():
    ii = raster.build_integral(np.ones((4, 4)))
    assert ii.table[-1, -1] == 16
    assert ii.table.shape == (5, 5)


def test_integral_of_zeros():
    assert not raster.build_integral(np.zeros((3, 6))).table.any()


def test_integral_is_read_only():
    ii = raster.build_integral(np.ones((2, 2)))
    with pytest.raises(ValueError):
        ii.table[0, 0] = 1


def test_box_sums_match_direct_summation(rng):
    img = rng.random((8, 8))
    ii = raster.build_integral(img)
    for r0 in range(9):
        for r1 in range(r0, 9):
            for c0 in range(9):
                for c1 in range(c0, 9):
                    direct = sum(img[r, c] for r in range(r0, r1) for c in range(c0, c1))
                    assert abs(ii.box_sum(r0, c0, r1, c1) - direct) < 1e-12


def _direct_window_mean(img, x, y, hw):
    h, w = img.shape
    side = 2 * hw + 1
    r0 = min(max(y - hw, 0), h - side)
    c0 = min(max(x - hw, 0), w - side)
    total = 0.0
    for r in range(r0, r0 + side):
        for c in range(c0, c0 + side):
            total += img[r, c]
    return total / side**2


def test_constant_window_mean():
    ii = raster.build_integral(np.full((9, 7), 0.3))
    for x, y in [(0, 0), (6, 8), (3, 4)]:
        assert raster.windowed_mean(ii, (x, y), 2) == pytest.approx(0.3)


def test_corner_uses_translated_window():
    img = np.add.outer(np.arange(10.0), 2 * np.arange(12.0))
    ii = raster.build_integral(img)
    got = raster.windowed_mean(ii, (0, 0), 3)
    # fully contained 7x7 window at the corner: rows 0..6, cols 0..6
    assert got == pytest.approx(img[:7, :7].mean())
    assert got == pytest.approx(_direct_window_mean(img, 0, 0, 3))


def test_whole_image_window_is_global_mean(rng):
    img = rng.random((9, 9))
    assert raster.windowed_mean(raster.build_integral(img), (4, 4), 4) == pytest.approx(img.mean())


def test_window_too_large():
    ii = raster.build_integral(np.ones((5, 9)))
    with pytest.raises(ValueError, match="window exceeds image"):
        ii.windowed_mean((2, 2), 3)


def test_mean_image_matches_direct(rng):
    for _ in range(5):
        h, w = rng.integers(5, 15, size=2)
        img = rng.random((h, w))
        hw = int(rng.integers(0, (min(h, w) - 1) // 2 + 1))
        mean = raster.build_integral(img).mean_image(hw)
        for y in range(h):
            for x in range(w):
                assert abs(mean[y, x] - _direct_window_mean(img, x, y, hw)) <= 1e-9


@given(arrays(float, (6, 5), elements=st.floats(-10, 10)), st.floats(-5, 5))
def test_integral_is_linear(img, a):
    lhs = raster.build_integral(a * img).table
    rhs = a * raster.build_integral(img).table
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


def test_decode_p5_example():
    img = raster.decode_pnm(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    assert np.array_equal(img, [[0, 128 / 255], [1, 64 / 255]])


def test_decode_header_comments():
    img = raster.decode_pnm(b"P5 # a comment\n# another\n1 1 # dims\n255\n\x7f")
    assert img.shape == (1, 1)


def test_decode_p6_channel_order():
    img = raster.decode_pnm(b"P6\n1 1\n255\n" + bytes([255, 0, 51]))
    assert img.shape == (1, 1, 3)
    assert np.allclose(img[0, 0], [1.0, 0.0, 0.2])


def test_decode_16bit_big_endian():
    img = raster.decode_pnm(b"P5\n2 1\n65535\n" + bytes([0xFF, 0xFF, 0x00, 0x01]))
    assert np.allclose(img, [[1.0, 1 / 65535]])


@pytest.mark.parametrize(
    "data, offset",
    [
        (b"P3\n1 1\n255\n\x00", 0),
        (b"P5\n1 x\n255\n\x00", 5),
        (b"P5\n1 1\n0\n\x00", 8),
        (b"P5\n2 2\n255\n\x00", 12),
        (b"P5\n2", 4),
    ],
)
def test_decode_errors_report_offset(data, offset):
    with pytest.raises(raster.PNMError) as err:
        raster.decode_pnm(data)
    assert err.value.offset == offset
    assert f"at byte {offset}" in str(err.value)


@given(arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8))))
def test_pgm_round_trip(payload):
    img = payload / 255.0
    back = raster.decode_pnm(raster.encode_pnm(img))
    assert np.array_equal(np.rint(back * 255).astype(np.uint8), payload)
    assert np.array_equal(back, img)


@given(arrays(np.uint8, st.tuples(st.integers(1, 5), st.integers(1, 5), st.just(3))))
def test_ppm_round_trip(payload):
    img = payload / 255.0
    assert np.array_equal(raster.decode_pnm(raster.encode_pnm(img)), img)


def test_write_read_file(tmp_path, rng):
    img = rng.integers(0, 256, (7, 9)) / 255.0
    path = tmp_path / "x.pgm"
    raster.write_pnm(img, path)
    assert np.array_equal(raster.read_pnm(path), img)
    assert [p.name for p in tmp_path.iterdir()] == ["x.pgm"]
