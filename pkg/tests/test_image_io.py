import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from texlbp.image_io import (
    DatasetError,
    GrayImage,
    ImageFormatError,
    decode_netpbm,
    encode_pgm,
    load_dataset,
    load_image,
    to_grayscale,
    write_pgm,
)


@pytest.mark.parametrize("rgb, expected", [
    ((0, 0, 0), 0),
    ((255, 255, 255), 255),
    ((255, 0, 0), 76),   # 0.299 * 255 = 76.245
    ((0, 255, 0), 150),  # 149.685
    ((0, 0, 255), 29),   # 29.07
])
def test_to_grayscale(rgb, expected):
    assert to_grayscale(*rgb) == expected


def test_to_grayscale_rounds_to_nearest():
    assert to_grayscale(1, 0, 0) == 0  # 0.299
    assert to_grayscale(1, 1, 0) == 1  # 0.886
    assert to_grayscale(2, 0, 0) == 1  # 0.598


def test_to_grayscale_rejects_out_of_range():
    with pytest.raises(ValueError):
        to_grayscale(256, 0, 0)


channel = st.integers(0, 255)


@given(channel, channel, channel, st.integers(0, 2), st.integers(0, 255))
def test_to_grayscale_monotone_per_channel(r, g, b, which, other):
    base = [r, g, b]
    bumped = list(base)
    bumped[which] = max(base[which], other)
    assert to_grayscale(*bumped) >= to_grayscale(*base)


def test_gray_image_invariants():
    img = GrayImage.from_flat(3, 2, [0, 1, 2, 3, 4, 255])
    assert (img.width, img.height) == (3, 2)
    assert img.pixels[1, 2] == 255
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 9
    with pytest.raises(ValueError):
        GrayImage(np.array([[300]]))
    with pytest.raises(ValueError):
        GrayImage.from_flat(2, 2, [1, 2, 3])


def test_load_p5_single_pixel(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n1 1\n255\n\x80")
    assert load_image(p) == GrayImage.from_flat(1, 1, [128])


def test_load_p6_single_pixel(tmp_path):
    p = tmp_path / "a.ppm"
    p.write_bytes(b"P6\n1 1\n255\n\xff\x00\x00")
    assert load_image(p) == GrayImage.from_flat(1, 1, [76])


def test_ascii_formats_with_comments():
    pgm = b"P2\n# made by hand\n3 2 # dims\n255\n0 1 2\n# row two\n3 4 255\n"
    assert decode_netpbm(pgm) == GrayImage.from_flat(3, 2, [0, 1, 2, 3, 4, 255])
    ppm = b"P3 2 1 255\n255 0 0   0 0 0\n"
    assert decode_netpbm(ppm) == GrayImage.from_flat(2, 1, [76, 0])


def test_binary_header_comment():
    data = b"P5\n#c\n2 1\n#c2\n255\n\x01\x02"
    assert decode_netpbm(data) == GrayImage.from_flat(2, 1, [1, 2])


@pytest.mark.parametrize("data, message", [
    (b"P9\n1 1\n255\n\x00", "magic"),
    (b"P5\n2 2\n255\n\x00\x01", "truncated"),
    (b"P2\n2 2\n255\n1 2 3", "truncated"),
    (b"P5\n1 1\n65535\n\x00\x00", "maxval"),
    (b"P5\n1 1\n15\n\x00", "maxval"),
])
def test_decode_errors(data, message):
    with pytest.raises(ImageFormatError, match=message):
        decode_netpbm(data)


def test_unrecognized_file(tmp_path):
    p = tmp_path / "x.pgm"
    p.write_bytes(b"P9 not an image")
    with pytest.raises(ImageFormatError, match="magic"):
        load_image(p)
    q = tmp_path / "notes.txt"
    q.write_text("hello")
    with pytest.raises(ImageFormatError):
        load_image(q)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.pgm")


def test_pillow_fallback_png(tmp_path):
    from PIL import Image
    rgb = np.array([[[255, 0, 0], [0, 0, 255]]], dtype=np.uint8)
    Image.fromarray(rgb).save(tmp_path / "a.png")
    assert load_image(tmp_path / "a.png") == GrayImage.from_flat(2, 1, [76, 29])
    Image.fromarray(np.array([[7, 9]], dtype=np.uint8)).save(tmp_path / "b.tif")
    assert load_image(tmp_path / "b.tif") == GrayImage.from_flat(2, 1, [7, 9])


@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_p5_round_trip(pixels):
    img = GrayImage(pixels)
    assert decode_netpbm(encode_pgm(img)) == img


def _tree(root, layout):
    for label, names in layout.items():
        d = root / label
        d.mkdir(parents=True)
        for i, name in enumerate(names):
            if name.endswith(".pgm"):
                write_pgm(GrayImage(np.full((2, 2), i + 1)), d / name)
            else:
                (d / name).write_text("not an image")


def test_load_dataset_order(tmp_path):
    _tree(tmp_path, {"b": ["y.pgm", "x.pgm"], "a": ["2.pgm", "1.pgm"]})
    samples = load_dataset(tmp_path)
    assert [s.label for s in samples] == ["a", "a", "b", "b"]
    assert [s.source.rsplit("/", 1)[1] for s in samples] == ["1.pgm", "2.pgm", "x.pgm", "y.pgm"]
    for s in samples:
        assert s.label == s.source.rsplit("/", 2)[1]
    again = load_dataset(tmp_path, threads=4)
    assert [(s.label, s.source, s.image) for s in again] == [(s.label, s.source, s.image) for s in samples]


def test_load_dataset_skips_undecodable(tmp_path, caplog):
    _tree(tmp_path, {"a": ["img.pgm", "readme.txt"]})
    with caplog.at_level(logging.WARNING):
        samples = load_dataset(tmp_path)
    assert len(samples) == 1
    assert "readme.txt" in caplog.text


def test_load_dataset_errors(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)
    _tree(tmp_path, {"a": ["img.pgm"], "b": ["junk.txt"]})
    with pytest.raises(DatasetError, match="b"):
        load_dataset(tmp_path)
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing")
