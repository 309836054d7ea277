"""Shape rasterization: geometry, symmetry, and pixel measures."""

import math

import numpy as np
import pytest

from attrvae.shapes import (
    IMAGE_MEASURE_NAMES,
    SHAPE_KINDS,
    ShapeSpec,
    image_attributes,
    image_measures,
    render_shape,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        ShapeSpec("blob", 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        ShapeSpec("disk", 0.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        ShapeSpec("disk", 1.2, 0.5, 0.5)
    with pytest.raises(ValueError):
        ShapeSpec("square", 0.5, 0.5, 0.5, orientation=math.pi / 2)
    with pytest.raises(ValueError):
        ShapeSpec("square", 0.5, 0.5, 0.5, orientation=-0.1)
    ShapeSpec("cross", 1.0, 0.5, 0.5, orientation=0.0)


def test_clamping_keeps_shape_on_canvas():
    spec = ShapeSpec("disk", 0.5, 0.0, 1.0).clamped()
    assert spec.x == 0.25 and spec.y == 0.75
    inside = ShapeSpec("disk", 0.5, 0.4, 0.6)
    assert inside.clamped() == inside
    # clamped render keeps the whole disk on canvas: far corners stay dark
    # and no mass is lost relative to a centered render (up to raster jitter)
    img = render_shape(ShapeSpec("disk", 0.6, 0.0, 0.0))
    assert img[0, -1] == 0.0 and img[-1, -1] == 0.0 and img[-1, 0] == 0.0
    centered = render_shape(ShapeSpec("disk", 0.6, 0.5, 0.5))
    assert img.mean() == pytest.approx(centered.mean(), abs=0.002)


def test_render_basics():
    img = render_shape(ShapeSpec("disk", 0.5, 0.5, 0.5))
    assert img.shape == (16, 16)
    assert img.min() >= 0.0 and img.max() <= 1.0
    assert np.array_equal(img, render_shape(ShapeSpec("disk", 0.5, 0.5, 0.5)))
    # coverage is a mean of 4x4 point samples: multiples of 1/16
    assert np.all(np.abs(img * 16 - np.round(img * 16)) < 1e-12)
    small = render_shape(ShapeSpec("square", 0.5, 0.5, 0.5), side=8)
    assert small.shape == (8, 8)


def test_disk_mirror_symmetry_is_exact():
    left = render_shape(ShapeSpec("disk", 0.5, 0.25, 0.5))
    right = render_shape(ShapeSpec("disk", 0.5, 0.75, 0.5))
    assert np.array_equal(left, right[:, ::-1])
    up = render_shape(ShapeSpec("disk", 0.5, 0.5, 0.25))
    down = render_shape(ShapeSpec("disk", 0.5, 0.5, 0.75))
    assert np.array_equal(up, down[::-1, :])


def test_axis_aligned_shapes_mirror_too():
    for kind in ("square", "cross"):
        a = render_shape(ShapeSpec(kind, 0.5, 0.25, 0.5))
        b = render_shape(ShapeSpec(kind, 0.5, 0.75, 0.5))
        assert np.array_equal(a, b[:, ::-1])


def test_disk_ignores_orientation():
    a = render_shape(ShapeSpec("disk", 0.6, 0.5, 0.5, orientation=0.0))
    b = render_shape(ShapeSpec("disk", 0.6, 0.5, 0.5, orientation=1.2))
    assert np.array_equal(a, b)


def test_disk_centroid_matches_position():
    for (x, y) in ((0.5, 0.5), (0.4, 0.6), (0.3, 0.45)):
        img = render_shape(ShapeSpec("disk", 0.5, x, y))
        m = image_measures(img)
        assert abs(m["x"] - x) * 16 < 0.5
        assert abs(m["y"] - y) * 16 < 0.5


def test_mass_strictly_increases_with_scale():
    for kind in SHAPE_KINDS:
        masses = [render_shape(ShapeSpec(kind, s, 0.5, 0.5)).mean()
                  for s in np.linspace(0.2, 0.9, 8)]
        assert all(b > a for a, b in zip(masses, masses[1:]))


def test_disk_area_matches_geometry():
    # scale 0.5 on a 16-canvas: radius 4 px, area pi*16/256
    img = render_shape(ShapeSpec("disk", 0.5, 0.5, 0.5))
    assert img.mean() == pytest.approx(math.pi / 16.0, abs=0.004)
    full = render_shape(ShapeSpec("disk", 1.0, 0.5, 0.5))
    assert full.mean() == pytest.approx(math.pi / 4.0, abs=0.004)


def test_square_area_matches_geometry():
    # circumscribed-circle scale: square side = scale*side/sqrt(2), area scale^2/2
    # (closed-boundary sampling biases coverage up by about perimeter/8 samples)
    for s in (0.4, 0.6, 0.8):
        img = render_shape(ShapeSpec("square", s, 0.5, 0.5))
        assert img.mean() == pytest.approx(s * s / 2.0, abs=0.02)


def test_square_rotation_preserves_mass():
    base = render_shape(ShapeSpec("square", 0.7, 0.5, 0.5)).mean()
    for theta in (0.3, math.pi / 4, 1.2):
        rot = render_shape(ShapeSpec("square", 0.7, 0.5, 0.5, orientation=theta)).mean()
        assert rot == pytest.approx(base, abs=0.01)


def test_cross_fits_in_its_circumscribed_disk():
    for theta in (0.0, 0.5, 1.0):
        cross = render_shape(ShapeSpec("cross", 0.8, 0.5, 0.5, orientation=theta))
        disk = render_shape(ShapeSpec("disk", 0.8, 0.5, 0.5))
        assert np.all(cross <= disk + 1e-12)
        assert cross.mean() < disk.mean()


def test_cross_looks_like_a_cross():
    img = render_shape(ShapeSpec("cross", 0.9, 0.5, 0.5))
    # center and the four arm directions are lit, diagonal corners are not
    assert img[8, 8] > 0.9
    assert img[8, 2] > 0.5 and img[8, 13] > 0.5   # horizontal bar
    assert img[2, 8] > 0.5 and img[13, 8] > 0.5   # vertical bar
    assert img[2, 2] == 0.0 and img[13, 13] == 0.0


def test_image_measures_fixtures():
    assert image_measures(np.zeros((16, 16))) == {"area": 0.0, "x": 0.5, "y": 0.5}
    full = image_measures(np.ones((16, 16)))
    assert full["area"] == 1.0
    assert full["x"] == pytest.approx(0.5) and full["y"] == pytest.approx(0.5)
    delta = np.zeros((16, 16))
    delta[3, 5] = 1.0
    m = image_measures(delta)
    assert m["x"] == pytest.approx(5.5 / 16.0)
    assert m["y"] == pytest.approx(3.5 / 16.0)
    assert m["area"] == pytest.approx(1.0 / 256.0)
    assert IMAGE_MEASURE_NAMES == ("area", "x", "y")


def test_image_attributes_passthrough():
    spec = ShapeSpec("square", 0.5, 0.1, 0.9, orientation=0.7)
    img = render_shape(spec)
    attrs = image_attributes(spec, img)
    clamped = spec.clamped()
    assert attrs["scale"] == 0.5
    assert attrs["x"] == clamped.x and attrs["y"] == clamped.y
    assert attrs["orientation"] == 0.7
    assert attrs["shape"] == float(SHAPE_KINDS.index("square"))
    assert attrs["area"] == img.mean()
