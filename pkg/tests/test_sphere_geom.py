import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from panokit.sphere_geom import (AngularRect, Bfov, DomainError, ErpImage, SphericalDirection, angular_distance,
                                 bfov_iou, circular_overlap, covering_arc, direction_to_pixel, direction_to_ray,
                                 format_bfov, format_number, minimal_arc, parse_bfov_text, parse_direction_text,
                                 pixel_to_direction, ray_to_direction, rect_iou, wrap_angle)

yaws = st.floats(-179.999, 179.999)
pitches = st.floats(-89.0, 89.0)
fovs = st.floats(1.0, 180.0)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == -math.pi
    assert wrap_angle(-math.pi) == -math.pi
    assert wrap_angle(3 * math.pi) == -math.pi
    assert wrap_angle(0.5) == 0.5


def test_direction_validates_pitch():
    with pytest.raises(DomainError):
        SphericalDirection(0.0, 2.0)
    assert SphericalDirection(math.pi, 0.0).yaw == -math.pi


def test_pixel_conventions():
    # left edge is yaw -180, top row is pitch +90, right of center is positive yaw
    assert pixel_to_direction(0, 200, 800, 400).to_degrees() == (-180.0, 0.0)
    d = pixel_to_direction(600, 100, 800, 400)
    assert d.to_degrees() == pytest.approx((90.0, 45.0))
    assert direction_to_ray(d).x > 0 and direction_to_ray(d).y > 0


def test_pole_ray_has_zero_yaw():
    d = ray_to_direction((0.0, 1.0, 0.0))
    assert d.yaw == 0.0 and d.pitch == pytest.approx(math.pi / 2)


@given(yaws, pitches, yaws, pitches)
def test_angular_distance_matches_dot_product(y1, p1, y2, p2):
    a, b = SphericalDirection.from_degrees(y1, p1), SphericalDirection.from_degrees(y2, p2)
    ref = math.acos(max(-1.0, min(1.0, float(oracles.ray(a.yaw, a.pitch) @ oracles.ray(b.yaw, b.pitch)))))
    assert angular_distance(a, b) == pytest.approx(ref, abs=1e-7)
    assert angular_distance(a, b) == pytest.approx(angular_distance(b, a))


@given(yaws, pitches, fovs, fovs)
def test_iou_self_is_one(y, p, xf, yf):
    b = Bfov.from_degrees(y, p, xf, yf)
    assert bfov_iou(b, b) == pytest.approx(1.0)


@given(yaws, pitches, fovs, fovs, yaws, pitches, fovs, fovs)
@settings(max_examples=200)
def test_iou_symmetric_and_bounded(y1, p1, xf1, yf1, y2, p2, xf2, yf2):
    a, b = Bfov.from_degrees(y1, p1, xf1, yf1), Bfov.from_degrees(y2, p2, xf2, yf2)
    iou = bfov_iou(a, b)
    assert 0.0 <= iou <= 1.0
    assert iou == pytest.approx(bfov_iou(b, a))


@given(yaws, pitches, fovs, fovs, st.floats(-720, 720))
def test_iou_invariant_under_yaw_shift(y, p, xf, yf, shift):
    a = Bfov.from_degrees(y, p, xf, yf)
    b = Bfov.from_degrees(y + 7.0, p, xf * 0.8, yf)
    a2 = Bfov.from_degrees(y + shift, p, xf, yf)
    b2 = Bfov.from_degrees(y + 7.0 + shift, p, xf * 0.8, yf)
    assert bfov_iou(a, b) == pytest.approx(bfov_iou(a2, b2), abs=1e-9)


def test_disjoint_iou_zero():
    assert bfov_iou(Bfov.from_degrees(0, 0, 10, 10), Bfov.from_degrees(90, 0, 10, 10)) == 0.0


def test_pitch_extent_clipped_at_pole():
    r = Bfov.from_degrees(0, 80, 20, 40).rect()
    assert r.pitch_hi == pytest.approx(math.pi / 2)


def test_circular_overlap_cases():
    tp = 2 * math.pi
    assert circular_overlap(0.0, 1.0, 0.5, 1.0) == pytest.approx(0.5)
    assert circular_overlap(3.0, 0.5, -3.2, 0.5) == pytest.approx(0.5 - (tp - 3.2 - 3.0))
    assert circular_overlap(0.0, tp, 1.0, 0.3) == pytest.approx(0.3)


def test_rect_iou_full_band_yaw():
    a = AngularRect(-math.pi, 2 * math.pi, 0.0, 0.5)
    b = AngularRect(1.0, 0.5, 0.0, 0.5)
    assert rect_iou(a, b) == pytest.approx(0.5 / (2 * math.pi))


def test_contains_handles_seam():
    r = Bfov.from_degrees(175, 0, 20, 20).rect()
    assert r.contains(SphericalDirection.from_degrees(-178, 0))
    assert not r.contains(SphericalDirection.from_degrees(-160, 0))
    inside = r.contains_angles(np.radians([179.0, -176.0, 150.0]), np.zeros(3))
    assert inside.tolist() == [True, True, False]


def test_covering_and_minimal_arc():
    start, width = minimal_arc([math.radians(170), math.radians(-170)])
    assert width == pytest.approx(math.radians(20))
    assert math.degrees(start) == pytest.approx(170)
    start, width = covering_arc([(3.0, 0.5), (-3.1, 0.3)])
    assert width == pytest.approx(0.5)


@pytest.mark.parametrize("value,decimals,text", [(1.5, 2, "1.5"), (-0.0001, 2, "0"), (3.0, 6, "3"),
                                                  (-12.345678, 3, "-12.346")])
def test_format_number(value, decimals, text):
    assert format_number(value, decimals) == text


def test_bfov_text_round_trip():
    b = Bfov.from_degrees(-30.5, 12.25, 40, 22)
    assert format_bfov(b, 2) == "[-30.5, 12.25, 40, 22]"
    back = parse_bfov_text(format_bfov(b))
    assert back.to_degrees() == pytest.approx(b.to_degrees())


@pytest.mark.parametrize("text", ["[200, 0, 10, 10]", "[0, 0, 0, 10]", "[0, 95, 10, 10]", "no box", "[1, 2, 3]"])
def test_bfov_text_rejects(text):
    assert parse_bfov_text(text) is None


def test_direction_text():
    d = parse_direction_text("I would look at [45, -10] first")
    assert d.to_degrees() == pytest.approx((45.0, -10.0))
    assert parse_direction_text("[45]") is None


def test_erp_image_rejects_bad_shape():
    with pytest.raises((DomainError, ValueError)):
        ErpImage(np.zeros((10, 10, 3), dtype=np.uint8))
    img = ErpImage(np.zeros((4, 8), dtype=np.float32))
    assert img.is_depth and (img.width, img.height) == (8, 4)


@given(st.lists(st.tuples(st.floats(-180, 180), st.floats(0.5, 90)), min_size=1, max_size=5))
def test_covering_arc_is_minimal_cover(arcs):
    rad = [(math.radians(s), math.radians(w)) for s, w in arcs]
    start, width = covering_arc(rad)
    # every arc lies inside the cover
    for s, w in rad:
        off = (s - start) % (2 * math.pi)
        if off > 2 * math.pi - 1e-9:
            off = 0.0
        assert off + w <= width + 1e-9
    # brute force over 0.5 deg samples: the cover equals 360 minus the largest uncovered run
    grid = np.arange(0.0, 360.0, 0.5) + 0.25
    covered = np.zeros(grid.size, dtype=bool)
    for s, w in arcs:
        covered |= (grid - s) % 360.0 <= w
    if covered.all():
        return
    free = np.concatenate([~covered, ~covered])
    run = best = 0
    for f in free:
        run = run + 1 if f else 0
        best = max(best, run)
    assert math.degrees(width) == pytest.approx(360.0 - 0.5 * min(best, grid.size), abs=1.01)
