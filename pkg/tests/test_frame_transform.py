import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from panokit import frame_transform as ft
from panokit.metadata_graph import EntityNode
from panokit.sphere_geom import Bfov, SphericalDirection


def _d(yaw, pitch=0.0):
    return SphericalDirection.from_degrees(yaw, pitch)


@pytest.mark.parametrize("yaw,sector", [(0, "front"), (22.4, "front"), (22.6, "front-right"), (90, "right"),
                                        (135, "back-right"), (180, "back"), (-180, "back"), (-157.6, "back"), (-157.4, "back-left"),
                                        (-90, "left"), (-45, "front-left"), (-22.4, "front")])
def test_absolute_sectors(yaw, sector):
    assert ft.absolute_sector(_d(yaw)).lateral == sector


def test_absolute_vertical_dead_zone():
    assert ft.absolute_sector(_d(0, 4.9)).vertical == "level"
    assert ft.absolute_sector(_d(0, 5.1)).vertical == "above"
    assert ft.absolute_sector(_d(0, -5.1)).vertical == "below"


@pytest.mark.parametrize("target,ref,label", [((10, 0), (0, 0), "right"), ((-10, 0), (0, 0), "left"),
                                              ((0, 10), (0, 0), "above"), ((10, -10), (0, 0), "right-below"),
                                              ((-175, 0), (175, 0), "right"), ((3, 3), (0, 0), "aligned")])
def test_relative_direction(target, ref, label):
    assert ft.relative_direction(_d(*target), _d(*ref)) == label
    assert label in ft.R2D_LABELS


@given(st.floats(-179, 179), st.floats(-80, 80), st.floats(-179, 179), st.floats(-80, 80))
def test_relative_direction_flips_when_swapped(y1, p1, y2, p2):
    a, b = _d(y1, p1), _d(y2, p2)
    assert ft.relative_direction(a, b) == ft.opposite_label(ft.relative_direction(b, a))


@pytest.mark.parametrize("turn", [45, 90, 135, 180, -45, -90])
def test_camera_rotation_shifts_sector_index(turn):
    for yaw in range(-180, 180, 45):
        before = ft.SECTORS.index(ft.absolute_sector(_d(yaw)).lateral)
        after = ft.SECTORS.index(ft.sector_after_rotation(_d(yaw), math.radians(turn)))
        assert (before - after) % 8 == (turn // 45) % 8


def test_turn_right_moves_object_left():
    assert ft.sector_after_rotation(_d(0), math.radians(90)) == "left"
    assert ft.describe_turn(math.radians(90)) == "turn right 90 degrees"
    assert ft.describe_turn(math.radians(-45)) == "turn left 45 degrees"


def test_reorientation_examples():
    assert ft.sector_after_reorientation(_d(90), _d(90)) == "front"
    assert ft.sector_after_reorientation(_d(0), _d(90)) == "left"
    assert ft.sector_after_reorientation(_d(-90), _d(90)) == "back"


def test_relation_3d_axes():
    r = ft.relation_3d(np.array([1.0, 0.5, -1.0]), np.zeros(3))
    assert (r.lateral, r.vertical, r.depth_axis) == ("right", "above", "in front of")
    assert r.label == "front-right-above" and r.label in ft.R3D_LABELS
    assert r.reversed().label == "behind-left-below"
    assert r.non_neutral_axes == 3
    assert ft.relation_3d(np.zeros(3), np.array([0.1, -0.1, 0.14])).label == "same-position"


def _node(i, yaw, dist):
    return EntityNode(f"n{i}", "x", Bfov.from_degrees(yaw, 0, 10, 10), distance=dist)


def test_depth_required():
    with pytest.raises(ft.DepthRequiredError):
        ft.relative_3d(_node(0, 0, 1.0), _node(1, 10, None))
    with pytest.raises(ft.DepthRequiredError):
        ft.observer_distance_rank([_node(0, 0, 1.0), _node(1, 10, None)])


def test_distance_rank_ties_by_id():
    assert ft.observer_distance_rank([_node(2, 0, 3.0), _node(1, 0, 3.0), _node(0, 0, 5.0)]) == ["n1", "n2", "n0"]


def test_seam_nearest_wraps():
    anchor = _node(0, 178, 2.0)
    others = [_node(1, -179, 2.0), _node(2, 150, 2.0)]
    assert ft.seam_nearest(anchor, others).id == "n1"
    assert ft.in_seam_margin(anchor.center, math.radians(20))
    assert not ft.in_seam_margin(_d(150), math.radians(20))
