"""Independent reference implementations used only by the tests.

None of these import the code under test beyond plain data types.
"""

import math

import numpy as np
from scipy.spatial.transform import Rotation

GRID_STEP_DEG = 0.25
_YAW_CELLS = -180.0 + GRID_STEP_DEG * (np.arange(int(360 / GRID_STEP_DEG)) + 0.5)
_PITCH_CELLS = -90.0 + GRID_STEP_DEG * (np.arange(int(180 / GRID_STEP_DEG)) + 0.5)


def _yaw_member(yaw, x_fov):
    off = (_YAW_CELLS - yaw + 180.0) % 360.0 - 180.0
    return np.abs(off) <= 0.5 * x_fov


def _pitch_member(pitch, y_fov):
    return np.abs(_PITCH_CELLS - pitch) <= 0.5 * y_fov


def grid_iou(a, b):
    """IoU of two degree boxes [yaw, pitch, x_fov, y_fov] by counting 0.25 deg cells.

    Membership is a product of a yaw test and a pitch test, so cell counts
    factor into row and column counts (exactly what a full 2D mask would give).
    """
    ya, pa = _yaw_member(a[0], a[2]), _pitch_member(a[1], a[3])
    yb, pb = _yaw_member(b[0], b[2]), _pitch_member(b[1], b[3])
    n_a = ya.sum() * pa.sum()
    n_b = yb.sum() * pb.sum()
    inter = (ya & yb).sum() * (pa & pb).sum()
    union = n_a + n_b - inter
    return inter / union if union else 0.0


def grid_iou_2d(a, b):
    """Same count with explicit 2D masks; used to check the separable shortcut."""
    ma = _pitch_member(a[1], a[3])[:, None] & _yaw_member(a[0], a[2])[None, :]
    mb = _pitch_member(b[1], b[3])[:, None] & _yaw_member(b[0], b[2])[None, :]
    union = (ma | mb).sum()
    return (ma & mb).sum() / union if union else 0.0


def ray(yaw, pitch):
    """Unit vector with +z front, +x right, +y up (radians in)."""
    return np.array([math.cos(pitch) * math.sin(yaw), math.sin(pitch), math.cos(pitch) * math.cos(yaw)])


def facing_rotation(yaw, pitch):
    """Rotation taking the front axis onto the (yaw, pitch) direction, no roll."""
    return Rotation.from_euler("YX", [yaw, -pitch])


def reorient_oracle(target, front):
    """Ray of ``target`` expressed in the frame whose front is ``front`` (radian pairs)."""
    return facing_rotation(*front).inv().apply(ray(*target))


def camera_rotate_oracle(target, turn):
    """Ray after the observer turns right by ``turn`` about the vertical axis."""
    return Rotation.from_euler("Y", -turn).apply(ray(*target))


def vln_closed_form(episodes, radius=3.0):
    """Plain-loop NE/OSR/SR/SPL from episode dicts."""
    ne = osr = sr = spl = 0.0
    for ep in episodes:
        traj = [np.asarray(p, float) for p in ep["trajectory"]]
        goal = np.asarray(ep["goal"], float)
        dists = [math.dist(p, goal) for p in traj]
        p_len = ep.get("executed_path_length")
        if p_len is None:
            p_len = sum(math.dist(traj[i], traj[i + 1]) for i in range(len(traj) - 1))
        l_len = ep["shortest_path_length"]
        success = dists[-1] <= radius
        ne += dists[-1]
        sr += success
        osr += min(dists) <= radius
        spl += success * l_len / max(p_len, l_len)
    n = len(episodes)
    return {"NE": ne / n, "OSR": osr / n, "SR": sr / n, "SPL": spl / n}
