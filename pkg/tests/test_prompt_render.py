import hashlib

import numpy as np
import pytest

from panokit.prompt_render import (GridStyle, emit_prompts, grid_masks, pitch_row, prompt_sha256, render_grid,
                                   round_half_up, yaw_column)
from panokit.sphere_geom import ErpImage


def test_prompt_bundle_stable():
    bundle = emit_prompts()
    names = [k for k, _ in bundle.items()]
    assert names == ["system_prompt", "text_appendix", "visual_appendix"]
    assert bundle.sha256 == prompt_sha256() == emit_prompts().sha256
    for _, text in bundle.items():
        assert text.endswith("\n")
        assert all(line == line.rstrip() for line in text.splitlines())
        assert "\\" not in text and "$" not in text


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, -0.5, 2.49)] == [1, 2, 3, 0, 2]


def test_column_and_row_helpers():
    assert yaw_column(-180, 1600) == 0 == yaw_column(180, 1600)
    assert yaw_column(0, 1600) == 800
    assert pitch_row(90, 800) == 0
    assert pitch_row(-90, 800) == 799
    assert pitch_row(0, 800) == 400


def test_grid_on_odd_sizes():
    masks = grid_masks(1001, 499, GridStyle())
    assert masks["yaw"].all(axis=0).sum() == 12
    assert masks["pitch"].all(axis=1).sum() == 13


def test_style_validation():
    with pytest.raises(ValueError):
        GridStyle(yaw_step=25)


def test_labels_can_be_disabled():
    erp = ErpImage(np.zeros((400, 800, 3), dtype=np.uint8))
    with_labels, _ = render_grid(erp)
    plain, drawn = render_grid(erp, GridStyle(labels=False))
    assert (with_labels.data == 255).all(axis=2).any()
    assert not (plain.data == 255).all(axis=2).any()
    assert np.array_equal(drawn, plain.data.any(axis=2))


def test_depth_input_promoted_to_rgb():
    depth = ErpImage(np.linspace(0.5, 10, 400 * 800, dtype=np.float32).reshape(400, 800))
    out, _ = render_grid(depth)
    assert out.data.dtype == np.uint8 and out.data.shape == (400, 800, 3)


def test_render_deterministic():
    erp = ErpImage(np.random.default_rng(0).integers(0, 255, (200, 400, 3), dtype=np.uint8))
    a, _ = render_grid(erp)
    b, _ = render_grid(erp)
    assert hashlib.sha256(a.data.tobytes()).digest() == hashlib.sha256(b.data.tobytes()).digest()
