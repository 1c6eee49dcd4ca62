import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from panokit.fixture import project_bfov_box
from panokit.projection import PerspBox, PerspViewSpec, generate_view_set
from panokit.sphere_geom import Bfov
from panokit.verify_merge import (ReDetection, VerificationError, ViewDetections, box_iou, cover_bfovs,
                                  filter_confidence, merge_cross_view, nms_view, run_pipeline, semantic_verify,
                                  verified_entities)

VIEW = PerspViewSpec.from_degrees(0, 0, 90, 90, 200, 200)


def _dets(*boxes, view=VIEW):
    return ViewDetections(view, boxes, "p")


def test_confidence_is_inclusive():
    d = _dets(PerspBox(0, 0, 10, 10, 0.3, "a", "x"), PerspBox(0, 0, 10, 10, 0.2999, "a", "y"))
    assert [b.id for b in filter_confidence(d, 0.3).boxes] == ["x"]


def test_nms_suppresses_only_strictly_above_threshold():
    a = PerspBox(0, 0, 10, 10, 0.9, "cup", "a")
    # IoU exactly 0.5: 10x10 boxes overlapping on 2/3 of width -> inter 66.67, union 133.33
    b = PerspBox(10 / 3, 0, 10 / 3 + 10, 10, 0.8, "cup", "b")
    assert box_iou(a, b) == pytest.approx(0.5)
    kept = nms_view(_dets(a, b), 0.5 + 1e-9)
    assert [x.id for x in kept.boxes] == ["a", "b"]
    kept = nms_view(_dets(a, b), 0.49)
    assert [x.id for x in kept.boxes] == ["a"]


def test_nms_is_per_label():
    a = PerspBox(0, 0, 10, 10, 0.9, "cup", "a")
    b = PerspBox(0, 0, 10, 10, 0.8, "Cup ", "b")
    c = PerspBox(0, 0, 10, 10, 0.8, "mug", "c")
    assert [x.id for x in nms_view(_dets(a, b, c)).boxes] == ["a", "c"]


@given(st.lists(st.tuples(st.floats(0, 150), st.floats(0, 150), st.floats(5, 50), st.floats(5, 50),
                          st.floats(0.01, 1.0)), min_size=1, max_size=12))
def test_nms_survivors_pairwise_below_threshold(raw):
    boxes = [PerspBox(x, y, x + w, y + h, c, "obj", f"b{i}") for i, (x, y, w, h, c) in enumerate(raw)]
    kept = nms_view(_dets(*boxes), 0.5).boxes
    assert kept
    for i in range(len(kept)):
        for j in range(i + 1, len(kept)):
            assert box_iou(kept[i], kept[j]) <= 0.5
    top = max(boxes, key=lambda b: b.confidence)
    assert any(k.confidence == top.confidence for k in kept)


def test_boxes_outside_view_rejected():
    with pytest.raises(VerificationError):
        _dets(PerspBox(0, 0, 300, 10, 0.9, "a"))


def test_cover_bfovs_across_seam():
    c = cover_bfovs([Bfov.from_degrees(175, 0, 10, 10), Bfov.from_degrees(-175, 5, 10, 10)])
    yaw, pitch, xf, yf = c.to_degrees()
    assert abs(abs(yaw) - 180) < 1e-9
    assert xf == pytest.approx(20)
    assert yf == pytest.approx(15)


def _two_view_entity(bfov, label="chair"):
    views = generate_view_set(math.radians(120), math.radians(60), out_width=256)
    out = []
    for vi, v in enumerate(views):
        box = project_bfov_box(v, bfov)
        out.append(ViewDetections(v, () if box is None else (PerspBox(*box, 0.9 - 0.01 * vi, label, f"e@v{vi}"),), "p"))
    return out


def test_merge_links_same_entity_across_views():
    per_view = _two_view_entity(Bfov.from_degrees(30, 0, 20, 20))
    res = merge_cross_view(per_view)
    assert len(res.candidates) == 1
    cand = res.candidates[0]
    assert cand.support_count >= 2
    assert cand.id == min(cand.member_ids, key=lambda i: int(i.split("v")[1]))  # highest confidence anchors
    assert cand.bfov.to_degrees()[0] == pytest.approx(30, abs=0.5)


def test_merge_never_crosses_labels():
    a = _two_view_entity(Bfov.from_degrees(30, 0, 20, 20), "chair")
    b = _two_view_entity(Bfov.from_degrees(30, 0, 20, 20), "table")
    per_view = [ViewDetections(x.view, x.boxes + tuple(PerspBox(bb.x_min, bb.y_min, bb.x_max, bb.y_max, bb.confidence,
                                                                  bb.label, "t" + bb.id) for bb in y.boxes), "p")
                for x, y in zip(a, b)]
    assert len(merge_cross_view(per_view).candidates) == 2


def test_consistency_drop_needs_min_support():
    per_view = _two_view_entity(Bfov.from_degrees(30, 0, 20, 20))
    # keep the entity in one view only, although two views contain it fully
    seen = [i for i, pv in enumerate(per_view) if pv.boxes]
    assert len(seen) >= 2
    single = [pv if i == seen[0] else pv.with_boxes(()) for i, pv in enumerate(per_view)]
    assert len(merge_cross_view(single, min_support=2).dropped) == 1
    assert len(merge_cross_view(single, min_support=2, consistency_check=False).candidates) == 1


def test_mixed_panoramas_rejected():
    a = ViewDetections(VIEW, (), "p1")
    b = ViewDetections(VIEW, (), "p2")
    with pytest.raises(VerificationError):
        merge_cross_view([a, b])


def test_semantic_verify_strict_threshold():
    per_view = _two_view_entity(Bfov.from_degrees(30, 0, 20, 20))
    cand = merge_cross_view(per_view).candidates[0]
    r = ReDetection(cand.id, cand.bfov)
    assert semantic_verify([cand], [r], 0.999).kept
    assert semantic_verify([cand], [r], 1.0).rejected
    assert semantic_verify([cand], []).unverified
    with pytest.raises(VerificationError):
        semantic_verify([cand], [ReDetection("ghost", cand.bfov)])


def test_pipeline_reports_stale_and_unknown(fixture_data):
    redets = list(fixture_data.redetections) + [ReDetection("dup_chair", Bfov.from_degrees(0, 0, 5, 5))]
    res = run_pipeline(fixture_data.detections, redets)
    assert res.stale_redets == ["dup_chair"]
    with pytest.raises(VerificationError):
        run_pipeline(fixture_data.detections, [ReDetection("nope", Bfov.from_degrees(0, 0, 5, 5))])


def test_verified_entities_carry_redetection_semantics(pipeline_result):
    from panokit.fixture import ENTITIES

    nodes = {n.id.split("@")[0]: n for n in verified_entities(pipeline_result)}
    for e in ENTITIES:
        assert nodes[e.key].phrase == e.phrase
        assert nodes[e.key].attributes == tuple(e.attributes)
    for n in nodes.values():
        cand = next(c for c in pipeline_result.candidates if c.id == n.id)
        assert n.footprint == cand.bfov
        assert n.context["members"]
