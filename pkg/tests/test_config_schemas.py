import json

import pytest

from panokit import fixture as fx
from panokit.config import ConfigError, PipelineConfig, config_from_mapping, load_config
from panokit.schemas import (SchemaError, detections_doc, load_detections, load_redetections, parse_redetection,
                             redetection_doc, write_jsonl)


def test_config_hash_tracks_values():
    a, b = PipelineConfig(), PipelineConfig()
    assert a.sha256 == b.sha256
    assert config_from_mapping({"confidence": 0.35}).sha256 != a.sha256


@pytest.mark.parametrize("doc,msg", [({"bogus": 1}, "unknown config keys"), ({"confidence": 1.5}, "confidence"),
                                     ({"seed": 1.5}, "seed"), ({"consistency_check": "yes"}, "consistency_check"),
                                     ({"mixture": "weird"}, "mixture")])
def test_config_rejects(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_mapping(doc)


def test_load_yaml_and_json(tmp_path):
    (tmp_path / "c.yaml").write_text("confidence: 0.4\npitch_rings_deg: [0, 30]\nedge_cap: 3\n")
    cfg = load_config(str(tmp_path / "c.yaml"))
    assert cfg.confidence == 0.4 and cfg.pitch_rings_deg == (0.0, 30.0) and cfg.edge_cap == 3
    (tmp_path / "c.json").write_text(json.dumps({"nms_iou": 0.45}))
    assert load_config(str(tmp_path / "c.json")).nms_iou == 0.45
    (tmp_path / "bad.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "bad.yaml"))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))


def test_detections_round_trip(tmp_path, fixture_data):
    doc = detections_doc(fx.PANORAMA_ID, fixture_data.detections, "erp.png", fx.WIDTH, fx.HEIGHT, "depth.npy")
    write_jsonl(tmp_path / "d.jsonl", [doc])
    panos = load_detections(tmp_path / "d.jsonl")
    assert len(panos) == 1
    got = panos[0]
    assert got.panorama_id == fx.PANORAMA_ID and got.depth_path == "depth.npy"
    assert [len(v.boxes) for v in got.views] == [len(v.boxes) for v in fixture_data.detections]
    assert got.views[0].boxes[0] == fixture_data.detections[0].boxes[0]


def test_detections_schema_error_names_path(tmp_path, fixture_data):
    doc = detections_doc(fx.PANORAMA_ID, fixture_data.detections)
    del doc["views"][1]["boxes"][0]["confidence"]
    write_jsonl(tmp_path / "d.jsonl", [doc])
    with pytest.raises(SchemaError) as err:
        load_detections(tmp_path / "d.jsonl")
    assert "line 1" in str(err.value) and "views[1]" in str(err.value) and "confidence" in str(err.value)


def test_invalid_json_line(tmp_path):
    (tmp_path / "d.jsonl").write_text("\n{oops\n")
    with pytest.raises(SchemaError, match="line 2"):
        list(load_redetections(tmp_path / "d.jsonl"))


def test_redetection_round_trip(fixture_data):
    r = fixture_data.redetections[0]
    back = parse_redetection(redetection_doc(r, fx.PANORAMA_ID))
    assert back.candidate_id == r.candidate_id
    assert back.bfov.to_degrees() == pytest.approx(r.bfov.to_degrees())
    assert back.phrase == r.phrase and tuple(back.attributes) == tuple(r.attributes)
