import json
import math

import numpy as np
import pytest

from conftest import GOLDEN
from panokit import frame_transform as ft
from panokit.metadata_graph import (DuplicateIdError, EntityNode, GraphSchemaError, aggregate_depth, build_graph,
                                    compute_edge, parse_graph, serialize_graph)
from panokit.sphere_geom import Bfov, ErpImage


def _node(i, yaw, pitch=0.0, dist=None):
    return EntityNode(f"n{i}", "thing", Bfov.from_degrees(yaw, pitch, 10, 10), distance=dist)


def test_aggregate_depth_median_inside_footprint():
    depth = np.full((100, 200), 10.0, dtype=np.float32)
    depth[40:60, 95:105] = 2.0
    d = aggregate_depth(ErpImage(depth), Bfov.from_degrees(0, 0, 16, 16))
    assert d == 2.0
    d = aggregate_depth(ErpImage(depth), Bfov.from_degrees(0, 0, 60, 60))
    assert d == 10.0


def test_aggregate_depth_wraps_seam():
    depth = np.full((100, 200), 10.0, dtype=np.float32)
    depth[:, :5] = 3.0
    depth[:, -5:] = 3.0
    assert aggregate_depth(ErpImage(depth), Bfov.from_degrees(180, 0, 16, 16)) == 3.0


def test_edges_are_antisymmetric():
    a, b = _node(0, 40, 10, 2.0), _node(1, -20, 0, 5.0)
    ab, ba = compute_edge(a, b), compute_edge(b, a)
    assert ab.delta_yaw == pytest.approx(-ba.delta_yaw)
    assert ab.delta_depth == pytest.approx(-ba.delta_depth)
    assert ab.r2d == ft.opposite_label(ba.r2d)
    assert ab.r3d == ba.r3d.reversed()


def test_edge_wraps_across_seam():
    e = compute_edge(_node(0, 175), _node(1, -175))
    assert math.degrees(e.delta_yaw) == pytest.approx(-10)
    assert e.r2d == "left"


def test_dead_zone():
    assert compute_edge(_node(0, 4.9), _node(1, 0)).r2d == "aligned"
    assert compute_edge(_node(0, 5.1), _node(1, 0)).r2d == "right"


def test_build_graph_sorted_nodes_and_cap():
    nodes = [_node(i, yaw) for i, yaw in enumerate([100, -50, 10, 20, 170])]
    g = build_graph(nodes)
    assert [n.id for n in g.nodes] == sorted(n.id for n in nodes)
    assert len(g.edges) == 20 and not g.partial
    capped = build_graph(nodes, edge_cap=1)
    assert capped.partial and capped.edge_cap == 1
    pairs = {(e.from_id, e.to_id) for e in capped.edges}
    assert all((b, a) in pairs for a, b in pairs)
    assert ("n2", "n3") in pairs
    with pytest.raises(DuplicateIdError):
        build_graph(nodes + [nodes[0]])


def test_no_depth_means_no_3d_relation():
    g = build_graph([_node(0, 0), _node(1, 30)])
    assert all(e.r3d is None and e.delta_depth is None for e in g.edges)


def test_serialize_round_trip(fixture_graph):
    text = serialize_graph(fixture_graph)
    again = serialize_graph(parse_graph(text))
    assert again == text


def test_golden_graph_relations_recomputed_independently():
    doc = json.loads((GOLDEN / "fixture_graph.json").read_text())
    nodes = {n["id"]: n for n in doc["nodes"]}
    for e in doc["edges"]:
        a, b = nodes[e["from"]], nodes[e["to"]]
        d_yaw = (a["bfov"][0] - b["bfov"][0] + 180) % 360 - 180
        d_pitch = a["bfov"][1] - b["bfov"][1]
        parts = [p for p, v in (("right", d_yaw > 5), ("left", d_yaw < -5), ("above", d_pitch > 5),
                                ("below", d_pitch < -5)) if v]
        assert e["r2d"] == ("-".join(parts) if parts else "aligned")
        assert e["delta_depth"] == pytest.approx(a["distance"] - b["distance"])


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.pop("nodes"), "nodes"),
    (lambda d: d.update(schema_version=99), "schema_version"),
    (lambda d: d["nodes"][0].pop("bfov"), "nodes[0]"),
])
def test_parse_errors_name_the_field(fixture_graph, mutate, where):
    doc = json.loads(serialize_graph(fixture_graph))
    mutate(doc)
    with pytest.raises(GraphSchemaError, match=where.replace("[", r"\[").replace("]", r"\]")):
        parse_graph(json.dumps(doc))


def test_parse_rejects_bad_json():
    with pytest.raises(GraphSchemaError):
        parse_graph("{not json")
