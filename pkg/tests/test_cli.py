import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from panokit.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["make-fixture", "--out", str(root / "fx")]) == 0
    assert main(["build-graph", "--detections", str(root / "fx" / "detections.jsonl"),
                 "--redetections", str(root / "fx" / "redetections.jsonl"), "--out", str(root / "graph.json")]) == 0
    assert main(["gen-tasks", "--graph", str(root / "graph.json"), "--out", str(root / "tasks.jsonl"),
                 "--seed", "3"]) == 0
    return root


def test_fixture_files(workdir):
    names = sorted(p.name for p in (workdir / "fx").iterdir())
    assert names == ["depth.npy", "detections.jsonl", "efficiency.json", "episodes.jsonl", "erp.png",
                     "redetections.jsonl", "targets.jsonl"]
    assert np.load(workdir / "fx" / "depth.npy").shape == (400, 800)


def test_graph_and_drop_report_carry_config_hash(workdir):
    graph = json.loads((workdir / "graph.json").read_text())
    drops = json.loads((workdir / "graph.drops.json").read_text())
    assert graph["meta"]["config_sha256"] == drops["config_sha256"]
    assert drops["drop_counts"]["semantic"] == 1
    header = json.loads((workdir / "tasks.jsonl").read_text().splitlines()[0])
    assert header["config_sha256"] and header["prompt_sha256"]


def test_threshold_flag_changes_hash(workdir, tmp_path):
    out = tmp_path / "g.json"
    assert main(["build-graph", "--detections", str(workdir / "fx" / "detections.jsonl"),
                 "--redetections", str(workdir / "fx" / "redetections.jsonl"), "--out", str(out),
                 "--semantic-iou", "0.75"]) == 0
    drops = json.loads((tmp_path / "g.drops.json").read_text())
    assert drops["drop_counts"]["semantic"] == 2
    base = json.loads((workdir / "graph.drops.json").read_text())
    assert drops["config_sha256"] != base["config_sha256"]


def test_oracle_and_random_answers(workdir, tmp_path, capsys):
    assert main(["answer", "--tasks", str(workdir / "tasks.jsonl"), "--graph", str(workdir / "graph.json"),
                 "--out", str(tmp_path / "o.jsonl")]) == 0
    assert main(["eval", "bench", "--tasks", str(workdir / "tasks.jsonl"), "--predictions",
                 str(tmp_path / "o.jsonl"), "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["report"]["mc"]["accuracy"] == 1.0 and report["config_sha256"]
    assert main(["answer", "--tasks", str(workdir / "tasks.jsonl"), "--mode", "random", "--seed", "1",
                 "--out", str(tmp_path / "r.jsonl")]) == 0
    assert main(["eval", "bench", "--tasks", str(workdir / "tasks.jsonl"), "--predictions",
                 str(tmp_path / "r.jsonl"), "--out", str(tmp_path / "r2.json")]) == 0
    assert json.loads((tmp_path / "r2.json").read_text())["report"]["mc"]["accuracy"] < 0.5


def test_eval_vln_efficiency_hstar(workdir, tmp_path, capsys):
    fx = workdir / "fx"
    assert main(["eval", "vln", "--episodes", str(fx / "episodes.jsonl"), "--out", str(tmp_path / "v.json"),
                 "--figures", str(tmp_path / "figs")]) == 0
    vln = json.loads((tmp_path / "v.json").read_text())["report"]
    assert vln["SPL"] == pytest.approx(0.5)
    assert main(["eval", "efficiency", "--rows", str(fx / "efficiency.json"), "--out", str(tmp_path / "e.json")]) == 0
    out = capsys.readouterr().out
    assert "1.79×" in out and "1.00×" in out
    preds = [{"task_id": t["id"], "raw_text": f"[{t.get('yaw', t.get('region', [0])[0])}, 0]"}
             for t in map(json.loads, (fx / "targets.jsonl").read_text().splitlines())]
    (tmp_path / "p.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))
    assert main(["eval", "hstar", "--targets", str(fx / "targets.jsonl"), "--predictions",
                 str(tmp_path / "p.jsonl"), "--out", str(tmp_path / "h.json")]) == 0
    assert json.loads((tmp_path / "h.json").read_text())["report"]["yaw_acc"] == 1.0


def test_figures_are_png_without_metadata(tmp_path, workdir):
    assert main(["eval", "vln", "--episodes", str(workdir / "fx" / "episodes.jsonl"),
                 "--figures", str(tmp_path)]) == 0
    pngs = list(tmp_path.glob("*.png"))
    assert pngs
    for p in pngs:
        with Image.open(p) as im:
            assert "Software" not in im.info


def test_project_and_render_grid(workdir, tmp_path):
    assert main(["project", str(workdir / "fx" / "erp.png"), "--out", str(tmp_path / "v"), "--view-size", "64"]) == 0
    manifest = json.loads((tmp_path / "v" / "views.json").read_text())
    assert len(manifest["views"]) == 6 and manifest["erp"] == "erp.png"
    with Image.open(tmp_path / "v" / "view_00.png") as im:
        assert im.size == (64, 64)
    assert main(["render-grid", str(workdir / "fx" / "erp.png"), "--out", str(tmp_path / "g.png")]) == 0
    with Image.open(tmp_path / "g.png") as im:
        assert im.size == (800, 400)


def test_prompts_and_ssca(tmp_path, capsys):
    assert main(["prompts", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["system_prompt.txt", "text_appendix.txt",
                                                        "visual_appendix.txt"]
    assert main(["ssca-check", "--dims", "N=4,d=8,h=2", "--seeds", "2", "--save-params", str(tmp_path / "p.bin")]) == 0
    assert main(["ssca-check", "--dims", "N=4,d=8,h=2", "--seeds", "1", "--params", str(tmp_path / "p.bin")]) == 0
    assert "FAIL" not in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["ssca-check", "--dims", "N=4,d=10,h=3"],
    ["eval", "bench"],
    ["build-graph", "--detections", "/nonexistent.jsonl", "--redetections", "/nonexistent.jsonl", "--out", "x"],
    ["gen-tasks", "--graph", "/nonexistent.json", "--out", "x"],
    ["eval", "vln", "--episodes", "/nonexistent.jsonl"],
])
def test_user_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_schema_error_exit_2(workdir, tmp_path, capsys):
    doc = json.loads((workdir / "fx" / "detections.jsonl").read_text())
    doc["views"][0]["boxes"][0]["x_min"] = "left"
    (tmp_path / "d.jsonl").write_text(json.dumps(doc) + "\n")
    code = main(["build-graph", "--detections", str(tmp_path / "d.jsonl"), "--redetections",
                 str(workdir / "fx" / "redetections.jsonl"), "--out", str(tmp_path / "g.json")])
    assert code == 2
    assert "x_min" in capsys.readouterr().err


def test_bad_ratios_exit_2(workdir, tmp_path, capsys):
    code = main(["gen-tasks", "--graph", str(workdir / "graph.json"), "--out", str(tmp_path / "t.jsonl"),
                 "--ratios", "semantic=0.5,angular=0.2", "--total", "10"])
    assert code == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "panokit.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("make-fixture", "project", "build-graph", "gen-tasks", "answer", "eval", "ssca-check", "prompts",
                "render-grid"):
        assert cmd in res.stdout
