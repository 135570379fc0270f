import os
from pathlib import Path

import pytest

import vidrefine

DATA = Path(os.environ.get("VIDREFINE_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_similarity():
    assert vidrefine.normalize("The Ball, falls!") == ["the", "ball", "falls"]
    assert vidrefine.similarity("a b c", "a b d") == 0.5
    assert vidrefine.similarity("", "") == 1.0
    assert vidrefine.similarity("a b c", "c b a", metric="token_edit") < 1.0
    report = vidrefine.converged("the ball falls", "The ball falls.", 0.9)
    assert report["converged"] and report["value"] == 1.0


def test_errors_carry_their_kind():
    with pytest.raises(vidrefine.VidrefineError, match="ValidationError"):
        vidrefine.converged("a", "b", 1.5)
    ctx = vidrefine.default_context()
    ctx["template"] = "no placeholders"
    with pytest.raises(vidrefine.VidrefineError, match="MissingPlaceholder"):
        vidrefine.render_analyst_input("x", ctx)


def test_render():
    ctx = {"knowledge_base": "KB", "instructions": "INS", "template": "{B}|{I}|{description}"}
    assert vidrefine.render_analyst_input("ball", ctx) == "KB|INS|ball"
    assert "ball" in vidrefine.render_analyst_input("ball")


def test_ensemble_and_report():
    sel = vidrefine.select_best(["r1", "r2"], ["s1", "s2"], [[40.0, 50.0], [60.0, None]])
    assert sel["choice"] == {"s1": "r2", "s2": "r1"}
    assert sel["aggregate"] == 55.0
    assert sel["run_aggregates"] == [50.0, 50.0]
    with pytest.raises(vidrefine.VidrefineError, match="UnscorableSample"):
        vidrefine.select_best(["r1"], ["s1"], [[None]])
    rep = vidrefine.report(62.38, 56.31)
    assert rep["delta_rounded"] == 6.07
    assert vidrefine.format_delta(rep["delta_rounded"]) == "+6.07"


def test_mock_run_and_resume(tmp_path):
    samples = vidrefine.load_dataset(DATA / "mock" / "dataset.jsonl")
    assert [s["id"] for s in samples] == ["ball_ledge", "domino_chain", "water_pour"]

    out = tmp_path / "run"
    manifest = vidrefine.run(DATA / "mock" / "dataset.jsonl", DATA / "mock" / "config.json", out, mock=True)
    assert manifest["completed"]
    counts = {sid: len(r["iterations"]) for sid, r in manifest["results"].items()}
    assert counts == {"ball_ledge": 1, "domino_chain": 2, "water_pour": 4}
    assert vidrefine.load_manifest(out) == manifest
    assert vidrefine.resume(out, mock=True) == manifest
    assert (out / "samples" / "water_pour" / "iter_4" / "prompt.txt").is_file()

    with pytest.raises(vidrefine.VidrefineError, match="CollisionError"):
        vidrefine.run(DATA / "mock" / "dataset.jsonl", DATA / "mock" / "config.json", out, mock=True)
