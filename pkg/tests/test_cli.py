import json
import re

import pytest

from planocheck.cli import EXIT_ERROR, EXIT_NONCOMPLIANT, EXIT_OK, main
from planocheck.errors import FormatError
from planocheck.pipeline import Config, parse_config
from planocheck.planogram import build_planogram, serialize_planogram
from planocheck.scene import SynthSpec, save_scene, synthesize

ROWS = [["A"] * 5 + ["B"] * 3, ["C"] * 8]


@pytest.fixture
def shelf(tmp_path):
    p = build_planogram(ROWS)
    (tmp_path / "plan.xml").write_text(serialize_planogram(p))

    def scene(name, **kw):
        spec = dict(features=6, descriptor_noise=0.05, position_jitter=1.2, clutter=10, seed=3)
        spec.update(kw)
        s, _ = synthesize(SynthSpec(p, **spec))
        save_scene(s, tmp_path / name)
        return str(tmp_path / name)

    return tmp_path, str(tmp_path / "plan.xml"), scene


def run(*argv):
    return main([str(a) for a in argv])


def test_compliant_scene_exits_zero(shelf):
    tmp, plan, scene = shelf
    out = tmp / "r.json"
    assert run("check", "--planogram", plan, "--scene", scene("ok.json"), "--out", out) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["overall_accuracy"] == 1.0


def test_missing_product_exits_three_and_lists_slot(shelf):
    tmp, plan, scene = shelf
    out = tmp / "r.json"
    code = run("check", "--planogram", plan, "--scene", scene("miss.json", missing=[["C", 4]]),
               "--out", out)
    assert code == EXIT_NONCOMPLIANT
    rep = json.loads(out.read_text())
    c = [t for t in rep["types"] if t["type"] == "C"][0]
    assert [1, 4] in c["missing_slots"]


def test_errors_exit_one(shelf, capsys):
    tmp, plan, scene = shelf
    assert run("check", "--planogram", tmp / "nope.xml", "--scene", scene("s.json")) == EXIT_ERROR
    (tmp / "bad.xml").write_text("<planogram><shelf>")
    assert run("check", "--planogram", tmp / "bad.xml", "--scene", scene("s.json")) == EXIT_ERROR
    (tmp / "bad.json").write_text("{not json")
    assert run("check", "--planogram", plan, "--scene", tmp / "bad.json") == EXIT_ERROR
    assert run("check", "--scene", scene("s.json")) == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_print_config(capsys, tmp_path):
    assert run("check", "--print-config", "--seed", 7) == EXIT_OK
    text = capsys.readouterr().out
    assert "seed = 7" in text and "tau_a = 0.35" in text and "refine = false" in text
    # the printed config parses back to the same values
    assert parse_config(text) == Config().updated(seed=7)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text("# tuned\nmax_per_region = 10\nseed = 4  # fixed\nrefine = yes\n")
    assert run("check", "--print-config", "--config", cfg, "--seed", 9) == EXIT_OK
    text = capsys.readouterr().out
    assert "max_per_region = 10" in text and "seed = 9" in text and "refine = true" in text


def test_config_errors():
    with pytest.raises(FormatError):
        parse_config("nonsense = 1")
    with pytest.raises(FormatError):
        parse_config("seed 4")
    with pytest.raises(FormatError):
        parse_config("seed = four")
    with pytest.raises(FormatError):
        parse_config("refine = maybe")


def test_bad_config_file_exits_one(shelf):
    tmp, plan, scene = shelf
    (tmp / "c.conf").write_text("colour = blue\n")
    assert run("check", "--config", tmp / "c.conf", "--planogram", plan,
               "--scene", scene("s.json")) == EXIT_ERROR


def test_overlay_has_one_circle_per_detection(shelf):
    tmp, plan, scene = shelf
    out, svg = tmp / "r.json", tmp / "o.svg"
    run("check", "--planogram", plan, "--scene", scene("s.json", missing=[["A", 1]]),
        "--out", out, "--overlay", svg)
    rep = json.loads(out.read_text())
    n = sum(len(d["circles"]) for d in rep["detections"])
    text = svg.read_text()
    assert text.count("<circle") == n == 15
    fills = {d["type"]: set() for d in rep["detections"]}
    for g in re.finditer(r'data-type="(\w+)">(.*?)</g>', text, re.S):
        fills[g.group(1)] |= set(re.findall(r'fill="(#\w+)"', g.group(2)))
    assert all(len(f) == 1 for f in fills.values())
    assert len({next(iter(f)) for f in fills.values()}) == len(fills)


def test_reports_are_byte_identical(shelf):
    tmp, plan, scene = shelf
    s = scene("s.json", missing=[["B", 0]], clutter=25)
    outs = []
    for k, extra in enumerate([[], [], ["--jobs", 2]]):
        out = tmp / f"r{k}.json"
        run("check", "--planogram", plan, "--scene", s, "--out", out, "--seed", 5, *extra)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_report_command(shelf, capsys):
    tmp, plan, scene = shelf
    out = tmp / "r.json"
    run("check", "--planogram", plan, "--scene", scene("s.json", missing=[["C", 0]]), "--out", out)
    assert run("report", out, "--overlay", tmp / "o.svg") == EXIT_OK
    text = capsys.readouterr().out
    assert "overall accuracy" in text and "missing: (1,0)" in text
    assert (tmp / "o.svg").read_text().startswith("<?xml")


def test_synth_command(shelf):
    tmp, plan, _ = shelf
    (tmp / "spec.json").write_text(json.dumps({"features": 5, "clutter": 7, "seed": 2,
                                               "missing": [["A", 0]]}))
    assert run("synth", "--planogram", plan, "--spec", tmp / "spec.json", "--out", tmp / "s.json") == EXIT_OK
    data = json.loads((tmp / "s.json").read_text())
    assert len(data["keypoints"]) == 5 * 15 + 7
    (tmp / "bad.json").write_text(json.dumps({"colour": 1}))
    assert run("synth", "--planogram", plan, "--spec", tmp / "bad.json") == EXIT_ERROR


def test_refine_flag_runs(shelf):
    tmp, plan, scene = shelf
    out = tmp / "r.json"
    assert run("check", "--planogram", plan, "--scene", scene("s.json"), "--out", out, "--refine") == EXIT_OK
    assert json.loads(out.read_text())["exemplars"]
