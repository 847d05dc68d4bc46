import csv
import json

import numpy as np
import pytest

from pmsci import imgcore, simcam
from pmsci.cli import main
from pmsci.dataset import discover_dataset, expand_inputs, read_list_file
from pmsci.fingerprint import load_fingerprint
from pmsci.report import SCHEMA


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def tree(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--cameras", "2", "--images", "30", "--size", "64",
                 "--seed", "5", "--out", str(root)]) == 0
    return root


@pytest.fixture
def captures(tmp_path):
    cam = simcam.make_camera(64, 64, strength=0.05, noise_std=1.0, seed=9)
    paths = []
    for i in range(8):
        p = tmp_path / f"shot{i}.png"
        imgcore.save_image(simcam.capture(cam, simcam.synth_scene(64, 64, seed=i), seed=i), p)
        paths.append(p)
    return paths


def test_simulate_layout(tree):
    manifest = json.loads((tree / "manifest.json").read_text())
    assert [c["label"] for c in manifest["cameras"]] == ["cam01", "cam02"]
    cam = tree / "cam01"
    assert len(list(cam.glob("out-pm-after-*.png"))) == 30
    assert len(list(cam.glob("out-pm-before-*.png"))) == 30
    assert len(read_list_file(cam / "fingerprint_list.txt")) == 25
    assert len(read_list_file(cam / "test_list.txt")) == 5
    mix = read_list_file(cam / "unknown_mix_list.txt")
    assert [p.name.startswith("out-pm-after-") for p in mix] == [True, True, False, False, False]
    assert load_fingerprint(cam / "fingerprint.bin").shape == (50, 50)
    cams = discover_dataset(tree)
    assert [len(c.test_after) for c in cams] == [5, 5]


def test_simulate_deterministic(tree, tmp_path):
    assert main(["simulate", "--cameras", "2", "--images", "30", "--size", "64",
                 "--seed", "5", "--out", str(tmp_path)]) == 0
    for p in sorted((tree / "cam02").iterdir()):
        assert (tmp_path / "cam02" / p.name).read_bytes() == p.read_bytes(), p.name


def test_fingerprint_roundtrip_and_errors(capsys, captures, tmp_path):
    out = tmp_path / "fp.bin"
    code, text, _ = run(capsys, "fingerprint", *captures[:6], "--out", out, "--label", "c9")
    assert code == 0
    meta = json.loads(text)
    assert (meta["n"], meta["rows"], meta["label"]) == (6, 64, "c9")
    fp = load_fingerprint(out)
    out2 = tmp_path / "fp2.bin"
    from pmsci.fingerprint import save_fingerprint
    save_fingerprint(fp, out2)
    assert out2.read_bytes() == out.read_bytes()

    code, _, err = run(capsys, "fingerprint", "--out", out)
    assert code == 2
    big = tmp_path / "big.png"
    imgcore.save_image(np.full((80, 80), 100.0), big)
    code, _, err = run(capsys, "fingerprint", captures[0], big, "--out", tmp_path / "x.bin")
    assert code == 1 and "64x64" in err and "80x80" in err
    code, _, err = run(capsys, "fingerprint", tmp_path / "nope.png", "--out", tmp_path / "y.bin")
    assert code == 1


def test_fingerprint_from_list_file(capsys, captures, tmp_path):
    lst = tmp_path / "list.txt"
    lst.write_text("".join(f"{p.name}\n" for p in captures[:4]))
    assert expand_inputs([lst]) == captures[:4]
    code, text, _ = run(capsys, "fingerprint", lst, "--out", tmp_path / "fp.bin")
    assert code == 0 and json.loads(text)["n"] == 4


def test_pce_modes(capsys, captures, tmp_path):
    fp = tmp_path / "fp.bin"
    assert main(["fingerprint", *map(str, captures[:6]), "--out", str(fp)]) == 0
    capsys.readouterr()
    code, text, _ = run(capsys, "pce", captures[7], "--fp", fp)
    res = json.loads(text)
    assert code == 0 and res["mode"] == "image" and res["pce"] > 50 and res["match"]
    assert res["peak"] == [0, 0]
    foreign = tmp_path / "foreign.png"
    other = simcam.make_camera(64, 64, strength=0.05, noise_std=1.0, seed=10)
    imgcore.save_image(simcam.capture(other, simcam.synth_scene(64, 64, seed=77)), foreign)
    code, text, _ = run(capsys, "pce", foreign, "--fp", fp)
    assert abs(json.loads(text)["pce"]) < 50
    code, text, _ = run(capsys, "pce", "--set", *captures[:6], "--fp", fp)
    assert json.loads(text)["mode"] == "set" and json.loads(text)["pce"] > 1000
    code, _, _ = run(capsys, "pce", "--fp", fp)
    assert code == 2
    code, _, _ = run(capsys, "pce", captures[0], "--fp", tmp_path / "missing.bin")
    assert code == 1


def test_anonymize_outputs(capsys, captures, tmp_path):
    out = tmp_path / "pm"
    code, text, _ = run(capsys, "anonymize", *captures[:2], "--out", out, "--seed", "4")
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["out-pm-after-shot0.png", "out-pm-after-shot1.png",
                     "out-pm-before-shot0.png", "out-pm-before-shot1.png",
                     "out-pm-report-shot0.json", "out-pm-report-shot1.json"]
    report = json.loads((out / "out-pm-report-shot0.json").read_text())
    for key in ("psnr_db", "mpr_percent", "patch_size", "iterations", "min_offset", "seed"):
        assert report[key] is not None
    assert imgcore.load_image(out / "out-pm-after-shot0.png").shape == (50, 50)
    out2 = tmp_path / "pm2"
    assert main(["anonymize", *map(str, captures[:2]), "--out", str(out2), "--seed", "4"]) == 0
    for p in out.glob("*.png"):
        assert (out2 / p.name).read_bytes() == p.read_bytes()


def test_attribute_end_to_end(capsys, tree, tmp_path):
    cam = tree / "cam01"
    out = tmp_path / "case"
    code, text, _ = run(capsys, "attribute", "--alpha", cam / "test_list.txt",
                        "--beta", tree / "cam02" / "unknown_mix_list.txt",
                        "--fp", cam / "fingerprint.bin", "--n", "2,3", "--K", "6",
                        "--sweep", "3,6", "--out", out)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema"] == SCHEMA and rep["scenario"] == 2
    assert [r["n"] for r in rep["runs"]] == [2, 3]
    for run_ in rep["runs"]:
        assert len(run_["subsets"]) == 6
        assert set(run_["metrics"]) >= {"recall_pct", "precision_pct", "selection_pct"}
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert [r["n"] for r in rows] == ["1*", "2", "3"]
    assert rows[0]["fused_size"] == "--"
    sweep = list(csv.DictReader((out / "sweep.csv").open()))
    assert [(r["K"], r["n"]) for r in sweep] == [("3", "2"), ("3", "3"), ("6", "2"), ("6", "3")]


def test_attribute_negative_control_reports_absent(capsys, tree, tmp_path):
    out = tmp_path / "neg"
    code, _, _ = run(capsys, "attribute", "--alpha", tree / "cam02" / "test_list.txt",
                     "--fp", tree / "cam01" / "fingerprint.bin", "--n", "3", "--K", "5",
                     "--out", out)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["runs"][0]["fusion"] is None
    assert rep["runs"][0]["metrics"]["recall_pct"] is None
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert rows[1]["pct"] == "--" and rows[1]["fused_pce"] == "--"


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, )[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "attribute", "--fp", "x", "--out", tmp_path)[0] == 2
    assert run(capsys, "attribute", "--alpha", "a.png", "--fp", "x", "--n", "0",
               "--out", tmp_path)[0] == 2
    assert run(capsys, "--version")[0] == 0


def test_harness_on_simulated_tree(capsys, tree, tmp_path):
    out = tmp_path / "tables"
    code, text, _ = run(capsys, "harness", tree, "--out", out, "--n", "2,3", "--K", "5")
    assert code == 0
    res = json.loads(text)
    assert res["tables"] == [f"table{i}.csv" for i in range(1, 7)]
    t1 = list(csv.DictReader((out / "table1.csv").open()))
    assert [r["camera"] for r in t1] == ["cam01", "cam02"]
    t5 = list(csv.DictReader((out / "table5.csv").open()))
    assert {r["case"] for r in t5} == {"1", "2"}
    assert (out / "scenario2_case01.json").exists()
