import json
import subprocess
import sys

import pytest

from treem3n.cli import run
from treem3n.data_io import load_model, parse_dataset


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run(["synth", "--labels", "4", "--features", "2", "--train", "40",
                "--test", "30", "--seed", "1", "--out", str(out), "--quiet"]) == 0
    return out


def test_synth_outputs(synth_dir):
    for name in ("train.mll", "test.mll", "truth.json", "truth.edges"):
        assert (synth_dir / name).exists()
    assert len(parse_dataset(synth_dir / "train.mll")) == 40
    assert load_model(synth_dir / "truth.json").structure == "tree"


def test_train_predict_eval_bench(synth_dir, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert run(["train", "--method", "mst", "--data", str(synth_dir / "train.mll"),
                "--out", str(model), "--lambda", "0.05", "--quiet"]) == 0
    assert "structure=tree" in capsys.readouterr().out
    assert run(["predict", "--model", str(model),
                "--data", str(synth_dir / "test.mll"), "--quiet"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 30
    assert run(["eval", "--model", str(model), "--model",
                str(synth_dir / "truth.json"), "--data",
                str(synth_dir / "test.mll"), "--json", "--quiet"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert set(res) == {"mst", "truth"} and res["truth"]["zero_one"] == 1.0
    assert run(["bench", "--model", str(model), "--data",
                str(synth_dir / "test.mll"), "--repeats", "1", "--json",
                "--quiet"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["n_examples"] == 30


def test_cv(synth_dir, tmp_path, capsys):
    rep = tmp_path / "cv.json"
    assert run(["cv", "--method", "empty", "--data", str(synth_dir / "train.mll"),
                "--lambdas", "0.1,0.01", "--folds", "2", "--out", str(rep),
                "--quiet"]) == 0
    assert "best lambda" in capsys.readouterr().out
    assert len(json.loads(rep.read_text())["table"]) == 2


def test_gadget(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text("#vertices=4\n0 1\n1 2\n2 3\n0 3\n")
    assert run(["gadget", "--graph", str(g), "--degree", "2",
                "--check-all-trees", "--quiet"]) == 0
    out = capsys.readouterr().out
    assert "separable" in out and "agreement: yes" in out
    t = tmp_path / "t.txt"
    t.write_text("#vertices=4\n0 1\n1 2\n2 3\n")
    assert run(["gadget", "--graph", str(g), "--degree", "1", "--tree", str(t),
                "--exhaustive", "--quiet"]) == 0
    assert "does not separate" in capsys.readouterr().out


def test_exit_codes(tmp_path, synth_dir):
    assert run([]) == 1
    assert run(["train", "--method", "bogus", "--data", "x", "--out", "y"]) == 1
    assert run(["train", "--method", "empty", "--data", "x", "--out", "y",
                "--lambda", "-1"]) == 1
    assert run(["cv", "--method", "empty", "--data", str(synth_dir / "train.mll"),
                "--lambdas", "a,b", "--quiet"]) == 1
    assert run(["train", "--method", "empty", "--data", str(tmp_path / "none.mll"),
                "--out", str(tmp_path / "m.json"), "--quiet"]) == 2
    bad = tmp_path / "bad.mll"
    bad.write_text("#labels=2 #features=2\n7 1:1\n")
    assert run(["train", "--method", "empty", "--data", str(bad),
                "--out", str(tmp_path / "m.json"), "--quiet"]) == 2
    badm = tmp_path / "bad.json"
    badm.write_text('{"version": 5}')
    assert run(["predict", "--model", str(badm), "--data",
                str(synth_dir / "test.mll"), "--quiet"]) == 2
    g = tmp_path / "g.txt"
    g.write_text("#vertices=4\n0 1\n2 3\n")
    assert run(["gadget", "--graph", str(g), "--degree", "1",
                "--check-all-trees", "--quiet"]) == 2


def test_help_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "treem3n", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("synth", "train", "predict", "eval", "cv", "gadget", "bench"):
        assert cmd in out.stdout
    out = subprocess.run([sys.executable, "-m", "treem3n", "train", "--help"],
                         capture_output=True, text=True)
    assert "--lambda" in out.stdout and "--restarts" in out.stdout
