import json
import subprocess
import sys

import numpy as np
import pytest

from bsufs.cli import main


@pytest.fixture
def d9(tmp_path):
    prefix = tmp_path / "d9"
    assert main(["synth", "--kind", "diamond9", "--n", "900", "--seed", "1", "--out", str(prefix)]) == 0
    return tmp_path, f"{prefix}.csv", f"{prefix}.labels"


def test_synth_writes_files(d9):
    _, csv_path, labels = d9
    lines = open(csv_path).read().splitlines()
    assert lines[0] == ",".join(f"f{i}" for i in range(9))
    assert len(lines) == 901
    assert len(open(labels).read().split()) == 900


def test_select_and_eval(d9):
    tmp, csv_path, labels = d9
    out, trace = tmp / "r.json", tmp / "t.csv"
    rc = main(["select", "--data", csv_path, "--labels", labels, "--m", "2", "--features", "2",
               "--reps", "3", "--out", str(out), "--trace", str(trace)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert sorted(rep["selected"]) == [0, 1]
    assert rep["config"]["m"] == 2 and rep["dataset"]["n"] == 900
    assert rep["evaluation"]["reps"] == 3
    assert trace.read_text().startswith("k,total")

    ev = tmp / "e.json"
    assert main(["eval", "--data", csv_path, "--labels", labels, "--select", str(out),
                 "--reps", "3", "--out", str(ev)]) == 0
    assert json.loads(ev.read_text())["acc_mean"] > 0.8

    again = tmp / "r2.json"
    assert main(["select", "--data", csv_path, "--replay", str(out), "--out", str(again)]) == 0
    assert json.loads(again.read_text())["scores"] == rep["scores"]


def test_select_defaults_pick_informative(d9):
    tmp, csv_path, _ = d9
    out = tmp / "r.json"
    assert main(["select", "--data", csv_path, "--out", str(out)]) == 0
    assert {0, 1} <= set(json.loads(out.read_text())["selected"][:2])


def test_sweep_outputs(d9, capsys):
    tmp, csv_path, labels = d9
    outdir = tmp / "sw"
    rc = main(["sweep", "--data", csv_path, "--labels", labels, "--lambdas", "0.01", "1e6",
               "--ps", "0.5", "--qs", "0", "--features", "2", "--reps", "2", "--m", "2",
               "--out", str(outdir)])
    assert rc == 0
    assert len(list(outdir.glob("cell_*.json"))) == 4
    rows = (outdir / "summary.csv").read_text().splitlines()
    assert rows[0].startswith("n_features,cell")
    assert sorted(rows[1].split(",")[-1].split()) == ["0", "1"]
    assert main(["sweep", "--dry-run"]) == 0
    assert "# 441 cells" in capsys.readouterr().out


def test_exit_codes(d9, tmp_path):
    tmp, csv_path, labels = d9
    assert main(["select", "--data", str(tmp / "missing.csv")]) == 3
    assert main(["select", "--data", csv_path, "--q", "1.5"]) == 2
    assert main(["select", "--data", csv_path, "--features", "20"]) == 3
    bad = tmp / "nan.csv"
    bad.write_text("1,2\n3,nan\n")
    assert main(["select", "--data", str(bad)]) == 3
    short = tmp / "short.labels"
    short.write_text("0\n1\n")
    assert main(["select", "--data", csv_path, "--labels", str(short)]) == 3
    sel = tmp / "sel.json"
    sel.write_text(json.dumps({"selected": [0, 42]}))
    assert main(["eval", "--data", csv_path, "--labels", labels, "--select", str(sel)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", str(tmp / "x")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["sweep"])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bsufs.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
