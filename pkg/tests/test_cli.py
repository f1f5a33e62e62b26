import os

from manetsim.cli import main
from manetsim.sweep import read_results

SCENARIO = """[scenario]
protocol = dsr
n_nodes = 6
n_connections = 2
horizon = 10
[terrain]
width = 500
height = 500
"""

SWEEP = """[sweep]
seeds = 2
[scenario]
n_nodes = 6
n_connections = 2
horizon = 10
[terrain]
width = 500
height = 500
[grid]
protocols = aodv, zrp
pause = 0, 10
"""


def test_run_writes_csv(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SCENARIO)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--seed", "3", "--out-dir", str(out)]) == 0
    rows = read_results(str(out / "run.csv"))
    assert len(rows) == 1 and rows[0]["protocol"] == "DSR" and rows[0]["seed"] == "3"
    assert "config_hash" in capsys.readouterr().out


def test_protocol_override(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SCENARIO)
    main(["run", str(cfg), "--protocol", "zrp", "--out-dir", str(tmp_path)])
    assert read_results(str(tmp_path / "run.csv"))[0]["protocol"] == "ZRP"


def test_out_dir_from_environment(tmp_path, monkeypatch):
    cfg = tmp_path / "s.ini"
    cfg.write_text(SCENARIO)
    monkeypatch.setenv("MANETSIM_OUT_DIR", str(tmp_path / "env"))
    main(["run", str(cfg)])
    assert os.path.exists(tmp_path / "env" / "run.csv")


def test_sweep_and_plotdata(tmp_path, capsys):
    spec = tmp_path / "w.ini"
    spec.write_text(SWEEP)
    out = tmp_path / "res"
    assert main(["sweep", str(spec), "--out-dir", str(out), "--jobs", "2"]) == 0
    rows = read_results(str(out / "results.csv"))
    assert len(rows) == 8
    capsys.readouterr()
    assert main(["plotdata", str(out / "results.csv"), "--group-by", "nodes=6",
                 "--axis", "pause"]) == 0
    table = capsys.readouterr().out
    assert table.startswith("pause_s\tAODV_mean")
    dest = tmp_path / "fig.tsv"
    main(["plotdata", str(out / "results.csv"), "--group-by", "nodes=6,mobility=rwp",
          "--axis", "pause", "--out", str(dest)])
    assert dest.read_text() == table
    assert main(["plotdata", str(out / "results.csv"), "--group-by", "nodes=40",
                 "--axis", "pause"]) == 2
    assert not os.path.exists(tmp_path / "empty.tsv")


def test_sweep_needs_spec_or_preset(capsys):
    assert main(["sweep"]) == 2
