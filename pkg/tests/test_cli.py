import json
import subprocess
import sys

import pytest

from superosc.cli import main, run_verify
from superosc.synth import from_json


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_synth_writes_wavefunction(tmp_path, capsys):
    out = tmp_path / "w.json"
    code, _, _ = run(["synth", "--n", "5", "--dx", "0.1", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["amps"][1] == ["-1.0", "0.0"]
    assert float(doc["interpolation_residual"]) < 1e-20


def test_synth_slit_round_trip(tmp_path, capsys):
    w = tmp_path / "w.json"
    head = tmp_path / "slit.json"
    table = tmp_path / "slit.csv"
    assert main(["synth", "--n", "5", "--dx", "0.1", "--out", str(w)]) == 0
    code, _, _ = run(["slit", "--from-wavefunction", str(w), "--window", "0,0.45",
                      "--out", str(head), "--csv", str(table)], capsys)
    assert code == 0
    doc = json.loads(head.read_text())
    src = from_json(w.read_text())
    ctx = src.ctx
    boost = ctx.mpf(doc["captured_probability"]) ** -0.5 / ctx.mp.sqrt(src.norm_sq)
    for (x, re, im), a in zip(doc["node_amplitudes"], src.nodes.amps):
        assert abs(ctx.mpf(re) - a * boost) < 1e-30 * abs(a * boost)
    assert table.read_text().startswith("p,density,weight\n")
    assert doc["summary"]["self_acceleration"]


def test_outputs_are_byte_identical(tmp_path):
    paths = []
    for k in range(2):
        p = tmp_path / f"m{k}.json"
        c = tmp_path / f"m{k}.csv"
        assert main(["maximal", "--n", "4", "--dx", "0.1", "--out", str(p),
                     "--csv", str(c), "--samples-per-gap", "8"]) == 0
        paths.append((p.read_bytes(), c.read_bytes()))
    assert paths[0] == paths[1]


def test_sweep_dx(capsys):
    code, out, _ = run(["sweep-dx", "--n", "2", "--grid", "0.2,0.1,0.05,0.025"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["exponent"] == pytest.approx(2, rel=0.1)
    assert all(t is None for t in rep["wall_time"])


def test_sweep_n_csv(tmp_path, capsys):
    c = tmp_path / "n.csv"
    code, _, _ = run(["sweep-n", "--ratio", "0.2", "--grid", "4:8", "--csv", str(c)], capsys)
    assert code == 0
    assert len(c.read_text().splitlines()) == 6


def test_verify_command(capsys):
    code, out, _ = run(["verify", "--n", "5", "--dx", "0.1", "--perturbations", "5"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4 and all(line.startswith("PASS") for line in lines)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "synth", "n": 3, "dx": "0.2", "amps": "1,2,1"}))
    code, out, _ = run(["--config", str(cfg)], capsys)
    assert code == 0
    assert [a[0] for a in json.loads(out)["amps"]] == ["1.0", "2.0", "1.0"]
    code, out, _ = run(["--config", str(cfg), "synth", "--amps", "1,0,1"], capsys)
    assert code == 0
    assert [a[0] for a in json.loads(out)["amps"]] == ["1.0", "0.0", "1.0"]


@pytest.mark.parametrize("doc", [
    {"command": "synth", "n": 3, "dx": 0.2},
    {"command": "synth", "n": 3, "dx": "0.2", "bogus": "1"},
])
def test_invalid_config_exits_nonzero(tmp_path, capsys, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    code, _, err = run(["--config", str(cfg)], capsys)
    assert code == 2
    assert "error" in err


def test_missing_geometry(capsys):
    code, _, err = run(["synth"], capsys)
    assert code == 2 and "--nodes" in err


def test_precision_failure_hint(capsys):
    code, _, err = run(["maximal", "--n", "12", "--dx", "0.08", "--bits", "64"], capsys)
    assert code == 3
    assert "--bits" in err


def test_bits_environment(monkeypatch, capsys):
    monkeypatch.setenv("SUPEROSC_BITS", "300")
    code, out, _ = run(["synth", "--n", "2", "--dx", "0.5"], capsys)
    assert code == 0 and json.loads(out)["bits"] == 300


def test_run_verify_api(five_nodes):
    results = run_verify(five_nodes, perturbations=3, seed=1)
    assert [r[0] for r in results] == ["interpolation_exactness", "parseval_norm", "position_norm",
                                      "orthogonality_minimality"]
    assert all(r[1] for r in results)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "superosc", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
