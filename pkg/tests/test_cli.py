import json
import subprocess
import sys

import pytest

from shellvqe.cli import RunConfig, main, read_config_file, validate_summary
from shellvqe.errors import ConfigurationError


def run(tmp_path, *extra, name="out"):
    out = tmp_path / name
    code = main(["run", "--nucleus", "Be6", "--output", str(out), *extra])
    return code, out


def test_run_writes_outputs(tmp_path, capsys):
    code, out = run(tmp_path, "--shots", "200", "--mitigation", "number", "--tallies", str(tmp_path / "t.csv"),
                    "--dump-matrix", str(tmp_path / "h.txt"), "--dump-circuit", str(tmp_path / "c.txt"),
                    "--dump-statevector", str(tmp_path / "psi.bin"))
    assert code == 0
    for f in ("summary.json", "trace.jsonl", "trace.csv", "checkpoint.bin"):
        assert (out / f).exists()
    for f in ("t.csv", "h.txt", "c.txt", "psi.bin"):
        assert (tmp_path / f).stat().st_size > 0
    summary = json.loads((out / "summary.json").read_text())
    validate_summary(summary)
    assert summary["nucleus"]["z_ci"] == 2 and summary["nucleus"]["n_ci"] == 0
    assert summary["eps_E"] < 1e-10
    assert summary["sampling"]["discard_fraction"] == 0.0
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header == "layer,op,grad,energy,eps_E,infidelity,mean_entropy_err,n_cnot,n_fc"
    assert "layers" in capsys.readouterr().out


def test_runs_are_deterministic(tmp_path):
    args = ("--interaction", "random:4", "--max-layers", "4", "--shots", "50")
    run(tmp_path, *args, name="a")
    run(tmp_path, *args, name="b")
    for f in ("trace.csv", "trace.jsonl"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    sa = json.loads((tmp_path / "a" / "summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "summary.json").read_text())
    sa["config"].pop("output")
    sb["config"].pop("output")
    assert sa == sb


def test_resume_continues_trace(tmp_path):
    base = ["run", "--nucleus", "Li6", "--interaction", "builtin:p-random"]
    ref = tmp_path / "ref"
    assert main([*base, "--max-layers", "5", "-o", str(ref)]) == 0
    part = tmp_path / "part"
    assert main([*base, "--max-layers", "2", "-o", str(part)]) == 0
    assert main([*base, "--max-layers", "5", "-o", str(part), "--resume"]) == 0
    a = [json.loads(x) for x in (ref / "trace.jsonl").read_text().splitlines()]
    b = [json.loads(x) for x in (part / "trace.jsonl").read_text().splitlines()]
    assert [r["layer"] for r in b] == list(range(len(a)))
    assert [r["selected_op"] for r in b] == [r["selected_op"] for r in a]
    assert b[-1]["energy"] == pytest.approx(a[-1]["energy"], abs=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--n-ci", "1"],
        ["run", "--nucleus", "Xx9"],
        ["run", "--nucleus", "Be6", "--M2", "1"],
        ["run", "--nucleus", "Be6", "--interaction", "missing.int"],
        ["run", "--nucleus", "Be6", "--reference", "0101"],
        ["run", "--nucleus", "Be6", "--eps-target", "-1"],
        ["run", "--n-ci", "7", "--z-ci", "0"],
    ],
)
def test_configuration_errors(argv, tmp_path, capsys):
    assert main([*argv, "-o", str(tmp_path / "x")]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_resource_error(tmp_path, capsys):
    assert main(["run", "--nucleus", "Ti44", "--backend", "circuit", "-o", str(tmp_path / "x")]) == 3
    assert "resource" in capsys.readouterr().err


def test_counts_and_dims(capsys):
    assert main(["counts", "p", "neutrons"]) == 0
    assert capsys.readouterr().out.split()[-5:] == ["6", "2", "10", "9", "13"]
    assert main(["dims", "sd", "2", "0"]) == 0
    assert capsys.readouterr().out.split() == ["dim_sp", "12", "dim_mb", "66", "N_SD", "14"]


def test_verify_passes(capsys):
    assert main(["verify", "--nucleus", "Li6", "--interaction", "builtin:p-random"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) >= 5 and all(line.startswith("PASS") for line in out)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# toy\nnucleus = Be6\nmax-layers = 3\nfd_check = no\neps_target = none\n")
    values = read_config_file(cfg)
    assert values == {"nucleus": "Be6", "max_layers": 3, "fd_check": False, "eps_target": None}
    c = RunConfig(**values).resolve()
    assert (c.shell, c.n_ci, c.z_ci, c.M2, c.species) == ("p", 0, 2, 0, "protons")
    assert main(["run", "--config", str(cfg), "-o", str(tmp_path / "o")]) == 0
    cfg.write_text("layers = 3\n")
    with pytest.raises(ConfigurationError):
        read_config_file(cfg)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "shellvqe", "counts", "p", "neutrons"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.split()[-1] == "13"


def test_projection_defaults():
    assert RunConfig(nucleus="O19").resolve().M2 == 1
    assert RunConfig(nucleus="O19", J2=5).resolve().M2 == 5
    with pytest.raises(ConfigurationError):
        RunConfig(nucleus="O19", J2=4).resolve()
