import json
import math

import pytest

from qcnormal import ExperimentConfig, load_config, run, verify_bundle
from qcnormal.cli import PRESETS, main
from qcnormal.errors import ConfigError, ManifestMismatch
from qcnormal.maps import PowerSeries, dumps_map, moebius_map, power_map
from qcnormal.report import GridParams


def cfg(tmp_path, m, task, **kw):
    return ExperimentConfig(map=m, task=task, output_dir=tmp_path, **kw)


def test_classify_q2(tmp_path):
    man = run(cfg(tmp_path, power_map(2), "classify"))
    s = man.tasks["classify"]["summary"]
    assert s["class"] == "superattracting" and s["local_degree"] == 2
    assert man.passed


def test_koenig_task(tmp_path):
    man = run(cfg(tmp_path, moebius_map(0.5, 1.0), "koenig", emit_svg=True))
    s = man.tasks["koenig"]["summary"]
    assert s["max_residual"] < 1e-8 and s["uniqueness_dev"] < 1e-8
    assert (tmp_path / "koenig.csv").exists() and (tmp_path / "koenig_residual.svg").exists()
    assert (tmp_path / "koenig_residual.svg").read_text().startswith("<svg")


def test_omega_task(tmp_path):
    m = PRESETS["perturbed"]()
    man = run(cfg(tmp_path, m, "omega", grid=GridParams(1e-4, 1.0, 41, 64), emit_svg=True))
    s = man.tasks["omega"]["summary"]
    assert s["integral_value"] == pytest.approx(-math.log(0.9), abs=5e-3)
    assert {"omega.svg", "mu_heatmap.svg", "omega.csv", "beltrami.csv"} <= set(man.files)


def test_motion_task(tmp_path):
    man = run(cfg(tmp_path, moebius_map(0.5, 1.0), "motion", emit_svg=True))
    t = man.tasks["motion"]
    assert t["flags"] == {"axioms": True, "measured_k_below_1": True}
    assert all("bound_K" in row for row in t["summary"]["extension"])
    assert "dilatation.svg" in man.files


def test_all_tasks_and_threads(tmp_path):
    a = run(cfg(tmp_path / "a", moebius_map(0.5, 1.0), "all"))
    b = run(cfg(tmp_path / "b", moebius_map(0.5, 1.0), "all", threads=4))
    assert set(a.tasks) == {"classify", "koenig", "omega", "motion"}
    assert a.files == b.files
    for name in a.files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.config_hash == b.config_hash


def test_task_error_does_not_abort_siblings(tmp_path):
    from qcnormal import EvalBudget

    # three iterations are too few for the Koenigs limit; the other tasks still run
    man = run(cfg(tmp_path, moebius_map(0.5, 1.0), "all", budget=EvalBudget(max_iterations=3)))
    assert man.tasks["koenig"]["error"].startswith("NoConvergence")
    assert man.tasks["classify"]["error"] is None
    assert man.tasks["omega"]["error"] is None
    assert not man.passed
    assert "koenig.csv" not in man.files


def test_verify_bundle(tmp_path):
    run(cfg(tmp_path, moebius_map(0.5, 1.0), "koenig"))
    assert verify_bundle(tmp_path)
    path = tmp_path / "koenig.csv"
    data = bytearray(path.read_bytes())
    data[40] ^= 1
    path.write_bytes(bytes(data))
    res = verify_bundle(tmp_path)
    assert not res
    assert any("koenig.csv" in p for p in res.problems)


def test_verify_failed_flag(tmp_path):
    run(cfg(tmp_path, moebius_map(0.5, 1.0), "classify"))
    man = json.loads((tmp_path / "manifest.json").read_text())
    man["tasks"]["classify"]["flags"]["conclusive"] = False
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    res = verify_bundle(tmp_path)
    assert not res and any("conclusive" in p for p in res.problems)


def test_verify_malformed(tmp_path):
    (tmp_path / "manifest.json").write_text("{}")
    with pytest.raises(ManifestMismatch):
        verify_bundle(tmp_path)
    with pytest.raises(FileNotFoundError):
        verify_bundle(tmp_path / "nowhere")


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        cfg(tmp_path, moebius_map(0.5, 1.0), "nonsense")
    with pytest.raises(ConfigError):
        cfg(tmp_path, PowerSeries((0.5,), radius=0.05), "koenig")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"map": {"variant": "power_series"}})


def test_config_file_roundtrip(tmp_path):
    doc = {
        "map": json.loads(dumps_map(moebius_map(0.5, 1.0))),
        "task": "classify",
        "grid": {"r_min": 0.001, "r_max": 0.1, "rings": 6, "angles": 16},
        "output_dir": "out",
    }
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(doc))
    c = load_config(p)
    assert c.output_dir == tmp_path / "out"
    assert ExperimentConfig.from_dict(c.to_dict()).config_hash == c.config_hash


def test_cli_subcommands(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QCNORMAL_OUT", str(tmp_path))
    assert main(["classify", "--map", "q2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tasks"]["classify"]["summary"]["class"] == "superattracting"
    assert (tmp_path / "classify" / "manifest.json").exists()
    assert main(["koenig", "--out", str(tmp_path / "k"), "--svg", "--tol", "1e-11", "--depth", "120"]) == 0
    capsys.readouterr()
    man = json.loads((tmp_path / "k" / "manifest.json").read_text())
    assert man["config"]["budget"]["tolerance"] == 1e-11
    assert man["config"]["budget"]["max_iterations"] == 120
    assert main(["verify", str(tmp_path / "k")]) == 0


def test_cli_failure_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QCNORMAL_OUT", str(tmp_path))
    # depth 3 cannot converge: the task records an error and the exit status is 1
    assert main(["koenig", "--depth", "3"]) == 1
    assert main(["koenig", "--map", "q2"]) == 1
    capsys.readouterr()
    assert main(["koenig", "--r-max", "5", "--map", "quadratic"]) == 2


def test_cli_run_config(tmp_path, capsys):
    doc = {"map": json.loads(dumps_map(moebius_map(0.5, 1.0))), "task": "all", "output_dir": str(tmp_path / "r")}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    assert main(["run", str(p), "--threads", "2"]) == 0
    capsys.readouterr()
    assert main(["verify", str(tmp_path / "r")]) == 0
    (tmp_path / "r" / "omega.csv").write_text("t,omega\n")
    assert main(["verify", str(tmp_path / "r")]) == 1
    assert "omega.csv" in capsys.readouterr().out


def test_show_map(capsys):
    assert main(["show-map", "moebius"]) == 0
    assert json.loads(capsys.readouterr().out)["variant"] == "rational"
