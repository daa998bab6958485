import json
import subprocess
import sys

from cycleval.cli import main

QUICK_SIZES = {
    "identity_dims": [1], "identity_forms": 4,
    "kernel_dims": [1], "kernel_forms": 2, "kernel_nonkernel": 1,
    "kernel_battery": 6, "constant_forms": 1,
    "homogeneity_dims": [1],
    "hessian_specs": 2, "mixed_disc_samples": 4,
    "bridge_dims": [1], "bridge_forms": 1,
    "mass_dims": [1], "mass_battery": 4,
    "valuation_pairs": 5,
    "first_variation_cases": 2,
    "consistency_functions": 2, "consistency_forms": 1,
}


def _write_config(path, **overrides):
    cfg = {"n": 1, "seed": 3, "suites": ["valuation-property", "mass"],
           "sizes": QUICK_SIZES}
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_run_pass_and_reports(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["overall_pass"] is True
    assert {s["suite"] for s in report["suites"]} == {"valuation-property", "mass"}
    assert "started:" in (out / "summary.txt").read_text()


def test_run_deterministic_reports(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_run_jobs_concurrent_same_report(tmp_path):
    cfg = _write_config(tmp_path / "cfg.json",
                        suites=["valuation-property", "mass", "homogeneity"])
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", str(cfg), "--out", str(out2), "--jobs", "3"]) == 0
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1 == r2


def test_exit_code_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    # unknown suite name is a config error too
    cfg = _write_config(tmp_path / "cfg.json", suites=["no-such-suite"])
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2
    # malformed form expression
    cfg2 = _write_config(tmp_path / "cfg2.json", forms=["wibble * dq7"])
    assert main(["run", str(cfg2), "--out", str(tmp_path)]) == 2


def test_exit_code_suite_failure(tmp_path):
    # an impossible tolerance forces a failing suite
    cfg = _write_config(tmp_path / "cfg.json", suites=["consistency"],
                        tolerances={"consistency": 1e-18})
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 1
    report = json.loads((out / "report.json").read_text())
    assert report["overall_pass"] is False
    failing = [e for s in report["suites"] for e in s["entries"] if not e["pass"]]
    assert failing and "details" in failing[0]


def test_list_catalog(capsys):
    assert main(["list-catalog"]) == 0
    text = capsys.readouterr().out
    for needle in ("quadratic", "maxaffine", "lse", "ellipsoid", "bump(", "suites:"):
        assert needle in text


def test_dump_cycle(tmp_path, capsys):
    assert main(["dump-cycle", "maxaffine pieces=[[[1],0],[[-1],0]]", "--n", "1"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["cells"]) == 3
    # 2D dump to a file
    target = tmp_path / "cyc.json"
    assert main(["dump-cycle",
                 "maxaffine pieces=[[[1,0],0],[[-1,0],0],[[0,1],0],[[0,-1],0]]",
                 "--n", "2", "--out", str(target)]) == 0
    data2 = json.loads(target.read_text())
    assert sum(1 for c in data2["cells"] if c["dim_x"] == 0) == 1
    # polyline dump for a non-convex function
    assert main(["dump-cycle", "pwl breaks=[0] slopes=[1,-1] v0=0", "--n", "1"]) == 0
    data3 = json.loads(capsys.readouterr().out)
    assert data3["kind"] == "polyline"
    # bad spec
    assert main(["dump-cycle", "quadratic A=[[1]]", "--n", "1"]) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cycleval.cli", "list-catalog"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "cycleval" in proc.stdout
