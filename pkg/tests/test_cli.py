import json
import os
import subprocess
import sys

import numpy as np
import pytest

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def run_cli(args, **kw):
    return subprocess.run(
        [sys.executable, "-m", "qcmd.cli", *args],
        capture_output=True, text=True, **kw,
    )


def tiny_config(tmp_path, **overrides):
    cfg = {
        "label": "cli-tiny",
        "potential": {"dim": 1, "layout": "flat", "smooth": {"kind": "harmonic", "k": [1.0]}},
        "packet": {"x0": [0.0], "p0": [1.0], "alpha": 0.5, "widths": [1.0]},
        "eps": [0.4, 0.2],
        "final_time": 0.2,
        "snapshot_times": [0.0, 0.1, 0.2],
        "grid": {"extent": 20.0, "stagger": 0.0, "min_npts": 128},
        "dictionary": {"probes": [
            {"center_x": [0.0], "center_p": [1.0], "sigma_x": [1.0],
             "sigma_p": [1.0], "label": "a",
             "window": [0.02, 0.18]},
        ]},
        "classical": {"mode": "wigner-gh", "n": 8, "dt": 1e-3},
        "r_ladder": [5.0, 8.0],
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestValidate:
    @pytest.mark.parametrize(
        "name",
        [f for f in sorted(os.listdir(CONFIG_DIR)) if f.endswith(".json")],
    )
    def test_shipped_configs_validate(self, name):
        out = run_cli(["validate-config", os.path.join(CONFIG_DIR, name)])
        assert out.returncode == 0, out.stderr

    def test_missing_eps_exit_2_names_key(self, tmp_path):
        path = tiny_config(tmp_path)
        raw = json.loads(path.read_text())
        del raw["eps"]
        path.write_text(json.dumps(raw))
        out = run_cli(["validate-config", str(path)])
        assert out.returncode == 2
        assert "eps" in out.stderr

    def test_stdin_config(self, tmp_path):
        path = tiny_config(tmp_path)
        out = run_cli(["validate-config", "-"], input=path.read_text())
        assert out.returncode == 0


class TestDryRun:
    def test_plan_lines_and_no_writes(self, tmp_path):
        path = tiny_config(tmp_path)
        out_dir = tmp_path / "out"
        before = set(os.listdir(tmp_path))
        out = run_cli(["sweep", str(path), "--dry-run", "--out", str(out_dir)])
        assert out.returncode == 0
        lines = [l for l in out.stdout.splitlines() if l.startswith("eps=")]
        assert len(lines) == 2
        assert "N=" in lines[0] and "mem~" in lines[0]
        assert set(os.listdir(tmp_path)) == before
        assert not out_dir.exists()


class TestSweepEndToEnd:
    def test_sweep_outputs_and_reproducibility(self, tmp_path):
        path = tiny_config(tmp_path)
        a = tmp_path / "run-a"
        b = tmp_path / "run-b"
        out1 = run_cli(["sweep", str(path), "--out", str(a), "--threads", "1"])
        assert out1.returncode == 0, out1.stderr
        out2 = run_cli(["sweep", str(path), "--out", str(b), "--threads", "1"])
        assert out2.returncode == 0
        for name in ("results.json", "pairings.csv", "distances.csv", "conservation.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        manifest = json.loads((a / "manifest.json").read_text())
        assert manifest["config_hash"] == json.loads((b / "manifest.json").read_text())["config_hash"]

    def test_runtime_abort_exit_3(self, tmp_path):
        # a packet aimed at the boundary contaminates the outer shell
        path = tiny_config(
            tmp_path,
            potential={"dim": 1, "layout": "flat", "smooth": {"kind": "zero"}},
            packet={"x0": [5.0], "p0": [2.0], "alpha": 0.5, "widths": [1.0]},
            eps=[0.2],
            final_time=2.0,
            snapshot_times=[0.0, 2.0],
        )
        out = run_cli(["sweep", str(path), "--out", str(tmp_path / "x"), "--threads", "1"])
        assert out.returncode == 3
        assert "ABORTED" in out.stdout
        # partial outputs persisted
        assert (tmp_path / "x" / "results.json").exists()


class TestOtherCommands:
    def test_run_classical_writes_residuals(self, tmp_path):
        path = tiny_config(tmp_path)
        out_dir = tmp_path / "cl"
        out = run_cli(["run-classical", str(path), "--out", str(out_dir)])
        assert out.returncode == 0, out.stderr
        res = json.loads((out_dir / "residuals.json").read_text())
        assert "a" in res
        assert (out_dir / "ensembles.csv").exists()

    def test_check_estimates(self, tmp_path):
        path = tiny_config(tmp_path)
        out_dir = tmp_path / "est"
        out = run_cli(["check-estimates", str(path), "--out", str(out_dir)])
        assert out.returncode == 0, out.stderr + out.stdout
        assert "unitarity: pass" in out.stdout
        files = os.listdir(out_dir)
        assert any(f.startswith("estimates-eps") for f in files)

    def test_export_field_roundtrip(self, tmp_path):
        path = tiny_config(tmp_path)
        base = tmp_path / "field"
        out = run_cli(["export-field", str(path), "--time", "0.1", "--out", str(base)])
        assert out.returncode == 0, out.stderr
        from qcmd.fieldio import load_wavefunction

        wf, sidecar = load_wavefunction(base)
        assert wf.time == pytest.approx(0.1)
        assert sidecar["kind"] == "wavefunction"
        assert abs(np.sqrt(np.sum(np.abs(wf.values) ** 2) * wf.grid.cell_volume) - 1.0) <= 1e-9

    def test_run_quantum_conservation(self, tmp_path):
        path = tiny_config(tmp_path)
        out_dir = tmp_path / "qm"
        out = run_cli(["run-quantum", str(path), "--out", str(out_dir)])
        assert out.returncode == 0, out.stderr
        text = (out_dir / "conservation.csv").read_text().splitlines()
        assert text[0] == "eps,t,norm,energy,kinetic"
        assert len(text) == 1 + 2 * 3
