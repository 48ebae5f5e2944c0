import json

import numpy as np
import pytest

import qcmd.convergence as cv
import qcmd.wigner as wg
from qcmd.errors import ConfigError, CorruptFile, DegenerateFit, SchemaVersionMismatch
from qcmd.potential import Harmonic, PotentialSpec
from qcmd.quantum import PacketSpec


def small_config(**overrides):
    base = {
        "label": "unit",
        "potential": {"dim": 1, "layout": "flat", "smooth": {"kind": "harmonic", "k": [1.0]}},
        "packet": {"x0": [0.0], "p0": [1.0], "alpha": 0.5, "widths": [1.0]},
        "eps": [0.4, 0.2],
        "final_time": 0.2,
        "snapshot_times": [0.0, 0.1, 0.2],
        "grid": {"extent": 20.0, "stagger": 0.0, "min_npts": 128},
        "dictionary": {
            "probes": [
                {"center_x": [0.0], "center_p": [1.0], "sigma_x": [1.0], "sigma_p": [1.0], "label": "a"},
                {"center_x": [0.5], "center_p": [0.5], "sigma_x": [1.0], "sigma_p": [1.0], "label": "b"},
            ]
        },
        "classical": {"mode": "wigner-gh", "n": 12, "dt": 1e-3},
    }
    base.update(overrides)
    return base


class TestConfig:
    def test_from_dict_roundtrip(self):
        cfg = cv.SweepConfig.from_dict(small_config())
        again = cv.SweepConfig.from_dict(cfg.to_dict())
        assert cv.config_hash(cfg) == cv.config_hash(again)

    def test_missing_eps_names_key(self):
        raw = small_config()
        del raw["eps"]
        with pytest.raises(ConfigError) as err:
            cv.SweepConfig.from_dict(raw)
        assert "eps" in str(err.value)

    def test_nonincreasing_eps_rejected(self):
        with pytest.raises(ConfigError):
            cv.SweepConfig.from_dict(small_config(eps=[0.1, 0.2]))

    def test_empty_dictionary_rejected(self):
        with pytest.raises((ConfigError, ValueError)):
            cv.SweepConfig.from_dict(small_config(dictionary={"probes": []}))

    def test_snapshot_outside_range_rejected(self):
        with pytest.raises(ConfigError):
            cv.SweepConfig.from_dict(small_config(snapshot_times=[0.0, 0.5]))


class TestWeakDistance:
    def test_identical_pairings_give_zero(self):
        dic = wg.TestDictionary.lattice((-1, 1), (-1, 1), 2, 2, dim=1)
        vals = list(np.linspace(0.1, 0.9, len(dic)))
        assert cv.weak_distance(vals, vals, dic) == 0.0

    def test_single_probe_normalization(self):
        phi = wg.TestFunction((0.0,), (0.0,), (1.0,), (1.0,))
        dic = wg.TestDictionary((phi,))
        assert cv.weak_distance([phi.a_norm()], [0.0], dic) == pytest.approx(1.0)

    def test_out_of_scope_probes_ignored(self):
        a = wg.TestFunction((0.0,), (0.0,), (1.0,), (1.0,), label="a")
        b = wg.TestFunction((1.0,), (0.0,), (1.0,), (1.0,), label="b", scope="singular")
        dic = wg.TestDictionary((a, b))
        assert cv.weak_distance([0.0, 5.0], [0.0, 0.0], dic) == 0.0

    def test_nonnegative(self):
        dic = wg.TestDictionary.lattice((-1, 1), (-1, 1), 2, 2, dim=1)
        rng = np.random.default_rng(0)
        q = rng.normal(size=len(dic))
        c = rng.normal(size=len(dic))
        assert cv.weak_distance(q, c, dic) >= 0.0


class TestRateFit:
    def test_linear_decay_slope_one(self):
        eps = [0.4, 0.2, 0.1, 0.05]
        fit = cv.rate_fit(eps, eps)
        assert fit["slope"] == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_decay_slope_two(self):
        eps = np.array([0.4, 0.2, 0.1])
        fit = cv.rate_fit(eps, eps**2)
        assert fit["slope"] == pytest.approx(2.0, abs=1e-12)

    def test_degenerate_fit(self):
        with pytest.raises(DegenerateFit):
            cv.rate_fit([0.4, 0.2, 0.1], [1e-12, 1e-13, 1e-14])

    def test_excluded_points_listed(self):
        fit = cv.rate_fit([0.4, 0.2, 0.1, 0.05], [0.4, 0.2, 0.1, 1e-12])
        assert fit["excluded"] == [0.05]


class TestRunSweep:
    @pytest.fixture(scope="class")
    def result(self):
        cfg = cv.SweepConfig.from_dict(small_config())
        return cv.run_sweep(cfg)

    def test_complete_matrix(self, result):
        assert result.complete()
        for cell in result.cells:
            assert len(cell["weak_distance"]) == 3
            assert len(cell["quantum_pairings"][0]) == 2

    def test_harmonic_distances_tiny(self, result):
        for cell in result.cells:
            assert max(cell["weak_distance"]) <= 5e-3

    def test_estimates_attached(self, result):
        rep = result.cells[0]["estimates"]
        assert rep["checks"]["unitarity"]["passed"]

    def test_reproducible_bitwise(self, tmp_path):
        cfg = cv.SweepConfig.from_dict(small_config())
        a = cv.run_sweep(cfg)
        b = cv.run_sweep(cfg)
        cv.write_run_directory(a, tmp_path / "a")
        cv.write_run_directory(b, tmp_path / "b")
        for name in ("results.json", "pairings.csv", "distances.csv", "conservation.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_persist_roundtrip(self, result, tmp_path):
        path = tmp_path / "results.json"
        cv.persist(result, path)
        again = cv.load(path)
        assert again.to_dict() == result.to_dict()

    def test_truncated_file_detected(self, result, tmp_path):
        path = tmp_path / "results.json"
        cv.persist(result, path)
        raw = path.read_text()
        path.write_text(raw[: len(raw) // 2])
        with pytest.raises(CorruptFile):
            cv.load(path)

    def test_checksum_mismatch_detected(self, result, tmp_path):
        path = tmp_path / "results.json"
        cv.persist(result, path)
        doc = json.loads(path.read_text())
        doc["payload"]["cells"][0]["eps"] = 0.999
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptFile):
            cv.load(path)

    def test_schema_version_mismatch(self, result, tmp_path):
        path = tmp_path / "results.json"
        cv.persist(result, path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaVersionMismatch):
            cv.load(path)

    def test_run_directory_files(self, result, tmp_path):
        cv.write_run_directory(result, tmp_path / "run")
        for name in ("results.json", "pairings.csv", "distances.csv", "conservation.csv"):
            assert (tmp_path / "run" / name).exists()


class TestGridRule:
    def test_power_of_two_and_resolution(self):
        rule = cv.GridRule(extent=(20.0,), stagger=(0.0,), min_npts=64)
        n = rule.npts(0.05, 2.0, 1)[0]
        assert n & (n - 1) == 0
        assert 20.0 / n <= 0.05 * np.pi / (3 * 2.0)

    def test_memory_cap(self):
        rule = cv.GridRule(extent=(20.0,), stagger=(0.0,), max_npts=256)
        with pytest.raises(ConfigError):
            rule.npts(0.001, 10.0, 1)
