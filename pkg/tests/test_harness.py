import csv
import json

import numpy as np
import pytest
import yaml

from conftest import CONFIGS
from svqsim import __version__
from svqsim.harness.cli import main
from svqsim.harness.config import OUTPUT_ENV, ConfigError, load_config, parse_config, resolve
from svqsim.harness.experiments import find_level_crossings, run_h2, run_rabi, run_spectrum_sweep

SHIPPED = sorted(CONFIGS.glob("*.yaml"))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_yaml(tmp_path, data, name="c.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


class TestConfig:
    @pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
    def test_shipped_configs_validate(self, path):
        load_config(path)

    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_config({"kind": "rabi"})

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="ansatz.dpth"):
            parse_config({"kind": "rabi", "seed": 1, "ansatz": {"dpth": 2}})

    def test_grid_must_increase(self):
        with pytest.raises(ConfigError, match=r"time_grid\.stop"):
            parse_config({"kind": "rabi", "seed": 1, "time_grid": {"start": 2.0, "stop": 1.0}})

    def test_shots_positive(self):
        with pytest.raises(ConfigError, match="shots"):
            parse_config({"kind": "rabi", "seed": 1, "shots": 0})

    def test_even_factor_rejected(self):
        with pytest.raises(ConfigError, match="mitigation.factors"):
            parse_config({"kind": "rabi", "seed": 1, "mitigation": {"factors": [1, 2]}})

    def test_weights_must_decrease(self):
        with pytest.raises(ConfigError, match="ssvqe.weights"):
            parse_config({"kind": "rabi", "seed": 1, "ssvqe": {"weights": [1, 2]}})

    def test_h2_needs_distance(self):
        with pytest.raises(ConfigError, match="distance"):
            parse_config({"kind": "h2", "seed": 1, "time_grid": {"stop": 1.0}})

    def test_resolved_defaults(self):
        cfg = resolve(parse_config({"kind": "rabi", "seed": 1}))
        assert cfg.time_grid.stop == pytest.approx(2 * np.pi / 0.612)
        assert cfg.ssvqe.weights == [2.0, 1.0]
        assert cfg.initial_states == list(range(-4, 5))

    def test_overrides(self):
        cfg = load_config(CONFIGS / "rabi.yaml", {"noise.p2": 0.02, "seed": 99})
        assert cfg.noise.p2 == 0.02 and cfg.seed == 99

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="no such file"):
            load_config(tmp_path / "nope.yaml")


class TestCli:
    def test_version(self, capsys):
        assert main(["version"]) == 0
        assert capsys.readouterr().out.strip() == __version__

    def test_validate_shipped_rabi(self, capsys):
        assert main(["validate", str(CONFIGS / "rabi.yaml")]) == 0
        assert json.loads(capsys.readouterr().out)["kind"] == "rabi"

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["run", str(CONFIGS / "rabi.yaml"), "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_malformed_grid(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"kind": "rabi", "seed": 1, "time_grid": {"start": 0, "stop": -1}})
        assert main(["run", str(path)]) == 1
        assert "time_grid.stop" in capsys.readouterr().err

    def test_missing_coefficient_entry(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"kind": "h2", "seed": 1, "hamiltonian": {"distance": 9.9},
                                     "time_grid": {"stop": 1.0, "points": 2}})
        assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 1
        assert "9.9" in capsys.readouterr().err

    def test_non_convergence_exit_code(self, tmp_path):
        path = write_yaml(tmp_path, {"kind": "rabi", "seed": 1, "ssvqe": {"restarts": 1, "max_iterations": 1},
                                     "time_grid": {"points": 3}})
        out = tmp_path / "o"
        assert main(["run", str(path), "--out", str(out)]) == 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "not_converged"
        assert "ssvqe_trace" in manifest["files"]

    def test_env_output_dir(self, tmp_path, monkeypatch):
        path = write_yaml(tmp_path, {"kind": "rabi", "seed": 1, "time_grid": {"points": 3}, "ssvqe": {"restarts": 2}})
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env_out"))
        assert main(["run", str(path)]) == 0
        assert (tmp_path / "env_out" / "trajectory.csv").exists()

    def test_flag_overrides_reach_manifest(self, tmp_path):
        path = write_yaml(tmp_path, {"kind": "rabi", "seed": 1, "time_grid": {"points": 2}, "ssvqe": {"restarts": 2}})
        out = tmp_path / "o"
        assert main(["run", str(path), "--out", str(out), "--seed", "5", "--shots", "100", "--noise-p2", "0.01"]) == 0
        cfg = json.loads((out / "manifest.json").read_text())["config"]
        assert (cfg["seed"], cfg["shots"], cfg["noise"]["p2"]) == (5, 100, 0.01)

    def test_run_twice_identical(self, tmp_path):
        path = write_yaml(tmp_path, {"kind": "rabi", "seed": 3, "time_grid": {"points": 5}, "shots": 200,
                                     "noise": {"p1": 0.001, "p2": 0.01}, "mitigation": {"factors": [1, 3]},
                                     "ssvqe": {"restarts": 2}})
        for name in ("a", "b"):
            assert main(["run", str(path), "--out", str(tmp_path / name)]) == 0
        for f in ("trajectory.csv", "ssvqe_trace.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.fixture(scope="module")
def rabi_noiseless(tmp_path_factory):
    out = tmp_path_factory.mktemp("rabi")
    return run_rabi(load_config(CONFIGS / "rabi_noiseless.yaml"), out), out


class TestRabi:
    def test_manifest(self, rabi_noiseless):
        manifest, out = rabi_noiseless
        data = json.loads((out / "manifest.json").read_text())
        assert data["status"] == "ok" and data["version"] == __version__
        for name in data["files"].values():
            assert (out / name).exists()
        assert {"trajectory.csv", "ssvqe_trace.csv", "manifest.json"} <= set(data["files"].values())
        assert data["defaulted"]["time_grid.stop"] == pytest.approx(2 * np.pi / 0.612)
        assert data["defaulted"]["shots"] is None

    def test_header_and_format(self, rabi_noiseless):
        _, out = rabi_noiseless
        lines = (out / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,initial_state_id,observable,E_factor,mean,stderr,mitigated"
        assert (out / "ssvqe_trace.csv").read_text().splitlines()[0] == "iteration,cost,E_1,E_2"

    def test_z_data_is_cosine(self, rabi_noiseless):
        _, out = rabi_noiseless
        rows = [r for r in read_rows(out / "trajectory.csv") if r["initial_state_id"] == "0"
                and r["observable"] == "Z_data"]
        assert len(rows) == 64
        for r in rows:
            assert abs(float(r["mean"]) - np.cos(2 * 0.612 * float(r["t"]))) <= 1e-2

    def test_ancilla_stays_in_zero(self, rabi_noiseless):
        _, out = rabi_noiseless
        rows = [r for r in read_rows(out / "trajectory.csv") if r["observable"] == "Z_anc"]
        assert len(rows) == 9 * 64
        assert all(abs(float(r["mean"]) - 1.0) <= 1e-2 for r in rows)

    def test_mitigated_closer_at_most_points(self, tmp_path):
        cfg = parse_config({"kind": "rabi", "seed": 2, "initial_states": [0],
                            "noise": {"p1": 0.001, "p2": 0.01}, "mitigation": {"factors": [1, 3]}})
        run_rabi(cfg, tmp_path)
        rows = [r for r in read_rows(tmp_path / "trajectory.csv") if r["observable"] == "Z_data"]
        raw = {r["t"]: float(r["mean"]) for r in rows if r["E_factor"] == "1"}
        mit = {r["t"]: float(r["mean"]) for r in rows if r["mitigated"] == "1"}
        closer = [abs(mit[t] - np.cos(1.224 * float(t))) <= abs(raw[t] - np.cos(1.224 * float(t))) for t in raw]
        assert np.mean(closer) >= 0.9


@pytest.fixture(scope="module")
def h2_runs(tmp_path_factory):
    runs = {}
    for d in ("0.2", "1.0"):
        out = tmp_path_factory.mktemp(f"h2_{d}")
        runs[d] = (run_h2(load_config(CONFIGS / f"h2_{d}.yaml"), out), out)
    return runs


class TestH2:
    def test_prep_cost(self, h2_runs):
        assert h2_runs["0.2"][0].prep["cost"] == pytest.approx(0.249, abs=0.02)
        assert h2_runs["1.0"][0].prep["cost"] < 1e-6

    def test_prep_trace_header(self, h2_runs):
        _, out = h2_runs["0.2"]
        assert (out / "prep_trace.csv").read_text().splitlines()[0] == "iteration,cost,occ_coupled,occ_anticoupled"

    def test_occupancy_dynamics(self, h2_runs):
        spans = {}
        for d, (_, out) in h2_runs.items():
            rows = read_rows(out / "trajectory.csv")
            for label in ("occ_coupled", "occ_anticoupled"):
                values = [float(r["mean"]) for r in rows if r["observable"] == label]
                spans[d, label] = np.ptp(values)
        assert spans["0.2", "occ_coupled"] <= 0.02 and spans["0.2", "occ_anticoupled"] <= 0.02
        assert spans["1.0", "occ_coupled"] >= 0.1 and spans["1.0", "occ_anticoupled"] >= 0.1


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("spectrum")
    return run_spectrum_sweep(load_config(CONFIGS / "h2_spectrum.yaml"), out), out


class TestSpectrum:
    def test_rows_sorted_with_four_levels(self, sweep):
        _, out = sweep
        rows = read_rows(out / "spectrum.csv")
        assert list(rows[0]) == ["distance", "E_1", "E_2", "E_3", "E_4"]
        assert len(rows) == 131
        for r in rows:
            e = [float(r[f"E_{j}"]) for j in range(1, 5)]
            assert e == sorted(e)

    def test_crossing_near_point_six(self, sweep):
        manifest, _ = sweep
        assert 0.55 < manifest.extra["relevant_crossing"]["distance"] < 0.65

    def test_crossing_detector_on_synthetic_levels(self):
        xs = np.linspace(0, 1, 11)
        a, b = 0.2 + 0 * xs, xs  # b crosses a at 0.2
        values, vectors = [], []
        for va, vb in zip(a, b):
            order = np.argsort([va, vb])
            values.append(np.array([va, vb])[order])
            vectors.append(np.eye(2)[:, order])
        crossings = find_level_crossings(xs, np.array(values), vectors)
        assert len(crossings) == 1
        assert crossings[0].distance == pytest.approx(0.2)


def test_custom_kind(tmp_path):
    path = write_yaml(tmp_path, {
        "kind": "custom", "seed": 4,
        "hamiltonian": {"terms": {"XI": 0.5, "ZZ": 0.3, "IZ": -0.2}},
        "ssvqe": {"restarts": 3},
        "prep": {"objective": "custom", "targets": [{"observable": {"ZI": 1.0}, "target": 0.0}], "restarts": 2},
        "initial_states": ["prep", "00"],
        "observables": ["ZI", "XX"],
        "time_grid": {"stop": 3.0, "points": 4},
    })
    out = tmp_path / "o"
    assert main(["run", str(path), "--out", str(out)]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert {r["initial_state_id"] for r in rows} == {"prep", "00"}
    assert {r["observable"] for r in rows} == {"ZI", "XX"}
    assert (out / "prep_trace.csv").read_text().startswith("iteration,cost,value_1\n")
