"""Command-line interface: exit codes, file outputs, and round trips."""

import json

import numpy as np
import pytest

from steerlab.cli import main

TINY_RF = """
schema = 1
kind = "rf-freespace"

[array]
num_elements = 9
spacing_m = 0.0625
wavelength_m = 0.125

[roi]
kind = "sector"
angles_deg = [[30.0, 150.0]]
radius_m = [100.0, 250.0]

[signal]
snr_db = 20.0
sir_db = -20.0
num_snapshots = 32

[grid]
step_deg = 0.5

[phases]
num_reference = 30
num_adaptation = 10
interferer_draws = 1
operational_trials = 4
seed = 5
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny_rf.toml"
    path.write_text(TINY_RF)
    return path


class TestExitCodes:
    def test_missing_config_exits_2(self, tmp_path):
        assert main(["experiment", "--config", str(tmp_path / "missing.toml"),
                     "--out", str(tmp_path)]) == 2

    def test_malformed_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("schema = 1\nkind = 'rf-freespace'\n")  # missing sections
        assert main(["reference", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_unknown_figure_rejected(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["figure", "fig99", "--out", str(tmp_path)])


class TestCommands:
    def test_reference_writes_sigma(self, tiny_config, tmp_path):
        out = tmp_path / "ref"
        assert main(["reference", "--config", str(tiny_config), "--out", str(out)]) == 0
        payload = json.loads((out / "sigma_s.json").read_text())
        assert payload["matrix"]["dim"] == 9

    def test_adapt_then_estimate_roundtrip(self, tiny_config, tmp_path):
        out = tmp_path / "adapt"
        assert main(["adapt", "--config", str(tiny_config), "--out", str(out)]) == 0
        maps = json.loads((out / "map.json").read_text())
        assert "coral" in maps["maps"]
        est_dir = tmp_path / "est"
        assert main(["estimate", "--config", str(tiny_config), "--map",
                     str(out / "map.json"), "--out", str(est_dir)]) == 0
        payload = json.loads((est_dir / "estimates.json").read_text())
        assert set(payload["estimates_deg"]) == {"ds", "ds_adapted", "mvdr", "mvdr_adapted",
                                                 "music", "music_adapted"}
        assert (est_dir / "spectrum_ds.csv").exists()

    def test_experiment_outputs_and_determinism(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "e1", tmp_path / "e2"
        assert main(["experiment", "--config", str(tiny_config), "--out", str(out1)]) == 0
        assert main(["experiment", "--config", str(tiny_config), "--out", str(out2)]) == 0
        assert (out1 / "stats.json").read_bytes() == (out2 / "stats.json").read_bytes()
        assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()
        stats = json.loads((out1 / "stats.json").read_text())
        assert stats["trials"] == 4
        trials = (out1 / "trials.csv").read_text().strip().splitlines()
        assert len(trials) == 5  # header + 4 trials

    def test_trials_override(self, tiny_config, tmp_path):
        out = tmp_path / "t"
        assert main(["experiment", "--config", str(tiny_config), "--out", str(out),
                     "--trials", "2"]) == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["trials"] == 2

    def test_seed_override_changes_results(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        main(["experiment", "--config", str(tiny_config), "--out", str(out1)])
        main(["experiment", "--config", str(tiny_config), "--out", str(out2),
              "--seed", "99"])
        assert (out1 / "stats.json").read_bytes() != (out2 / "stats.json").read_bytes()

    def test_figure_fig1(self, tmp_path):
        out = tmp_path / "fig"
        assert main(["figure", "fig1", "--out", str(out)]) == 0
        data = np.loadtxt(out / "fig1_output_sir.csv", delimiter=",", skiprows=1)
        assert data.shape[1] == 5
        # adapted output SIR stays positive away from the interferer directions
        assert data[5:, 1:].min() > 0.0


class TestRfFigures:
    def test_fig7_spectra(self, tmp_path):
        out = tmp_path / "fig7"
        assert main(["figure", "fig7", "--out", str(out)]) == 0
        data = np.loadtxt(out / "fig7_spectra.csv", delimiter=",", skiprows=2)
        assert data.shape[1] == 3  # theta, baseline, adapted

    def test_fig11_induced(self, tmp_path):
        out = tmp_path / "fig11"
        assert main(["figure", "fig11", "--out", str(out)]) == 0
        data = np.loadtxt(out / "fig11_induced_spectrum.csv", delimiter=",", skiprows=2)
        theta, power_db = data[:, 0], data[:, 1]
        sec = lambda lo, hi: power_db[(theta >= lo) & (theta <= hi)]
        # a null toward the interferer sector, lobes over both ROI sections
        null = sec(85, 95).min()
        for lo, hi in ((30, 60), (130, 160)):
            assert sec(lo, hi).max() - null > 8.0
            assert power_db.max() - sec(lo, hi).max() < 3.0


class TestNumericalFailureExitCode:
    def test_exit_3_on_numerical_failure(self, tiny_config, monkeypatch):
        import steerlab.cli as cli
        from steerlab.exceptions import NumericalFailure

        def boom(cfg):
            raise NumericalFailure("synthetic failure")

        monkeypatch.setattr(cli, "run_reference_phase", boom)
        assert main(["reference", "--config", str(tiny_config), "--out", "/tmp"]) == 3
