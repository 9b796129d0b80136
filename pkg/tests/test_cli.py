import json

import numpy as np
import pytest

from mposterior import cli, make_empirical, read_draws, write_draws


def make_draws_dir(tmp_path, rng, m=4, atoms=25, outlier_at=None):
    root = tmp_path / "draws"
    root.mkdir()
    for j in range(m):
        center = 50.0 if j == outlier_at else 0.0
        measure = make_empirical(center + rng.standard_normal((atoms, 1)) * 0.3)
        write_draws(measure, root / f"subset_{j:02d}.csv")
    return root


class TestAggregate:
    def test_writes_weights_json(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=5, outlier_at=4)
        out = tmp_path / "result.json"
        mix_out = tmp_path / "mixture.csv"
        code = cli.main([
            "aggregate", "--draws", str(draws), "--kernel", "gaussian:1.0",
            "--out", str(out), "--mixture-out", str(mix_out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["m"] == 5
        assert payload["converged"] is True
        assert len(payload["weights"]) == 5
        assert payload["final_weights"][4] == 0.0  # outlier subset zeroed
        assert payload["kernel"] == {"type": "gaussian", "h": 1.0}
        mixture = read_draws(mix_out)
        assert mixture.n_atoms == 5 * 25

    def test_no_threshold_keeps_raw_weights(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=3)
        out = tmp_path / "result.json"
        code = cli.main(["aggregate", "--draws", str(draws), "--kernel", "auto",
                         "--no-threshold", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["thresholded"] is False
        assert payload["final_weights"] == payload["weights"]

    def test_mahalanobis_kernel_file(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=3)
        matrix = tmp_path / "scale.json"
        matrix.write_text("[[0.125]]")
        out = tmp_path / "result.json"
        code = cli.main(["aggregate", "--draws", str(draws),
                         "--kernel", f"mahalanobis:{matrix}", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["kernel"]["type"] == "mahalanobis"

    def test_missing_directory_is_config_error(self, tmp_path):
        code = cli.main(["aggregate", "--draws", str(tmp_path / "nope"),
                         "--out", str(tmp_path / "r.json")])
        assert code == 2

    def test_bad_kernel_is_config_error(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng)
        code = cli.main(["aggregate", "--draws", str(draws), "--kernel", "triangle:2",
                         "--out", str(tmp_path / "r.json")])
        assert code == 2


class TestSimulateGaussian:
    def test_small_run_writes_csv(self, tmp_path):
        out = tmp_path / "coverage.csv"
        code = cli.main(["simulate-gaussian", "--reps", "2", "--n", "40", "--m", "4",
                         "--levels", "0.1", "--seed", "5",
                         "--draws-full", "200", "--draws-per-subset", "50",
                         "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("outlier_index,nominal_level,method")
        assert len(lines) == 1 + 25 * 3  # 25 indices x 3 methods

    def test_invalid_config_exit_code(self, tmp_path):
        code = cli.main(["simulate-gaussian", "--reps", "0",
                         "--out", str(tmp_path / "c.csv")])
        assert code == 2


class TestSimulateGP:
    def test_small_run_writes_csv(self, tmp_path):
        out = tmp_path / "gp.csv"
        code = cli.main(["simulate-gp", "--case", "1", "--reps", "1",
                         "--n-clean", "40", "--n-outliers", "4", "--m", "4",
                         "--grid-size", "20", "--seed", "3", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 2 * 20


class TestSelectM:
    def test_sweep_json(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=9)
        out = tmp_path / "selectm.json"
        code = cli.main(["select-m", "--draws", str(draws), "--m-range", "3:9:3",
                         "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["m_values"] == [3, 6, 9]
        assert payload["selected_m"] in (3, 6, 9)

    def test_range_beyond_subsets_is_config_error(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=3)
        code = cli.main(["select-m", "--draws", str(draws), "--m-range", "2:8:2",
                         "--out", str(tmp_path / "s.json")])
        assert code == 2

    def test_bad_range_syntax(self, tmp_path, rng):
        draws = make_draws_dir(tmp_path, rng, m=3)
        code = cli.main(["select-m", "--draws", str(draws), "--m-range", "5-10",
                         "--out", str(tmp_path / "s.json")])
        assert code == 2


class TestConcentration:
    def test_stdout_json(self, capsys):
        code = cli.main(["concentration", "--m", "5", "--alpha", "0.4", "--q", "0.2",
                         "--trials", "200", "--seed", "1"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["m"] == 5
        assert 0.0 <= payload["freq_geometric"] <= 1.0

    def test_bad_ordering_is_config_error(self, capsys):
        code = cli.main(["concentration", "--m", "5", "--alpha", "0.1", "--q", "0.2",
                         "--trials", "200"])
        assert code == 2


class TestExitCodes:
    def test_numerical_failure_maps_to_3(self, monkeypatch, tmp_path):
        def boom(args):
            raise np.linalg.LinAlgError("singular")

        parser = cli.build_parser()
        monkeypatch.setattr(cli, "build_parser", lambda: parser)
        for action in parser._subparsers._group_actions[0].choices.values():
            action.set_defaults(func=boom)
        code = cli.main(["concentration", "--trials", "200"])
        assert code == 3
