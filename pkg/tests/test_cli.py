#!/usr/bin/env python
"""
Command-line tests

Usage:
    pytest tests/test_cli.py -v
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from lslasso import __version__
from lslasso.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from lslasso.design import DesignMatrix

logger = logging.getLogger(__name__)


class TestCommandLine:
    """Subcommands, report files and exit codes"""

    @pytest.fixture(autouse=True)
    def _setup(self, output_dir, seed, tmp_path):
        self.out = Path(output_dir)
        self.seed = seed
        self.tmp_path = tmp_path

    def _run(self, *args):
        return main([*args, "--output-dir", str(self.out), "--seed", str(self.seed)])

    def _json(self, name):
        return json.loads((self.out / f"{name}.json").read_text())

    def _design_files(self):
        gen = np.random.default_rng(self.seed)
        X = gen.uniform(-1.0, 1.0, size=(30, 3))
        y = (gen.random(30) < 0.5).astype(float)
        x_path = DesignMatrix(X).to_csv(self.tmp_path / "X.csv")
        y_path = self.tmp_path / "y.csv"
        pd.DataFrame({"y": y}).to_csv(y_path, index=False, header=False)
        return str(x_path), str(y_path)

    @pytest.mark.cli
    def test_bounds(self):
        assert self._run("bounds", "--N", "40", "--p", "4") == EXIT_OK
        doc = self._json("bounds")
        assert doc["pass"] is True
        assert doc["M"] > doc["threshold"] > 0
        assert doc["penalty"]["lambda"] > 0
        frame = pd.read_csv(self.out / "bounds.csv")
        assert len(frame) == 1
        assert list(frame.columns) == ["m", "phi", "psi", "A", "B", "C", "R", "Delta",
                                       "threshold", "xi1_threshold", "M"]

    @pytest.mark.cli
    def test_bounds_gaussian(self):
        code = self._run("bounds", "--N", "40", "--p", "4", "--family", "gaussian_square",
                         "--link", "sigmoid", "--regime", "gaussian")
        assert code == EXIT_OK
        doc = self._json("bounds")
        assert doc["constants"]["regime"] == "gaussian"
        assert "penalty" not in doc

    @pytest.mark.cli
    def test_fit_simulated(self):
        assert self._run("fit", "--N", "40", "--p", "4") == EXIT_OK
        doc = self._json("fit")
        assert doc["converged"] is True
        assert doc["penalty_source"] == "theory"
        frame = pd.read_csv(self.out / "fit.csv")
        assert list(frame.columns) == ["j", "theta_hat", "theta_star"]

    @pytest.mark.cli
    def test_fit_from_files(self):
        x_path, y_path = self._design_files()
        code = self._run("fit", "--design-csv", x_path, "--response-csv", y_path,
                         "--penalty", "0.5")
        assert code == EXIT_OK
        doc = self._json("fit")
        assert doc["penalty_source"] == "config"
        assert len(doc["theta_hat"]) == 3

    @pytest.mark.cli
    def test_re(self):
        x_path, _ = self._design_files()
        assert self._run("re", "--design-csv", x_path, "--s", "1", "--K", "2") == EXIT_OK
        doc = self._json("re")
        assert doc["kappa"] > 0
        assert doc["certified"] is True

    @pytest.mark.cli
    def test_simulate(self):
        assert self._run("simulate", "--N", "10", "--p", "3", "--s0", "1") == EXIT_OK
        frame = pd.read_csv(self.out / "simulate.csv")
        assert list(frame.columns) == ["y", "x1", "x2", "x3"]
        assert len(frame) == 10

    @pytest.mark.cli
    def test_verify_xi1(self):
        code = self._run("verify-xi1", "--N", "40", "--p", "4", "--trials", "20",
                         "--threads", "2")
        assert code == EXIT_OK
        doc = self._json("verify-xi1-bounded")
        assert doc["trials"] == 20
        assert doc["csv_path"] == "verify-xi1-bounded.csv"

    @pytest.mark.cli
    def test_verify_massart(self):
        code = self._run("verify-massart", "--N", "50", "--massart-p", "4",
                         "--massart-trials", "1000")
        assert code == EXIT_OK
        assert self._json("verify-massart")["p"] == 4

    @pytest.mark.cli
    def test_failing_check_exit_code(self):
        code = self._run("verify-tail", "--N", "20", "--p", "2", "--trials", "5",
                         "--threshold-scale", "1e-6", "--budget-random", "32",
                         "--budget-local", "5")
        assert code == EXIT_FAILED
        assert self._json("verify-tail-bounded")["pass"] is False

    @pytest.mark.cli
    def test_config_error(self, capsys):
        assert self._run("bounds", "--q", "1.5") == EXIT_USAGE
        assert "key 'q'" in capsys.readouterr().err

    @pytest.mark.cli
    def test_infeasible_design(self, capsys):
        code = self._run("bounds", "--p", "8", "--interval-low", "-1", "--interval-high", "1")
        assert code == EXIT_USAGE
        assert "InfeasibleError" in capsys.readouterr().err

    @pytest.mark.cli
    def test_config_file_and_override(self):
        config = self.tmp_path / "run.toml"
        config.write_text("N = 30\np = 3\ns0 = 1\n")
        assert self._run("simulate", "--config", str(config), "--N", "12") == EXIT_OK
        frame = pd.read_csv(self.out / "simulate.csv")
        assert len(frame) == 12
        assert frame.shape[1] == 4

    @pytest.mark.cli
    def test_search_budget_flags(self):
        code = self._run("verify-tail", "--N", "20", "--p", "2", "--trials", "3",
                         "--budget-random", "16", "--budget-local", "2",
                         "--budget-random-vertices", "8")
        assert code in (EXIT_OK, EXIT_FAILED)
        budget = self._json("verify-tail-bounded")["details"]["spec"]["budget"]
        assert budget == {"random": 16, "local": 2, "random_vertices": 8}

    @pytest.mark.cli
    def test_verify_error_with_penalty(self):
        code = self._run("verify-error", "--N", "60", "--p", "4", "--s0", "1", "--trials", "3",
                         "--penalty", "1.0")
        assert code == EXIT_OK
        doc = self._json("verify-error")
        assert doc["details"]["penalty_source"] == "config"
        assert doc["details"]["lambda"] == 1.0
        assert "nonzero" in pd.read_csv(self.out / "verify-error.csv").columns

    @pytest.mark.cli
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main(["calibrate"])
        assert info.value.code == 2

    @pytest.mark.cli
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out
