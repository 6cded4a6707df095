import json
import os

import numpy as np
import pytest

from mvlab.cli import main, read_price_csv, read_wealth_csv, write_price_csv
from mvlab.simulate import PriceSeries


def run(args, capsys=None):
    code = main(args)
    if capsys is None:
        return code
    return code, capsys.readouterr()


class TestSimulate:
    def test_writes_prices_and_manifest(self, tmp_path):
        out = tmp_path / "sim"
        code = main(["simulate", "--assets", "3", "--weeks", "30",
                     "--seed", "7", "--out", str(out)])
        assert code == 0
        series, tickers = read_price_csv(out / "prices.csv")
        assert series.prices.shape == (31, 3)
        assert len(tickers) == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["parameters"]["seed"] == "7"
        assert manifest["outputs"] == ["prices.csv"]

    def test_bit_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["simulate", "--assets", "2", "--weeks", "40", "--seed", "3"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert (a / "prices.csv").read_bytes() == (b / "prices.csv").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--weeks", "30", "--seed", "1", "--out", str(a)])
        main(["simulate", "--weeks", "30", "--seed", "2", "--out", str(b)])
        assert (a / "prices.csv").read_bytes() != (b / "prices.csv").read_bytes()

    def test_zero_variance_deterministic(self, tmp_path):
        out = tmp_path / "det"
        main(["simulate", "--assets", "1", "--weeks", "52", "--variance", "0",
              "--mean", "0.1", "--s0", "1.0", "--out", str(out)])
        series, _ = read_price_csv(out / "prices.csv")
        np.testing.assert_allclose(series.prices[:, 0],
                                   np.exp(0.1 * np.arange(53) / 52), rtol=1e-12)

    def test_cev_model_runs(self, tmp_path):
        out = tmp_path / "cev"
        code = main(["simulate", "--model", "cev", "--alpha", "1.0",
                     "--assets", "2", "--weeks", "30", "--out", str(out)])
        assert code == 0
        series, _ = read_price_csv(out / "prices.csv")
        assert np.all(series.prices > 0)

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MVLAB_OUT", str(tmp_path / "envout"))
        assert main(["simulate", "--assets", "1", "--weeks", "30"]) == 0
        assert (tmp_path / "envout" / "prices.csv").exists()


class TestBacktestReport:
    @pytest.fixture
    def prices_csv(self, tmp_path):
        out = tmp_path / "sim"
        main(["simulate", "--assets", "2", "--weeks", "80", "--seed", "5",
              "--out", str(out)])
        return out / "prices.csv"

    def test_backtest_outputs(self, tmp_path, prices_csv):
        out = tmp_path / "bt"
        code = main(["backtest", "--input", str(prices_csv),
                     "--strategy", "multi", "--base", "10", "--out", str(out)])
        assert code == 0
        wp = read_wealth_csv(out / "wealth.csv")
        assert wp.wealth[0] == 0.0
        assert wp.week_index[0] == 27
        stats = json.loads((out / "stats.json").read_text())
        assert set(stats) == {"terminal_return", "max_drawdown", "std_dev"}
        assert stats["max_drawdown"] <= 0.0

    def test_report_roundtrip(self, tmp_path, prices_csv, capsys):
        out = tmp_path / "bt"
        main(["backtest", "--input", str(prices_csv), "--base", "10",
              "--out", str(out)])
        stats = json.loads((out / "stats.json").read_text())
        capsys.readouterr()  # drop the path printed by the backtest command
        code = main(["report", "--input", str(out / "wealth.csv"),
                     "--base", "10"])
        assert code == 0
        reported = json.loads(capsys.readouterr().out)
        assert reported["terminal_return"] == pytest.approx(
            stats["terminal_return"], rel=1e-9)

    def test_missing_input_is_data_error(self, tmp_path):
        assert main(["backtest", "--input", str(tmp_path / "nope.csv")]) == 3

    def test_short_input_is_data_error(self, tmp_path):
        out = tmp_path / "tiny"
        main(["simulate", "--assets", "1", "--weeks", "10", "--out", str(out)])
        assert main(["backtest", "--input", str(out / "prices.csv")]) == 3


class TestMvo:
    def test_inline_instance(self, capsys):
        code = main(["mvo", "--mu", "0.1,0.2", "--sigma", "1,0;0,1",
                     "--target", "0.15"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(result["omega"], [0.5, 0.5], atol=1e-12)
        assert result["variance"] == pytest.approx(0.5)
        assert result["kkt_residual"] < 1e-10

    def test_indefinite_sigma_is_numerical_error(self):
        assert main(["mvo", "--mu", "0.1,0.2", "--sigma", "1,2;2,1"]) == 4

    def test_missing_inputs_is_data_error(self):
        assert main(["mvo", "--target", "0.1"]) == 3

    def test_output_dir_mode(self, tmp_path):
        out = tmp_path / "mvo"
        code = main(["mvo", "--mu", "0.1,0.2", "--sigma", "1,0;0,1",
                     "--target", "0.15", "--out", str(out)])
        assert code == 0
        assert (out / "mvo.json").exists()
        assert (out / "manifest.json").exists()


class TestPolicy:
    def test_simple(self, capsys):
        code = main(["policy", "--type", "simple", "--mu", "0.125",
                     "--sigma", "0.4472135954999579", "--rate", "0.025",
                     "--horizon", "10", "--time", "10"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["theta"][0] == pytest.approx(0.5, rel=1e-6)
        assert result["hedging"] == [0.0]

    def test_cev(self, capsys):
        code = main(["policy", "--type", "cev", "--mu", "0.125",
                     "--sigma-bar", "0.2", "--alpha", "1.0", "--price", "1.0",
                     "--horizon", "1", "--time", "0"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["theta"][0] == pytest.approx(
            result["myopic"][0] + result["hedging"][0], rel=1e-12)
        assert result["hedging"][0] > 0

    def test_time_beyond_horizon_is_numerical_error(self):
        assert main(["policy", "--mu", "0.1", "--sigma", "0.2",
                     "--horizon", "1", "--time", "2"]) == 4


class TestComparePrecommit:
    def test_gap_fields(self, capsys):
        code = main(["compare-precommit", "--horizon", "1", "--paths", "20000",
                     "--seed", "4"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["gap"] > 0
        assert abs(result["gap"] - result["gap_analytic"]) \
            <= 4 * result["gap_stderr"]


class TestPlumbing:
    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--model", "heston"])
        assert exc.value.code == 2

    def test_no_command_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_config_file_defaults_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "defaults.cfg"
        cfg.write_text("weeks=40\nseed=9\nassets=2\n")
        out = tmp_path / "o"
        code = main(["simulate", "--config", str(cfg), "--weeks", "30",
                     "--out", str(out)])
        assert code == 0
        series, _ = read_price_csv(out / "prices.csv")
        assert series.prices.shape == (31, 2)  # flag beat config for weeks
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["seed"] == "9"

    def test_price_csv_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        prices = np.exp(rng.normal(0, 0.2, size=(20, 3)))
        series = PriceSeries(times=np.arange(20) / 52, prices=prices)
        path = tmp_path / "p.csv"
        write_price_csv(path, series, tickers=["X", "Y", "Z"])
        back, tickers = read_price_csv(path)
        assert tickers == ["X", "Y", "Z"]
        np.testing.assert_array_equal(back.prices, prices)

    def test_malformed_csv_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,A\n2007-10-29,1.0,2.0\n")
        assert main(["backtest", "--input", str(bad)]) == 3

    def test_missing_header_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0\n")
        assert main(["backtest", "--input", str(bad)]) == 3
