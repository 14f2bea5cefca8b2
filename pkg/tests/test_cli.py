"""Tests for the experiment command line and its runner functions."""

import argparse
import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sgmor.arnoldi import KrylovConfig, reduce_arnoldi
from sgmor.bt_quadratic import balance
from sgmor.cli import (
    ConfigError,
    ExperimentConfig,
    experiment_from_args,
    main,
    run_assemble,
    run_reduce,
    run_verify,
    sweep_arnoldi,
    sweep_balanced_truncation,
)
from sgmor.galerkin import assemble, to_first_order
from sgmor.msd import build_msd, config_from_dict, default_config
from sgmor.polychaos import PcBasis

# one mass, one grounded spring, one grounded damper: 3 parameters, so the
# degree-1 chaos basis has 4 members and the first-order system dimension 8
SMALL_MODEL = {
    "masses": [1.0],
    "springs": [{"ends": [0, 1], "stiffness": 4.0}],
    "dampers": [{"mass": 1, "coefficient": 0.5}],
    "input_spring": 1,
    "delta": 0.1,
}


def write_config(tmp_path, **overrides):
    raw = {
        "model": SMALL_MODEL,
        "degree": 1,
        "r": {"min": 1, "max": 4},
        "simulation": {"h": 0.01, "T": 20.0, "r_values": [2, 3]},
        "out": str(tmp_path / "out"),
    }
    raw.update(overrides)
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(raw))
    return path


def ns(**kw):
    base = dict(config=None, degree=None, reducer=None, omega=None, rmax=None, out=None)
    base.update(kw)
    return argparse.Namespace(**base)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def small_fom():
    model = config_from_dict(SMALL_MODEL)
    return to_first_order(assemble(build_msd(model), PcBasis(q=3, d=1)))


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig(model=default_config())
        assert cfg.degree == 2
        assert cfg.reducer == "balanced-truncation"
        assert (cfg.r_min, cfg.r_max) == (1, 100)
        assert cfg.verify_r == (10, 30, 50)
        assert cfg.out == "results"

    def test_validation(self):
        model = default_config()
        with pytest.raises(ConfigError, match="degree"):
            ExperimentConfig(model=model, degree=-1)
        with pytest.raises(ConfigError, match="reducer"):
            ExperimentConfig(model=model, reducer="modal")
        with pytest.raises(ConfigError, match="r range"):
            ExperimentConfig(model=model, r_min=0)
        with pytest.raises(ConfigError, match="r range"):
            ExperimentConfig(model=model, r_min=5, r_max=4)
        with pytest.raises(ConfigError, match="positive"):
            ExperimentConfig(model=model, sim_h=0.0)
        with pytest.raises(ConfigError, match="input signal"):
            ExperimentConfig(model=model, sim_input="ramp")
        with pytest.raises(ConfigError, match="verification dimensions"):
            ExperimentConfig(model=model, verify_r=(0, 10))


class TestConfigParsing:
    def test_no_config_uses_defaults(self):
        cfg = experiment_from_args(ns())
        assert cfg.model == default_config()
        assert cfg.degree == 2 and cfg.out == "results"

    def test_file_values_parsed(self, tmp_path):
        path = write_config(tmp_path, degree=1, reducer="arnoldi", omega=2.0)
        cfg = experiment_from_args(ns(config=str(path)))
        assert cfg.model == config_from_dict(SMALL_MODEL)
        assert cfg.degree == 1
        assert cfg.reducer == "arnoldi" and cfg.omega == 2.0
        assert (cfg.r_min, cfg.r_max) == (1, 4)
        assert cfg.sim_T == 20.0 and cfg.verify_r == (2, 3)

    def test_model_path_resolved_relative_to_config(self, tmp_path):
        (tmp_path / "model.json").write_text(json.dumps(SMALL_MODEL))
        path = write_config(tmp_path, model="model.json")
        cfg = experiment_from_args(ns(config=str(path)))
        assert cfg.model == config_from_dict(SMALL_MODEL)

    def test_flags_override_file(self, tmp_path):
        path = write_config(tmp_path, degree=1)
        cfg = experiment_from_args(
            ns(config=str(path), degree=3, reducer="arnoldi", omega=2.5, rmax=7, out="elsewhere")
        )
        assert cfg.degree == 3
        assert cfg.reducer == "arnoldi" and cfg.omega == 2.5
        assert cfg.r_max == 7 and cfg.r_min == 1
        assert cfg.out == "elsewhere"

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed"):
            experiment_from_args(ns(config=str(path)))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            experiment_from_args(ns(config=str(tmp_path / "absent.json")))

    def test_invalid_model_entry(self, tmp_path):
        path = write_config(tmp_path, model={"springs": []})
        with pytest.raises(ConfigError, match="invalid configuration"):
            experiment_from_args(ns(config=str(path)))

    def test_bad_reducer_in_file(self, tmp_path):
        path = write_config(tmp_path, reducer="modal")
        with pytest.raises(ConfigError, match="reducer"):
            experiment_from_args(ns(config=str(path)))


class TestSweeps:
    def test_bt_rows(self, small_fom):
        bal = balance(small_fom)
        rows = sweep_balanced_truncation(small_fom, range(1, 5), bal=bal)
        assert [row.r for row in rows] == [1, 2, 3, 4]
        sigmas = [row.sigma for row in rows]
        assert sigmas == sorted(sigmas, reverse=True), f"sigma not sorted: {sigmas}"
        assert_allclose(sigmas, bal.sigma[:4], atol=0.0)
        for row in rows:
            assert row.stable, f"r={row.r} unexpectedly unstable"
            assert row.h2_abs is not None and row.h2_abs >= 0.0
            assert_allclose(row.h2_rel, row.h2_abs / bal.cache.norm, rtol=1e-12)

    def test_bt_errors_non_increasing(self, small_fom):
        rows = sweep_balanced_truncation(small_fom, range(1, 5))
        errs = [row.h2_abs for row in rows]
        assert errs[-1] <= errs[0], f"errors did not improve: {errs}"

    def test_arnoldi_prefix_matches_single_runs(self, small_fom):
        rows = sweep_arnoldi(small_fom, [2, 3], omega=1.0)
        for row in rows:
            single = reduce_arnoldi(small_fom, KrylovConfig(r=row.r, omega=1.0))
            assert_allclose(
                row.lambda_max,
                np.linalg.eigvalsh(
                    single.system.A.T @ single.system.N
                    + single.system.N @ single.system.A
                )[-1],
                atol=1e-10,
                err_msg=f"prefix r={row.r} disagrees with a direct run",
            )
            assert row.sigma is None

    def test_empty_r_values(self, small_fom):
        assert sweep_arnoldi(small_fom, []) == []
        assert sweep_balanced_truncation(small_fom, [], bal=balance(small_fom)) == []


class TestRunAssemble:
    def test_outputs_and_summary(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path))))
        summary = run_assemble(cfg)
        out = tmp_path / "out"
        for name in ("galerkin_M", "galerkin_D", "galerkin_K", "galerkin_B"):
            assert (out / f"{name}.mtx").exists(), f"missing {name}.mtx"
        on_disk = json.loads((out / "summary.json").read_text())
        assert on_disk == summary
        assert summary["degree"] == 1
        assert summary["parameters"] == 3
        assert summary["basis_size"] == 4
        assert summary["dimension"] == 4
        assert set(summary["nnz_percent"]) == {"M", "D", "K"}
        assert summary["model"]["masses"] == [1.0]

    def test_degree_zero_is_the_nominal_system(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path, degree=0))))
        summary = run_assemble(cfg)
        assert summary["basis_size"] == 1
        assert summary["dimension"] == 1

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path))))
        run_assemble(cfg)
        out = tmp_path / "out"
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        run_assemble(cfg)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second, "assemble output changed between identical runs"


class TestRunReduce:
    def test_bt_csv(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path))))
        path = run_reduce(cfg)
        assert path.name == "reduce_bt.csv"
        rows = read_csv(path)
        assert [int(row["r"]) for row in rows] == [1, 2, 3, 4]
        sigmas = [float(row["sigma_r"]) for row in rows]
        assert sigmas == sorted(sigmas, reverse=True)
        for row in rows:
            assert row["stable"] == "true"
            assert float(row["h2_abs"]) >= 0.0
        first = path.read_bytes()
        run_reduce(cfg)
        assert path.read_bytes() == first, "reduce output not reproducible"

    def test_arnoldi_csv_has_no_sigma(self, tmp_path):
        cfg = experiment_from_args(
            ns(config=str(write_config(tmp_path, reducer="arnoldi")))
        )
        path = run_reduce(cfg)
        assert path.name == "reduce_arnoldi.csv"
        rows = read_csv(path)
        assert [row["sigma_r"] for row in rows] == [""] * 4
        assert all(row["lambda_max"] != "" for row in rows)

    def test_rmax_beyond_dimension(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path)), rmax=9))
        with pytest.raises(ConfigError, match="exceeds the state dimension"):
            run_reduce(cfg)


class TestRunVerify:
    def test_verify_csv(self, tmp_path):
        cfg = experiment_from_args(ns(config=str(write_config(tmp_path))))
        path = run_verify(cfg)
        rows = read_csv(path)
        assert [int(row["r"]) for row in rows] == [2, 3, 8]
        for row in rows[:2]:
            assert row["holds"] == "true", f"bound failed at r={row['r']}: {row}"
            assert float(row["bound"]) >= float(row["sup_error"])
            assert row["passive"] in ("true", "false")
        sentinel = rows[-1]
        assert sentinel["passive"] == "true", "full model must be passive"
        assert sentinel["sup_error"] == "" and sentinel["bound"] == ""
        assert float(sentinel["lambda_max"]) <= 1e-10

    def test_zero_input_gives_zero_columns(self, tmp_path):
        path = write_config(
            tmp_path, simulation={"h": 0.01, "T": 5.0, "r_values": [2], "input": "zero"}
        )
        cfg = experiment_from_args(ns(config=str(path)))
        rows = read_csv(run_verify(cfg))
        assert float(rows[0]["sup_error"]) == 0.0
        assert float(rows[0]["bound"]) == 0.0
        assert rows[0]["holds"] == "true"

    def test_verify_r_beyond_rank(self, tmp_path):
        path = write_config(
            tmp_path, simulation={"h": 0.01, "T": 5.0, "r_values": [21]}
        )
        cfg = experiment_from_args(ns(config=str(path)))
        with pytest.raises(ConfigError, match="numerical rank"):
            run_verify(cfg)


class TestMain:
    def test_full_chain(self, tmp_path):
        config = str(write_config(tmp_path))
        assert main(["assemble", "--config", config]) == 0
        assert main(["reduce", "--config", config]) == 0
        assert main(["reduce", "--config", config, "--reducer", "arnoldi"]) == 0
        assert main(["verify", "--config", config]) == 0
        assert main(["report", "--config", config]) == 0

        out = tmp_path / "out"
        rows = read_csv(out / "report.csv")
        assert [int(row["r"]) for row in rows] == [1, 2, 3, 4, 8]
        header = rows[0].keys()
        for col in ("bt_sigma_r", "bt_stable", "arnoldi_lambda_max", "verify_holds"):
            assert col in header, f"missing merged column {col}"
        bt_rows = {int(row["r"]): row for row in read_csv(out / "reduce_bt.csv")}
        for row in rows[:4]:
            assert row["bt_h2_abs"] == bt_rows[int(row["r"])]["h2_abs"]
        assert rows[-1]["verify_passive"] == "true"
        assert rows[-1]["bt_sigma_r"] == "", "sentinel row must not carry sweep data"

    def test_usage_error_without_command(self):
        with pytest.raises(SystemExit):
            main([])

    def test_malformed_config_is_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        assert main(["assemble", "--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_rmax_too_large_is_exit_2(self, tmp_path):
        config = str(write_config(tmp_path))
        assert main(["reduce", "--config", config, "--rmax", "9"]) == 2

    def test_missing_report_inputs_is_exit_4(self, tmp_path, capsys):
        assert main(["report", "--out", str(tmp_path / "empty")]) == 4
        assert "I/O error" in capsys.readouterr().err

    def test_numerical_failure_is_exit_3(self, tmp_path, capsys):
        model = dict(SMALL_MODEL, delta=0.0)
        config = str(write_config(tmp_path, model=model, reducer="arnoldi"))
        assert main(["reduce", "--config", config]) == 3
        assert "numerical failure" in capsys.readouterr().err
