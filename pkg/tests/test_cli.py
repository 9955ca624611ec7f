import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

import landau_drive as ld
from landau_drive import cli
from landau_drive.errors import ConfigError


def write_config(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


BASE_SIM = {
    "task": "simulate",
    "system": {"units": "natural"},
    "waveform": {"type": "rotating", "amplitude": 0.16, "nu": 0.8},
    "time": {"t_final": 10.0, "samples": 11},
    "numerics": {"dimension": 48},
}


class TestConfigLoading:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            cli.load_config(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            cli.load_config(path)

    def test_toml_config(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            'task = "simulate"\n'
            "[system]\nunits = \"natural\"\n"
            "[waveform]\ntype = \"rotating\"\namplitude = 0.1\nnu = 0.9\n"
        )
        raw = cli.load_config(path)
        cfg = cli.resolve_config(raw, "simulate")
        assert cfg.waveform == ld.RotatingField(0.1, 0.9)


class TestResolveConfig:
    def test_defaults_filled(self):
        cfg = cli.resolve_config({}, "simulate")
        assert cfg.samples == 101 and cfg.out_format == "csv"
        assert cfg.resolved["numerics"]["quadrature_tol"] == 1e-10
        assert cfg.waveform == ld.ZeroField()

    def test_task_mismatch(self):
        with pytest.raises(ConfigError, match="task"):
            cli.resolve_config({"task": "sweep"}, "simulate")

    @pytest.mark.parametrize(
        "doc,field",
        [
            ({"system": {"units": "imperial"}}, "units"),
            ({"system": {"magnetic_field": -1.0}}, "system"),
            ({"waveform": {"type": "warble"}}, "waveform.type"),
            ({"waveform": {"type": "rotating"}}, "waveform.amplitude"),
            ({"time": {"samples": 1}}, "time.samples"),
            ({"time": {"t_final": -2.0}}, "time.t_final"),
            ({"numerics": {"integrator_dt": 0.5}}, "numerics.integrator_dt"),
            ({"numerics": {"dimension": 1}}, "numerics.dimension"),
            ({"initial_state": {"level": -1}}, "initial_state.level"),
            ({"output": {"format": "xml"}}, "output.format"),
        ],
    )
    def test_field_level_errors(self, doc, field):
        with pytest.raises(ConfigError, match=field.split(".")[-1]):
            cli.resolve_config(doc, "simulate")

    def test_sweep_requires_rotating(self):
        doc = {"sweep": {"parameter": "amplitude"}, "waveform": {"type": "zero"}}
        with pytest.raises(ConfigError, match="rotating"):
            cli.resolve_config(doc, "sweep")

    def test_si_system(self):
        doc = {"system": {"units": "si", "charge": -1.0, "magnetic_field": 15.0}}
        cfg = cli.resolve_config(doc, "simulate")
        assert cfg.system.mirrored
        assert cfg.system.omega == pytest.approx(2.638e12, rel=1e-3)

    def test_nested_sum_waveform(self):
        doc = {
            "waveform": {
                "type": "sum",
                "terms": [
                    {"type": "constant", "e1": 0.1},
                    {"type": "rotating", "amplitude": 0.2, "nu": 1.0},
                ],
            }
        }
        cfg = cli.resolve_config(doc, "simulate")
        assert isinstance(cfg.waveform, ld.SumField)
        assert len(cfg.waveform.terms) == 2


class TestRunSimulate:
    def test_zero_field_populations(self):
        doc = {"waveform": {"type": "zero"}, "time": {"samples": 5},
               "numerics": {"dimension": 8}}
        report = cli.run_simulate(cli.resolve_config(doc, "simulate"))
        assert_allclose(report.columns["survival"], 1.0)
        assert_allclose(report.columns["pop_0"], 1.0)
        assert_allclose(report.columns["pop_1"], 0.0)
        assert_allclose(report.columns["beta"], 0.0)
        assert report.population_sum_max_dev < 1e-12

    def test_rotating_columns_match_closed_forms(self, natural):
        cfg = cli.resolve_config(BASE_SIM, "simulate")
        report = cli.run_simulate(cfg)
        e0, nu = 0.16, 0.8
        r0 = e0 / nu
        t = np.array(report.columns["t"])
        assert_allclose(
            report.columns["beta"],
            0.5 * r0**2 * (nu * t - np.sin(nu * t)),
            atol=1e-12,
        )
        d = nu - 1.0
        u = (-r0 * nu / 2) * (np.exp(1j * d * t) - 1) / (1j * d)
        assert_allclose(report.columns["re_u"], u.real, atol=1e-12)
        assert_allclose(report.columns["im_u"], u.imag, atol=1e-12)

    def test_resonant_survival_column(self, natural):
        doc = {
            "waveform": {"type": "rotating", "amplitude": 0.1, "nu": 1.0},
            "time": {"t_final": 8.0, "samples": 9},
        }
        report = cli.run_simulate(cli.resolve_config(doc, "simulate"))
        t = np.array(report.columns["t"])
        expected = [ld.resonance_survival(natural, 0.1, ti) for ti in t]
        assert_allclose(report.columns["survival"], expected, atol=1e-10)

    def test_initial_level_bound(self):
        doc = {"numerics": {"dimension": 8}, "initial_state": {"level": 9}}
        with pytest.raises(ConfigError, match="level"):
            cli.run_simulate(cli.resolve_config(doc, "simulate"))


class TestRunSweep:
    def test_resonance_minimum(self):
        doc = {
            "waveform": {"type": "rotating", "amplitude": 0.05, "nu": 1.0},
            "time": {"t_final": 12.0},
            "sweep": {"parameter": "nu_over_omega", "start": 0.5, "stop": 1.5,
                      "steps": 11},
        }
        report = cli.run_sweep(cli.resolve_config(doc, "sweep"))
        survival = report.columns["survival"]
        values = report.columns["nu_over_omega"]
        assert values[int(np.argmin(survival))] == pytest.approx(1.0)

    def test_single_point_sweep_matches_simulate(self):
        sim_doc = dict(BASE_SIM, time={"t_final": 10.0, "samples": 2})
        sweep_doc = {
            "task": "sweep",
            "waveform": {"type": "rotating", "amplitude": 0.16, "nu": 0.8},
            "time": {"t_final": 10.0},
            "numerics": {"dimension": 48},
            "sweep": {"parameter": "nu_over_omega", "start": 0.8, "stop": 0.8,
                      "steps": 1},
        }
        sim = cli.run_simulate(cli.resolve_config(sim_doc, "simulate"))
        sweep = cli.run_sweep(cli.resolve_config(sweep_doc, "sweep"))
        assert sweep.columns["survival"][0] == pytest.approx(
            sim.columns["survival"][-1], rel=1e-12
        )
        assert sweep.columns["beta"][0] == pytest.approx(
            sim.columns["beta"][-1], rel=1e-12
        )

    def test_mirrored_resonance_at_negative_ratio(self):
        # a negative charge cyclotron-rotates the other way, so the survival
        # minimum sits at nu/omega = -1
        doc = {
            "system": {"units": "si", "charge": -1.0, "magnetic_field": 15.0},
            "waveform": {"type": "rotating", "amplitude": 3.0e4, "nu": 1.0},
            "time": {"t_final": 1.0e-11},
            "sweep": {"parameter": "nu_over_omega", "start": -1.5, "stop": -0.5,
                      "steps": 11},
        }
        report = cli.run_sweep(cli.resolve_config(doc, "sweep"))
        survival = report.columns["survival"]
        values = report.columns["nu_over_omega"]
        assert values[int(np.argmin(survival))] == pytest.approx(-1.0)
        assert min(survival) < 0.5

    def test_zero_amplitude_row_is_unit_survival(self):
        doc = {
            "waveform": {"type": "rotating", "amplitude": 0.2, "nu": 1.0},
            "time": {"t_final": 5.0},
            "sweep": {"parameter": "amplitude", "start": 0.0, "stop": 0.2,
                      "steps": 3},
        }
        report = cli.run_sweep(cli.resolve_config(doc, "sweep"))
        assert report.columns["survival"][0] == 1.0


class TestMainAndOutputs:
    def test_simulate_writes_deterministic_csv(self, tmp_path):
        cfg_path = write_config(tmp_path, dict(BASE_SIM, output={"directory": str(tmp_path / "a")}))
        assert cli.main(["simulate", "--config", str(cfg_path)]) == 0
        assert cli.main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "simulate_samples.csv").read_bytes()
        b = (tmp_path / "b" / "simulate_samples.csv").read_bytes()
        assert a == b

    def test_report_echoes_resolved_config(self, tmp_path):
        cfg_path = write_config(tmp_path, dict(BASE_SIM, output={"directory": str(tmp_path / "o")}))
        cli.main(["simulate", "--config", str(cfg_path)])
        report = json.loads((tmp_path / "o" / "simulate_report.json").read_text())
        assert report["config"]["time"]["samples"] == 11
        assert report["config"]["numerics"]["quadrature_tol"] == 1e-10
        assert "timing_seconds" in report

    def test_gnuplot_companion_script(self, tmp_path):
        cfg_path = write_config(tmp_path, dict(BASE_SIM, output={"directory": str(tmp_path / "o")}))
        cli.main(["simulate", "--config", str(cfg_path)])
        script = (tmp_path / "o" / "simulate_samples.gp").read_text()
        assert "simulate_samples.csv" in script and "survival" not in script.split("plot")[0]

    def test_dimension_too_small_is_numeric_error(self, tmp_path, capsys):
        doc = {
            "waveform": {"type": "rotating", "amplitude": 0.4, "nu": 1.0},
            "time": {"t_final": 20.0, "samples": 4},
            "numerics": {"dimension": 8},
        }
        cfg_path = write_config(tmp_path, dict(doc, output={"directory": str(tmp_path / "o")}))
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert cli.main(["simulate", "--config", str(cfg_path)]) == 2
        assert "dimension" in capsys.readouterr().err

    def test_json_data_format(self, tmp_path):
        cfg_path = write_config(
            tmp_path,
            dict(BASE_SIM, output={"directory": str(tmp_path / "o"), "format": "json"}),
        )
        assert cli.main(["simulate", "--config", str(cfg_path)]) == 0
        rows = json.loads((tmp_path / "o" / "simulate_samples.json").read_text())
        assert len(rows) == 11 and "survival" in rows[0]

    def test_phases_fast_path(self, tmp_path):
        doc = {
            "task": "phases",
            "waveform": {"type": "rotating", "amplitude": 0.16, "nu": 0.8},
            "time": {"t_final": 10.0, "samples": 6},
            "output": {"directory": str(tmp_path / "o")},
        }
        cfg_path = write_config(tmp_path, doc)
        assert cli.main(["phases", "--config", str(cfg_path)]) == 0
        rows = read_csv(tmp_path / "o" / "phases_phases.csv")
        assert set(rows[0]) == {
            "t", "re_R", "im_R", "beta", "re_u", "im_u", "gamma", "area_R", "area_u",
        }
        # phase-area locks hold in the emitted table
        last = rows[-1]
        assert float(last["beta"]) == pytest.approx(-float(last["area_R"]), rel=1e-12)

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, {"system": {"units": "imperial"}})
        assert cli.main(["simulate", "--config", str(cfg_path)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_seed_warning(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, dict(BASE_SIM, output={"directory": str(tmp_path / "o")}))
        cli.main(["simulate", "--config", str(cfg_path), "--seed", "7"])
        assert "ignored" in capsys.readouterr().err


@pytest.fixture(scope="module")
def validate_report(tmp_path_factory):
    doc = {
        "task": "validate",
        "numerics": {"oracle_dimension": 32, "integrator_dt": 0.02},
    }
    cfg = cli.resolve_config(doc, "validate")
    report, code = cli.run_validate(cfg)
    return report, code


class TestValidateCommand:
    def test_default_corpus_passes(self, validate_report):
        report, code = validate_report
        assert code == 0
        assert report["all_passed"]
        names = [c["name"] for c in report["checks"]]
        assert "factorization[sampled_random]" in names
        assert "resonance_survival_prefactor" in names

    def test_benchmark_section_flags_duration(self, validate_report):
        report, _ = validate_report
        bench = report["benchmark"]
        assert bench["coefficient_matches_documented"]
        assert not bench["duration_quote_consistent"]
        assert bench["duration_from_formula_s"] == pytest.approx(1.70e-6, rel=0.01)

    def test_corrupted_sign_negative_control(self):
        doc = {
            "task": "validate",
            "numerics": {"oracle_dimension": 24, "integrator_dt": 0.02},
        }
        cfg = cli.resolve_config(doc, "validate")
        report, code = cli.run_validate(
            cfg, corrupt_displacement_sign=True, include_convergence=False
        )
        assert code == 2
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        assert any(name.startswith("factorization[rotating") for name in failed)

    def test_validate_command_writes_report(self, tmp_path):
        doc = {
            "task": "validate",
            "numerics": {"oracle_dimension": 24, "integrator_dt": 0.02},
            "output": {"directory": str(tmp_path / "v")},
        }
        cfg_path = write_config(tmp_path, doc)
        code = cli.main(["validate", "--config", str(cfg_path)])
        written = json.loads((tmp_path / "v" / "validate_validation.json").read_text())
        assert "checks" in written and "benchmark" in written
        assert code in (0, 2)
