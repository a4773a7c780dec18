"""Config parsing, subcommand behaviour, exit codes, determinism."""

import json
import math

import numpy as np
import pytest

from phytoperiod.cli import (ConfigError, EXIT_CHECK_FAILED, EXIT_OK,
                             EXIT_USAGE, cmd_check, cmd_find_orbit,
                             cmd_reproduce, cmd_simulate, config_to_dict,
                             load_bundled_config, load_config, main,
                             parse_config)

TWO_PI = 2.0 * math.pi


def minimal_config(**overrides):
    data = {
        "model": {
            "r1": {"kind": "sinusoid", "mean": 1.0, "amplitude": 0.3,
                   "omega": 1.0, "phase": 0.0},
            "r2": {"kind": "constant", "value": 1.0},
            "beta1": {"kind": "constant", "value": 0.05},
            "beta2": {"kind": "constant", "value": 0.002},
            "k1": 2.0, "k2": 1.0, "w1": 0.1, "w2": 0.002,
            "period": TWO_PI,
        },
        "initial_state": [1.0, 0.5],
        "horizon": 8.0 * TWO_PI,
        "seed_periods": 20,
    }
    data.update(overrides)
    return data


# --- parsing -------------------------------------------------------------

def test_parse_minimal_config():
    cfg = parse_config(minimal_config())
    assert cfg.model.k1 == 2.0
    assert cfg.integrator.method == "rk45-adaptive"
    assert cfg.m0_denominator == "k1"
    assert cfg.orbit_tol == 1e-12


def test_config_roundtrip_is_semantically_identical():
    cfg = parse_config(minimal_config())
    again = parse_config(config_to_dict(cfg))
    assert again == cfg


def test_bundled_configs_parse():
    ex1 = load_bundled_config("example1")
    assert ex1.model.w1 == 20.0
    assert ex1.extremum_interval == (0.0, math.pi)
    assert ex1.m0_denominator == "k2-paper-variant"
    rem = load_bundled_config("remark-constant")
    assert rem.model.r1.is_constant()


@pytest.mark.parametrize("mutate,fragment", [
    (lambda d: d.pop("model"), "model"),
    (lambda d: d["model"].pop("r1"), "r1"),
    (lambda d: d["model"].__setitem__("k1", "eight"), "k1"),
    (lambda d: d["model"]["r1"].__setitem__("kind", "triangle"), "kind"),
    (lambda d: d.__setitem__("horizon", 0.0), "horizon"),
    (lambda d: d.__setitem__("initial_state", [0.0, 1.0]), "initial_state"),
    (lambda d: d.__setitem__("extremum_interval", [2.0, 1.0]), "extremum_interval"),
    (lambda d: d.__setitem__("seed_periods", -3), "seed_periods"),
    (lambda d: d.__setitem__("m0_denominator", "k9"), "m0_denominator"),
])
def test_parse_errors_carry_field_path(mutate, fragment):
    data = minimal_config()
    mutate(data)
    with pytest.raises(ConfigError) as exc_info:
        parse_config(data)
    assert fragment in str(exc_info.value)


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"model": oops}')
    with pytest.raises(ConfigError) as exc_info:
        load_config(path)
    assert "line 1" in str(exc_info.value)


# --- subcommands ---------------------------------------------------------

def test_cmd_check_exit_codes(tmp_path):
    cfg = parse_config(minimal_config())
    # coexistence parameters satisfy all three conditions
    assert cmd_check(cfg, tmp_path) == EXIT_OK
    doc = json.loads((tmp_path / "check_report.json").read_text())
    assert doc["all_conditions_hold"] is True
    assert doc["averaged_system"]["newton"]["converged"] is True


def test_cmd_simulate_writes_csv(tmp_path):
    cfg = parse_config(minimal_config(horizon=5.0,
                                      integrator={"dense_output": True}))
    assert cmd_simulate(cfg, tmp_path) == EXIT_OK
    lines = (tmp_path / "trajectory.csv").read_text().strip().split("\n")
    assert lines[0] == "t,x1,x2"
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 1.0
    last = lines[-1].split(",")
    assert float(last[0]) == 5.0


def test_cmd_find_orbit_converges_for_forced_system(tmp_path):
    cfg = parse_config(minimal_config())
    assert cmd_find_orbit(cfg, tmp_path) == EXIT_OK
    doc = json.loads((tmp_path / "orbit_report.json").read_text())
    assert doc["converged"] is True
    assert doc["orbit"]["stable"] is True
    assert doc["orbit"]["residual_norm"] < 1e-10
    assert len(doc["bound_checks"]) == 4
    csv_lines = (tmp_path / "orbit.csv").read_text().strip().split("\n")
    assert len(csv_lines) == 258  # header + 257 samples


def test_cmd_find_orbit_reports_extinction(tmp_path):
    data = minimal_config()
    data["model"] = {
        "r1": {"kind": "sinusoid", "mean": 0.03, "amplitude": 0.5,
               "omega": 1.0, "phase": 0.0},
        "r2": {"kind": "sinusoid", "mean": 0.0001, "amplitude": 0.9,
               "omega": 1.0, "phase": 0.0},
        "beta1": {"kind": "sinusoid", "mean": 0.0004, "amplitude": 0.5,
                  "omega": 1.0, "phase": 0.0},
        "beta2": {"kind": "sinusoid", "mean": 0.006, "amplitude": 0.2,
                  "omega": 1.0, "phase": 0.0},
        "k1": 8.0, "k2": 6.0, "w1": 20.0, "w2": 2.0, "period": TWO_PI,
    }
    data["initial_state"] = [0.002, 0.002]
    data["seed_periods"] = 10
    data["tolerances"] = {"orbit_tol": 1e-10, "newton_max_iter": 6}
    cfg = parse_config(data)
    assert cmd_find_orbit(cfg, tmp_path) == EXIT_CHECK_FAILED
    doc = json.loads((tmp_path / "orbit_report.json").read_text())
    assert doc["converged"] is False
    assert doc["extinction"]["species"] == 2
    assert doc["extinction"]["rate_per_period"] == pytest.approx(-0.3016, abs=5e-3)


def test_main_usage_error_on_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code = main(["check", "--config", str(bad), "--out", str(tmp_path)])
    assert code == EXIT_USAGE


def test_main_interval_and_variant_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    ex1 = load_bundled_config("example1")
    cfg_path.write_text(json.dumps(config_to_dict(ex1)))
    code = main(["check", "--config", str(cfg_path), "--out", str(tmp_path),
                 "--interval", "0", str(TWO_PI), "--m0-variant", "k1"])
    assert code == EXIT_CHECK_FAILED  # full-period extrema break A2
    doc = json.loads((tmp_path / "check_report.json").read_text())
    assert doc["bounds"]["r2L"] == pytest.approx(-0.8999, abs=1e-12)
    assert doc["bounds"]["m0_denominator"] == "k1"


# --- reproduction bundles -------------------------------------------------

@pytest.mark.parametrize("which", ["example1", "remark-constant"])
def test_reproduce_bundles_pass(tmp_path, which):
    assert cmd_reproduce(which, tmp_path) == EXIT_OK
    manifest = json.loads((tmp_path / which / "manifest.json").read_text())
    assert manifest["pass"] is True
    for name in manifest["files"]:
        assert (tmp_path / which / name).exists(), f"missing output {name}"


def test_reproduce_unknown_bundle(tmp_path):
    with pytest.raises(ConfigError):
        cmd_reproduce("nonsense", tmp_path)


def test_reproduce_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        out.mkdir()
        assert cmd_reproduce("remark-constant", out) == EXIT_OK
    for name in ("manifest.json", "check_report.json", "orbit_report.json",
                 "trajectory.csv", "orbit.csv"):
        fa = (a / "remark-constant" / name).read_bytes()
        fb = (b / "remark-constant" / name).read_bytes()
        assert fa == fb, f"{name} differs between identical runs"


def test_reproduce_example1_golden_content(tmp_path):
    assert cmd_reproduce("example1", tmp_path) == EXIT_OK
    manifest = json.loads((tmp_path / "example1" / "manifest.json").read_text())
    by_name = {r["name"]: r for r in manifest["regressions"]}
    assert by_name["k2_r2M"]["actual"] == pytest.approx(5.4006, abs=1e-4)
    assert by_name["one_plus_w1_k1"]["actual"] == pytest.approx(161.0, abs=1e-4)
    assert by_name["m0_variant"]["actual"] == pytest.approx(0.0446, abs=1e-4)
    assert by_name["beta1M_m0"]["actual"] == pytest.approx(0.0223, abs=1e-4)
    assert by_name["r1L"]["actual"] == pytest.approx(0.03, abs=1e-4)
    assert by_name["r2L_k2"]["actual"] == pytest.approx(0.0006, abs=1e-4)
    assert by_name["a3_rhs"]["actual"] == pytest.approx(15600.9161, abs=1e-4)
    assert by_name["m0_canonical"]["actual"] == pytest.approx(0.033544, abs=1e-5)
    assert by_name["orbit_converged"]["actual"] is False
    orbit_doc = json.loads((tmp_path / "example1" / "orbit_report.json").read_text())
    assert orbit_doc["extinction"]["species"] == 2


def test_reproduce_remark_constant_steady(tmp_path):
    assert cmd_reproduce("remark-constant", tmp_path) == EXIT_OK
    manifest = json.loads(
        (tmp_path / "remark-constant" / "manifest.json").read_text())
    tail = manifest["tail_metrics"]
    assert tail["derivative_norm_at_end"] < 1e-7
    assert tail["tail_oscillation_amplitude"] < 1e-7
    by_name = {r["name"]: r for r in manifest["regressions"]}
    assert by_name["orbit_is_steady_state"]["actual"] is True
    assert by_name["orbit_sample_variance_below_1e-12"]["actual"] is True
    # the settled state sits on the extinction boundary: x1 at capacity
    orbit_doc = json.loads(
        (tmp_path / "remark-constant" / "orbit_report.json").read_text())
    x0 = orbit_doc["orbit"]["x0"]
    assert x0[0] == pytest.approx(8.0, abs=1e-6)
    assert x0[1] < 1e-12


def test_reports_are_strict_json(tmp_path):
    cfg = load_bundled_config("example1")
    cmd_check(cfg, tmp_path)
    text = (tmp_path / "check_report.json").read_text()
    assert "NaN" not in text and "Infinity" not in text
    json.loads(text)
