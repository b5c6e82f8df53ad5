import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from phsense import cli, dilation, metrology, noisemc, signal


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# meta ")
    meta = json.loads(lines[0][len("# meta "):])
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    return meta, rows


def usage_exit(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        cli.main(list(argv))
    return info.value.code, capsys.readouterr().err


# -- signal -------------------------------------------------------------------


def test_signal_default_table(capsys):
    code, out = run(capsys, "signal", "--t-grid", "0:20:41")
    meta, rows = parse_csv(out)
    assert code == 0
    assert list(rows[0]) == ["lambda", "lambda_over_eps_omega", "t", "omega_t", "S_exact", "S_simulated", "gamma", "phi"]
    assert len(rows) == 8 * 41
    lams = sorted({float(r["lambda"]) for r in rows})
    assert len(lams) == 8 and max(lams) == 0.0
    offsets = sorted(float(r["lambda_over_eps_omega"]) + 2 for r in rows if float(r["lambda"]) != 0.0)
    assert offsets[0] == pytest.approx(0.072) and offsets[-1] == pytest.approx(0.672)
    assert max(abs(float(r["S_exact"]) - float(r["S_simulated"])) for r in rows) <= 1e-9
    assert meta["command"] == "signal" and meta["version"]
    assert meta["params"]["t_grid"] == "0:20:41"
    # rows follow the lambda order first, then time
    assert [float(r["t"]) for r in rows[:41]] == pytest.approx(list(np.linspace(0, 20, 41)))


def test_signal_peak_rows_are_constant(capsys):
    _, out = run(capsys, "signal", "--lambda", "-0.02", "--t-grid", "0:30:61")
    _, rows = parse_csv(out)
    assert all(float(r["S_exact"]) == 1.0 for r in rows)
    assert all(abs(float(r["S_simulated"]) - 1.0) <= 1e-9 for r in rows)


def test_signal_values_match_library(capsys):
    _, out = run(capsys, "signal", "--lambda", "-0.0173", "--t-grid", "7.815003817030829:7.815003817030829:1")
    _, rows = parse_csv(out)
    assert float(rows[0]["S_exact"]) == pytest.approx(0.70340282550995177, rel=1e-12)


@pytest.mark.parametrize("grid", ["0:20", "a:b:3", "0:1:x", "0:1:0", "0:inf:4"])
def test_malformed_grid_exits_2(capsys, grid):
    code, err = usage_exit(capsys, "signal", "--t-grid", grid)
    assert code == 2
    assert "t-grid" in err


def test_bad_epsilon_exits_2(capsys):
    code, _ = usage_exit(capsys, "peak", "--epsilon-list", "-0.1")
    assert code == 2


def test_unknown_command_exits_2(capsys):
    code, _ = usage_exit(capsys, "plot")
    assert code == 2


# -- peak / susceptibility / fisher ----------------------------------------------------


def test_peak_table(capsys):
    _, out = run(capsys, "peak")
    meta, rows = parse_csv(out)
    assert [float(r["epsilon"]) for r in rows] == [1e-2, 3e-3, 1e-3]
    for r in rows:
        assert 0.85 <= float(r["ratio_to_3pi_eps32"]) <= 1.15
        assert float(r["lambda_m"]) == pytest.approx(-2 * float(r["epsilon"]))
    assert float(rows[0]["delta_lambda"]) == pytest.approx(0.0092226, abs=1e-6)
    for r, d in zip(rows, meta["derived"]):
        assert float(r["tau"]) == pytest.approx(d["tau"], rel=1e-16)
        assert d["tau"] == pytest.approx(math.pi / (2 * d["E"]))


def test_susceptibility_table(capsys):
    _, out = run(capsys, "susceptibility")
    _, rows = parse_csv(out)
    eps = np.array([float(r["epsilon"]) for r in rows])
    chi = np.array([float(r["chi_max"]) for r in rows])
    assert np.polyfit(np.log(eps), np.log(chi), 1)[0] == pytest.approx(-1.5, abs=0.1)
    for r in rows:
        assert 0.10 <= float(r["chi_max_scaled"]) <= 0.22
        assert 2.0 <= float(r["working_point_ratio"]) <= 3.5


def test_susceptibility_sweep(capsys):
    _, out = run(capsys, "susceptibility", "--sweep", "--epsilon-list", "0.01", "--sweep-points", "21")
    _, rows = parse_csv(out)
    assert len(rows) == 21
    assert list(rows[0]) == ["epsilon", "lambda", "lambda_over_eps_omega", "S", "chi"]
    mid = rows[10]
    assert float(mid["lambda"]) == pytest.approx(-0.02)
    assert float(mid["S"]) == 1.0


def test_fisher_table(capsys):
    _, out = run(capsys, "fisher", "--epsilon-list", "0.01", "--N", "1e6")
    _, rows = parse_csv(out)
    (r,) = rows
    assert float(r["I"]) == pytest.approx(8.693e7, rel=1e-3)
    assert 0.2 <= float(r["I_over_K"]) <= 0.6
    assert 0.5 <= float(r["I_over_N_inv_eps"]) <= 1.5


def test_fisher_degenerate_point_exits_2(capsys):
    code, err = usage_exit(capsys, "fisher", "--lambda", "-0.02")
    assert code == 2
    assert "S = 1.0" in err


# -- verify ---------------------------------------------------------------------------


def test_verify_passes(capsys):
    code, out = run(capsys, "verify")
    meta, rows = parse_csv(out)
    assert code == 0
    assert meta["all_passed"] is True
    assert {r["check"] for r in rows} == {"dilation_equivalence", "signal_equivalence", "gamma_identity",
                                           "metric_condition", "norm_bookkeeping", "effective_spectrum"}
    assert all(r["status"] == "PASS" for r in rows)
    assert max(float(r["value"]) for r in rows) <= 1e-9


def test_verify_catches_corrupted_coupling(capsys):
    code, out = run(capsys, "verify", "--corrupt-c", "1.01")
    _, rows = parse_csv(out)
    assert code == 1
    assert any(r["check"] == "metric_condition" and r["status"] == "FAIL" for r in rows)


# -- montecarlo -------------------------------------------------------------------------


def test_montecarlo_requires_seed(capsys):
    code, err = usage_exit(capsys, "montecarlo")
    assert code == 2 and "--seed" in err


def test_montecarlo_reproduces_library(capsys):
    _, out = run(capsys, "montecarlo", "--seed", "7", "--xi", "0", "--N", "1e7", "--R", "200",
                 "--protocol", "pseudo_hermitian")
    _, rows = parse_csv(out)
    (r,) = rows
    cfg = dilation.derive_config(1.0, 0.01)
    lam = signal.optimal_working_point(cfg).lambda_o
    res = noisemc.simulate_campaign(cfg, lam, noisemc.ReadoutModel(100.0, 0.0, 10.0, 0.0),
                                    noisemc.Campaign(10 ** 7, 200, 7))
    assert float(r["S_hat_mean"]) == res.S_hat_mean
    assert float(r["S_hat_var"]) == res.S_hat_var
    assert r["flag"] == "ok"


def test_montecarlo_ratio_column(capsys):
    _, out = run(capsys, "montecarlo", "--seed", "31", "--R", "2000")
    _, rows = parse_csv(out)
    assert [r["protocol"] for r in rows] == ["pseudo_hermitian", "ramsey"]
    ratio = float(rows[0]["ratio"])
    assert ratio == float(rows[1]["ratio"])
    assert ratio == pytest.approx(0.045477, rel=0.30)
    assert float(rows[1]["lambda"]) == pytest.approx(metrology.ramsey_working_point(7.815003817030829))


def test_montecarlo_flags_insufficient_statistics(capsys):
    code, out = run(capsys, "montecarlo", "--seed", "1", "--N", "10,1e6", "--R", "20")
    _, rows = parse_csv(out)
    assert code == 0
    small = [r for r in rows if r["N"] == "10"]
    assert small[0]["protocol"] == "pseudo_hermitian"
    assert small[0]["flag"].startswith("insufficient_statistics(repetition=")
    assert small[0]["S_hat_var"] == "nan"
    assert small[1]["flag"] == "ok"
    assert small[0]["ratio"] == "nan"
    assert all(r["flag"] == "ok" for r in rows if r["N"] == "1000000")


def test_montecarlo_uncorrelated_variance_halves(capsys):
    _, out = run(capsys, "montecarlo", "--seed", "5", "--protocol", "ramsey", "--correlation", "uncorrelated",
                 "--m0", "1", "--sigma", "0", "--xi", "10", "--N", "10000,20000", "--R", "2000")
    _, rows = parse_csv(out)
    v1, v2 = (float(r["S_hat_var"]) for r in rows)
    assert v1 / v2 == pytest.approx(2.0, rel=0.10)


def test_montecarlo_independent_of_workers(capsys):
    args = ["montecarlo", "--seed", "11", "--N", "1e6", "--R", "50"]
    _, one = run(capsys, *args)
    _, four = run(capsys, *args, "--workers", "4")
    assert one == four


# -- output contract ----------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["signal", "--t-grid", "0:20:11"],
    ["peak"],
    ["susceptibility", "--epsilon-list", "1e-2,1e-3"],
    ["fisher"],
    ["montecarlo", "--seed", "3", "--R", "20"],
    ["verify", "--epsilon-list", "0.01"],
])
def test_repeat_is_byte_identical(capsys, argv):
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    assert a == b


def test_repeat_across_processes(tmp_path):
    argv = [sys.executable, "-m", "phsense", "montecarlo", "--seed", "9", "--R", "30", "--N", "1e5,1e6"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a


def test_json_matches_csv(capsys):
    argv = ["montecarlo", "--seed", "1", "--N", "10,1e6", "--R", "20"]
    _, text_csv = run(capsys, *argv)
    _, text_json = run(capsys, *argv, "--format", "json")
    meta_c, rows_c = parse_csv(text_csv)
    doc = json.loads(text_json)
    assert set(doc) == {"meta", "rows"}
    assert doc["meta"]["derived"] == meta_c["derived"]
    assert len(doc["rows"]) == len(rows_c)
    for rc, rj in zip(rows_c, doc["rows"]):
        assert list(rc) == list(rj)
        for k, v in rj.items():
            if v is None:
                assert rc[k] == "nan"
            elif isinstance(v, float):
                assert float(rc[k]) == v
            else:
                assert rc[k] == str(v)


def test_out_file(tmp_path, capsys):
    path = tmp_path / "peak.csv"
    code, out = run(capsys, "peak", "--out", str(path))
    assert code == 0 and out == ""
    _, stdout_version = run(capsys, "peak")
    assert path.read_text(encoding="utf-8") == stdout_version


def test_config_file_precedence(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep settings\nepsilon_list = 0.03, 0.01\nomega = 2  # doubled\n", encoding="utf-8")
    _, out = run(capsys, "peak", "--config", str(conf))
    meta, rows = parse_csv(out)
    assert [float(r["epsilon"]) for r in rows] == [0.03, 0.01]
    assert meta["derived"][0]["omega"] == 2.0
    _, out = run(capsys, "peak", "--config", str(conf), "--epsilon-list", "0.001", "--omega", "1")
    meta, rows = parse_csv(out)
    assert [float(r["epsilon"]) for r in rows] == [0.001]
    assert meta["derived"][0]["omega"] == 1.0


@pytest.mark.parametrize("text", ["nonsense line\n", "colour = red\n"])
def test_bad_config_file(tmp_path, capsys, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text, encoding="utf-8")
    code, _ = usage_exit(capsys, "peak", "--config", str(conf))
    assert code == 2


def test_missing_config_file(tmp_path, capsys):
    code, _ = usage_exit(capsys, "peak", "--config", str(tmp_path / "nope.conf"))
    assert code == 2


def test_preset_columns(capsys):
    _, out = run(capsys, "peak", "--epsilon-list", "0.01", "--preset", "ytterbium-ion")
    meta, rows = parse_csv(out)
    (r,) = rows
    units = meta["units"][0]
    assert units["coupling_hz"] == 10e3
    assert units["b0_within_limit"] is False
    assert float(r["tau_s"]) == pytest.approx(float(r["tau"]) / units["rate_scale_rad_per_s"])
    # tau = pi / (2E) with E close to J at small epsilon, hence close to 25 us.
    assert float(r["tau_s"]) == pytest.approx(25e-6, rel=0.03)
    assert float(r["delta_lambda_hz"]) > 0


def test_unknown_preset_rejected(capsys):
    code, _ = usage_exit(capsys, "peak", "--preset", "rubidium")
    assert code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip() == "phsense 0.1.0"
