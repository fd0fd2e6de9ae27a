import csv
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from complementarity.cli import main
from complementarity.config import parse_config
from complementarity.export import read_map_csv, read_scan_csv

GOLDEN = Path(__file__).parent / "golden"
SCHEMA = json.loads((GOLDEN / "schema.json").read_text())
OPTICS = ["--wavelength", "670nm", "--index", "1.51", "--beta", "7.5e-3"]
WIDTHS = ["--slit-width", "20um", "--slit-width", "50um", "--slit-width", "70um",
          "--slit-width", "80um"]


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_analytic_table_matches_golden(tmp_path):
    assert main(["analytic", *OPTICS, *WIDTHS, "--out", str(tmp_path)]) == 0
    golden = (GOLDEN / "analytic_reference.csv").read_text()
    assert header(tmp_path / "analytic.csv") == SCHEMA["analytic_csv"]
    for got, ref in zip(rows(tmp_path / "analytic.csv"), csv.DictReader(golden.splitlines())):
        for key in SCHEMA["analytic_csv"]:
            assert float(got[key]) == pytest.approx(float(ref[key]), rel=1e-8, abs=1e-12)


def test_analytic_80um_stdout(capsys):
    assert main(["analytic", *OPTICS, "--slit-width", "80um"]) == 0
    out = capsys.readouterr().out
    assert "0.185588445" in out and "0.982627564" in out and "0.034443071" in out


def test_analytic_zero_width(tmp_path):
    assert main(["analytic", *OPTICS, "--slit-width", "0um", "--out", str(tmp_path)]) == 0
    (row,) = rows(tmp_path / "analytic.csv")
    assert float(row["V"]) == 1.0 and float(row["D"]) == 0.0


def test_analytic_no_files_without_out(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["analytic", *OPTICS]) == 0
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("argv", [
    ["analytic", "--index", "1.51", "--beta", "7.5e-3"],
    ["analytic", *OPTICS, "--slit-width", "20"],
    ["analytic", *OPTICS, "--slit-width", "200um"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_bad_config_exit_2(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[setup]\nwavelength = 670nm\ncolour = red\n")
    with pytest.raises(SystemExit) as exc:
        main(["analytic", "--config", str(path)])
    assert exc.value.code == 2


def test_computation_failure_exit_1(capsys):
    # a scan too short to fit
    code = main(["scan", *OPTICS, "--slit-width", "20um", "--periods", "0.2"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_scan_outputs(tmp_path):
    argv = ["scan", *OPTICS, "--slit-width", "20um", "--slit-width", "80um", "--no-grating",
            "--seed", "5", "--out", str(tmp_path)]
    assert main(argv) == 0
    tags = ["a20um", "a80um", "a87p5817um"]
    for tag in tags:
        assert header(tmp_path / f"scan_{tag}.csv") == SCHEMA["scan_csv"]
        assert header(tmp_path / f"scan_fit_{tag}.csv") == SCHEMA["scan_fit_csv"]
        data = read_scan_csv(tmp_path / f"scan_{tag}.csv")
        assert len(data["x_m"]) == 55
        assert np.all(data["counts_p1"] == np.round(data["counts_p1"]))
    summary = json.loads((tmp_path / "fit_summary.json").read_text())
    assert sorted(summary) == SCHEMA["fit_summary_keys"]
    for scan in summary["scans"]:
        assert sorted(scan) == SCHEMA["fit_summary_scan_keys"]
        assert sorted(scan["p1"]) == SCHEMA["fit_summary_detector_keys"]
    control = summary["scans"][-1]["p1"]
    assert abs(control["V"]) < 3 * control["V_err"]


def test_scan_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["scan", *OPTICS, "--slit-width", "50um", "--seed", "9",
                     "--out", str(tmp_path / name)]) == 0
    for f in ("scan_a50um.csv", "scan_fit_a50um.csv", "fit_summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_campaign_analytic(tmp_path):
    assert main(["campaign", *OPTICS, *WIDTHS, "--mode", "analytic", "--out", str(tmp_path)]) == 0
    series = rows(tmp_path / "campaign_series.csv")
    assert header(tmp_path / "campaign_series.csv") == SCHEMA["campaign_series_csv"]
    assert [float(r["sum_sq"]) for r in series] == [1.0] * 4
    report = json.loads((tmp_path / "campaign_report.json").read_text())
    assert sorted(report) == SCHEMA["campaign_report_keys"]
    assert report["schema_version"] == SCHEMA["schema_version"]
    for width in report["widths"]:
        assert sorted(width) == SCHEMA["campaign_width_keys"]
        assert width["source"] == "analytic"


def test_campaign_monte_carlo(tmp_path):
    assert main(["campaign", *OPTICS, "--mode", "both", "--seed", "0",
                 "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "campaign_report.json").read_text())
    assert sorted(report["aggregate"]) == SCHEMA["campaign_aggregate_keys"]
    assert sorted(report["provenance"]) == SCHEMA["campaign_provenance_keys"]
    assert 0.93 <= report["aggregate"]["mean_sum_sq"] <= 1.03
    for width in report["widths"]:
        assert width["source"] == "monte_carlo"
        assert abs(width["V"] - width["V_analytic"]) < 3 * width["V_err"]
    # the stored configuration reproduces the run
    config = parse_config(report["provenance"]["config"])
    assert config.campaign.seed == 0
    assert (tmp_path / "campaign.ini").read_text() == report["provenance"]["config"]
    assert (tmp_path / "scan_a80um.csv").exists()


def test_campaign_from_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[setup]\nwavelength = 0.67um\nindex = 1.51\nbeta = 7.5mrad\n"
                   "[grating]\nslit_widths = 80um\n[run]\nmode = analytic\n"
                   f"output_dir = {tmp_path / 'res'}\n")
    assert main(["campaign", "--config", str(ini)]) == 0
    (row,) = rows(tmp_path / "res" / "campaign_series.csv")
    assert float(row["V2"]) == pytest.approx(0.034443071, abs=1e-9)


def test_hbt(tmp_path, capsys):
    argv = ["hbt", "--emission-probability", "1", "--background-mean", "0",
            "--triggers", "100000", "--out", str(tmp_path)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "N_C = 0" in out and "N_T = 100000" in out
    payload = json.loads((tmp_path / "hbt.json").read_text())
    assert sorted(payload) == SCHEMA["hbt_keys"]
    assert payload["alpha"] == 0.0


def test_hbt_calibrated(capsys):
    assert main(["hbt", "--emission-probability", "0.5", "--target-alpha", "0.14",
                 "--triggers", "200000", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("alpha"))
    alpha, err = float(line.split()[2]), float(line.split()[4])
    assert abs(alpha - 0.14) < 3 * err


def test_map(tmp_path):
    assert main(["map", *OPTICS, "--slit-width", "50um", "--n-u", "41", "--n-x", "21",
                 "--out", str(tmp_path)]) == 0
    width, u, x, intensity = read_map_csv(tmp_path / "map_a50um.csv")
    assert width == 5e-5
    assert intensity.shape == (21, 41) and len(u) == 41 and len(x) == 21
    assert np.all(intensity >= 0)
    first = (tmp_path / "map_a50um.csv").read_text().splitlines()[:2]
    assert first[0] == "slit_width_m,5e-05"
    assert first[1].startswith("x_m\\u_per_m,")


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(0, 87), min_size=1, max_size=4), st.integers(0, 10**6))
def test_emitted_config_round_trips_through_cli(tmp_path_factory, widths_um, seed):
    out = tmp_path_factory.mktemp("rt")
    argv = ["campaign", *OPTICS, "--mode", "analytic", "--seed", str(seed), "--out", str(out)]
    for w in widths_um:
        argv += ["--slit-width", f"{w}um"]
    assert main(argv) == 0
    text = (out / "campaign.ini").read_text()
    config = parse_config(text)
    assert config.campaign.slit_widths_m == tuple(float(f"{w}e-6") for w in widths_um)
    assert config.campaign.seed == seed
    from complementarity.config import emit_config
    assert emit_config(config) == text
