import json
import subprocess
import sys

import pytest

from topdc.cli import FIGURE_FILES, main

SMALL = ["grids.orientation_deg={start=67.0,stop=69.0,step=0.5}",
         "grids.contour_orientations_deg=[68.24]",
         "grids.contour_theta2_deg={start=-5.0,stop=5.0,step=1.0}",
         "grids.spectrum_lambda_nm=[1500.0,1596.0,1700.0]",
         "grids.spectrum_theta_deg=[-1.0,0.0,1.0]",
         "grids.seeded_spectrum_lambda_nm=[1500.0,1600.0]",
         "grids.seeded_spectrum_theta_deg=[0.0,1.0]",
         "numerics.contour_n_theta=41", "numerics.contour_n_omega=61",
         "numerics.contour_coarse=[31,61]", "numerics.omega_panels=2", "numerics.omega_nodes=3",
         "numerics.theta_scan=9", "numerics.theta_nodes=8", "numerics.bisect_steps=8"]


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "topdc", *args], capture_output=True,
                          text=True, env=env)


def test_unknown_subcommand_prints_usage():
    r = run("bogus")
    assert r.returncode != 0 and "usage:" in r.stderr


def test_no_subcommand_prints_usage():
    r = run()
    assert r.returncode != 0 and "usage:" in r.stderr


def test_dispersion_json(capsys):
    assert main(["dispersion", "--lambda-nm", "1550", "--pol", "ordinary"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["n"] == pytest.approx((5.913 + 0.2441 / (1.55 ** 2 - 0.0803)) ** 0.5, rel=1e-9)
    assert d["metadata"]["subcommand"] == "dispersion"


def test_overrides_echoed_in_metadata(capsys):
    assert main(["dispersion", "--lambda-nm", "1550", "crystal.length_mm=2.5"]) == 0
    meta = json.loads(capsys.readouterr().out)["metadata"]
    assert meta["overrides"] == ["crystal.length_mm=2.5"]
    assert meta["config"]["crystal"]["length_mm"] == 2.5


def test_error_record_for_out_of_range(capsys):
    assert main(["dispersion", "--lambda-nm", "5000"]) == 2
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "OutOfValidityRange" and rec["message"]


def test_error_record_for_bad_override(capsys):
    assert main(["dispersion", "--lambda-nm", "1550", "pump.power_mW=lots"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigInvalid"


def test_env_config(tmp_path, monkeypatch, capsys):
    p = tmp_path / "c.toml"
    p.write_text("[crystal]\norientation_deg = 45.0\n")
    monkeypatch.setenv("TOPDC_CONFIG", str(p))
    assert main(["dispersion", "--lambda-nm", "1550", "--pol", "extraordinary"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["angle_to_axis_deg"] == pytest.approx(45.0)
    assert d["metadata"]["config_path"] == str(p)


@pytest.mark.parametrize("cmd,artifact", [("contour", "contour.csv"),
                                          ("orientation-scan", "orientation.csv"),
                                          ("spectrum", "spectrum.csv"),
                                          ("seeded-spectrum", "seeded_spectrum.csv"),
                                          ("rates", "rates.json")])
def test_subcommand_artifact_names(tmp_path, cmd, artifact):
    assert main([cmd, "--output-dir", str(tmp_path), "--scenario", "s1", *SMALL]) == 0
    path = tmp_path / f"s1.{artifact}"
    assert path.exists()
    if artifact.endswith(".csv"):
        header = path.read_text().splitlines()[0]
        assert "," in header and not header[0].isdigit()
        meta = json.loads((tmp_path / f"s1.{artifact[:-4]}.meta.json").read_text())
        assert meta["overrides"] == SMALL
    else:
        assert "reports" in json.loads(path.read_text())


def test_figures_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["figures", "--output-dir", str(a), *SMALL]) == 0
    assert main(["figures", "--output-dir", str(b), *SMALL]) == 0
    for name in FIGURE_FILES:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert {p.name for p in a.iterdir()} >= set(FIGURE_FILES)
