import csv
import io
import json
import math
import subprocess
import sys

import pytest

from matfield.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_curvature_csv_long_format(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "schwarzschild", "--point", "1.2,0,5,0")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["point", "quantity", "index", "value"]
    g11 = next(r for r in table if r["quantity"] == "metric" and r["index"] == "1;1")
    assert float(g11["value"]) == -25.0
    ricci = [abs(float(r["value"])) for r in table if r["quantity"] == "ricci"]
    assert ricci and max(ricci) < 1e-8


def test_curvature_json(capsys):
    code, out, _ = run(capsys, "curvature", "--metric", "weak", "--point", "1,0,5,0", "--format", "json")
    assert code == 0
    obj = json.loads(out.splitlines()[0])
    assert len(obj["metric"]) == 4


def test_verify_weak_density(capsys):
    code, out, _ = run(capsys, "verify", "--metric", "weak", "--rM", "1", "--c7", "2e-5", "--grid", "10")
    assert code == 0
    table = rows(out)
    assert len(table) == 10
    assert all(r["passed"] == "True" for r in table)
    assert all(float(r["rho"]) == pytest.approx(6e-5, rel=1e-6) for r in table)


def test_verify_failure_exit_code(capsys):
    # rounding noise exceeds an absurdly tight tolerance
    code, out, err = run(capsys, "verify", "--metric", "schwarzschild", "--grid", "2", "--tol", "1e-30")
    assert code == 1
    assert err.startswith("ERROR:check-failed:")
    assert all(r["passed"] == "False" for r in rows(out))


def test_identities_all_pass(capsys):
    code, out, _ = run(capsys, "identities", "--metric", "schwarzschild", "--grid", "2")
    assert code == 0
    names = {r["identity"].split()[0] for r in rows(out)}
    assert names == {"P1", "P2", "P3", "P5", "P6", "P7"}


def test_planets_table(capsys):
    code, out, _ = run(capsys, "planets")
    assert code == 0
    table = rows(out)
    assert len(table) == 9 and table[0]["name"] == "Mercury"
    assert float(table[0]["dphi_per_rev_arcsec"]) == pytest.approx(0.10352, rel=1e-4)


def test_planets_empty_and_bad_files(capsys, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("name,perihelion_km,aphelion_km,period_days\n")
    code, out, _ = run(capsys, "planets", "--planets", str(empty))
    assert code == 0 and out.strip() == "name,dphi_per_rev_arcsec,dphi_per_century_arcsec,v_min_kms,v_max_kms,status"
    bad = tmp_path / "bad.csv"
    bad.write_text("name,perihelion_km,aphelion_km,period_days\nDot,1,1,10\n")
    code, out, _ = run(capsys, "planets", "--planets", str(bad))
    assert code == 1 and "Dot" in out
    code, _, err = run(capsys, "planets", "--planets", str(tmp_path / "missing.csv"))
    assert code == 2 and err.startswith("ERROR:")


def test_radial_profiles(capsys):
    code, out, _ = run(capsys, "radial", "--geometry", "both", "--rM", "1", "--from-rest-at-infinity")
    assert code == 0
    table = rows(out)
    beta = [float(r["beta3_schwarzschild"]) for r in table]
    assert min(beta) == pytest.approx(-2 / (3 * math.sqrt(3)), rel=1e-12)
    weak = [(float(r["y3"]), float(r["beta3_weak"])) for r in table]
    assert all(b == pytest.approx(-math.sqrt(2 / y), rel=1e-10) for y, b in weak)


def test_cosmo_peak(capsys):
    code, out, _ = run(capsys, "cosmo", "--bigbang", "--d", "5.4", "--sm", "1", "--rhom", "1", "--grid", "101")
    assert code == 0
    table = rows(out)
    peak = max(table, key=lambda r: float(r["rho"]))
    assert float(peak["s"]) == pytest.approx(1.0, rel=1e-12) and float(peak["rho"]) == 1.0


def test_cosmo_spectrum_fit(capsys, tmp_path):
    from matfield.cosmology import CosmoModel

    m = CosmoModel.bigbang(1.0, 1.0, 5.4)
    path = tmp_path / "spectrum.csv"
    path.write_text("s,intensity\n" + "".join(f"{s},{m.density(s)}\n" for s in [0.1 * k for k in range(1, 40)]))
    code, out, _ = run(capsys, "cosmo", "--bigbang", "--spectrum", str(path))
    assert code == 0
    fit = json.loads(out)
    assert fit["s_m"] == pytest.approx(1.0, rel=1e-9)


def test_flatdemo(capsys):
    code, out, _ = run(capsys, "flatdemo", "--seed", "3", "--specs", "2", "--grid", "3")
    assert code == 0
    assert all(r["passed"] == "True" for r in rows(out))


def test_orbit_summary(capsys):
    code, out, _ = run(capsys, "orbit", "--p", "400", "--a", "900", "--summary")
    assert code == 0
    by = {r["method"]: float(r["dphi_rad"]) for r in rows(out)}
    assert by["geodesic"] == pytest.approx(by["orbit_equation"], rel=1e-8)


def test_orbit_trajectory(capsys):
    code, out, _ = run(capsys, "orbit", "--p", "400", "--a", "900")
    assert code == 0
    assert len(rows(out)) > 10


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--metric", "weak", "--grid", "3", "--seed", "5"],
        ["radial", "--from-rest-at-infinity", "--grid", "20"],
        ["cosmo", "--bigbang", "--grid", "20", "--format", "json"],
        ["flatdemo", "--seed", "1", "--specs", "1", "--grid", "2"],
    ],
)
def test_output_is_byte_identical(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second and first[0] == 0


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.csv"
    code, out, _ = run(capsys, "planets", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("name,")


@pytest.mark.parametrize(
    "argv, code",
    [
        (["curvature", "--metric", "nonsense"], 2),
        (["curvature", "--metric", "schwarzschild", "--point", "1,0,2,0"], 2),
        (["curvature", "--metric", "schwarzschild", "--point", "1,2"], 2),
        (["orbit"], 2),
        (["radial", "--grid", "-3"], 2),
        (["verify", "--metric", "weak", "--tol", "-1"], 2),
        (["frobnicate"], 2),
    ],
)
def test_error_paths(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("ERROR:")
    assert lines[0].split(":")[1]


def test_singular_point_names_the_locus(capsys):
    _, _, err = run(capsys, "curvature", "--metric", "schwarzschild", "--point", "1,0,2,0")
    assert "Schwarzschild radius" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "matfield.cli", "radial", "--from-rest-at-infinity", "--grid", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("y3,")
