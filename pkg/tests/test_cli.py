import subprocess
import sys

import numpy as np
import pytest

from vortex_moser.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, run
from vortex_moser.fields import Cylinder, SpaceTimeField
from vortex_moser.flows import make_grid
from vortex_moser.io import write_manifest, read_manifest, read_vmf, write_vmf


def test_serrin_output(capsys):
    assert run(["serrin", "--d", "3", "--q", "4", "--s", "6"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "serrin_ok=true"
    assert any(line.split() == ["s0", "3"] for line in out)
    assert run(["serrin", "--d", "3", "--q", "inf", "--s", "3"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("serrin_ok=false")


def test_serrin_missing_exponent_is_usage_error():
    assert run(["serrin", "--q", "4"]) == EXIT_USAGE


def test_unknown_subcommand():
    assert run(["fly"]) == EXIT_USAGE


def zero_series(tmp_path, n=32):
    g = make_grid(n, 1.0, 1.0)
    times = [-1.0, -0.5, 0.0]
    u = SpaceTimeField.from_slices(times, [g.with_data(np.zeros((n, n, 2)))] * 3,
                                   Cylinder((0, 0), 1.0, -1.0, 0.0))
    w = u.map(lambda f: f.with_data(np.zeros((n, n))))
    write_manifest(tmp_path / "u.manifest", u, "u")
    write_manifest(tmp_path / "w.manifest", w, "w")
    return tmp_path / "u.manifest", tmp_path / "w.manifest"


def test_certify_zero_field(tmp_path):
    u, _ = zero_series(tmp_path)
    out = tmp_path / "cert.txt"
    assert run(["certify", "--u", str(u), "--radius", "1.0", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "verdict certified"
    vals = [ln.split("value=")[1] for ln in lines if ln.startswith("t=")]
    assert vals and all(float(v) == 1.0 for v in vals)


def test_ledger_csv_is_deterministic(tmp_path):
    u, w = zero_series(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["ledger", "--u", str(u), "--omega", str(w), "--radius", "1.0", "--out", str(p)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "k,r_k,q_k,u_norm,omega_norm,fitted_constant"
    assert [r.split(",")[2] for r in rows[1:]] == ["3", "4", "6", "10"]


def test_generate_round_trip(tmp_path):
    assert run(["generate", "--kind", "rankine", "--n", "32", "--out", str(tmp_path)]) == EXIT_OK
    w = read_vmf(tmp_path / "omega.vmf")
    assert w.data.shape == (32, 32) and w.mask_radius == 1.0
    out = tmp_path / "u2.vmf"
    assert run(["reconstruct", "--omega", str(tmp_path / "omega.vmf"), "--out", str(out)]) == EXIT_OK
    u_exact, u_rec = read_vmf(tmp_path / "u.vmf"), read_vmf(out)
    err = np.linalg.norm(u_exact.data - u_rec.data) / np.linalg.norm(u_exact.data)
    assert err < 0.05


def test_generate_series_and_verify_bound(tmp_path):
    assert run(["generate", "--n", "64", "--steps", "4", "--dt", "0.04", "--t0", "-0.16",
                "--out", str(tmp_path)]) == EXIT_OK
    U = read_manifest(tmp_path / "u.manifest")
    assert len(U) == 5 and U.cylinder.t1 == pytest.approx(0.0)
    csv = tmp_path / "b.csv"
    code = run(["verify-bound", "--u", str(tmp_path / "u.manifest"), "--omega",
                str(tmp_path / "omega.manifest"), "--radius", "0.05", "--mode", "mean",
                "--out", str(csv)])
    assert code == EXIT_OK
    assert csv.read_text().splitlines()[0] == "t,sup_lhs,sup_rhs_potential,additive_term,fitted_C"


def test_ve_check_threshold(tmp_path):
    run(["generate", "--n", "48", "--steps", "2", "--dt", "0.05", "--t0", "-0.1", "--out", str(tmp_path)])
    args = ["ve-check", "--u", str(tmp_path / "u.manifest"), "--omega", str(tmp_path / "omega.manifest"),
            "--inner-radius", "0.04", "--outer-radius", "0.08", "--out", str(tmp_path / "ve.csv")]
    assert run(args) == EXIT_OK
    assert run(args + ["--V0", "1e-300"]) == EXIT_FAIL


def test_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("kind = rankine\nn = 16\n# comment\nout = " + str(tmp_path / "g") + "\n")
    assert run(["--config", str(cfg), "generate"]) == EXIT_OK
    assert read_vmf(tmp_path / "g" / "omega.vmf").data.shape == (16, 16)
    assert run(["--config", str(cfg), "generate", "--n", "8"]) == EXIT_OK
    assert read_vmf(tmp_path / "g" / "omega.vmf").data.shape == (8, 8)
    cfg.write_text("bogus = 1\n")
    assert run(["--config", str(cfg), "generate", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_inputs(tmp_path):
    junk = tmp_path / "x.vmf"
    junk.write_bytes(b"not a field")
    assert run(["reconstruct", "--omega", str(junk), "--out", str(tmp_path / "o.vmf")]) == EXIT_USAGE
    assert run(["reconstruct", "--omega", str(tmp_path / "missing.vmf"), "--out", "x"]) == EXIT_USAGE
    g = make_grid(8, 1.0, None)
    write_vmf(tmp_path / "unmasked.vmf", g)
    assert run(["reconstruct", "--omega", str(tmp_path / "unmasked.vmf"), "--out", "x"]) == EXIT_USAGE


def test_hls_subcommand(tmp_path, capsys):
    out = tmp_path / "h.csv"
    assert run(["hls", "--n", "32", "--s-values", "3,4", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 3
    assert "loglog_slope" in capsys.readouterr().err


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "vortex_moser.cli", "serrin", "--q", "4", "--s", "6"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("serrin_ok=true")
