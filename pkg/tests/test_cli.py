from __future__ import annotations

import csv
import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from conftest import random_density, random_herm, random_ket
from ncpbattery.battery import matrix_to_json
from ncpbattery.cli import EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, fig1_grid, main, point_seed, run_sweep

FAST = ["--max-evals", "1500", "--restarts", "2"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_matrix(path, m, dims):
    path.write_text(json.dumps(matrix_to_json(m, dims)))
    return str(path)


def test_check_cptp_exit_codes(capsys):
    code, out, _ = run(capsys, "check-cptp", "--p1", "0.25", "--r", "1")
    assert code == EXIT_OK
    assert json.loads(out)["passive"] is True
    code, out, _ = run(capsys, "check-cptp", "--p1", "0.25", "--r", "0.9")
    assert code == EXIT_NEGATIVE
    assert json.loads(out)["kind"] == "CptpLocal"


def test_check_ncptp_reports_all_conditions(capsys):
    code, out, _ = run(capsys, "check-ncptp", "--p1", "0.25")
    assert code == EXIT_NEGATIVE
    data = json.loads(out)
    assert set(data) == {"ncptp_local", "commutator", "hessian"}
    assert np.isclose(data["commutator"]["norm_residual"], np.sqrt(3))
    assert len(data["hessian"]["matrix"]) == 6


def test_ergotropy_command(capsys):
    code, out, _ = run(capsys, "ergotropy")
    assert code == EXIT_OK
    assert abs(json.loads(out)["ergotropy_energy"] - 0.75) <= 1e-10


def test_max_cp_and_witness(capsys):
    code, out, _ = run(capsys, "max-cp", "--r", "0.3")
    assert abs(json.loads(out)["value_energy"] - 0.2) <= 1e-9
    code, out, _ = run(capsys, "witness", "--r", "0.3", "--observed", "0.15")
    assert code == EXIT_OK and json.loads(out)["is_ncptp"] is False
    code, out, _ = run(capsys, "witness", "--observed", "0.1")
    assert json.loads(out)["is_ncptp"] is True


def test_verify_copies(capsys):
    code, out, _ = run(capsys, "verify-theorem1")
    data = json.loads(out)
    assert code == EXIT_OK and data["single"]["passive"] and data["multi"]["passive"]
    code, _, err = run(capsys, "verify-theorem1", "--copies", "4")
    assert code == EXIT_INPUT and "exceed" in err


def test_json_inputs(tmp_path, capsys, rng):
    state = write_matrix(tmp_path / "rho.json", random_density(rng, 4), (2, 2))
    ham = write_matrix(tmp_path / "h.json", random_herm(rng, 4), (2, 2))
    code, out, _ = run(capsys, "check-cptp", "--state", state, "--ham", ham)
    assert code in (EXIT_OK, EXIT_NEGATIVE)
    psi = random_ket(rng, 8)
    tri = write_matrix(tmp_path / "tri.json", np.outer(psi, psi.conj()), (2, 2, 2))
    code, out, _ = run(capsys, "extract-ncp", "--state", tri, "--ham", ham, *FAST)
    data = json.loads(out)
    assert code == EXIT_OK and data["delta_w_energy"] >= -1e-9 and len(data["optimal_params"]) == 15


@pytest.mark.parametrize(
    "argv",
    [
        ["check-cptp", "--p1", "1.5"],
        ["check-cptp", "--state", "/nonexistent.json"],
        ["fig1", "--r-values", "0.2", "--grid", "2"],
        ["fig1", "--r-values", "-1", "--grid", "2"],
        ["fig1", "--grid", "1"],
        ["fig1", "--p1-max", "0.4", "--grid", "2"],
    ],
)
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INPUT and err.startswith("error:")


def test_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "check-cptp", "--state", str(bad))[0] == EXIT_INPUT
    bad.write_text(json.dumps({"dims": [2, 2], "re": [[1, 0], [0, 0]]}))
    assert run(capsys, "check-cptp", "--state", str(bad))[0] == EXIT_INPUT


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["witness"])
    assert exc.value.code == EXIT_INPUT


def test_fig1_grid_and_message():
    g = fig1_grid((1.0, 1.5, 2.0), 0.5, 16)
    assert g[0] == 0.0 and np.isclose(g[-1], 0.25) and len(g) == 16
    with pytest.raises(Exception, match="passive threshold"):
        fig1_grid((0.3,), 0.5, 4)


def test_point_seed_is_order_free():
    assert point_seed(0, 3) == point_seed(0, 3)
    assert len({point_seed(0, i) for i in range(20)}) == 20
    assert point_seed(0, 1) != point_seed(1, 1)


def test_fig1_csv(tmp_path, capsys):
    out = tmp_path / "fig1.csv"
    code, _, _ = run(capsys, "fig1", "--grid", "3", "--r-values", "1", "2", "--out", str(out), *FAST)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["S_ebits", "p1", "dW_p_NCP_r1_energy", "dW_p_NCP_r2_energy", "seed"]
    assert len(rows) == 4
    first = [float(v) for v in rows[1]]
    assert abs(first[0]) <= 1e-12 and abs(first[2]) <= 1e-6


def test_sweeps_are_deterministic_and_worker_independent():
    kw = dict(seed=5, grid=3, rs=(1.0,), max_evals=1000, restarts=2)
    a = run_sweep("fig1", **kw)
    b = run_sweep("fig1", **kw, workers=2)
    assert a == b
    with pytest.raises(Exception):
        run_sweep("fig3")


def test_rerun_is_byte_identical(tmp_path, capsys):
    for cmd in (["extract-ncp"], ["max-cp", "--oracle"], ["fig2", "--grid", "2"]):
        paths = [tmp_path / f"{cmd[0]}-{k}.out" for k in range(2)]
        for p in paths:
            assert run(capsys, *cmd, "--seed", "3", "--out", str(p), *FAST)[0] == EXIT_OK
        assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.skipif(shutil.which("ncpbattery") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["ncpbattery", "ergotropy"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert abs(json.loads(proc.stdout)["ergotropy_energy"] - 0.75) <= 1e-10
