import io as _io
import json
import re
import subprocess
import sys

import numpy as np
import pytest

from maxgrowth import cli, io
from maxgrowth.growth import SvdIterConfig, max_growth
from maxgrowth.linalg import SparseMatrix
from maxgrowth.models import fixture, speed_weight
from maxgrowth.operators import DaeBlocks, PropagatorConfig, reduced_jacobian_operator


def run(*argv):
    out = _io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def value(text, key):
    m = re.search(rf"^{re.escape(key)}\s+(\S+)", text, re.M)
    return float(m.group(1))


def test_growth_vreg_sys2(tmp_path):
    code, out = run("growth", "--model", "fixture:vreg_sys2", "--tmax", "2", "--steps", "200",
                    "--backend", "dense", "--norm", "euclidean", "--out", str(tmp_path / "r"))
    assert code == 0
    assert value(out, "peak G") == pytest.approx(9.2, rel=0.03)
    assert value(out, "t_star") == pytest.approx(0.97, abs=0.02)
    assert "e_prime" in out
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "t,sigma_max,growth" and len(lines) == 202
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["config"]["steps"] == 200 and doc["version"]


def test_growth_oscillator_energy():
    code, out = run("growth", "--model", "fixture:oscillator_2bus", "--norm", "energy", "--tmax", "5", "--steps", "100")
    assert code == 0
    assert value(out, "peak G") == pytest.approx(1.0, abs=1e-8)


def toy_bundle(tmp_path):
    blocks = DaeBlocks(
        f_x=SparseMatrix.from_dense([[0.0, 1.0], [-3.0, -0.4]]),
        f_y=SparseMatrix.from_dense([[0.0], [1.0]]),
        g_x=SparseMatrix.from_dense([[0.5, 0.0]]),
        g_y=SparseMatrix.from_dense([[-1.0]]),
    )
    man = io.write_dae_bundle(blocks, tmp_path, name="toy", state_labels=["delta", "omega"],
                              speed_indices=[1], inertias=[2.0])
    return blocks, man


@pytest.mark.parametrize("backend", ["dense", "matfree"])
def test_growth_bundle_matches_library_bit_for_bit(tmp_path, backend):
    blocks, man = toy_bundle(tmp_path)
    code, _ = run("growth", "--bundle", str(man), "--norm", "weighted", "--weights", "speeds",
                  "--backend", backend, "--tmax", "3", "--steps", "30", "--out", str(tmp_path / "cli"))
    assert code == 0
    lib = max_growth(io.load_dae_bundle(man), speed_weight([2.0], [1], 2), dT=3 / 30, n=30, backend=backend,
                     svd_cfg=SvdIterConfig())
    io.write_growth_csv(lib.curve, tmp_path / "lib.csv")
    assert (tmp_path / "cli.csv").read_bytes() == (tmp_path / "lib.csv").read_bytes()
    doc = io.read_result_json(tmp_path / "cli.json")
    assert doc["s_max"] == lib.s_max and doc["t_star"] == lib.t_star
    assert doc["x_max"] == lib.x_max.tolist()


def test_growth_step_override_matches_library(tmp_path):
    blocks, man = toy_bundle(tmp_path)
    code, _ = run("growth", "--bundle", str(man), "--backend", "matfree", "--step", "0.01",
                  "--tmax", "1", "--steps", "4", "--out", str(tmp_path / "c"))
    assert code == 0
    cfg = PropagatorConfig.for_system(blocks, 1.0, step=0.01)
    lib = max_growth(blocks, dT=0.25, n=4, backend="matfree", prop_cfg=cfg)
    assert io.read_result_json(tmp_path / "c.json")["s_max"] == lib.s_max


def test_growth_outputs_deterministic(tmp_path):
    _, man = toy_bundle(tmp_path)
    for k in (1, 2):
        code, _ = run("growth", "--bundle", str(man), "--backend", "matfree", "--seed", "3",
                      "--tmax", "2", "--steps", "10", "--out", str(tmp_path / f"o{k}"))
        assert code == 0
    for ext in ("csv", "json"):
        assert (tmp_path / f"o1.{ext}").read_bytes() == (tmp_path / f"o2.{ext}").read_bytes()


def test_growth_matrix_market_model(tmp_path):
    p = tmp_path / "A.mtx"
    io.write_matrix_market(SparseMatrix.from_dense(fixture("vreg_sys2").A), p)
    code, out = run("growth", "--model", str(p), "--tmax", "2", "--steps", "200")
    assert code == 0 and value(out, "peak G") == pytest.approx(9.206969966, rel=1e-9)


def test_growth_inline_and_file_weights(tmp_path):
    W = {"indices": [2, 3], "weights": [1.0, 1.0]}
    (tmp_path / "w.json").write_text(json.dumps(W))
    c1, o1 = run("growth", "--model", "fixture:two_machine_lossy", "--norm", "weighted", "--weights", json.dumps(W))
    c2, o2 = run("growth", "--model", "fixture:two_machine_lossy", "--norm", "weighted",
                 "--weights", str(tmp_path / "w.json"))
    c3, o3 = run("growth", "--model", "fixture:two_machine_lossy", "--norm", "weighted", "--weights", "speeds")
    assert c1 == c2 == c3 == 0
    # unit inertias: speeds weight equals the inline one
    assert value(o1, "s_max") == value(o2, "s_max") == value(o3, "s_max")


def test_growth_io_mode():
    code, out = run("growth", "--model", "fixture:vreg_sys2", "--norm", "io",
                    "--weights", '{"C": [[1, 0]], "B": [[0], [1]]}')
    assert code == 0 and value(out, "s_max") > 0


@pytest.mark.parametrize(
    "argv",
    [
        ["growth"],
        ["growth", "--model", "fixture:vreg_sys1", "--bundle", "x.json"],
        ["growth", "--model", "fixture:nope"],
        ["growth", "--model", "fixture:vreg_sys1", "--norm", "energy"],
        ["growth", "--model", "fixture:vreg_sys1", "--norm", "weighted"],
        ["growth", "--model", "fixture:vreg_sys1", "--norm", "weighted", "--weights", "speeds"],
        ["growth", "--model", "fixture:vreg_sys1", "--tmax", "0"],
        ["growth", "--model", "fixture:vreg_sys1", "--steps", "0"],
        ["growth", "--model", "fixture:vreg_sys1", "--backend", "gpu"],
        ["growth", "--model", "fixture:vreg_sys1", "--norm", "weighted", "--weights", "{\"indices\": [0], \"weights\": [0]}"],
        ["bench", "--sizes", "a,b"],
        ["bench", "--backends", "gpu"],
        ["fixture", "emit"],
        ["fixture", "emit", "nope"],
    ],
)
def test_usage_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_io_errors_exit_4(tmp_path):
    assert run("growth", "--bundle", str(tmp_path / "missing.json"))[0] == 4
    (tmp_path / "bad.mtx").write_text("not a matrix\n")
    assert run("growth", "--model", str(tmp_path / "bad.mtx"))[0] == 4


def test_numerical_errors_exit_3(tmp_path):
    p = tmp_path / "unstable.mtx"
    io.write_matrix_market(SparseMatrix.from_dense([[40.0]]), p)
    assert run("growth", "--model", str(p), "--backend", "matfree", "--tmax", "2", "--steps", "2")[0] == 3
    assert run("growth", "--model", "fixture:vreg_sys2", "--max-iter", "1", "--backend", "matfree",
               "--tol", "1e-15")[0] == 3


def test_henrici_and_spectrum():
    code, out = run("henrici", "--model", "fixture:vreg_sys1")
    assert code == 0 and value(out, "nu") > 0
    code, out = run("spectrum", "--model", "fixture:vreg_sys1")
    assert code == 0 and value(out, "kappa(V)") == pytest.approx(1.79, abs=0.02)
    code, out = run("spectrum", "--model", "fixture:vreg_sys2", "--k", "2")
    assert code == 0
    assert "-0.688248" in out and "-1.380752" in out


def test_henrici_symmetric_matrix(tmp_path):
    p = tmp_path / "s.mtx"
    io.write_matrix_market(SparseMatrix.from_dense([[2.0, 1.0], [1.0, 3.0]]), p)
    code, out = run("henrici", "--model", str(p))
    assert code == 0 and value(out, "nu") <= 1e-10


def test_henrici_above_guard_reports_unavailable(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "DENSE_GUARD", 1)
    code, out = run("henrici", "--model", "fixture:vreg_sys1")
    assert code == 0 and "unavailable" in out


def test_fixture_list():
    code, out = run("fixture", "list")
    assert code == 0 and len(out.strip().splitlines()) == 5


def test_fixture_emit_round_trip(tmp_path, rng):
    code, _ = run("fixture", "emit", "oscillator_2bus", "--dir", str(tmp_path))
    assert code == 0
    blocks = io.load_dae_bundle(tmp_path / "oscillator_2bus.json")
    op = reduced_jacobian_operator(blocks)
    A = fixture("oscillator_2bus").A
    for _ in range(5):
        v = rng.standard_normal(2)
        np.testing.assert_array_equal(op.apply(v), A @ v)
        np.testing.assert_array_equal(op.apply_adjoint(v), A.T @ v)


def test_fixture_emit_unwritable_dir(tmp_path):
    # a regular file as parent cannot be written into, even by root
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("fixture", "emit", "vreg_sys1", "--dir", str(blocker / "sub"))[0] == 4


def test_bench_small_and_guard():
    code, out = run("bench", "--sizes", "50,5000", "--backends", "dense")
    assert code == 0
    assert "synthetic-50" in out and "skipped-guard" in out


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "maxgrowth.cli", "fixture", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "vreg_sys2" in res.stdout
