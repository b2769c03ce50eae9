import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from turbmax import cli, io
from turbmax import incompressible as I
from turbmax.compressible import CompressibleData
from turbmax.grid import SpaceTimeGrid
from turbmax.growth import IsentropicGrowth
from turbmax.integrands import kinetic_energy
from turbmax.measure import constant_mixture, young_of_function
from turbmax.sampling import random_candidate_family, random_measure
from turbmax.selector import brute_force_simplex

G = SpaceTimeGrid(1.0, 2, 8, 8)


def const(v, g=G):
    return young_of_function(np.tile(np.asarray(v, float), (g.n_cells, 1)), g)


def shear(g=G):
    return young_of_function(lambda t, x: np.stack([np.sin(x[:, 1]), 0 * t], axis=1), g)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def same_measure(A, B):
    return all(
        np.array_equal(getattr(A, k), getattr(B, k)) for k in ("atoms", "weights", "lambda_mass", "angles", "angle_weights")
    ) and A.grid == B.grid and A.growth == B.growth


# -- files ---------------------------------------------------------------------


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_round_trip_is_bit_exact(tmp_path, seed, isentropic):
    rng = np.random.default_rng(seed)
    g = SpaceTimeGrid(0.7, 2, 2, 3)
    growth = IsentropicGrowth(1.4) if isentropic else None
    Y = random_measure(rng, g, growth, final_layer=True)
    p = tmp_path / "y.json"
    io.write_measure(Y, p)
    Z = io.read_measure(p)
    # zero-weight slots are not stored, so compare the cells (float equality is bitwise here)
    assert Z.grid == g and Z.growth == Y.growth and Z.cells() == Y.cells()
    io.write_measure(Z, tmp_path / "z.json")
    assert (tmp_path / "z.json").read_bytes() == p.read_bytes()


def test_dirac_round_trip_exact(tmp_path):
    Y = shear()
    io.write_measure(Y, tmp_path / "s.json")
    assert same_measure(Y, io.read_measure(tmp_path / "s.json"))


def test_data_round_trip(tmp_path):
    for data in (I.IncompressibleData(G, [0.5, 0.25]), CompressibleData(G, 1.4, 1.1, [0.1, 0.2])):
        io.write_data(data, tmp_path / "d.json")
        back = io.read_data(tmp_path / "d.json", G)
        assert io.data_to_dict(back) == io.data_to_dict(data)


def _doc():
    return io.measure_to_dict(constant_mixture(SpaceTimeGrid(1.0, 2, 2, 2), [[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5]))


def _bad(tmp_path, mutate):
    doc = _doc()
    mutate(doc)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(io.FileFormatError) as exc:
        io.read_measure(p)
    return str(exc.value)


def test_diagnostics_name_the_location(tmp_path):
    def weights(doc):
        doc["cells"][3]["atoms"] = [[1.0, 0.0, 0.45], [-1.0, 0.0, 0.45]]

    msg = _bad(tmp_path, weights)
    assert "$.cells[3].atoms" in msg and "0.9" in msg
    msg = _bad(tmp_path, lambda d: d["cells"][0].update(index=[-1, 0, 0]))
    assert "$.cells[0].index" in msg and "t = 0" in msg
    msg = _bad(tmp_path, lambda d: d["cells"][1].update(index=d["cells"][0]["index"]))
    assert "listed twice" in msg
    msg = _bad(tmp_path, lambda d: d["cells"][0].update(atoms=[[1.0, 1.0]]))
    assert "$.cells[0].atoms[0]" in msg
    msg = _bad(tmp_path, lambda d: d.update(schema_version=2))
    assert "$.schema_version" in msg
    msg = _bad(tmp_path, lambda d: d["cells"].append({"index": [2, 0, 0], "atoms": [[0.0, 0.0, 1.0]]}))
    assert "final-time" in msg
    msg = _bad(tmp_path, lambda d: d["cells"][0].update(lambda_mass=0.5))
    assert "angle_atoms" in msg


def test_malformed_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"a": NaN}')
    with pytest.raises(io.FileFormatError, match="non-finite"):
        io.read_measure(p)
    p.write_text('{"a": ')
    with pytest.raises(io.FileFormatError, match="line 1"):
        io.read_measure(p)
    with pytest.raises(io.FileFormatError, match="cannot read"):
        io.read_measure(tmp_path / "missing.json")


# -- command line ----------------------------------------------------------------


@pytest.fixture
def files(tmp_path):
    io.write_measure(shear(), tmp_path / "shear.json")
    io.write_data(I.IncompressibleData.from_function(G, lambda x: np.stack([np.sin(x[:, 1]), 0 * x[:, 0]], axis=1)), tmp_path / "shear_data.json")
    a = np.array([1.0, 1.0])
    io.write_measure(constant_mixture(G, [a, -a], [0.5, 0.5]), tmp_path / "mix.json")
    io.write_data(I.IncompressibleData(G, [0.0, 0.0]), tmp_path / "zero.json")
    io.write_measure(const([1.0, 0.0]), tmp_path / "e1.json")
    io.write_measure(const([-1.0, 0.0]), tmp_path / "m1.json")
    return tmp_path


def test_check_command(files, capsys):
    code, out, _ = run(capsys, "check", files / "shear.json", "--data", files / "shear_data.json")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "check", files / "mix.json", "--data", files / "zero.json")
    rep = json.loads(out)["results"][0]
    assert code == 1 and rep["admissibility"]["min_margin"] < 0 and not rep["admissibility"]["admissible"]


def test_invalid_input_exits_2(files, capsys):
    doc = json.loads((files / "e1.json").read_text())
    doc["cells"] = [{"index": [0, 0, 0], "atoms": [[1.0, 0.0, 0.9]]}]
    (files / "bad.json").write_text(json.dumps(doc))
    code, _, err = run(capsys, "vf", files / "bad.json")
    assert code == 2 and "$.cells[0].atoms" in err
    code, _, err = run(capsys, "select", files / "e1.json", files / "m1.json")
    assert code == 2 and "--data" in err


def test_select_toy(files, capsys):
    code, out, _ = run(capsys, "select", files / "e1.json", files / "m1.json", "--skip-check", "--f", "variance")
    rep = json.loads(out)
    assert code == 0 and rep["theta"] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert rep["value"] == pytest.approx(G.total_volume, rel=1e-14)
    code, out, _ = run(capsys, "select", files / "e1.json", "--skip-check")
    assert code == 0 and json.loads(out)["theta"] == [1.0]


def test_select_matches_brute_force(tmp_path, capsys, rng):
    g = SpaceTimeGrid(1.0, 2, 2, 3)
    Ys = random_candidate_family(rng, g, 3)
    paths = []
    for i, Y in enumerate(Ys):
        paths.append(tmp_path / f"c{i}.json")
        io.write_measure(Y, paths[-1])
    code, out, _ = run(capsys, "select", *paths, "--skip-check", "--restarts", 3, "--seed", 1)
    rep = json.loads(out)
    _, best = brute_force_simplex([io.read_measure(p) for p in paths], kinetic_energy(), 60)
    assert code == 0 and rep["value"] >= best - 1e-10 and best <= rep["value"] + rep["gap"] + 1e-10
    assert rep["uniqueness"]["passed"] and rep["uniqueness"]["n_results"] == 4


def test_select_checks_candidates(files, capsys):
    code, _, err = run(capsys, "select", files / "mix.json", "--data", files / "zero.json")
    assert code == 1 and "fail" in err


def test_sweep(files, capsys):
    code, out, _ = run(capsys, "sweep", files / "e1.json", files / "m1.json")
    rows = [line.split(",") for line in out.strip().splitlines()]
    assert code == 0 and rows[0] == ["tau", "value"] and len(rows) == 12
    tau = np.array([float(r[0]) for r in rows[1:]])
    val = np.array([float(r[1]) for r in rows[1:]])
    assert tau[np.argmax(val)] == 0.5
    assert np.allclose(val, 4 * tau * (1 - tau) * G.total_volume, rtol=1e-10, atol=1e-10)
    code, out, _ = run(capsys, "sweep", files / "e1.json", files / "e1.json")
    vals = {r.split(",")[1] for r in out.strip().splitlines()[1:]}
    assert len(vals) == 1
    code, out, _ = run(capsys, "sweep", files / "mix.json", files / "e1.json", "--samples", 21)
    val = np.array([float(r.split(",")[1]) for r in out.strip().splitlines()[1:]])
    assert np.all(np.diff(val, 2) <= 1e-10)
    code, _, _ = run(capsys, "sweep", files / "e1.json")
    assert code == 2


def test_demo(capsys):
    code, out, _ = run(capsys, "demo")
    rep = json.loads(out)
    assert code == 0 and rep["tau"] == 0.5 and rep["rel_error"] <= 1e-12
    code, out, _ = run(capsys, "demo", "--f", "energy")
    assert json.loads(out)["value"] == pytest.approx(rep["value"] / 2, rel=1e-14)
    code, out, _ = run(capsys, "demo", "--v1", "1,2", "--v2", "1,2")
    rep = json.loads(out)
    assert code == 0 and rep["degenerate"] and rep["value"] == 0.0 and rep["tau_analytic"] is None
    code, _, _ = run(capsys, "demo", "--v1", "1,2,3")
    assert code == 2


def test_vf(files, capsys):
    code, out, _ = run(capsys, "vf", files / "mix.json")
    rep = json.loads(out)
    assert code == 0 and rep["value"] == pytest.approx(G.total_volume, rel=1e-14)
    assert rep["concentration_part"] == 0.0


def test_output_is_deterministic(files, capsys):
    argv = ["select", files / "e1.json", files / "m1.json", files / "mix.json", "--skip-check", "--restarts", 2]
    outs = [run(capsys, *argv)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    run(capsys, *argv, "--out", files / "a.json")
    assert (files / "a.json").read_text() == outs[0]


def test_thread_limit(files, capsys, monkeypatch):
    monkeypatch.setenv("TURBMAX_THREADS", "1")
    assert run(capsys, "vf", files / "mix.json")[0] == 0
    monkeypatch.setenv("TURBMAX_THREADS", "zero")
    code, _, err = run(capsys, "vf", files / "mix.json")
    assert code == 2 and "TURBMAX_THREADS" in err
