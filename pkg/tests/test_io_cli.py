import json

import numpy as np
import pytest

from smartdm.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, GRADCHECK_TOL, gradient_check, main
from smartdm.errors import InvalidInput
from smartdm.examples import build_example
from smartdm.glm import CandidateModel
from smartdm.io import dumps_spec, load_spec, loads_spec, read_csv, save_spec, write_csv
from smartdm.objective import ProblemSpec, value_and_grads


@pytest.fixture
def toy_spec():
    n = 40
    t = np.linspace(0, 1, n)
    models = [CandidateModel(np.column_stack([np.clip((t - s) * 4, 0, 1), t]), [1.0, 0.5], [1.0, 0.0])
              for s in (0.2, 0.25, 0.3)]
    return ProblemSpec(models, n, 3, np.eye(3)[:, :2], models[0].X, np.eye(3), np.eye(3)[0], name="toy")


@pytest.fixture
def toy_file(tmp_path, toy_spec):
    path = tmp_path / "toy.json"
    save_spec(toy_spec, path)
    return path


def test_spec_round_trip_is_byte_identical(toy_spec):
    text = dumps_spec(toy_spec)
    again = loads_spec(text)
    assert dumps_spec(again) == text
    np.testing.assert_array_equal(again.models[1].X, toy_spec.models[1].X)
    assert again.name == toy_spec.name


def test_shared_matrices_stored_once():
    spec = build_example("example-4")
    doc = json.loads(dumps_spec(spec))
    # 50 shifts reused across four sign blocks, plus the base design for the nulls
    assert len(doc["matrices"]) == 51
    assert len(doc["models"]) == spec.m


def test_x_csv_reference(tmp_path, toy_spec):
    write_csv(tmp_path / "x.csv", toy_spec.models[0].X)
    doc = json.loads(dumps_spec(toy_spec))
    doc["models"][0] = {"X_csv": "x.csv", "snr": [1.0, 0.5], "c_X": [1.0, 0.0]}
    (tmp_path / "s.json").write_text(json.dumps(doc))
    spec = load_spec(tmp_path / "s.json")
    np.testing.assert_array_equal(spec.models[0].X, toy_spec.models[0].X)


@pytest.mark.parametrize("text, match", [
    ("{", "line 1"),
    ("[]", "JSON object"),
    ('{"n": 5, "p": 2}', "models"),
    ('{"n": 5, "p": 2, "models": [{"snr": [1], "c_X": [1]}]}', "X_ref"),
])
def test_malformed_specs(text, match):
    with pytest.raises(InvalidInput, match=match):
        loads_spec(text)


def test_csv_round_trip(tmp_path, rng):
    M = rng.standard_normal((4, 3))
    write_csv(tmp_path / "m.csv", M)
    np.testing.assert_array_equal(read_csv(tmp_path / "m.csv"), M)
    write_csv(tmp_path / "t.csv", [(1, 2.5, True)])
    assert (tmp_path / "t.csv").read_text() == "1,2.5,1\n"


def test_gradcheck_negative_control(toy_spec):
    def corrupted(Z, c, ao):
        F, S, T = value_and_grads(Z, c, ao)
        S = S.copy()
        S[3, 2] += 1e-3 * np.max(np.abs(S))
        return F, S, T

    good = gradient_check(toy_spec)
    bad = gradient_check(toy_spec, grads=corrupted)
    assert good["Z"][0] <= GRADCHECK_TOL and good["c"][0] <= GRADCHECK_TOL
    assert bad["Z"][0] > GRADCHECK_TOL
    assert bad["Z"][1] == (3, 2)


def test_cli_gradcheck(toy_file, capsys):
    assert main(["gradcheck", str(toy_file)]) == EXIT_OK
    assert "grad_Z" in capsys.readouterr().out
    assert main(["gradcheck", str(toy_file), "--eps", "0"]) == EXIT_INPUT


def test_cli_optimize_and_rerun(tmp_path, toy_file):
    out = tmp_path / "run"
    assert main(["optimize", str(toy_file), "--out", str(out), "--reps", "50"]) == EXIT_OK
    for name in ("Z_hat.csv", "c_hat.csv", "objective.txt", "trace.csv", "curves.csv", "spec.json",
                 "manifest.json"):
        assert (out / name).exists()
    assert main(["rerun", str(out), "--out", str(tmp_path / "again")]) == EXIT_OK
    for name in ("Z_hat.csv", "trace.csv", "curves.csv"):
        assert (out / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
    man = json.loads((out / "manifest.json").read_text())
    assert man["termination"]["pgd"] == "ObjectiveTolerance"


def test_cli_optimize_both_solvers(tmp_path, toy_file):
    out = tmp_path / "both"
    assert main(["optimize", str(toy_file), "--solver", "both", "--out", str(out),
                 "--eta1", "1e-12", "--max-outer", "100000"]) == EXIT_OK
    Fp, Fe, gap, cs = read_csv(out / "comparison.csv")[0]
    assert gap <= 1e-3
    assert (out / "exact" / "Z_hat.csv").exists()


def test_cli_iteration_cap_is_solver_failure(tmp_path, toy_file):
    assert main(["optimize", str(toy_file), "--out", str(tmp_path / "cap"), "--max-outer", "2"]) == 3


def test_cli_simulate_and_roc(tmp_path, toy_file):
    out = tmp_path / "run"
    main(["optimize", str(toy_file), "--out", str(out)])
    curves = tmp_path / "c.csv"
    assert main(["simulate", str(toy_file), str(out), "--reps", "100", "--out", str(curves)]) == EXIT_OK
    assert read_csv(curves).shape == (3, 8)
    roc = tmp_path / "roc.csv"
    assert main(["roc", str(toy_file), str(out), "--signal", "0", "--null-snr", "0,0.5",
                 "--reps", "100", "--thresholds=-2:8:0.5", "--out", str(roc)]) == EXIT_OK
    rows = read_csv(roc)
    assert rows.shape[1] == 3
    assert main(["roc", str(toy_file), str(out), "--thresholds", "3:1:1"]) == EXIT_INPUT
    assert main(["roc", str(toy_file), str(out), "--signal", "9"]) == EXIT_INPUT


def test_cli_select_size(tmp_path, toy_file, capsys):
    out = tmp_path / "sizes.csv"
    assert main(["select-size", str(toy_file), "--p0", "2", "--pmax", "4", "--out", str(out)]) == EXIT_OK
    assert "p_opt" in capsys.readouterr().out
    assert read_csv(out).shape == (3, 3)
    assert main(["select-size", str(toy_file), "--p0", "4", "--pmax", "2"]) == EXIT_INPUT


def test_cli_example(tmp_path, capsys):
    assert main(["example", "--list"]) == EXIT_OK
    assert "validation-a" in capsys.readouterr().out
    path = tmp_path / "e1.json"
    assert main(["example", "example-1", "--out", str(path)]) == EXIT_OK
    assert load_spec(path).m == 50
    assert main(["example", "nope"]) == EXIT_INPUT


def test_cli_bad_inputs(tmp_path):
    assert main(["optimize", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x")]) == EXIT_INPUT
    (tmp_path / "bad.json").write_text("{")
    assert main(["gradcheck", str(tmp_path / "bad.json")]) == EXIT_INPUT
    with pytest.raises(SystemExit) as exc:
        main(["optimize"])
    assert exc.value.code == EXIT_INPUT


def test_cli_gradcheck_failure_exit(toy_file, monkeypatch):
    import smartdm.cli as cli

    monkeypatch.setattr(cli, "gradient_check", lambda *a, **k: {"Z": (1.0, (0, 0)), "c": (0.0, (0,))})
    assert main(["gradcheck", str(toy_file)]) == EXIT_CHECK


def test_cli_validation_a_both_solvers(tmp_path):
    spec = tmp_path / "va.json"
    assert main(["example", "validation-a", "--out", str(spec)]) == EXIT_OK
    out = tmp_path / "va"
    # generic stopping rule keeps this quick; the gap is still well inside 1e-3
    assert main(["optimize", str(spec), "--solver", "both", "--out", str(out),
                 "--eta1", "1e-8", "--max-outer", "50000"]) == EXIT_OK
    _, _, gap, _ = read_csv(out / "comparison.csv")[0]
    assert gap <= 1e-3


def test_cli_same_seed_gives_identical_bundles(tmp_path, toy_file):
    for name in ("a", "b"):
        assert main(["optimize", str(toy_file), "--out", str(tmp_path / name), "--reps", "30",
                     "--seed", "4"]) == EXIT_OK
    for f in ("Z_hat.csv", "c_hat.csv", "objective.txt", "trace.csv", "curves.csv", "spec.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    ma.pop("wall_time_s"), mb.pop("wall_time_s")
    assert ma == mb


def test_selected_size_is_monotone_in_cutoff():
    from smartdm.selection import select_size

    spec = build_example("validation-a")
    low = select_size(spec, 2, 6, cutoff=0.5).p_opt
    high = select_size(spec, 2, 6, cutoff=0.95).p_opt
    assert low <= high == 3


def test_cli_simulate_gauss_markov_row(tmp_path):
    n = 30
    X = np.column_stack([np.ones(n), np.linspace(0, 1, n)])
    spec = ProblemSpec([CandidateModel(X, [1.0, 2.0], [0.0, 1.0])], n, 2)
    save_spec(spec, tmp_path / "gm.json")
    design = tmp_path / "design"
    design.mkdir()
    write_csv(design / "Z_hat.csv", X)
    write_csv(design / "c_hat.csv", np.array([0.0, 1.0]))
    out = tmp_path / "curves.csv"
    assert main(["simulate", str(tmp_path / "gm.json"), str(design), "--reps", "10", "--out", str(out)]) == 0
    row = read_csv(out)[0]
    np.testing.assert_allclose(row[1:4], 0.0, atol=1e-12)


def test_cli_roc_endpoint_rows(tmp_path, toy_file):
    out = tmp_path / "run"
    main(["optimize", str(toy_file), "--out", str(out)])
    roc = tmp_path / "roc.csv"
    assert main(["roc", str(toy_file), str(out), "--reps", "50", "--out", str(roc)]) == EXIT_OK
    rows = read_csv(roc)
    assert rows[0, 0] == -np.inf and tuple(rows[0, 1:]) == (1.0, 1.0)
    assert rows[-1, 0] == np.inf and tuple(rows[-1, 1:]) == (0.0, 0.0)


def test_cli_example_fmri_and_unknown(tmp_path, capsys):
    path = tmp_path / "f.json"
    assert main(["example", "fmri-723", "--out", str(path)]) == EXIT_OK
    assert load_spec(path).m == 723
    capsys.readouterr()
    assert main(["example", "example-9"]) == EXIT_INPUT
    assert "example-6" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "smartdm", "example", "--list"], capture_output=True, text=True)
    assert out.returncode == EXIT_OK
    assert "fmri-723" in out.stdout
