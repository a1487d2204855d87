import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qextrap import __version__
from qextrap.cli import EXPERIMENTS, ExperimentConfig, main, run
from qextrap.commit import GenInstance
from qextrap.extrap import QExtrapTask
from qextrap.instances import InstanceError, builtin_instance, gen_to_dict, load_instance
from qextrap.report import Report, check_close, check_ge, check_le, clean, emit, from_json


def _json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


# -- reports ----------------------------------------------------------------

def test_clean_rounds_to_12_digits():
    assert clean(1 / 3) == 0.333333333333
    assert clean(np.float64(2.0)) == 2.0 and isinstance(clean(np.int64(3)), int)
    assert clean({"a": np.array([1.5, float("nan")])}) == {"a": [1.5, None]}
    assert clean(1 + 2j) == [1.0, 2.0]


def test_checks():
    assert check_le("a", 1.0, 1.0).passed and not check_le("a", 1.1, 1.0).passed
    assert check_ge("b", 0.9, 1.0, 0.2).passed
    assert check_close("c", 0.5, 0.51, 0.02).passed and not check_close("c", 0.5, 0.6, 0.02).passed


def test_json_round_trip():
    rep = Report("x", {"p": 1}, {"v": 1 / 3, "arr": np.arange(3)}, [check_le("c", 0.1, 0.2)], seed=4)
    d = from_json(rep.to_json())
    assert d == rep.to_dict()
    assert d["pass"] is True and d["version"] == __version__
    assert d["checks"][0] == {"name": "c", "measured": 0.1, "bound": 0.2, "relation": "<=", "pass": True}


def test_emit_errors(tmp_path):
    rep = Report("x", {}, {})
    with pytest.raises(ValueError):
        emit(rep, "xml")
    with pytest.raises(OSError, match="cannot write"):
        emit(rep, "json", tmp_path / "missing" / "r.json")


# -- instances --------------------------------------------------------------

def test_builtin_bb84():
    g = load_instance("bb84")
    assert isinstance(g, GenInstance) and g.n_challenges == 4
    assert load_instance("excited:2").msg_qubits == 2


def test_unknown_source():
    with pytest.raises(InstanceError, match="neither"):
        load_instance("nope")
    with pytest.raises(InstanceError):
        builtin_instance("nope")


def _write(tmp_path, d, name="inst.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def _classical_file(weights):
    return {"kind": "gen", "weights": weights, "challenges": [0], "targets": [[[0, 0], [1, 0]]]}


def test_renormalization_warning(tmp_path):
    path = _write(tmp_path, _classical_file([math.sqrt(1.000000001)]))
    with pytest.warns(RuntimeWarning, match="renormalized"):
        g = load_instance(path)
    assert np.sum(g.betas**2) == pytest.approx(1.0, abs=1e-15)


def test_silent_below_tolerance(tmp_path, recwarn):
    load_instance(_write(tmp_path, _classical_file([math.sqrt(1.0000000001)])))
    assert not [w for w in recwarn if issubclass(w.category, RuntimeWarning)]


def test_large_norm_error_rejected(tmp_path):
    with pytest.raises(InstanceError, match="norm error"):
        load_instance(_write(tmp_path, _classical_file([1.01])))


def test_non_orthogonal_challenges_rejected(tmp_path):
    d = {"kind": "gen", "weights": [0.6, 0.8], "basis_kind": "cloneable",
         "challenges": [[[1, 0], [0, 0]], [[0.6, 0], [0.8, 0]]],
         "targets": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}
    with pytest.raises(InstanceError, match="challenges 0 and 1"):
        load_instance(_write(tmp_path, d))
    d2 = {"kind": "gen", "weights": [0.6, 0.8], "challenges": [2, 2],
          "targets": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}
    with pytest.raises(InstanceError, match="challenges 0 and 1"):
        load_instance(_write(tmp_path, d2, "b.json"))


def test_malformed_files(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InstanceError, match="malformed"):
        load_instance(str(p))
    with pytest.raises(InstanceError, match="kind"):
        load_instance(_write(tmp_path, {"kind": "other"}, "k.json"))
    with pytest.raises(InstanceError, match="missing"):
        load_instance(_write(tmp_path, {"kind": "gen"}, "m.json"))


@pytest.mark.parametrize("name", ["bb84", "haar", "cloneable", "hadamard"])
def test_gen_dict_round_trip(tmp_path, name):
    g = builtin_instance(name)
    g2 = load_instance(_write(tmp_path, gen_to_dict(g)))
    assert np.allclose(g.betas, g2.betas) and np.allclose(g.targets, g2.targets)
    assert np.allclose(g.challenges, g2.challenges) and g.basis_kind == g2.basis_kind


def test_task_file(tmp_path):
    amps = [[1 / math.sqrt(2), 0], [0, 0], [0, 0], [1 / math.sqrt(2), 0]]
    t = load_instance(_write(tmp_path, {"kind": "task", "amplitudes": amps, "dims": [2, 2], "cut": 1}))
    assert isinstance(t, QExtrapTask) and t.dims == (2, 2)


# -- command line -----------------------------------------------------------

def test_hiding_example(capsys):
    code, d = _json(capsys, ["hiding", "--family", "mub_prime:2", "--pair", "0,1", "--mode", "exact"])
    assert code == 0 and d["pass"]
    assert d["results"]["expectedTD"] == pytest.approx(1 / 3, abs=1e-11)
    assert d["results"]["bound"] == pytest.approx(0.57735, abs=1e-5)
    assert d["experiment"] == "hiding" and d["seed"] == 0


def test_commit_hiding_degenerate(capsys):
    code, d = _json(capsys, ["commit-hiding", "--instance", "degenerate"])
    assert code == 0
    assert d["results"]["hidingTD"] == pytest.approx(0.0, abs=1e-12)
    assert d["results"]["bound"] == pytest.approx(0.70711, abs=1e-5)


def test_haar_limit_example(capsys):
    code, d = _json(capsys, ["haar-limit", "--dim", "64", "--trials", "2000", "--seed", "1"])
    assert code == 0 and 0.45 <= d["results"]["estimate"] <= 0.55


def test_run_spelling_matches_subcommand(capsys):
    _, a = _json(capsys, ["run", "--experiment", "mub-verify", "--dim", "5"])
    _, b = _json(capsys, ["mub-verify", "--dim", "5"])
    a.pop("wall_clock"), b.pop("wall_clock")
    assert a == b


SMOKE = {
    "hiding": ["--pair", "random", "--family", "mub_prime:3", "--trials", "5"],
    "mub-verify": ["--n", "3"],
    "design2-verify": ["--family", "clifford:1"],
    "ivanovic": ["--dim", "4", "--trials", "5"],
    "counterexample": ["--family", "per_qubit_pauli", "--n", "2"],
    "haar-limit": ["--dim", "8", "--trials", "200", "--tol", "0.2"],
    "commit-hiding": ["--instance", "bb84"],
    "commit-binding": ["--trials", "3"],
    "commit-reduction": ["--trials", "3"],
    "xor": ["--lam", "3"],
    "fixed-basis-demo": [],
    "extrapolate": ["--trials", "5"],
    "robustness": ["--trials", "5"],
    "conjugation": ["--trials", "5"],
    "attack-commitment": [],
}


@pytest.mark.parametrize("name", list(EXPERIMENTS))
def test_every_experiment_runs(capsys, name):
    code, d = _json(capsys, [name] + SMOKE[name])
    assert code == 0, d["checks"]
    assert d["experiment"] == name
    for c in d["checks"]:
        assert {"measured", "bound", "pass"} <= set(c)


def test_csv_rows_equal_key_count_plus_one(capsys):
    assert main(["hiding", "--family", "clifford:1", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 24 + 1
    assert rows[-1]["row"] == "summary"
    assert float(rows[-1]["expectedTD"]) == pytest.approx(1 / 3)


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["xor", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["results"]["compositeTD"] == pytest.approx(0.25)


def _strip(text):
    d = json.loads(text)
    d.pop("wall_clock")
    return json.dumps(d, sort_keys=True)


@pytest.mark.parametrize("argv", [
    ["hiding", "--pair", "mixed", "--family", "haar:4:1000", "--mode", "mc", "--trials", "4"],
    ["commit-reduction", "--trials", "6"],
    ["robustness", "--trials", "20"],
])
def test_determinism_and_worker_independence(capsys, argv):
    outs = []
    for workers in ("1", "1", "4"):
        main(argv + ["--seed", "11", "--workers", workers])
        outs.append(_strip(capsys.readouterr().out))
    assert outs[0] == outs[1] == outs[2]
    main(argv + ["--seed", "12"])
    assert _strip(capsys.readouterr().out) != outs[0]


def test_failed_check_exit_code(capsys):
    # a 1e-12 tolerance on the Haar limit cannot be met by a finite sample
    code, d = _json(capsys, ["haar-limit", "--dim", "4", "--trials", "50", "--tol", "1e-12"])
    assert code == 1 and d["pass"] is False


def test_error_exit_code(capsys):
    assert main(["commit-hiding", "--instance", "nope"]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["commit-binding", "--instance", "bb84:2", "--family", "clifford:2"]) == 2
    assert "limit" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["not-an-experiment"])


def test_warning_goes_to_stderr(tmp_path, capsys):
    p = tmp_path / "w.json"
    p.write_text(json.dumps(_classical_file([math.sqrt(1.000000001)])))
    assert main(["commit-hiding", "--instance", str(p)]) == 0
    assert "renormalized" in capsys.readouterr().err


def test_run_rejects_unknown():
    with pytest.raises(ValueError, match="unknown experiment"):
        run(ExperimentConfig("bogus"))


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "qextrap", "mub-verify", "--dim", "3"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["results"]["bases"] == 4
