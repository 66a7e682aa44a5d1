import json
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamflow import cli
from hamflow.errors import SpecError

TS = "2000-01-01T00:00:00+00:00"


def run_json(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.run([*argv, "--out", str(out)], timestamp=TS)
    return code, json.loads(out.read_text())


# --- field specs -----------------------------------------------------------

def test_bundled_halphen_spec():
    spec = cli.load_field_spec("fixtures/halphen.json")
    assert list(spec.components) == ["y*z - x*y - x*z", "x*z - x*y - y*z", "x*y - x*z - y*z"]
    assert spec.vector_field.evaluate((1, 2, 4)).tolist() == [2, -6, -10]
    assert len(spec.digest) == 64


def test_bundled_euler_top_spec():
    spec = cli.load_field_spec("fixtures/euler_top.json")
    assert [str(h) for h in spec.hamiltonians] == ["x^2 - y^2", "y^2 - z^2"]
    assert len(spec.poisson_fields) == 2


@pytest.mark.parametrize("doc, pointer", [
    ({"components": ["x", "y"]}, "/components"),
    ({"components": ["x", "y", "z +"]}, "/components/2"),
    ({"components": ["x", "y", "z"], "poisson_vectors": [["x", "y", "q"]]}, "/poisson_vectors/0/2"),
    ({"components": ["x", "y", "z"], "domain": {"box": [[0, 1]]}}, "/domain/box"),
    ({"components": ["x", "y", "z"], "domain": {"exclude": ["x +"]}}, "/domain/exclude/0"),
    ({"components": ["x", "y", "z"], "domain": {"eps": -1}}, "/domain/eps"),
])
def test_spec_errors_carry_pointers(doc, pointer):
    with pytest.raises(SpecError) as info:
        cli.parse_field_spec(doc)
    assert info.value.pointer == pointer


def test_bad_spec_file_exits_2(tmp_path):
    p = tmp_path / "two.json"
    p.write_text(json.dumps({"components": ["x", "y"]}))
    code, rep = run_json(["analyze", str(p)], tmp_path)
    assert code == 2
    assert "/components" in rep["error"]
    code, _ = run_json(["analyze", str(tmp_path / "missing.json")], tmp_path)
    assert code == 2
    assert cli.run(["analyze"]) == 2


# --- subcommands -----------------------------------------------------------

def test_analyze_rotation(tmp_path):
    code, rep = run_json(["analyze", "fixtures/rotation.json", "--samples", "50", "--tol", "1e-8",
                          "--seed", "1"], tmp_path)
    assert code == 0 and rep["verdict"] == "GLOBAL_CANDIDATE"
    assert rep["schema"] == 1 and rep["tool"] == "hamflow" and rep["timestamp"] == TS
    names = [c["name"] for c in rep["checks"]]
    assert len(names) == len(set(names))


def test_analyze_halphen_is_local_only(tmp_path):
    code, rep = run_json(["analyze", "fixtures/halphen.json", "--samples", "30", "--seed", "1"], tmp_path)
    assert code == 0 and rep["verdict"] == "LOCAL_ONLY"


def test_halphen_suite(tmp_path):
    code, rep = run_json(["halphen", "--points", "100", "--seed", "7"], tmp_path)
    assert code == 0
    assert all(c["status"] == "pass" for c in rep["checks"])
    ad = next(c for c in rep["checks"] if c["name"] == "alpha_wedge_dalpha")
    assert ad["info"]["max_rel_error_vs_rho_inv"] > 1
    assert rep["details"]["rho_inv_at_124"] == -24.0


def test_check_hamiltonian(tmp_path):
    for name in ("euler_top", "rotation"):
        code, rep = run_json(["check-hamiltonian", f"fixtures/{name}.json", "--points", "30", "--seed", "2"],
                             tmp_path)
        assert code == 0, rep["checks"]


def test_check_hamiltonian_failure_exits_1(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"components": ["-y", "x", "0"], "hamiltonians": ["x"],
                             "poisson_vectors": [["-x", "-y", "0"]], "pairs": [[0, 0]]}))
    code, rep = run_json(["check-hamiltonian", str(p), "--points", "10", "--seed", "2"], tmp_path)
    assert code == 1
    assert any(c["status"] == "fail" for c in rep["checks"])


def test_reconstruct_rotation(tmp_path):
    code, rep = run_json(["reconstruct", "fixtures/rotation.json", "--seed", "3"], tmp_path)
    assert code == 0 and rep["verdict"] == "CASIMIR_FOUND"


def test_riccati_with_csv(tmp_path):
    csv_path = tmp_path / "path.csv"
    code, rep = run_json(["riccati", "fixtures/rotation.json", "--x0", "1", "0", "0", "--mu0", "1",
                          "--s-max", "1", "--csv", str(csv_path)], tmp_path)
    assert code == 0
    assert rep["artifacts"] == [str(csv_path)]
    assert csv_path.read_text().startswith("s,x,y,z,p,q,mu")


def test_traj_and_runtime_failure(tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, rep = run_json(["traj", "fixtures/euler_top.json", "--x0", "1", "0.8", "0.6", "--t1", "1",
                          "--csv", str(csv_path)], tmp_path)
    assert code == 0 and csv_path.exists()
    # finite-time blow-up before t = 5
    code, rep = run_json(["traj", "fixtures/euler_top.json", "--x0", "1", "0.8", "0.6", "--t1", "5"],
                         tmp_path)
    assert code == 3 and "SingularityHit" in rep["error"]


def test_homotopy_command(tmp_path):
    code, rep = run_json(["homotopy", "--form", "y", "x", "0", "--point", "2", "3", "0"], tmp_path)
    assert code == 0
    assert rep["details"]["value"] == pytest.approx(6.0, abs=1e-9)
    code, rep = run_json(["homotopy", "--form", "y", "0", "0", "--point", "2", "3", "0"], tmp_path)
    assert code == 3 and "NotClosed" in rep["error"]


# --- report contract -------------------------------------------------------

def test_reports_are_deterministic(tmp_path):
    argv = ["analyze", "fixtures/halphen.json", "--samples", "20", "--seed", "5"]
    _, a = run_json(argv, tmp_path, "a.json")
    _, b = run_json(argv, tmp_path, "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    c = cli.run(argv + ["--out", str(tmp_path / "c.json")])
    del a["timestamp"]
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc.pop("timestamp") != TS and doc == a and c == 0


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HAMFLOW_SEED", "11")
    _, rep = run_json(["analyze", "fixtures/rotation.json", "--samples", "10"], tmp_path)
    assert rep["seed"] == 11


@given(st.lists(st.sampled_from(["pass", "fail", "skip"]), max_size=12))
def test_exit_code_contract(statuses):
    rep = cli.Report("synthetic", "", 0)
    for i, s in enumerate(statuses):
        rep.add(cli.Check(f"c{i}", s, None, 1, None))
    assert rep.exit_code == (1 if "fail" in statuses else 0)
    assert cli.exit_code_for(statuses) == rep.exit_code
    assert [c["name"] for c in rep.to_json(TS)["checks"]] == [f"c{i}" for i in range(len(statuses))]


def test_duplicate_checks_rejected():
    rep = cli.Report("synthetic", "", 0)
    rep.add(cli.Check("a", "pass", None, 1, None))
    with pytest.raises(ValueError):
        rep.add(cli.Check("a", "pass", None, 1, None))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hamflow", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hamflow" in proc.stdout
