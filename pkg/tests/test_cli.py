import json

import numpy as np
import pytest

from graphon_games import cli
from graphon_games.errors import IterationLimitError


def run(args):
    return cli.main(args)


# --- eigen ---------------------------------------------------------------------

def test_eigen_minmax_top3(tmp_path):
    code = run(["eigen", "--graphon", "minmax", "--M", "2000", "--k", "3",
                "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "eigenvalues.csv").read_text().splitlines()
    assert lines[0] == "rank,value"
    values = [float(line.split(",")[1]) for line in lines[1:]]
    expected = [1.0 / (np.pi**2 * h**2) for h in (1, 2, 3)]
    assert values == pytest.approx(expected, abs=1e-3)
    # eigenfunction table has one midpoint column plus k psi columns
    header = (tmp_path / "eigenfunctions.csv").read_text().splitlines()[0]
    assert header == "midpoint,psi1,psi2,psi3"
    assert (tmp_path / "manifest.json").exists()


# --- solve-network / solve-graphon ------------------------------------------------

def test_solve_network_empty_er(tmp_path):
    code = run(["solve-network", "--er", "0", "--N", "5", "--alpha", "0.5",
                "--beta", "1", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["profile"] == [1.0] * 5
    profile = (tmp_path / "profile.csv").read_text().splitlines()
    assert profile[0] == "index,value"
    assert profile[1] == "0,1.0"


def test_solve_graphon_er_closed_form(tmp_path):
    code = run(["solve-graphon", "--er", "0.5", "--M", "50", "--alpha", "0.5",
                "--beta", "1", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["profile"][0] == pytest.approx(1.0 / 0.75, abs=1e-10)


def test_solve_network_from_file(tmp_path):
    net = {"types": [0.2, 0.8], "matrix": [[0.0, 1.0], [1.0, 0.0]]}
    net_path = tmp_path / "net.json"
    net_path.write_text(json.dumps(net))
    code = run(["solve-network", "--network-json", str(net_path), "--alpha", "-0.5",
                "--beta", "1", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["profile"] == pytest.approx([0.8, 0.8], abs=1e-10)


# --- sample -------------------------------------------------------------------------

def test_sample_writes_network(tmp_path):
    code = run(["sample", "--graphon", "sbm", "--gin", "0.8", "--gout", "0.1",
                "--w", "0.75,0.25", "--N", "12", "--seed", "3", "--simple",
                "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "network.json").read_text())
    A = np.asarray(doc["matrix"])
    assert A.shape == (12, 12)
    assert set(np.unique(A)) <= {0.0, 1.0}
    assert (tmp_path / "edges.csv").exists()


# --- intervene -------------------------------------------------------------------------

def test_intervene_all_policies(tmp_path):
    code = run(["intervene", "--graphon", "minmax", "--N", "25", "--alpha", "2",
                "--beta", "1", "--c-per-agent", "0.01", "--seed", "5",
                "--out", str(tmp_path)])
    assert code == 0
    results = json.loads((tmp_path / "interventions.json").read_text())
    by_policy = {r["policy"]: r for r in results}
    assert set(by_policy) == {"none", "homogeneous", "network-heuristic",
                              "graphon-heuristic", "optimal"}
    best = by_policy["optimal"]["welfare"]
    for name in ("homogeneous", "network-heuristic", "graphon-heuristic"):
        assert best >= by_policy[name]["welfare"] - 1e-9
    assert by_policy["homogeneous"]["welfare"] / by_policy["none"]["welfare"] == pytest.approx(
        1.21, abs=1e-9)


# --- experiments ----------------------------------------------------------------------

def test_distance_exp_deterministic(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    args = ["distance-exp", "--graphon", "minmax", "--alpha", "0.5", "--beta", "1",
            "--Ns", "20,40", "--trials", "3", "--M", "80", "--seed", "7"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert (out1 / "distances.csv").read_bytes() == (out2 / "distances.csv").read_bytes()
    assert (out1 / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()
    header = (out1 / "distances.csv").read_text().splitlines()[0]
    assert header == "N,trial,kind,distance,bound,d_N_event"


def test_welfare_exp_summary(tmp_path):
    code = run(["welfare-exp", "--graphon", "minmax", "--alpha", "5", "--beta", "1",
                "--c-per-agent", "0.01", "--Ns", "20", "--trials", "2",
                "--optimal-cap", "25", "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("N,mean_T,mean_T_hom,mean_T_nh,mean_T_gh,mean_T_opt")
    assert (tmp_path / "welfare.csv").exists()


def test_bne_epsilon_rows(tmp_path):
    code = run(["bne-epsilon", "--graphon", "minmax", "--alpha", "3", "--beta", "1",
                "--Ns", "50,100", "--trials", "50", "--M", "200", "--seed", "2",
                "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "epsilon.csv").read_text().splitlines()
    assert lines[0] == "N,epsilon_hat,stderr"
    assert len(lines) == 3


# --- config file and error mapping ------------------------------------------------------

def test_config_file_with_flag_override(tmp_path):
    config = {"alpha": 0.5, "beta": 1.0, "M": 50}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(config))
    code = run(["solve-graphon", "--er", "0.5", "--alpha", "0.25",
                "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    # alpha came from the flag, M from the config
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert len(doc["profile"]) == 50
    assert doc["profile"][0] == pytest.approx(1.0 / (1.0 - 0.25 * 0.5), abs=1e-10)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["params"]["alpha"] == 0.25
    assert manifest["params"]["M"] == 50


def test_unknown_flag_exits_1(capsys):
    assert run(["eigen", "--graphon", "minmax", "--bogus", "1"]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_graphon_exits_1(tmp_path):
    assert run(["eigen", "--M", "10", "--out", str(tmp_path)]) == 1


def test_contraction_violation_exits_1(tmp_path):
    assert run(["solve-graphon", "--er", "1", "--M", "20", "--alpha", "2",
                "--beta", "1", "--out", str(tmp_path)]) == 1


def test_numerical_failure_exits_2(tmp_path, monkeypatch):
    def boom(args, outdir):
        raise IterationLimitError("did not converge")

    monkeypatch.setattr(cli, "_cmd_eigen", boom)
    assert run(["eigen", "--graphon", "minmax", "--out", str(tmp_path)]) == 2


def test_help_exits_0():
    assert run(["--help"]) == 0
