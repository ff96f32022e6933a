import csv
import json
import os

import numpy as np
import pytest

from recgrowth import cli
from recgrowth.errors import NoConvergence

M1 = {
    "agents": {
        "i": {"alpha": {"alpha0": 0.55, "alpha_bar": 0.95, "a": 2.0},
              "u": {"sigma": 0.5, "scale": 1.0}},
        "j": {"alpha": {"alpha0": 0.50, "alpha_bar": 0.90, "a": 2.0},
              "u": {"sigma": 0.5, "scale": 1.0}},
    },
    "technology": {"A": 1.0, "beta": 0.3},
    "shares": {"theta_i": 0.6},
}


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "m1.json"
    p.write_text(json.dumps(M1))
    return p


def run(capsys, *argv):
    code = cli.main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else None), err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_steady_all(capsys, cfg):
    code, rep, _ = run(capsys, "steady", "--config", cfg)
    assert code == 0
    assert set(rep) == {"command", "config_hash", "diagnostics", "results", "seed",
                        "version", "wall_time"}
    o = rep["results"]["orderings"]
    assert o["k_star_lt_k_bar_le_k_a_j_le_k_a_i"] and o["c_bar_i_le_c_bar_j"]
    assert rep["results"]["markov"]["k_star"] == pytest.approx(0.0748275008516736, rel=1e-9)
    assert len(rep["config_hash"]) == 64


def test_steady_reruns_identical(capsys, cfg):
    reps = []
    for _ in range(2):
        code, rep, _ = run(capsys, "steady", "--config", cfg, "--mode", "openloop")
        assert code == 0
        rep.pop("wall_time")
        reps.append(json.dumps(rep, sort_keys=True))
    assert reps[0] == reps[1]


def test_classify_table_point(capsys):
    code, rep, _ = run(capsys, "classify", "--a", 0.5, "--b", -0.25)
    assert code == 0
    r = rep["results"]
    assert r["case"] == 4 and r["label"] == "stable" and r["group"] == "II"


def test_classify_degenerate_is_not_an_error(capsys):
    code, rep, _ = run(capsys, "classify", "--a", 0.5, "--b", -1.0)
    assert code == 0
    assert rep["results"]["case"] == "degenerate" and rep["results"]["boundary"] == "b = -1"


@pytest.mark.parametrize("argv", [["classify", "--a", "0", "--b", "1"],
                                  ["classify", "--a", "nan", "--b", "1"],
                                  ["steady"],
                                  ["steady", "--config", "/nonexistent/m.json"],
                                  ["bogus"]])
def test_input_errors_exit_2(capsys, argv):
    assert cli.main(argv) == 2


def test_malformed_json_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["steady", "--config", str(p)]) == 2


def test_unknown_numerics_exit_2(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(dict(M1, numerics={"grid": 3})))
    assert cli.main(["steady", "--config", str(p)]) == 2


def test_assumption_violation_exit_4(capsys, tmp_path):
    doc = json.loads(json.dumps(M1))
    doc["agents"]["i"]["alpha"]["alpha_bar"] = 1.2
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(capsys, "steady", "--config", p)
    assert code == 4 and "U2" in err


def test_solver_failure_exit_3(capsys, cfg, monkeypatch):
    def boom(*_a, **_k):
        raise NoConvergence("forced")

    monkeypatch.setattr(cli, "solve_openloop", boom)
    code, _, err = run(capsys, "steady", "--config", cfg, "--mode", "openloop")
    assert code == 3 and "NoConvergence" in err


def test_no_partial_csv_on_solver_error(capsys, cfg, monkeypatch, tmp_path):
    def boom(*_a, **_k):
        raise NoConvergence("forced")

    monkeypatch.setattr(cli, "simulate_openloop", boom)
    out = tmp_path / "sim.csv"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 3
    assert not out.exists() and list(tmp_path.glob("*.tmp")) == []


def test_write_csv_is_atomic(tmp_path):
    out = tmp_path / "x.csv"
    with pytest.raises(ValueError):
        cli.write_csv(out, ["a"], [[1.0], ["not a number"]])
    assert not out.exists() and list(tmp_path.iterdir()) == []


def test_csv_format(tmp_path):
    out = tmp_path / "x.csv"
    cli.write_csv(out, ["a", "b"], [[1.0 / 3.0, None], [float("nan"), 2]])
    raw = out.read_bytes()
    assert b"\r" not in raw
    assert raw.decode() == "a,b\n0.333333333333333,\n,2\n"


def test_simulate_openloop(capsys, cfg, tmp_path):
    out = tmp_path / "ol.csv"
    code, rep, _ = run(capsys, "simulate", "--config", cfg, "--out", out, "--periods", 50)
    assert code == 0 and rep["results"]["rows"] == 51
    rows = read_csv(out)
    assert rows[0] == ["t", "k", "c_i", "c_j", "dev_k"]
    dev = np.array([float(r[4]) for r in rows[1:]])
    assert np.all(np.sign(dev) == np.sign(dev[0]))
    assert abs(dev[-1]) < abs(dev[0])


def test_simulate_markov_oscillates(capsys, tmp_path):
    from recgrowth.markov import OSCILLATORY_EPS_FRACTION, OSCILLATORY_G11
    from recgrowth.model import oscillatory_model

    doc = {"numerics": {"g11_i": OSCILLATORY_G11, "g11_j": OSCILLATORY_G11,
                        "eps": OSCILLATORY_EPS_FRACTION}, "agents": {}}
    m = oscillatory_model()
    for tag, ag in (("i", m.agent_i), ("j", m.agent_j)):
        doc["agents"][tag] = {
            "alpha": {"alpha0": ag.alpha.alpha0, "alpha_bar": ag.alpha.alpha_bar, "a": ag.alpha.a},
            "u": {"sigma": ag.u.sigma, "scale": ag.u.scale},
        }
    doc["technology"] = {"A": m.technology.A, "beta": m.technology.beta}
    doc["shares"] = {"theta_i": m.theta_i}
    p = tmp_path / "osc.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "mk.csv"
    code, rep, _ = run(capsys, "simulate", "--config", p, "--mode", "markov", "--out", out,
                       "--periods", 60)
    assert code == 0 and rep["results"]["oscillating"]
    dev = np.array([float(r[4]) for r in read_csv(out)[1:]])
    assert np.all(np.sign(dev[1:]) == -np.sign(dev[:-1]))


def test_dataset_curves(capsys, cfg, tmp_path):
    out = tmp_path / "curves.csv"
    code, rep, _ = run(capsys, "datasets", "--config", cfg, "--kind", "curves", "--out", out)
    assert code == 0
    rows = read_csv(out)
    head = rows[0]
    assert rep["results"]["rows"] == len(rows) - 1 == cli.CURVE_NODES
    col = {name: i for i, name in enumerate(head)}
    num = lambda r, n: float(r[col[n]]) if r[col[n]] else None
    body = [r for r in rows[1:] if r[col["c_sum"]]]
    inv_pairs = [(num(r, "inv_alpha_i"), num(r, "inv_alpha_j")) for r in rows[1:]
                 if r[col["inv_alpha_i"]]]
    assert all(i <= j for i, j in inv_pairs)
    from recgrowth.model import canonical_model
    from recgrowth.openloop import solve_openloop

    k_bar = solve_openloop(canonical_model()).k
    gaps = [abs(num(r, "c_sum") - num(r, "net_output")) for r in body]
    near = min(range(len(body)), key=lambda n: abs(num(body[n], "k") - k_bar))
    assert near == int(np.argmin(gaps))


def test_dataset_value(capsys, cfg, tmp_path):
    out = tmp_path / "v.csv"
    code, rep, _ = run(capsys, "datasets", "--config", cfg, "--kind", "value", "--out", out)
    assert code == 0 and rep["results"]["monotone"]
    v = np.array([float(r[1]) for r in read_csv(out)[1:]])
    assert np.all(np.diff(v) > 0)


def test_dataset_policy(capsys, cfg, tmp_path):
    out = tmp_path / "h.csv"
    code, rep, _ = run(capsys, "datasets", "--config", cfg, "--kind", "policy", "--out", out)
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["k", "h"] and len(rows) == 202


def test_env_logging_does_not_touch_stdout(capsys, cfg, monkeypatch):
    monkeypatch.setenv("RECGROWTH_LOG", "debug")
    code, rep, err = run(capsys, "steady", "--config", cfg, "--mode", "autarky")
    assert code == 0 and "config" in err
    assert os.environ["RECGROWTH_LOG"] == "debug"
