import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patient_zero.cli import main
from patient_zero.harness import (ConfigError, ExperimentConfig, compare_theory, emit_plot_data, read_csv,
                                  run_experiment, summary_path)
from patient_zero.stats import student_t, wilson


@given(st.integers(1, 500), st.data())
def test_wilson_contains_estimate(n, data):
    k = data.draw(st.integers(0, n))
    ci = wilson(k, n)
    assert ci.lo <= k / n <= ci.hi
    assert ci.hi - ci.lo > 0
    assert 0 <= ci.lo and ci.hi <= 1


def test_wilson_width_at_4800():
    assert wilson(2400, 4800).half_width <= 0.015


def test_student_t():
    ci = student_t([1.0, 2.0, 3.0])
    assert ci.mean == 2.0 and ci.lo == pytest.approx(2 - 4.302652729911275 / math.sqrt(3))
    assert student_t([5.0]).half_width == 0


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(model="sir")
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=["bfs"])
    with pytest.raises(ConfigError):
        ExperimentConfig(replicates=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(model="rbtree_ddenr", algorithms=["sg"])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"colour": 1})
    cfg = ExperimentConfig(p_a=[0.1, 0.2], p_i=[0.1, 0.3])
    assert len(cfg.grid()) == 4 and cfg.swept() == ["p_i", "p_a"]


def test_certain_hospitalization_always_succeeds(tmp_path):
    cfg = ExperimentConfig(algorithms=["ls", "ls+", "lsv2", "ls+v2", "random_dmp", "sg"], p_a=0.0, p_h=1.0,
                           replicates=1, output=str(tmp_path / "r.csv"))
    records, rows = run_experiment(cfg)
    assert len(rows) == 6
    assert all(r["success"] == 1.0 for r in rows if r["algorithm"] != "sg")


def test_sg_keeps_the_hospitalized_source():
    # SG picks uniformly among the survivors at the deadline, so only its
    # candidate set is forced here
    from patient_zero.epidemic import EpidemicParams
    from patient_zero.network import NetworkParams, generate_hnm
    from patient_zero.sdctf import open_session
    from patient_zero.sizegain import SgConfig, run_sg

    g = generate_hnm(NetworkParams(399, 2, 3), 0)
    for seed in range(5):
        s = open_session(g, EpidemicParams(p_a=0.0, p_h=1.0), seed, seed)
        out = run_sg(s, SgConfig(deadline_day=s.t_h + 2), seed=seed)
        assert s.first_hospitalized in out.candidates


def test_summary_matches_records(tmp_path):
    cfg = ExperimentConfig(algorithms=["ls", "ls+"], p_a=[0.3, 0.6], replicates=15, output=str(tmp_path / "r.csv"))
    run_experiment(cfg)
    header, recs = read_csv(tmp_path / "r.csv")
    assert "schema=1" in header and '"n": 399' in header
    _, summ = read_csv(summary_path(tmp_path / "r.csv"))
    assert len(summ) == 4
    for row in summ:
        mine = [r for r in recs if r["algorithm"] == row["algorithm"] and r["p_a"] == row["p_a"]]
        assert len(mine) == int(row["replicates"]) == 15
        assert float(row["success"]) == pytest.approx(np.mean([int(r["success_source"]) for r in mine]), abs=1e-11)
        assert float(row["tests"]) == pytest.approx(np.mean([int(r["tests"]) for r in mine]), abs=1e-10)


def test_workers_do_not_change_output(tmp_path):
    outs = []
    for workers in (1, 2):
        cfg = ExperimentConfig(algorithms=["ls", "random_dmp"], replicates=6, workers=workers,
                               output=str(tmp_path / f"w{workers}.csv"))
        run_experiment(cfg)
        outs.append((tmp_path / f"w{workers}.csv").read_bytes())
    assert outs[0] == outs[1]


def test_plot_data(tmp_path):
    cfg = ExperimentConfig(algorithms=["ls", "ls+"], p_a=[0.2, 0.4, 0.6], replicates=4, output=str(tmp_path / "r.csv"))
    run_experiment(cfg)
    paths = emit_plot_data(summary_path(cfg.output), tmp_path / "plots")
    target = tmp_path / "plots" / "success_vs_p_a_lsplus.csv"
    assert target in paths
    rows = list(csv.reader(target.read_text().splitlines()))
    assert rows[0] == ["x", "mean", "lo", "hi"] and [r[0] for r in rows[1:]] == ["0.2", "0.4", "0.6"]
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        emit_plot_data(bad, tmp_path / "x")


def test_theory_at_zero_asymptomatic_rate(tmp_path):
    rows = compare_theory(ExperimentConfig(model="rbtree_ddenr", algorithms=["ls"], p_a=0.0, replicates=50,
                                           output=str(tmp_path / "t.csv")))
    row = rows[0]
    assert row["ls_empirical"] == row["ls_theory"] == 1.0
    assert row["ls_plus_empirical"] == 1.0 and row["ls_plus_bound"] == pytest.approx(1.0)
    ret_rows = compare_theory(ExperimentConfig(model="ret", replicates=500, output=str(tmp_path / "u.csv")))
    assert ret_rows[0]["ls_empirical"] == "" and 0 < ret_rows[0]["ls_theory"] < 1


def test_cli_round_trip(tmp_path, capsys):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"algorithms": ["ls"], "replicates": 3, "p_a": [0.2, 0.5]}))
    out = tmp_path / "r.csv"
    assert main(["simulate", "--config", str(config), "--algo", "ls+", "--replicates", "2", "--seed", "7",
                 "-o", str(out)]) == 0
    _, recs = read_csv(out)
    assert {r["algorithm"] for r in recs} == {"ls+"} and len(recs) == 4
    assert main(["plot-data", str(summary_path(out)), str(tmp_path / "p")]) == 0
    assert main(["compare-theory", "--model", "rbtree_ddenr", "--p-a", "0,0.5", "--replicates", "20",
                 "-o", str(tmp_path / "t.csv")]) == 0
    assert "LS" in capsys.readouterr().out
