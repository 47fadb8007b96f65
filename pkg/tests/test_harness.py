import json
import math

import numpy as np
import pytest

from arreplay.cli import main
from arreplay.config import ExperimentConfig, load_config, preset
from arreplay.harness import (BASE_COLUMNS, read_csv, run_bayes, run_experiment, sample_instance,
                              to_csv_string)

SMALL = {"horizons": [10, 50], "M_ci": 10, "M_var": 200}


def write_config(tmp_path, **changes):
    raw = {"instance": {"kind": "bernoulli", "means": [0.7, 0.3]},
           "policy0": {"kind": "ucb1", "alpha": 2.0},
           "policy1": {"kind": "eps_greedy", "eps": 0.1},
           "horizons": [10, 30], "M_ci": 10, "M_var": 100}
    raw.update(changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def test_config_field_errors(tmp_path, capsys):
    path = write_config(tmp_path, policy1={"kind": "eps_greedy", "eps": 1.5})
    assert main(["run", str(path)]) != 0
    assert "eps" in capsys.readouterr().err
    for bad, field in [({"horizons": [100, 10]}, "horizons"), ({"M_var": 0}, "M_var"),
                       ({"ci_alpha": 1.5}, "ci_alpha"), ({"designs": ["bogus"]}, "designs"),
                       ({"typo": 1}, "typo"), ({"master_seed": -1}, "master_seed")]:
        with pytest.raises(ValueError, match=field):
            ExperimentConfig.from_dict({**json.loads(path.read_text()),
                                        "policy1": {"kind": "ucb1"}, **bad})


def test_config_roundtrip(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert ExperimentConfig.from_dict(cfg.to_dict(), name=cfg.name) == cfg


def test_csv_header_and_roundtrip(tmp_path):
    res = run_experiment(preset("example2", SMALL))
    assert res.columns == BASE_COLUMNS + ["varT_pi0_1", "varT_pi0_2", "varT_pi1_1", "varT_pi1_2"]
    text = to_csv_string(res)
    assert text.splitlines()[0] == ",".join(res.columns)
    path = tmp_path / "out.csv"
    path.write_text(text)
    for row, parsed in zip(res.rows, read_csv(path)):
        for col in res.columns:
            assert parsed[col] == row[col]


def test_naive_interactions_and_ar_bounds():
    res = run_experiment(preset("example1", SMALL))
    for T in (10, 50):
        row = res.row(T)
        assert row["baseline_num_interactions"] == 2 * T
        assert T <= row["AR_num_interactions"] <= 2 * T
        assert row["AR_lb"] <= row["AR_mean"] <= row["AR_ub"]


def test_missing_design_written_as_nan():
    res = run_experiment(preset("example2", {**SMALL, "designs": ["ar"]}))
    assert math.isnan(res.rows[0]["baseline_mean"])
    assert "nan" in to_csv_string(res)


def test_stack_columns():
    res = run_experiment(preset("example2", {**SMALL, "designs": ["ar", "shared_stack"]}))
    assert "stack_num_interactions" in res.columns


def test_determinism_and_worker_invariance():
    a = run_experiment(preset("example3", SMALL))
    b = run_experiment(preset("example3", SMALL))
    c = run_experiment(preset("example3", {**SMALL, "n_jobs": 2}))
    assert to_csv_string(a) == to_csv_string(b) == to_csv_string(c)
    d = run_experiment(preset("example3", {**SMALL, "master_seed": 1}))
    assert to_csv_string(a) != to_csv_string(d)


def test_environment_overrides(monkeypatch, tmp_path, capsys):
    cfg = preset("example2", SMALL)
    assert cfg.apply_environment({"ARREPLAY_SEED": "9", "ARREPLAY_WORKERS": "2"}).master_seed == 9
    with pytest.raises(ValueError, match="ARREPLAY_WORKERS"):
        cfg.apply_environment({"ARREPLAY_WORKERS": "0"})
    path = write_config(tmp_path)
    main(["run", str(path), "--out", str(tmp_path / "a.csv")])
    monkeypatch.setenv("ARREPLAY_SEED", "3")
    main(["run", str(path), "--out", str(tmp_path / "b.csv")])
    main(["run", str(path), "--seed", "0", "--out", str(tmp_path / "c.csv")])
    a, b, c = ((tmp_path / f"{x}.csv").read_text() for x in "abc")
    assert a != b and a == c


def test_cli_subcommands(tmp_path, capsys):
    path = write_config(tmp_path)
    out = tmp_path / "o.csv"
    dump = tmp_path / "traj.csv"
    assert main(["run", str(path), "--out", str(out), "--dump-trajectories", str(dump)]) == 0
    assert len(read_csv(out)) == 2
    lines = dump.read_text().splitlines()
    assert lines[0] == "run,phase,t,arm,reward,source"
    assert len(lines) == 1 + 2 * 2 * 2 * (10 + 30) // 2
    assert main(["example2", "--M-var", "50", "--horizons", "10", "20"]) == 0
    assert capsys.readouterr().out.startswith("horizon,")
    assert main(["equivalence", str(path), "--M", "500", "--symmetry"]) in (0, 1)
    assert capsys.readouterr().out.startswith("test,statistic,p_value,pass")
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_bayes(tmp_path):
    rng = np.random.default_rng(0)
    inst = sample_instance({"kind": "bernoulli_uniform", "K": 3}, rng)
    assert inst.K == 3
    point = {"kind": "point_masses",
             "instances": [{"kind": "bernoulli", "means": [0.9, 0.1]}]}
    assert sample_instance(point, rng).means.tolist() == [0.9, 0.1]
    cfg = preset("example2", {"horizons": [20], "bayes": {"prior": point, "instances_M": 50}})
    res = run_bayes(cfg)
    assert res.rows[0]["instances_M"] == 50
    assert res.rows[0]["bayes_lb"] <= res.rows[0]["bayes_mean"] <= res.rows[0]["bayes_ub"]
    with pytest.raises(ValueError, match="bayes"):
        run_bayes(preset("example2", {"bayes": {"prior": {"kind": "nope"}}}))
    with pytest.raises(ValueError, match="bayes"):
        run_bayes(preset("example2"))
