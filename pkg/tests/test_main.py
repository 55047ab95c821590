import json

from main import main


def test_gen_then_run(tmp_path):
    instance = tmp_path / "instance.json"
    report = tmp_path / "report.json"
    assert main(["gen", "--dist", "uniform:0:0.5", "--n", "30", "--m", "12", "--seed", "3",
                 "--out", str(instance)]) == 0
    assert main(["run", "--alg", "worstcase", "--instance", str(instance), "--out", str(report)]) == 0
    body = json.loads(report.read_text())
    assert body["feasible"] and body["m"] == 12 and body["machines"] <= 12


def test_malformed_instance_exits_with_input_error(tmp_path):
    instance = tmp_path / "bad.json"
    instance.write_text('{"B": 1.0, "m": 4, "sizes": [0.7]}')
    assert main(["run", "--alg", "worstcase", "--instance", str(instance)]) == 2


def test_invalid_failover_capacity():
    assert main(["run", "--alg", "offline-min", "--dist", "point:0.1", "--n", "3", "--B", "0.5"]) == 2


def test_online_run_without_budget():
    assert main(["run", "--alg", "stochastic", "--dist", "point:0.1", "--n", "3"]) == 2


def test_oracle_refuses_large_instances():
    assert main(["oracle", "--dist", "point:0.1", "--n", "9"]) == 3


def test_oracle_prefix(tmp_path):
    out = tmp_path / "prefix.json"
    assert main(["oracle", "--mode", "prefix", "--dist", "point:0.4", "--n", "3", "--m", "4",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["length"] == 2


def test_lp(tmp_path):
    out = tmp_path / "lp.json"
    assert main(["lp", "--dist", "point:0.5", "--n", "3", "--B", "2", "--out", str(out)]) == 0
    body = json.loads(out.read_text())
    assert abs(body["objective"] - 3.0) < 1e-6
    assert body["rounded_machines"] >= 3


def test_adversary(tmp_path):
    out = tmp_path / "adversary.json"
    assert main(["adversary", "--epsilon", "0.1", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert all(row["ratio"] <= row["bound"] + 1e-9 for row in rows)


def test_empty_bench_and_converge(tmp_path):
    bench = tmp_path / "bench.csv"
    assert main(["bench", "--suite", "empty", "--out", str(bench)]) == 0
    assert bench.read_text() == "m,trial,alg,utilization,ratio\n"
    converge = tmp_path / "converge.csv"
    assert main(["converge", "--dist", "point:0.5", "--T", "2,4", "--method", "brute", "--out", str(converge)]) == 0
    assert converge.read_text().splitlines()[0] == "T,machines,ratio,diff"


def test_lp_summary_is_plain_json(tmp_path):
    out = tmp_path / "lp.json"
    assert main(["lp", "--dist", "uniform:0:0.5", "--n", "6", "--seed", "2", "--B", "1",
                 "--tol", "1e-7", "--out", str(out)]) == 0
    body = json.loads(out.read_text())
    assert isinstance(body["basic"], bool)
    assert isinstance(body["rounded_machines"], int)
    assert body["objective"] > 0.0


def test_lp_rejects_non_positive_tolerance():
    assert main(["lp", "--dist", "point:0.5", "--n", "3", "--tol", "0"]) == 2
