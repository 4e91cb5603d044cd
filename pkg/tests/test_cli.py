import json

import pytest

from soapsched.cli import main

D1 = '{"kind":"discrete","atoms":[[1.0,0.5],[2.0,0.5]]}'


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return manifest, header, rows


class TestRankDump:
    def test_columns_and_ordering(self, tmp_path):
        out = tmp_path / "ranks.csv"
        assert main(["rank-dump", "--dist", D1, "--out", str(out)]) == 0
        manifest, header, rows = read_csv(out)
        assert header == ["age", "rank_gittins", "rank_serpt", "rank_mserpt"]
        assert manifest["command"] == "rank-dump"
        for row in rows:
            age, g, s, m = map(float, row)
            assert g <= s + 1e-12 <= m + 2e-12
        ages = [float(r[0]) for r in rows]
        # atoms plus 4 midpoints per segment, domain end excluded
        assert 0.0 in ages and 1.0 in ages and 2.0 not in ages
        assert len([a for a in ages if 0 < a < 1]) == 4


class TestAnalyze:
    def test_json_payload(self, capsys):
        assert main(["analyze", "--dist", D1, "--lambda", "0.4",
                     "--policy", "mserpt"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["mean_response"] == pytest.approx(2.75, abs=1e-9)
        assert payload["exact"] is True

    def test_rho_argument(self, capsys):
        assert main(["analyze", "--dist", D1, "--rho", "0.6",
                     "--policy", "fcfs"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rho"] == pytest.approx(0.6, rel=1e-12)

    def test_invalid_policy_exits_2(self):
        assert main(["analyze", "--dist", D1, "--lambda", "0.4",
                     "--policy", "lifo"]) == 2

    def test_unstable_exits_2(self):
        assert main(["analyze", "--dist", D1, "--lambda", "0.9",
                     "--policy", "fcfs"]) == 2

    def test_bad_dist_file_exits_2(self, tmp_path):
        assert main(["analyze", "--dist", '{"kind":"nope"}', "--lambda", "0.1",
                     "--policy", "fcfs"]) == 2
        assert main(["analyze", "--dist", str(tmp_path / "missing.json"),
                     "--lambda", "0.1", "--policy", "fcfs"]) == 2


class TestSimulate:
    def test_empty_system_mean(self, capsys):
        assert main(["simulate", "--dist", D1, "--lambda", "0", "--policy", "mserpt",
                     "--jobs", "20000", "--seed", "3"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert 1.0 <= payload["mean_response"] <= 2.0
        assert payload["completions"] == 18000  # 10% warmup discarded

    def test_deterministic_rerun_from_manifest(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["simulate", "--dist", D1, "--lambda", "0.4", "--policy", "fcfs",
                "--jobs", "20000", "--seed", "11", "--format", "json"]
        assert main(args + ["--out", str(out1)]) == 0
        man = json.loads(out1.read_text())["manifest"]["params"]
        rebuilt = ["simulate", "--dist", man["dist"], "--lambda", str(man["lambda"]),
                   "--policy", man["policy"], "--jobs", str(man["jobs"]),
                   "--seed", str(man["seed"]), "--warmup", str(man["warmup"]),
                   "--batches", str(man["batches"])]
        assert main(rebuilt + ["--out", str(out2)]) == 0
        a = json.loads(out1.read_text())
        b = json.loads(out2.read_text())
        a.pop("manifest"), b.pop("manifest")
        assert a == b

    def test_trace_file(self, tmp_path):
        trace = tmp_path / "events.csv"
        assert main(["simulate", "--dist", D1, "--lambda", "0.4", "--policy", "fcfs",
                     "--jobs", "10000", "--seed", "1", "--trace", str(trace),
                     "--out", str(tmp_path / "r.json")]) == 0
        lines = trace.read_text().splitlines()
        assert lines[0] == "time,event,job_id,age,rank"
        kinds = {line.split(",")[1] for line in lines[1:]}
        assert {"arrive", "serve", "complete"} <= kinds


class TestCompare:
    def test_crn_collapse_on_d1(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(["compare", "--dist", D1, "--lambda", "0.4",
                     "--policies", "fcfs,mserpt,gittins", "--jobs", "20000",
                     "--seed", "5", "--format", "csv", "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        means = {row[1] for row in rows}
        assert len(means) == 1  # identical dynamics, identical stream


class TestRatioCurve:
    def test_values_and_thresholds(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(["ratio-curve", "--grid", "0,0.888888888888888888,0.99",
                     "--out", str(out)]) == 0
        manifest, header, rows = read_csv(out)
        table = {float(r[0]): float(r[1]) for r in rows}
        assert table[0.0] == pytest.approx(2.0, abs=1e-12)
        assert min(abs(r - 8 / 9) for r in table) < 1e-12
        assert table[0.99] == pytest.approx(1 + 4 / 1.1, rel=1e-12)
        t1, t2 = manifest["params"]["thresholds"]
        assert t1 == pytest.approx(0.9587, abs=5e-5)
        assert t2 == pytest.approx(0.9898, abs=5e-5)
        assert any(abs(r - t1) < 1e-12 for r in table)  # threshold rows included

    def test_byte_identical_rerun(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["ratio-curve", "--points", "50", "--out", str(a)])
        main(["ratio-curve", "--points", "50", "--out", str(b)])
        assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]


class TestPathologicalSweep:
    def test_analytic_columns(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["pathological-sweep", "--deltas", "0.1,0.01,0.001",
                     "--out", str(out)]) == 0
        _, header, rows = read_csv(out)
        assert header[:5] == ["delta", "epsilon", "rho", "closed_form", "quasi_analytic"]
        closed = [float(r[3]) for r in rows]
        assert closed == pytest.approx([1.513, 1.769, 1.913], abs=1e-3)
        assert closed[0] < closed[1] < closed[2] < 2.0
        for r in rows:
            assert float(r[1]) == pytest.approx(float(r[0]) ** 1.5, rel=1e-12)


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify", "--cases", "10", "--seed", "7"]) == 0
        assert "0 failures" in capsys.readouterr().out
