import json

import pandas as pd
import pytest

from gss.main import main


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(path, **run):
    config = {
        "name": "cli",
        "populations": [{"id": "centre", "shape": "centre", "n": 2}],
        "designs": [{"id": "SRS", "kind": "srswor"}, {"id": "EP4", "kind": "epsswor_gss", "graph": "g4"}],
        "run": {"measures": ["re", "xi"], **run},
    }
    path.write_text(json.dumps(config))
    return str(path)


class TestStationary:
    def test_triangle(self, capsys):
        assert main(["stationary", "--graph", "triangle", "--u", "1,2,4"]) == 0
        out = capsys.readouterr().out
        assert "closed_form" in out and "exact" in out
        assert "0.159420289855" in out  # 11/69

    def test_export_chain(self, workdir):
        assert main(["stationary", "--graph", "cycle:5", "--r", "0.2", "--export-chain", "chain"]) == 0
        frame = pd.read_csv(workdir / "data" / "results" / "chain.csv", index_col=0)
        assert frame["stationary"].sum() == pytest.approx(1.0)

    def test_disconnected_graph(self, workdir):
        edges = workdir / "two_triangles.txt"
        edges.write_text("6\n1 2\n2 3\n1 3\n4 5\n5 6\n4 6\n")
        assert main(["stationary", "--graph", str(edges)]) == 2

    def test_bad_preference(self):
        assert main(["stationary", "--graph", "triangle", "--u", "1,2"]) == 2
        assert main(["stationary", "--graph", "triangle", "--w", "2"]) == 2


class TestUsage:
    def test_no_command(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_unknown_table(self):
        with pytest.raises(SystemExit) as info:
            main(["reproduce", "t9"])
        assert info.value.code == 1


class TestSimulate:
    def test_writes_csv(self, workdir):
        config = write_config(workdir / "config.json")
        assert main(["simulate", "--config", config, "--out", "report"]) == 0
        frame = pd.read_csv(workdir / "data" / "results" / "report.csv")
        assert list(frame.columns) == ["design", "population", "measure", "value", "se", "reps", "seed", "mode"]
        assert len(frame) == 6
        re_ep4 = frame[(frame.design == "EP4") & (frame.measure == "re")].value.iloc[0]
        assert re_ep4 == pytest.approx(6 / 7, abs=1e-9)

    def test_stdout(self, workdir, capsys):
        config = write_config(workdir / "config.json")
        assert main(["simulate", "--config", config]) == 0
        assert capsys.readouterr().out.startswith("design,population,measure,value,se,reps,seed,mode")

    def test_invalid_config(self, workdir):
        bad = workdir / "bad.json"
        bad.write_text(json.dumps({"populations": [], "designs": [{"kind": "srswor"}]}))
        assert main(["simulate", "--config", str(bad)]) == 2

    def test_unknown_graph(self, workdir):
        path = workdir / "config.json"
        write_config(path)
        config = json.loads(path.read_text())
        config["designs"][1]["graph"] = "g99"
        path.write_text(json.dumps(config))
        assert main(["simulate", "--config", str(path)]) == 2


class TestReproduce:
    def test_table1_meets_every_gating_target(self, workdir):
        assert main(["reproduce", "t1", "--strict", "--reps", "500", "--threads", "2", "--out", "t1"]) == 0
        frame = pd.read_csv(workdir / "data" / "results" / "t1.csv")
        g3 = frame[(frame.design == "G3") & (frame.population == "centre-1") & (frame.measure == "re")]
        assert g3.value.iloc[0] == pytest.approx(4 / 7, abs=1e-9)


class TestDesignSearch:
    def test_writes_winner(self, workdir):
        code = main(["design-search", "--grid", "3x3", "--n", "3", "--budget", "30", "--out", "search"])
        assert code == 0
        assert (workdir / "data" / "results" / "best_graph.txt").read_text().splitlines()[0] == "9"
        frame = pd.read_csv(workdir / "data" / "results" / "search.csv")
        assert frame.design.iloc[0] == "search-best-of-30"

    def test_empty_budget(self):
        assert main(["design-search", "--budget", "0"]) == 3

    def test_population_json(self):
        population = json.dumps({"shape": "centre", "n": 2})
        assert main(["design-search", "--measure", "re", "--n", "2", "--population", population, "--budget", "5"]) == 0
