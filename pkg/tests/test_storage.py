from pathlib import Path

import pandas as pd
import pytest

from gss.models.schemas import EvaluationMode, MeasureKind, ReportRow, RunReport, WalkConfig
from gss.services.lmhw_walker import build_pair_chain
from gss.services.storage import LocalStorage, report_csv, report_frame


@pytest.fixture
def storage(tmp_path):
    return LocalStorage(str(tmp_path / "results"))


@pytest.fixture
def report():
    report = RunReport()
    report.add(ReportRow(design="G4", population="centre", measure=MeasureKind.RE, value=6 / 7, mode=EvaluationMode.EXACT))
    report.add(
        ReportRow(
            design="LPM1",
            population="centre",
            measure=MeasureKind.RE,
            value=0.9,
            se=0.01,
            reps=1000,
            seed=7,
            mode=EvaluationMode.MONTE_CARLO,
        )
    )
    return report


class TestReport:
    def test_frame(self, report):
        frame = report_frame(report)
        assert list(frame.columns) == ["design", "population", "measure", "value", "se", "reps", "seed", "mode"]
        assert frame.loc[1, "reps"] == 1000
        assert pd.isna(frame.loc[0, "reps"])

    def test_csv_integers_stay_integers(self, report):
        lines = report_csv(report).splitlines()
        assert lines[1] == "G4,centre,re,0.8571428571,,,,exact"
        assert lines[2] == "LPM1,centre,re,0.9,0.01,1000,7,monte_carlo"

    def test_save(self, storage, report, tmp_path):
        path = storage.save_report(report, "table1")
        assert path.endswith("table1.csv")
        assert Path(path).is_file()
        assert len(pd.read_csv(path)) == 2


class TestGraphsAndChains:
    def test_graph_round_trip(self, storage, g4):
        storage.save_graph(g4, "g4")
        assert set(storage.load_graph("g4").edges()) == set(g4.edges())

    def test_chain_rows_are_distributions(self, storage, triangle):
        chain = build_pair_chain(triangle, WalkConfig.from_weights([1, 2, 4]))
        path = storage.save_chain(chain, "triangle")
        frame = pd.read_csv(path, index_col="state")
        kernel = frame.drop(columns="stationary")
        assert kernel.sum(axis=1).to_numpy() == pytest.approx(1.0)
        assert frame["stationary"].sum() == pytest.approx(1.0)

    def test_population(self, storage, centre_pop):
        frame = pd.read_csv(storage.save_population(centre_pop, "centre"))
        assert list(frame.columns) == ["unit", "x1", "x2", "y", "pi"]
        assert frame.y.sum() == pytest.approx(15.0)
