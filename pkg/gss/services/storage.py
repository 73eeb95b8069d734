"""
Storage service - writes result tables, graphs, chains and populations
Design pattern: Strategy pattern so callers never touch paths directly
"""

from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from gss.core.config import settings
from gss.models.schemas import RunReport
from gss.services.graph_core import Graph, from_edge_list_text, to_edge_list_text
from gss.services.lmhw_walker import PairChain
from gss.services.populations import SpatialPopulation

REPORT_COLUMNS = ["design", "population", "measure", "value", "se", "reps", "seed", "mode"]


def report_frame(report: RunReport) -> pd.DataFrame:
    """One row per measure with the fixed CSV column order"""
    records = [
        {
            "design": row.design,
            "population": row.population,
            "measure": row.measure.value,
            "value": row.value,
            "se": row.se,
            "reps": row.reps,
            "seed": row.seed,
            "mode": row.mode.value,
        }
        for row in report.rows
    ]
    frame = pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
    frame["reps"] = frame["reps"].astype("Int64")
    frame["seed"] = frame["seed"].astype("Int64")
    return frame


def report_csv(report: RunReport) -> str:
    return report_frame(report).to_csv(index=False, float_format="%.10g", lineterminator="\n")


def chain_frame(chain: PairChain) -> pd.DataFrame:
    """Dense kernel: one row per pair state, one column per next node"""
    n = chain.graph.n_nodes
    dense = np.zeros((chain.n_states, n))
    for k, (prev, cur) in enumerate(chain.states):
        for j, p in chain.successors(prev, cur):
            dense[k, j - 1] += p
    index = pd.Index([f"{prev}-{cur}" for prev, cur in chain.states], name="state")
    frame = pd.DataFrame(dense, index=index, columns=[str(j) for j in range(1, n + 1)])
    frame.insert(0, "stationary", chain.stationary_pair)
    return frame


def population_frame(population: SpatialPopulation) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "unit": np.arange(1, population.n_units + 1),
            "x1": population.coords[:, 0],
            "x2": population.coords[:, 1],
            "y": population.y,
            "pi": population.pi,
        }
    )


class ResultStorage:
    """Base storage interface"""

    def save_report(self, report: RunReport, name: str) -> str:
        """Save a run report and return its location"""
        raise NotImplementedError

    def save_graph(self, g: Graph, name: str) -> str:
        raise NotImplementedError

    def load_graph(self, name: str) -> Graph:
        raise NotImplementedError

    def save_chain(self, chain: PairChain, name: str) -> str:
        raise NotImplementedError

    def save_population(self, population: SpatialPopulation, name: str) -> str:
        raise NotImplementedError


class LocalStorage(ResultStorage):
    """Local filesystem storage"""

    def __init__(self, base_path: Optional[str] = None):
        self.base_path = Path(base_path or settings.OUTPUT_DIR)
        self.base_path.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Local storage initialized at: {self.base_path.absolute()}")

    def _path(self, name: str, suffix: str) -> Path:
        path = Path(name)
        if not path.is_absolute():
            path = self.base_path / path
        if not path.suffix:
            path = path.with_suffix(suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def save_report(self, report: RunReport, name: str) -> str:
        path = self._path(name, ".csv")
        path.write_text(report_csv(report))
        logger.info(f"Report with {len(report.rows)} rows written to {path}")
        return str(path)

    def save_graph(self, g: Graph, name: str) -> str:
        path = self._path(name, ".txt")
        path.write_text(to_edge_list_text(g))
        logger.info(f"Graph with {g.n_nodes} nodes and {g.n_edges} edges written to {path}")
        return str(path)

    def load_graph(self, name: str) -> Graph:
        return from_edge_list_text(self._path(name, ".txt").read_text())

    def save_chain(self, chain: PairChain, name: str) -> str:
        path = self._path(name, ".csv")
        chain_frame(chain).to_csv(path, float_format="%.15g")
        return str(path)

    def save_population(self, population: SpatialPopulation, name: str) -> str:
        path = self._path(name, ".csv")
        population_frame(population).to_csv(path, index=False, float_format="%.15g")
        return str(path)
