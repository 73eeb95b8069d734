"""
Experiment orchestration: populations x designs, seeding, measures and
reproduction checks. Argument parsing lives in gss.cli.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from loguru import logger

from gss.core.config import settings
from gss.core.errors import DesignError, ReproductionFailure
from gss.core.rng import derive_rng
from gss.models.schemas import (
    DesignKind,
    DesignSpec,
    EstimatorKind,
    EvaluationMode,
    ExperimentConfig,
    MeasureKind,
    OrderSource,
    PopulationSpec,
    ReportRow,
    ReproductionTarget,
    RunReport,
    TargetCheck,
    TargetStatus,
    TauSpec,
    ToleranceSpec,
)
from gss.services.builtin_graphs import resolve_graph
from gss.services.graph_core import (
    Graph,
    GridLayout,
    build_2regular_recursive,
    enumerate_noncontiguous_cycles,
    recursive_partition_order,
    rook_contiguity,
)
from gss.services.lmhw_walker import prob_single_distinct
from gss.services.populations import SpatialPopulation, build_population
from gss.services.sampling_designs import (
    BaseDesign,
    EpssworGssDesign,
    Lpm1Design,
    Sample,
    SrsworDesign,
    SystematicDesign,
    UnequalGssDesign,
)
from gss.services.spatial_measures import (
    MeasureValue,
    SearchResult,
    design_search,
    design_variance,
    efficiency_from_moments,
    essb_from_samples,
    estimates_from_samples,
    expected_ssb,
    moments,
    relative_efficiency,
    xi,
    xi_from_samples,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
TABLES = {"t1": "table1.json", "t2": "table2.json"}


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment JSON file"""
    text = Path(path).read_text()
    return ExperimentConfig.model_validate_json(text)


def load_targets(table: str) -> List[ReproductionTarget]:
    with open(DATA_DIR / "targets.yaml") as f:
        data = yaml.safe_load(f) or {}
    return [ReproductionTarget(**entry) for entry in data.get(table, [])]


def _order_for(spec: DesignSpec, population: SpatialPopulation, graph: Optional[Graph]) -> Tuple[int, ...]:
    if spec.order:
        return tuple(spec.order)
    if spec.order_source == OrderSource.RECURSIVE_PARTITION:
        return recursive_partition_order(population.layout, spec.parts_per_side).order
    if graph is not None:
        return graph.cycle_order()
    return tuple(range(1, population.n_units + 1))


def build_design(spec: DesignSpec, population: SpatialPopulation) -> BaseDesign:
    """Design for one population; graphs resolve through the builtin names"""
    graph = resolve_graph(spec.graph, spec.graph_seed) if spec.graph else None
    if graph is not None and graph.n_nodes != population.n_units:
        raise DesignError(
            f"graph '{spec.graph}' has {graph.n_nodes} nodes, population has {population.n_units}"
        )
    n = spec.n or population.n
    label = spec.label
    if spec.kind == DesignKind.SRSWOR:
        return SrsworDesign(population.n_units, n, label=label)
    if spec.kind in (DesignKind.SYSTEMATIC_CIRCULAR, DesignKind.SYSTEMATIC_PATH):
        order = _order_for(spec, population, graph)
        return SystematicDesign(order, n, path=spec.kind == DesignKind.SYSTEMATIC_PATH, label=label)
    if spec.kind == DesignKind.EPSSWOR_GSS:
        return EpssworGssDesign(graph, n, label=label)
    if spec.kind == DesignKind.UNEQUAL_GSS:
        return UnequalGssDesign(
            graph,
            population.pi,
            spec.m,
            r=spec.r,
            w=spec.w,
            start=spec.start,
            calibration=spec.calibration,
            label=label,
        )
    if spec.kind == DesignKind.LPM1:
        return Lpm1Design(population.coords, population.pi, label=label)
    raise DesignError(f"unsupported design kind {spec.kind}")


def _sampling_key(pop: PopulationSpec) -> Tuple:
    """Populations sharing a key share layout and inclusion probabilities"""
    return (pop.side, pop.n, pop.center_ratio, pop.center_unit, pop.kind == "sintrend")


@dataclass
class Cell:
    index: int
    design_spec: DesignSpec
    populations: List[Tuple[int, PopulationSpec]]


class ExperimentRunner:
    """
    Runs every design against every population.

    A cell is one design with the populations sharing its inclusion
    probabilities; Monte Carlo replicates in a cell are drawn once and reused
    for all of its populations. Replicate k of a cell draws from the stream
    (seed, cell id, k), so thread count never changes results.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        seed: Optional[int] = None,
        reps: Optional[int] = None,
        threads: Optional[int] = None,
    ):
        self.config = config
        self.seed = config.run.seed if seed is None else seed
        self.reps = reps or config.run.reps
        self.threads = threads or config.run.threads or settings.DEFAULT_THREADS
        self.measures = list(config.run.measures)
        self.estimator = config.estimator.kind

    def _cells(self) -> List[Cell]:
        cells: List[Cell] = []
        for spec in self.config.designs:
            groups: Dict[Tuple, List[Tuple[int, PopulationSpec]]] = {}
            for k, pop in enumerate(self.config.populations):
                groups.setdefault(_sampling_key(pop), []).append((k, pop))
            for members in groups.values():
                cells.append(Cell(index=len(cells), design_spec=spec, populations=members))
        return cells

    def _draw(self, design: BaseDesign, cell_id: str) -> List[Sample]:
        return [design.draw(derive_rng(self.seed, cell_id, k)) for k in range(self.reps)]

    def _row(self, design: str, population: str, measure: MeasureKind, value: float,
             se: Optional[float], mode: EvaluationMode) -> ReportRow:
        mc = mode == EvaluationMode.MONTE_CARLO
        return ReportRow(
            design=design,
            population=population,
            measure=measure,
            value=value,
            se=se,
            reps=self.reps if mc else None,
            seed=self.seed if mc else None,
            mode=mode,
        )

    def run_cell(self, cell: Cell) -> List[Tuple[int, List[ReportRow]]]:
        """Rows per population index for one cell"""
        spec = cell.design_spec
        started = time.time()
        first_pop = build_population(cell.populations[0][1])
        design = build_design(spec, first_pop)
        # tie estimators need full traces
        needs_trace = self.estimator == EstimatorKind.YHAT_H and not design.without_replacement
        exact = self.config.run.exact_when_possible and not needs_trace and design.enumerable
        mode = EvaluationMode.EXACT if exact else EvaluationMode.MONTE_CARLO
        cell_id = f"{spec.label}|{cell.populations[0][1].label}"
        samples = None if exact else self._draw(design, cell_id)

        out: List[Tuple[int, List[ReportRow]]] = []
        for pop_index, pop_spec in cell.populations:
            population = build_population(pop_spec)
            rows: List[ReportRow] = []
            for measure in self.measures:
                rows.extend(self._measure(measure, design, population, pop_spec.label, mode, samples))
            out.append((pop_index, rows))
        logger.info(
            f"Cell {spec.label} x {len(cell.populations)} population(s) done "
            f"({mode.value}) in {time.time() - started:.2f}s"
        )
        return out

    def _measure(
        self,
        measure: MeasureKind,
        design: BaseDesign,
        population: SpatialPopulation,
        pop_label: str,
        mode: EvaluationMode,
        samples: Optional[List[Sample]],
    ) -> List[ReportRow]:
        label = design.label
        if measure in (MeasureKind.RE, MeasureKind.BIAS, MeasureKind.VARIANCE):
            if mode == EvaluationMode.EXACT:
                stats = design_variance(design, population, self.estimator, mode)
            else:
                stats = moments(estimates_from_samples(design, samples, population, self.estimator))
            eff = efficiency_from_moments(design, population, stats, mode, self.reps)
            if measure == MeasureKind.RE:
                return [
                    self._row(label, pop_label, MeasureKind.RE, eff.re, eff.re_se, mode),
                    self._row(label, pop_label, MeasureKind.BIAS, eff.bias, eff.bias_se, mode),
                ]
            if measure == MeasureKind.VARIANCE:
                return [self._row(label, pop_label, measure, eff.variance, None, mode)]
            if MeasureKind.RE in self.measures:
                return []
            return [self._row(label, pop_label, measure, eff.bias, eff.bias_se, mode)]
        if measure == MeasureKind.XI:
            value = (
                xi(design, population.contiguity, mode)
                if mode == EvaluationMode.EXACT
                else xi_from_samples(samples, population.contiguity)
            )
            return [self._row(label, pop_label, measure, value.value, value.se, mode)]
        if measure == MeasureKind.ESSB:
            value = (
                expected_ssb(design, population, mode)
                if mode == EvaluationMode.EXACT
                else essb_from_samples(samples, population)
            )
            return [self._row(label, pop_label, measure, value.value, value.se, mode)]
        if measure == MeasureKind.PR_N1:
            chain = getattr(design, "chain", None)
            if chain is None or getattr(design, "m", None) != 2:
                return []
            return [
                self._row(label, pop_label, measure, prob_single_distinct(chain), None, EvaluationMode.EXACT)
            ]
        return []

    def run(self) -> RunReport:
        cells = self._cells()
        slots: List[Optional[List[Tuple[int, List[ReportRow]]]]] = [None] * len(cells)
        logger.info(
            f"Running '{self.config.name}': {len(cells)} cell(s), reps={self.reps}, "
            f"seed={self.seed}, threads={self.threads}"
        )
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            future_to_cell = {executor.submit(self.run_cell, cell): cell for cell in cells}
            for future in as_completed(future_to_cell):
                cell = future_to_cell[future]
                try:
                    slots[cell.index] = future.result()
                except Exception as e:
                    logger.error(f"Cell '{cell.design_spec.label}' failed: {e}")
                    raise

        report = RunReport()
        # design order first, then population order
        n_pops = len(self.config.populations)
        for spec in self.config.designs:
            by_pop: Dict[int, List[ReportRow]] = {}
            for cell, result in zip(cells, slots):
                if cell.design_spec is spec:
                    by_pop.update(dict(result))
            for k in range(n_pops):
                for row in by_pop.get(k, []):
                    report.add(row)
        return report


def run_experiment(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    reps: Optional[int] = None,
    threads: Optional[int] = None,
) -> RunReport:
    return ExperimentRunner(config, seed=seed, reps=reps, threads=threads).run()


def table_config(table: str) -> ExperimentConfig:
    if table not in TABLES:
        raise DesignError(f"unknown table '{table}', expected one of {sorted(TABLES)}")
    return ExperimentConfig.model_validate_json((DATA_DIR / TABLES[table]).read_text())


def check_targets(
    report: RunReport,
    targets: Sequence[ReproductionTarget],
    tolerance: Optional[ToleranceSpec] = None,
) -> List[TargetCheck]:
    """Compare report cells with reproduction targets; explicit target tolerances win"""
    tolerance = tolerance or ToleranceSpec()
    checks: List[TargetCheck] = []
    for target in targets:
        observed = report.value(target.design, target.population, target.measure)
        if observed is None:
            checks.append(TargetCheck(target=target, observed=None, passed=False, detail="missing cell"))
            continue
        passed = True
        details: List[str] = []
        if target.below is not None:
            other = report.value(target.below, target.population, target.measure)
            ok = other is not None and observed < other
            passed &= ok
            details.append(f"below {target.below} ({other})")
        if target.upper is not None:
            passed &= observed < target.upper
            details.append(f"< {target.upper}")
        if target.status != TargetStatus.DIRECTIONAL:
            if target.factor is not None:
                passed &= target.target / target.factor <= observed <= target.target * target.factor
                details.append(f"within x{target.factor} of {target.target}")
            else:
                tol = target.tol
                if tol is None:
                    tol = tolerance.for_cell(target.design, target.population, target.measure.value)
                passed &= abs(observed - target.target) <= tol
                details.append(f"{target.target} ± {tol}")
        checks.append(
            TargetCheck(target=target, observed=observed, passed=bool(passed), detail="; ".join(details))
        )
    return checks


def reproduce(
    table: str,
    seed: Optional[int] = None,
    reps: Optional[int] = None,
    threads: Optional[int] = None,
) -> Tuple[RunReport, List[TargetCheck]]:
    """Run a bundled table configuration and check it against its targets"""
    config = table_config(table)
    report = run_experiment(config, seed=seed, reps=reps, threads=threads)
    checks = check_targets(report, load_targets(table), config.tolerance)
    for check in checks:
        t = check.target
        status = "PASS" if check.passed else "FAIL"
        message = (
            f"[{status}] {t.status.value:<11} {t.design} / {t.population} / {t.measure.value}: "
            f"observed {check.observed}, {check.detail}"
        )
        if check.passed:
            logger.info(message)
        elif t.status == TargetStatus.STRICT:
            logger.error(message)
        else:
            logger.warning(message)
    return report, checks


def assert_strict(checks: Sequence[TargetCheck], include_directional: bool = False) -> None:
    """Raise on missed strict targets, and on missed orderings when include_directional"""
    gating = {TargetStatus.STRICT}
    if include_directional:
        gating.add(TargetStatus.DIRECTIONAL)
    failed = [c for c in checks if not c.passed and c.target.status in gating]
    if failed:
        names = ", ".join(f"{c.target.design}/{c.target.population}/{c.target.measure.value}" for c in failed)
        raise ReproductionFailure(f"{len(failed)} gating target(s) missed: {names}")


def candidate_stream(
    contiguity: Graph,
    family: str,
    seed: int,
    layout: Optional[GridLayout] = None,
    parts_per_side: int = 4,
) -> Iterator[Graph]:
    """Candidate 2-regular graphs for a design search"""
    if family == "auto":
        family = "noncontiguous" if contiguity.n_nodes <= settings.ENUMERATION_MAX_NODES else "recursive"
    if family == "noncontiguous":
        rng = derive_rng(seed, "search")
        yield from enumerate_noncontiguous_cycles(contiguity, rng=rng)
        return
    if family == "recursive":
        if layout is None:
            raise DesignError("recursive candidates need a grid layout")
        k = 0
        while True:
            yield build_2regular_recursive(layout, parts_per_side, contiguity, derive_rng(seed, "recursive", k))
            k += 1
    raise DesignError(f"unknown candidate family '{family}'")


def tau_measure(tau: TauSpec, contiguity: Graph, population: Optional[SpatialPopulation]):
    """Callable scoring one candidate graph by the design measure in tau"""

    def measure(g: Graph) -> MeasureValue:
        design = EpssworGssDesign(g, tau.n)
        if tau.measure == MeasureKind.XI:
            return xi(design, contiguity, EvaluationMode.EXACT)
        if population is None:
            raise DesignError(f"measure {tau.measure.value} needs a population")
        if tau.measure == MeasureKind.RE:
            eff = relative_efficiency(design, population, mode=EvaluationMode.EXACT)
            return MeasureValue(value=eff.re, se=None, mode=EvaluationMode.EXACT)
        if tau.measure == MeasureKind.ESSB:
            return expected_ssb(design, population, EvaluationMode.EXACT)
        if tau.measure == MeasureKind.VARIANCE:
            _, variance, _, _ = design_variance(design, population, mode=EvaluationMode.EXACT)
            return MeasureValue(value=variance, se=None, mode=EvaluationMode.EXACT)
        raise DesignError(f"measure {tau.measure.value} cannot rank graphs")

    return measure


def run_design_search(
    layout: GridLayout,
    tau: TauSpec,
    budget: Optional[int],
    seed: int,
    family: str = "auto",
    parts_per_side: int = 4,
    threads: int = 1,
) -> Tuple[SearchResult, RunReport]:
    """Search candidate graphs over a rook-contiguous grid; report the winner"""
    contiguity = rook_contiguity(layout)
    population = None
    if tau.population is not None:
        population = build_population(tau.population)
        if population.n_units != layout.n_nodes:
            raise DesignError("search population does not match the grid")
    if family == "recursive" or (family == "auto" and layout.n_nodes > settings.ENUMERATION_MAX_NODES):
        if budget is None:
            raise DesignError("an unbounded recursive candidate stream needs a budget")
    stream = candidate_stream(contiguity, family, seed, layout, parts_per_side)
    result = design_search(stream, tau_measure(tau, contiguity, population), budget, threads)

    pop_label = tau.population.label if tau.population else "none"
    report = RunReport()
    report.add(
        ReportRow(
            design=f"search-best-of-{result.evaluated}",
            population=pop_label,
            measure=tau.measure,
            value=result.value,
            mode=EvaluationMode.EXACT,
            seed=seed,
        )
    )
    values = np.array(result.values)
    report.add(
        ReportRow(
            design=f"search-median-of-{result.evaluated}",
            population=pop_label,
            measure=tau.measure,
            value=float(np.median(values)),
            mode=EvaluationMode.EXACT,
            seed=seed,
        )
    )
    if tau.measure == MeasureKind.XI:
        result.report.xi = result.value
    elif tau.measure == MeasureKind.ESSB:
        result.report.essb = result.value
    elif tau.measure == MeasureKind.RE:
        result.report.re = result.value
    return result, report


def describe_config(config: ExperimentConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), indent=2)
