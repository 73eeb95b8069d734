"""
Design measures: contiguous-selection probability, spatial balance, design
variance, relative efficiency against SRSWoR, and search over graph
candidates for the best measure.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from gss.core.errors import DesignError, EmptySearchError, NotEnumerableError
from gss.models.schemas import DesignMeasureReport, EstimatorKind, EvaluationMode
from gss.services.estimators import estimate, tie_span
from gss.services.graph_core import Graph
from gss.services.lmhw_walker import extract_ties
from gss.services.populations import SpatialPopulation
from gss.services.sampling_designs import BaseDesign, Sample, UnequalGssDesign


@dataclass(frozen=True)
class MeasureValue:
    value: float
    se: Optional[float]
    mode: EvaluationMode
    reps: Optional[int] = None


@dataclass(frozen=True)
class EfficiencyResult:
    """Design variance of an estimator and its ratio to SRSWoR with Horvitz-Thompson"""

    re: float
    re_se: Optional[float]
    variance: float
    reference_variance: float
    bias: float
    bias_se: Optional[float]
    mode: EvaluationMode
    reps: Optional[int] = None


def has_contiguous_pair(units: Iterable[int], contiguity: Graph) -> bool:
    distinct = sorted(set(units))
    return any(contiguity.has_edge(i, j) for i, j in combinations(distinct, 2))


def _resolve_mode(design: BaseDesign, mode: Optional[EvaluationMode]) -> EvaluationMode:
    if mode is not None:
        return mode
    return EvaluationMode.EXACT if design.enumerable else EvaluationMode.MONTE_CARLO


def _mean_se(values: np.ndarray) -> Tuple[float, Optional[float]]:
    if len(values) < 2:
        return float(values.mean()), None
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def draw_samples(design: BaseDesign, reps: int, rng: np.random.Generator) -> List[Sample]:
    return [design.draw(rng) for _ in range(reps)]


def xi_from_samples(samples: Sequence[Sample], contiguity: Graph) -> MeasureValue:
    hits = np.array([has_contiguous_pair(s.units, contiguity) for s in samples], dtype=float)
    reps = len(hits)
    value = float(hits.mean())
    se = float(np.sqrt(max(value * (1 - value), 0.0) / reps))
    return MeasureValue(value=value, se=se, mode=EvaluationMode.MONTE_CARLO, reps=reps)


def xi(
    design: BaseDesign,
    contiguity: Graph,
    mode: Optional[EvaluationMode] = None,
    reps: int = 10_000,
    rng: Optional[np.random.Generator] = None,
) -> MeasureValue:
    """Probability that the distinct selected units include a contiguous pair"""
    mode = _resolve_mode(design, mode)
    if mode == EvaluationMode.EXACT:
        value = sum(p for s, p in design.sample_space() if has_contiguous_pair(s.units, contiguity))
        return MeasureValue(value=float(value), se=None, mode=mode)
    if rng is None:
        raise DesignError("Monte Carlo ξ needs an rng")
    return xi_from_samples(draw_samples(design, reps, rng), contiguity)


def spatial_balance(sample: Iterable[int], pi: Sequence[float], coords: np.ndarray) -> float:
    """
    Voronoi balance: mean over sampled units k of (v_k - 1)^2, where v_k sums
    pi over the population units nearest to k. Equidistant units split their
    pi equally.
    """
    units = sorted(set(sample))
    if not units:
        raise DesignError("spatial balance of an empty sample is undefined")
    coords = np.asarray(coords, dtype=float)
    pi_arr = np.asarray(pi, dtype=float)
    dist = cdist(coords, coords[np.asarray(units) - 1])
    nearest = dist <= dist.min(axis=1, keepdims=True) + 1e-12
    share = nearest / nearest.sum(axis=1, keepdims=True)
    v = (pi_arr[:, None] * share).sum(axis=0)
    return float(np.mean((v - 1.0) ** 2))


def resolve_estimator(design: BaseDesign, requested: Optional[EstimatorKind]) -> EstimatorKind:
    """Horvitz-Thompson for fixed-size designs, the requested walk estimator otherwise"""
    if design.without_replacement:
        return EstimatorKind.HORVITZ_THOMPSON
    return requested or EstimatorKind.YHAT_W


def evaluate_sample(
    design: BaseDesign, sample: Sample, population: SpatialPopulation, kind: EstimatorKind
) -> float:
    if kind == EstimatorKind.HORVITZ_THOMPSON:
        return estimate(kind, sample.units, population.y, design.inclusion_probabilities(), population.n)
    if kind == EstimatorKind.YHAT_W:
        # target probabilities the walk was calibrated to
        return estimate(kind, sample.units, population.y, population.pi, population.n)
    chain = getattr(design, "chain", None)
    trace = sample.trace
    ties = extract_ties(trace) if trace is not None else None
    span = tie_span(trace.m) if trace is not None else None
    return estimate(
        kind, sample.units, population.y, population.pi, population.n, chain=chain, ties=ties, span=span
    )


def moments(values: np.ndarray) -> Tuple[float, float, Optional[float], Optional[float]]:
    """(mean, variance, se of mean, se of variance) of Monte Carlo replicates"""
    k = len(values)
    if k < 2:
        raise DesignError("too few usable replicates for a Monte Carlo variance")
    mean, mean_se = _mean_se(values)
    variance = float(values.var(ddof=1))
    m4 = float(np.mean((values - values.mean()) ** 4))
    var_se = float(np.sqrt(max(m4 - variance ** 2 * (k - 3) / (k - 1), 0.0) / k))
    return mean, variance, mean_se, var_se


def estimates_from_samples(
    design: BaseDesign,
    samples: Sequence[Sample],
    population: SpatialPopulation,
    estimator: Optional[EstimatorKind] = None,
) -> np.ndarray:
    """Estimator value per replicate"""
    kind = resolve_estimator(design, estimator)
    values = [evaluate_sample(design, sample, population, kind) for sample in samples]
    return np.asarray(values, dtype=float)


def design_variance(
    design: BaseDesign,
    population: SpatialPopulation,
    estimator: Optional[EstimatorKind] = None,
    mode: Optional[EvaluationMode] = None,
    reps: int = 10_000,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float, Optional[float], Optional[float]]:
    """(mean, variance, se of mean, se of variance) of the estimator under the design"""
    kind = resolve_estimator(design, estimator)
    mode = _resolve_mode(design, mode)
    if mode == EvaluationMode.EXACT:
        space = design.sample_space()
        values = np.array([evaluate_sample(design, s, population, kind) for s, _ in space])
        probs = np.array([p for _, p in space])
        mean = float(np.dot(probs, values))
        variance = float(np.dot(probs, (values - mean) ** 2))
        return mean, variance, None, None
    if rng is None:
        raise DesignError("Monte Carlo design variance needs an rng")
    return moments(estimates_from_samples(design, draw_samples(design, reps, rng), population, kind))


def srswor_variance(y: Sequence[float], n: int) -> float:
    """Exact variance of the Horvitz-Thompson total under SRSWoR"""
    y_arr = np.asarray(y, dtype=float)
    big_n = len(y_arr)
    if not 1 <= n <= big_n:
        raise DesignError(f"sample size n={n} must lie in 1..{big_n}")
    s2 = float(y_arr.var(ddof=1))
    return big_n ** 2 * (1 - n / big_n) * s2 / n


def reference_size(design: BaseDesign) -> int:
    if isinstance(design, UnequalGssDesign):
        return design.m
    return int(round(design.expected_size))


def efficiency_from_moments(
    design: BaseDesign,
    population: SpatialPopulation,
    stats: Tuple[float, float, Optional[float], Optional[float]],
    mode: EvaluationMode,
    reps: Optional[int] = None,
) -> EfficiencyResult:
    mean, variance, mean_se, var_se = stats
    reference = srswor_variance(population.y, reference_size(design))
    if reference <= 0:
        raise DesignError("SRSWoR variance is zero for a constant population")
    re = variance / reference
    logger.debug(f"RE of {design.label} on {population.name}: {re:.4f} ({mode.value})")
    return EfficiencyResult(
        re=re,
        re_se=None if var_se is None else var_se / reference,
        variance=variance,
        reference_variance=reference,
        bias=mean - population.total,
        bias_se=mean_se,
        mode=mode,
        reps=None if mode == EvaluationMode.EXACT else reps,
    )


def relative_efficiency(
    design: BaseDesign,
    population: SpatialPopulation,
    estimator: Optional[EstimatorKind] = None,
    mode: Optional[EvaluationMode] = None,
    reps: int = 10_000,
    rng: Optional[np.random.Generator] = None,
) -> EfficiencyResult:
    """
    Variance of the design's estimator over the exact SRSWoR Horvitz-Thompson
    variance at the same sample size (n, or m for sequences).
    """
    mode = _resolve_mode(design, mode)
    stats = design_variance(design, population, estimator, mode, reps, rng)
    return efficiency_from_moments(design, population, stats, mode, reps)


def essb_from_samples(samples: Sequence[Sample], population: SpatialPopulation) -> MeasureValue:
    values = np.array([spatial_balance(s.units, population.pi, population.coords) for s in samples])
    value, se = _mean_se(values)
    return MeasureValue(value=value, se=se, mode=EvaluationMode.MONTE_CARLO, reps=len(values))


def expected_ssb(
    design: BaseDesign,
    population: SpatialPopulation,
    mode: Optional[EvaluationMode] = None,
    reps: int = 10_000,
    rng: Optional[np.random.Generator] = None,
) -> MeasureValue:
    """Mean spatial balance of the distinct selected units"""
    mode = _resolve_mode(design, mode)
    if mode == EvaluationMode.EXACT:
        value = sum(
            p * spatial_balance(s.units, population.pi, population.coords)
            for s, p in design.sample_space()
        )
        return MeasureValue(value=float(value), se=None, mode=mode)
    if rng is None:
        raise DesignError("Monte Carlo ESSB needs an rng")
    return essb_from_samples(draw_samples(design, reps, rng), population)


def prob_single_distinct_design(design: BaseDesign) -> Optional[float]:
    """Pr(one distinct unit) for two-state sequence designs"""
    if not isinstance(design, UnequalGssDesign) or design.m != 2:
        return None
    try:
        space = design.sample_space()
    except NotEnumerableError:
        return None
    return float(sum(p for s, p in space if s.n_distinct == 1))


@dataclass
class SearchResult:
    graph: Graph
    value: float
    report: DesignMeasureReport
    evaluated: int
    values: List[float]


def design_search(
    candidates: Iterable[Graph],
    measure: Callable[[Graph], MeasureValue],
    budget: Optional[int] = None,
    threads: int = 1,
) -> SearchResult:
    """
    Evaluate up to budget candidates and keep the first minimizer of measure.

    Evaluation may run on a thread pool; results are reduced in stream order.
    """
    pool = list(islice(candidates, budget)) if budget is not None else list(candidates)
    if not pool:
        raise EmptySearchError("design search received no candidate graphs")
    logger.info(f"Design search over {len(pool)} candidate(s) with {threads} thread(s)")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(measure, pool))
    else:
        results = [measure(g) for g in pool]

    best = 0
    for k, res in enumerate(results):
        if res.value < results[best].value:
            best = k
    chosen = results[best]
    report = DesignMeasureReport(mode=chosen.mode, reps=chosen.reps)
    logger.info(f"Best candidate #{best + 1} with measure {chosen.value:.6g}")
    return SearchResult(
        graph=pool[best],
        value=chosen.value,
        report=report,
        evaluated=len(pool),
        values=[r.value for r in results],
    )
