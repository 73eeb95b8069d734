"""
Sampling designs competing with graph spatial sampling.

Every design draws a `Sample` from a caller-supplied generator; designs with a
finite support also list it exactly through `sample_space`.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from gss.core.errors import DesignError, NotEnumerableError
from gss.models.schemas import Calibration, DesignKind, StartMode, WalkConfig
from gss.services.graph_core import Graph
from gss.services.lmhw_walker import (
    PairChain,
    WalkTrace,
    Walker,
    build_pair_chain,
    calibrate_preference,
    enumerate_paths,
    run_walk,
)

SAMPLE_SPACE_CAP = 1_000_000


@dataclass(frozen=True)
class Sample:
    """Selected units; GSS designs keep the visiting order and may repeat units"""

    units: Tuple[int, ...]
    design: str = ""
    trace: Optional[WalkTrace] = None

    @property
    def distinct(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.units)))

    @property
    def size(self) -> int:
        return len(self.units)

    @property
    def n_distinct(self) -> int:
        return len(set(self.units))


SampleSpace = List[Tuple[Sample, float]]


def _check_size(n_units: int, n: int) -> None:
    if not 1 <= n <= n_units:
        raise DesignError(f"sample size n={n} must lie in 1..{n_units}")


def srswor(n_units: int, n: int, rng: np.random.Generator) -> Sample:
    """Simple random sample of n distinct units from 1..N"""
    _check_size(n_units, n)
    units = rng.choice(n_units, size=n, replace=False) + 1
    return Sample(units=tuple(int(v) for v in units), design=DesignKind.SRSWOR.value)


def _circular_positions(n_units: int, n: int, v: float) -> List[int]:
    step = n_units / n
    return [int(math.floor(v + k * step)) % n_units for k in range(n)]


def systematic_circular(
    order: Sequence[int], n: int, rng: np.random.Generator, path: bool = False
) -> Sample:
    """
    Systematic sample along an ordered circle (fractional interval N/n) or,
    with path=True, along an ordered path (integer interval, N divisible by n).
    """
    n_units = len(order)
    _check_size(n_units, n)
    if path:
        if n_units % n:
            raise DesignError(
                f"path systematic sampling needs N divisible by n (N={n_units}, n={n})"
            )
        step = n_units // n
        start = int(rng.integers(step))
        positions = [start + k * step for k in range(n)]
        kind = DesignKind.SYSTEMATIC_PATH
    else:
        positions = _circular_positions(n_units, n, float(rng.random() * n_units))
        kind = DesignKind.SYSTEMATIC_CIRCULAR
    return Sample(units=tuple(order[p] for p in positions), design=kind.value)


def _circular_sample_space(order: Sequence[int], n: int) -> SampleSpace:
    n_units = len(order)
    step = Fraction(n_units, n)
    points = {Fraction(0), Fraction(n_units)}
    for k in range(n):
        for j in range(n_units + 1):
            b = (Fraction(j) - k * step) % n_units
            points.add(b)
    cuts = sorted(points)
    weights: Dict[Tuple[int, ...], Fraction] = {}
    for lo, hi in zip(cuts, cuts[1:]):
        if hi == lo:
            continue
        mid = (lo + hi) / 2
        positions = [int(math.floor(mid + k * step)) % n_units for k in range(n)]
        key = tuple(sorted(order[p] for p in positions))
        weights[key] = weights.get(key, Fraction(0)) + (hi - lo) / n_units
    return [
        (Sample(units=key, design=DesignKind.SYSTEMATIC_CIRCULAR.value), float(p))
        for key, p in weights.items()
    ]


def preference_vector(
    g: Graph, pi: Sequence[float], n: int, r: float = 0.0
) -> Tuple[np.ndarray, float]:
    """
    Preference vector targeting p_h = pi_h / n through p_h ~ (d_h + r) u_h.

    Returns (u, eta) with u_i = pi_i / (n (d_i + r) eta) and
    eta = (1/n) sum_i pi_i / (d_i + r).
    """
    pi_arr = np.asarray(pi, dtype=float)
    if pi_arr.shape != (g.n_nodes,):
        raise DesignError(f"pi has {pi_arr.size} entries for {g.n_nodes} nodes")
    if pi_arr.min() <= 0 or pi_arr.max() > 1 + 1e-12:
        raise DesignError("inclusion probabilities must lie in (0, 1]")
    if abs(pi_arr.sum() - n) > 1e-9:
        raise DesignError(f"inclusion probabilities sum to {pi_arr.sum():.12g}, expected n={n}")
    weights = g.degrees() + r
    eta = float(np.sum(pi_arr / weights) / n)
    u = pi_arr / (n * weights * eta)
    return u / u.sum(), eta


def _require_cycle(cycle: Graph) -> Tuple[int, ...]:
    if not cycle.is_regular(2) or not cycle.is_connected():
        raise DesignError("EpSSWoR needs a connected 2-regular graph")
    return cycle.cycle_order()


def epsswor_gss(cycle: Graph, n: int, rng: np.random.Generator) -> Sample:
    """n consecutive nodes of a 2-regular graph from a uniform start and direction"""
    order = _require_cycle(cycle)
    n_units = len(order)
    _check_size(n_units, n)
    start = int(rng.integers(n_units))
    direction = 1 if rng.random() < 0.5 else -1
    units = tuple(order[(start + direction * k) % n_units] for k in range(n))
    return Sample(units=units, design=DesignKind.EPSSWOR_GSS.value)


def gss_sequence(
    g: Graph,
    pi: Sequence[float],
    m: int,
    rng: np.random.Generator,
    r: float = 0.0,
    w: float = 0.0,
    start: StartMode = StartMode.EXACT,
    calibration: Calibration = Calibration.CLOSED_FORM,
) -> Sample:
    """m consecutive walk states at equilibrium with the walk targeting pi / n"""
    design = UnequalGssDesign(g, pi, m, r=r, w=w, start=start, calibration=calibration)
    return design.draw(rng)


def _nearest(row: np.ndarray, rng: np.random.Generator) -> int:
    best = row.min()
    ties = np.flatnonzero(row <= best + 1e-12)
    return int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])


def lpm1(
    coords: np.ndarray,
    pi: Sequence[float],
    rng: np.random.Generator,
    distances: Optional[np.ndarray] = None,
    eps: float = 1e-12,
) -> Sample:
    """
    Local pivotal method, LPM1 variant.

    A random undecided unit i and its nearest undecided unit j are paired only
    if i is also nearest to j; otherwise a new i is drawn. Each pairing
    decides at least one of the two units while keeping sum(pi) fixed.
    """
    p = np.array(pi, dtype=float)
    total = p.sum()
    n = int(round(total))
    if abs(total - n) > 1e-9:
        raise DesignError(f"LPM1 needs an integral sum of pi, got {total:.12g}")
    if p.min() < 0 or p.max() > 1 + 1e-12:
        raise DesignError("inclusion probabilities must lie in [0, 1]")

    dist = np.array(cdist(coords, coords) if distances is None else distances, dtype=float)
    np.fill_diagonal(dist, np.inf)
    undecided = (p > eps) & (p < 1 - eps)
    dist[:, ~undecided] = np.inf

    while undecided.sum() > 1:
        candidates = np.flatnonzero(undecided)
        i = int(candidates[rng.integers(len(candidates))])
        j = _nearest(dist[i], rng)
        row_j = dist[j]
        if row_j[i] > row_j.min() + 1e-12:
            continue

        s = p[i] + p[j]
        if s < 1:
            if rng.random() < p[j] / s:
                p[i], p[j] = 0.0, s
            else:
                p[i], p[j] = s, 0.0
        else:
            if rng.random() < (1 - p[j]) / (2 - s):
                p[i], p[j] = 1.0, s - 1
            else:
                p[i], p[j] = s - 1, 1.0

        for k in (i, j):
            if p[k] <= eps or p[k] >= 1 - eps:
                p[k] = 0.0 if p[k] <= eps else 1.0
                undecided[k] = False
                dist[:, k] = np.inf

    for k in np.flatnonzero(undecided):
        # floating-point residue of an integral total
        p[k] = 1.0 if rng.random() < p[k] else 0.0

    units = tuple(int(k) + 1 for k in np.flatnonzero(p > 0.5))
    if len(units) != n:
        logger.warning(f"LPM1 returned {len(units)} units for n={n}")
    return Sample(units=units, design=DesignKind.LPM1.value)


class BaseDesign(ABC):
    """
    Base class for all sampling designs
    """

    kind: DesignKind

    def __init__(self, n_units: int, label: Optional[str] = None):
        self.n_units = n_units
        self.label = label or self.kind.value

    @abstractmethod
    def draw(self, rng: np.random.Generator) -> Sample:
        """
        Draw one sample
        """
        pass

    @abstractmethod
    def inclusion_probabilities(self) -> np.ndarray:
        """
        Expected number of selections of each unit, indexed 0..N-1
        """
        pass

    @property
    def expected_size(self) -> float:
        return float(self.inclusion_probabilities().sum())

    @property
    def without_replacement(self) -> bool:
        return True

    def _enumerate(self) -> SampleSpace:
        raise NotEnumerableError(f"{self.label} has no enumerable sample space")

    def sample_space(self) -> SampleSpace:
        """
        Exhaustive support as (sample, probability) pairs, computed once
        """
        cached = getattr(self, "_space", None)
        if cached is None:
            cached = self._enumerate()
            self._space = cached
        return cached

    @property
    def enumerable(self) -> bool:
        try:
            self.sample_space()
        except NotEnumerableError:
            return False
        return True


class SrsworDesign(BaseDesign):
    kind = DesignKind.SRSWOR

    def __init__(self, n_units: int, n: int, label: Optional[str] = None):
        _check_size(n_units, n)
        super().__init__(n_units, label)
        self.n = n

    def draw(self, rng: np.random.Generator) -> Sample:
        return srswor(self.n_units, self.n, rng)

    def inclusion_probabilities(self) -> np.ndarray:
        return np.full(self.n_units, self.n / self.n_units)

    def _enumerate(self) -> SampleSpace:
        count = math.comb(self.n_units, self.n)
        if count > SAMPLE_SPACE_CAP:
            raise NotEnumerableError(f"SRSWoR support has {count} samples")
        prob = 1.0 / count
        return [
            (Sample(units=combo, design=self.kind.value), prob)
            for combo in combinations(range(1, self.n_units + 1), self.n)
        ]


class SystematicDesign(BaseDesign):
    """Ordered systematic selection on a circle or a path"""

    def __init__(
        self, order: Sequence[int], n: int, path: bool = False, label: Optional[str] = None
    ):
        self.kind = DesignKind.SYSTEMATIC_PATH if path else DesignKind.SYSTEMATIC_CIRCULAR
        _check_size(len(order), n)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise DesignError("systematic order must be a permutation of 1..N")
        if path and len(order) % n:
            raise DesignError(
                f"path systematic sampling needs N divisible by n (N={len(order)}, n={n})"
            )
        super().__init__(len(order), label)
        self.order = tuple(order)
        self.n = n
        self.path = path

    def draw(self, rng: np.random.Generator) -> Sample:
        return systematic_circular(self.order, self.n, rng, path=self.path)

    def inclusion_probabilities(self) -> np.ndarray:
        return np.full(self.n_units, self.n / self.n_units)

    def _enumerate(self) -> SampleSpace:
        if not self.path:
            return _circular_sample_space(self.order, self.n)
        step = self.n_units // self.n
        return [
            (
                Sample(
                    units=tuple(self.order[s + k * step] for k in range(self.n)),
                    design=self.kind.value,
                ),
                1.0 / step,
            )
            for s in range(step)
        ]


class EpssworGssDesign(BaseDesign):
    kind = DesignKind.EPSSWOR_GSS

    def __init__(self, cycle: Graph, n: int, label: Optional[str] = None):
        order = _require_cycle(cycle)
        _check_size(len(order), n)
        super().__init__(len(order), label)
        self.graph = cycle
        self.order = order
        self.n = n

    def draw(self, rng: np.random.Generator) -> Sample:
        start = int(rng.integers(self.n_units))
        direction = 1 if rng.random() < 0.5 else -1
        units = tuple(self.order[(start + direction * k) % self.n_units] for k in range(self.n))
        return Sample(units=units, design=self.kind.value)

    def inclusion_probabilities(self) -> np.ndarray:
        return np.full(self.n_units, self.n / self.n_units)

    def _enumerate(self) -> SampleSpace:
        if self.n == self.n_units:
            return [(Sample(units=tuple(sorted(self.order)), design=self.kind.value), 1.0)]
        return [
            (
                Sample(
                    units=tuple(self.order[(s + k) % self.n_units] for k in range(self.n)),
                    design=self.kind.value,
                ),
                1.0 / self.n_units,
            )
            for s in range(self.n_units)
        ]


class UnequalGssDesign(BaseDesign):
    """m-sequence of an LMHW walk at equilibrium targeting p_h = pi_h / n"""

    kind = DesignKind.UNEQUAL_GSS

    def __init__(
        self,
        g: Graph,
        pi: Sequence[float],
        m: int,
        r: float = 0.0,
        w: float = 0.0,
        start: StartMode = StartMode.EXACT,
        calibration: Calibration = Calibration.CLOSED_FORM,
        label: Optional[str] = None,
        chain: Optional[PairChain] = None,
    ):
        if m < 1:
            raise DesignError(f"sequence length m must be >= 1, got {m}")
        super().__init__(g.n_nodes, label)
        pi_arr = np.asarray(pi, dtype=float)
        self.n = int(round(pi_arr.sum()))
        self.graph = g
        self.pi = pi_arr
        self.m = m
        self.start = start

        if calibration == Calibration.EXACT:
            self.config, self.chain = calibrate_preference(g, pi_arr / self.n, r=r, w=w)
        else:
            u, _ = preference_vector(g, pi_arr, self.n, r=r)
            self.config = WalkConfig.from_weights(u, r=r, w=w)
            self.chain = chain
            if self.chain is None and start == StartMode.EXACT:
                self.chain = build_pair_chain(g, self.config)
        self.walker = Walker(g, self.config)

    @property
    def without_replacement(self) -> bool:
        return False

    @property
    def node_law(self) -> np.ndarray:
        """Stationary law of one position: exact when a chain is available"""
        if self.chain is not None:
            return self.chain.stationary_node
        return self.pi / self.n

    def draw(self, rng: np.random.Generator) -> Sample:
        trace = run_walk(
            self.graph, self.config, self.m, self.start, rng, chain=self.chain, walker=self.walker
        )
        return Sample(units=trace.window, design=self.kind.value, trace=trace)

    def inclusion_probabilities(self) -> np.ndarray:
        return self.m * self.node_law

    def _enumerate(self) -> SampleSpace:
        if self.chain is None:
            raise NotEnumerableError("sequence support needs the exact pair chain")
        bound = self.chain.n_states * max(
            (self.graph.degree(h) for h in self.graph.nodes()), default=1
        ) ** max(self.m - 1, 0)
        if self.config.r > 0:
            bound = self.chain.n_states * self.n_units ** max(self.m - 1, 0)
        if bound > SAMPLE_SPACE_CAP:
            raise NotEnumerableError(f"sequence support bound {bound} exceeds {SAMPLE_SPACE_CAP}")
        return [
            (Sample(units=seq, design=self.kind.value), p)
            for seq, p in enumerate_paths(self.chain, self.m).items()
        ]


class Lpm1Design(BaseDesign):
    kind = DesignKind.LPM1

    def __init__(self, coords: np.ndarray, pi: Sequence[float], label: Optional[str] = None):
        coords = np.asarray(coords, dtype=float)
        super().__init__(len(coords), label)
        self.coords = coords
        self.pi = np.asarray(pi, dtype=float)
        if abs(self.pi.sum() - round(self.pi.sum())) > 1e-9:
            raise DesignError(f"LPM1 needs an integral sum of pi, got {self.pi.sum():.12g}")
        self.distances = cdist(coords, coords)

    def draw(self, rng: np.random.Generator) -> Sample:
        return lpm1(self.coords, self.pi, rng, distances=self.distances)

    def inclusion_probabilities(self) -> np.ndarray:
        return self.pi.copy()


def sample_space(design: BaseDesign) -> SampleSpace:
    """Exhaustive support of an enumerable design; probabilities sum to 1"""
    space = design.sample_space()
    total = sum(p for _, p in space)
    if abs(total - 1.0) > 1e-12:
        logger.warning(f"{design.label} sample space mass is {total!r}")
    return space
