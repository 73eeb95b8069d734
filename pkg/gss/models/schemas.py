from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gss.core.config import settings


class DesignKind(str, Enum):
    """Sampling designs the harness can run"""
    SRSWOR = "srswor"
    SYSTEMATIC_CIRCULAR = "systematic_circular"
    SYSTEMATIC_PATH = "systematic_path"
    EPSSWOR_GSS = "epsswor_gss"
    UNEQUAL_GSS = "unequal_gss"
    LPM1 = "lpm1"


class EstimatorKind(str, Enum):
    HORVITZ_THOMPSON = "horvitz_thompson"
    YHAT_W = "yhat_w"
    YHAT_W_CHAIN = "yhat_w_chain"
    YHAT_H = "yhat_h"


class StartMode(str, Enum):
    """How a walk reaches equilibrium before its window"""
    EXACT = "exact"
    BURN_IN = "burn_in"


class MeasureKind(str, Enum):
    RE = "re"
    XI = "xi"
    ESSB = "essb"
    PR_N1 = "pr_n1"
    BIAS = "bias"
    VARIANCE = "variance"


class EvaluationMode(str, Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


class StylizedKind(str, Enum):
    CENTRE = "centre"
    CORNER = "corner"
    POLAR = "polar"
    VORTEX = "vortex"


class PopulationKind(str, Enum):
    STYLIZED = "stylized"
    SINTREND = "sintrend"


class Calibration(str, Enum):
    """How a GSS preference vector is derived from target inclusion probabilities"""
    CLOSED_FORM = "closed_form"
    EXACT = "exact"


class OrderSource(str, Enum):
    CYCLE = "cycle"
    PATH = "path"
    RECURSIVE_PARTITION = "recursive_partition"


class TargetStatus(str, Enum):
    """How strictly a reproduction target is checked"""
    STRICT = "strict"
    LOOSE = "loose"
    DIRECTIONAL = "directional"


# Walk configuration
class WalkConfig(BaseModel):
    """Jump weight r, backtrack weight w and preference vector u"""

    model_config = ConfigDict(frozen=True)

    r: float = 0.0
    w: float = 0.0
    u: List[float]

    @field_validator("r")
    @classmethod
    def _check_r(cls, v: float) -> float:
        if not v >= 0 or not np.isfinite(v):
            raise ValueError(f"jump weight r must be >= 0, got {v}")
        return v

    @field_validator("w")
    @classmethod
    def _check_w(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"backtrack weight w must lie in [0, 1], got {v}")
        return v

    @field_validator("u")
    @classmethod
    def _check_u(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("preference vector u is empty")
        if min(v) <= 0:
            raise ValueError("preference vector u must be strictly positive")
        if abs(sum(v) - 1.0) > 1e-12:
            raise ValueError(f"preference vector u must sum to 1, sums to {sum(v)!r}")
        return v

    @property
    def n_nodes(self) -> int:
        return len(self.u)

    @property
    def u_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float)

    @classmethod
    def uniform(cls, n_nodes: int, r: float = 0.0, w: float = 0.0) -> "WalkConfig":
        return cls(r=r, w=w, u=[1.0 / n_nodes] * n_nodes)

    @classmethod
    def from_weights(cls, weights: Any, r: float = 0.0, w: float = 0.0) -> "WalkConfig":
        """Normalize positive weights into a preference vector"""
        arr = np.asarray(weights, dtype=float)
        if arr.size == 0 or arr.min() <= 0:
            raise ValueError("preference weights must be strictly positive")
        arr = arr / arr.sum()
        return cls(r=r, w=w, u=arr.tolist())


# Experiment configuration
class PopulationSpec(BaseModel):
    id: Optional[str] = None
    kind: PopulationKind = PopulationKind.STYLIZED
    shape: Optional[StylizedKind] = None
    side: int = Field(default=3, ge=2)
    value_range: Optional[List[float]] = None
    n: int = Field(ge=1)
    center_ratio: float = Field(default=1.0, gt=0)
    center_unit: Optional[int] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "PopulationSpec":
        if self.kind == PopulationKind.STYLIZED and self.shape is None:
            raise ValueError("stylized populations need a shape")
        if self.value_range is not None:
            if len(self.value_range) != 2 or self.value_range[0] >= self.value_range[1]:
                raise ValueError("value_range must be [lo, hi] with lo < hi")
        if self.n > self.side * self.side:
            raise ValueError(f"n={self.n} exceeds population size {self.side * self.side}")
        return self

    @property
    def label(self) -> str:
        if self.id:
            return self.id
        name = self.shape.value if self.shape else self.kind.value
        return f"{name}-ratio{self.center_ratio:g}"


class DesignSpec(BaseModel):
    id: Optional[str] = None
    kind: DesignKind
    graph: Optional[str] = None  # builtin name (g1..g7) or edge-list path
    order: Optional[List[int]] = None
    order_source: OrderSource = OrderSource.CYCLE
    parts_per_side: int = Field(default=2, ge=1)
    n: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    r: float = Field(default=0.0, ge=0)
    w: float = Field(default=0.0, ge=0, le=1)
    start: StartMode = StartMode.EXACT
    calibration: Calibration = Calibration.CLOSED_FORM
    graph_seed: int = 0

    @model_validator(mode="after")
    def _check_params(self) -> "DesignSpec":
        graph_kinds = (DesignKind.EPSSWOR_GSS, DesignKind.UNEQUAL_GSS)
        if self.kind in graph_kinds and not self.graph:
            raise ValueError(f"{self.kind.value} designs need a graph")
        if self.kind == DesignKind.UNEQUAL_GSS and self.m is None:
            raise ValueError("unequal_gss designs need a sequence length m")
        return self

    @property
    def label(self) -> str:
        if self.id:
            return self.id
        return f"{self.kind.value}:{self.graph}" if self.graph else self.kind.value


class EstimatorSpec(BaseModel):
    kind: EstimatorKind = EstimatorKind.YHAT_W


class RunSpec(BaseModel):
    reps: int = Field(default_factory=lambda: settings.DEFAULT_REPS, ge=1)
    seed: int = 0
    threads: int = Field(default_factory=lambda: settings.DEFAULT_THREADS, ge=1)
    out: Optional[str] = None
    measures: List[MeasureKind] = Field(default_factory=lambda: [MeasureKind.RE])
    exact_when_possible: bool = True


class ToleranceSpec(BaseModel):
    default: float = Field(default=0.15, ge=0)
    per_cell: Dict[str, float] = Field(default_factory=dict)  # "design/population/measure" -> tol

    def for_cell(self, design: str, population: str, measure: str) -> float:
        return self.per_cell.get(f"{design}/{population}/{measure}", self.default)


class ExperimentConfig(BaseModel):
    """A single simulate/reproduce run: populations x designs"""

    name: str = "experiment"
    populations: List[PopulationSpec]
    designs: List[DesignSpec]
    estimator: EstimatorSpec = Field(default_factory=EstimatorSpec)
    run: RunSpec = Field(default_factory=RunSpec)
    tolerance: ToleranceSpec = Field(default_factory=ToleranceSpec)

    @model_validator(mode="after")
    def _check_nonempty(self) -> "ExperimentConfig":
        if not self.populations:
            raise ValueError("at least one population is required")
        if not self.designs:
            raise ValueError("at least one design is required")
        return self


# Reports
class EstimateReport(BaseModel):
    estimate: float
    estimator: EstimatorKind
    variance_estimate: Optional[float] = None
    n_walks: int = 1
    m: Optional[int] = None


class DesignMeasureReport(BaseModel):
    xi: Optional[float] = None
    essb: Optional[float] = None
    re: Optional[float] = None
    pr_n1: Optional[float] = None
    mode: EvaluationMode = EvaluationMode.EXACT
    reps: Optional[int] = None
    seed: Optional[int] = None


class TauSpec(BaseModel):
    """Design measure minimized by a design search"""

    measure: MeasureKind = MeasureKind.XI
    n: int = Field(default=3, ge=1)
    population: Optional[PopulationSpec] = None
    reps: int = Field(default=2000, ge=1)


class ReportRow(BaseModel):
    design: str
    population: str
    measure: MeasureKind
    value: float
    se: Optional[float] = None
    reps: Optional[int] = None
    seed: Optional[int] = None
    mode: EvaluationMode


class RunReport(BaseModel):
    rows: List[ReportRow] = Field(default_factory=list)

    def add(self, row: ReportRow) -> None:
        self.rows.append(row)

    def value(self, design: str, population: str, measure: MeasureKind) -> Optional[float]:
        for row in self.rows:
            if row.design == design and row.population == population and row.measure == measure:
                return row.value
        return None


class ReproductionTarget(BaseModel):
    design: str
    population: str
    measure: MeasureKind = MeasureKind.RE
    target: float
    tol: Optional[float] = None
    status: TargetStatus = TargetStatus.LOOSE
    below: Optional[str] = None  # directional: value must be below this design's value
    upper: Optional[float] = None  # directional: value must be below this bound
    factor: Optional[float] = Field(default=None, gt=1)  # loose: within target/factor..target*factor


class TargetCheck(BaseModel):
    target: ReproductionTarget
    observed: Optional[float]
    passed: bool
    detail: str = ""
