"""Synthetic spatial populations on square grids."""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from gss.core.errors import DesignError
from gss.models.schemas import PopulationKind, PopulationSpec, StylizedKind
from gss.services.graph_core import Graph, GridLayout, rook_contiguity

STYLIZED_3X3 = {
    StylizedKind.CENTRE: np.array([[1, 2, 1], [2, 3, 2], [1, 2, 1]], dtype=float),
    StylizedKind.CORNER: np.array([[3, 2.5, 2], [2.5, 2, 1.5], [2, 1.5, 1]], dtype=float),
    StylizedKind.POLAR: np.array([[3, 2, 1], [2, 1, 2], [1, 2, 3]], dtype=float),
    StylizedKind.VORTEX: np.array([[3, 2, 3], [2, 1, 2], [3, 2, 3]], dtype=float),
}


@dataclass(frozen=True)
class SpatialPopulation:
    """Units 1..N of a grid with coordinates, values and inclusion probabilities"""

    name: str
    layout: GridLayout
    coords: np.ndarray  # N x 2
    y: np.ndarray
    pi: np.ndarray
    contiguity: Graph

    @property
    def n_units(self) -> int:
        return len(self.y)

    @property
    def total(self) -> float:
        return float(self.y.sum())

    @property
    def n(self) -> int:
        return int(round(self.pi.sum()))

    def with_pi(self, pi: Sequence[float]) -> "SpatialPopulation":
        pi_arr = np.asarray(pi, dtype=float)
        _check_pi(pi_arr)
        return SpatialPopulation(
            name=self.name,
            layout=self.layout,
            coords=self.coords,
            y=self.y,
            pi=pi_arr,
            contiguity=self.contiguity,
        )


def _check_pi(pi: np.ndarray) -> None:
    total = pi.sum()
    if abs(total - round(total)) > 1e-9:
        raise DesignError(f"inclusion probabilities sum to {total:.12g}, not an integer n")
    if pi.min() <= 0 or pi.max() > 1 + 1e-12:
        raise DesignError("inclusion probabilities must lie in (0, 1]")


def _as_kind(kind) -> StylizedKind:
    try:
        return StylizedKind(kind)
    except ValueError:
        raise DesignError(f"unknown stylized population '{kind}'")


def stylized_3x3(kind) -> np.ndarray:
    """The four printed 3x3 value matrices"""
    return STYLIZED_3X3[_as_kind(kind)].copy()


def stylized_grid(kind, side: int, value_range: Tuple[float, float] = (0.5, 5.0)) -> np.ndarray:
    """
    Stylized values on a side x side grid, linearly rescaled to value_range.

    centre falls and vortex rises with Manhattan distance from the grid
    centre; corner falls with row + col; polar rises with the distance of
    row + col from the anti-diagonal.
    """
    kind = _as_kind(kind)
    lo, hi = value_range
    if side < 3:
        raise DesignError(f"stylized grids need side >= 3, got {side}")
    if lo >= hi:
        raise DesignError(f"value range [{lo}, {hi}] is empty")
    rows, cols = np.mgrid[1 : side + 1, 1 : side + 1].astype(float)
    mid = (side + 1) / 2
    manhattan = np.abs(rows - mid) + np.abs(cols - mid)
    score = {
        StylizedKind.CENTRE: -manhattan,
        StylizedKind.CORNER: -(rows + cols),
        StylizedKind.POLAR: np.abs(rows + cols - (side + 1)),
        StylizedKind.VORTEX: manhattan,
    }[kind]
    return lo + (score - score.min()) / (score.max() - score.min()) * (hi - lo)


def sintrend_values(coords: np.ndarray) -> np.ndarray:
    s = coords[:, 0] + coords[:, 1]
    return 3 * s + np.sin(6 * s)


def inclusion_probs(
    n_units: int, n: int, center_ratio: float = 1.0, center_unit: Optional[int] = None
) -> np.ndarray:
    """Equal pi except at center_unit, where pi is center_ratio times the rest"""
    if center_ratio <= 0:
        raise DesignError(f"center ratio must be positive, got {center_ratio}")
    if not 1 <= n <= n_units:
        raise DesignError(f"sample size n={n} must lie in 1..{n_units}")
    other = n / (n_units - 1 + center_ratio)
    pi = np.full(n_units, other)
    if center_unit is not None:
        if not 1 <= center_unit <= n_units:
            raise DesignError(f"center unit {center_unit} outside 1..{n_units}")
        pi[center_unit - 1] = center_ratio * other
    elif center_ratio != 1.0:
        raise DesignError("a center ratio other than 1 needs a center unit")
    if pi.max() > 1 + 1e-12:
        raise DesignError(f"inclusion probability {pi.max():.4g} exceeds 1")
    return pi


def _grid_population(name: str, side: int, y: np.ndarray, pi: np.ndarray, coords=None) -> SpatialPopulation:
    layout = GridLayout(side, side)
    _check_pi(pi)
    return SpatialPopulation(
        name=name,
        layout=layout,
        coords=layout.coordinates() if coords is None else coords,
        y=np.asarray(y, dtype=float).ravel(),
        pi=pi,
        contiguity=rook_contiguity(layout),
    )


def sintrend(side: int = 20, n: int = 16) -> SpatialPopulation:
    """side**2 units at cell centres of the unit square, pi = n / N"""
    layout = GridLayout(side, side)
    grid = layout.coordinates()
    coords = (grid - 0.5) / side
    pi = np.full(layout.n_nodes, n / layout.n_nodes)
    return _grid_population("sintrend", side, sintrend_values(coords), pi, coords=coords)


def stylized_population(
    kind,
    side: int,
    n: int,
    value_range: Optional[Tuple[float, float]] = None,
    center_ratio: float = 1.0,
    center_unit: Optional[int] = None,
) -> SpatialPopulation:
    kind = _as_kind(kind)
    if side == 3 and value_range is None:
        y = stylized_3x3(kind)
    else:
        y = stylized_grid(kind, side, tuple(value_range or (0.5, 5.0)))
    if center_unit is None and center_ratio != 1.0 and side % 2 == 1:
        center_unit = GridLayout(side, side).id_of((side + 1) // 2, (side + 1) // 2)
    pi = inclusion_probs(side * side, n, center_ratio, center_unit)
    return _grid_population(kind.value, side, y, pi)


def build_population(spec: PopulationSpec) -> SpatialPopulation:
    """Population described by an experiment configuration entry"""
    if spec.kind == PopulationKind.SINTREND:
        pop = sintrend(spec.side, spec.n)
        if spec.center_ratio != 1.0:
            pop = pop.with_pi(
                inclusion_probs(pop.n_units, spec.n, spec.center_ratio, spec.center_unit)
            )
    else:
        pop = stylized_population(
            spec.shape,
            spec.side,
            spec.n,
            value_range=tuple(spec.value_range) if spec.value_range else None,
            center_ratio=spec.center_ratio,
            center_unit=spec.center_unit,
        )
    logger.debug(f"Population '{spec.label}': N={pop.n_units}, n={pop.n}, Y={pop.total:.4g}")
    return pop
