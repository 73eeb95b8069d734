"""
Named graphs of the 3x3 and 20x20 illustrations, and graph spec resolution.

Spec strings: g1..g7, triangle, cycle:N, grid:RxC (rook contiguity),
order:i,j,k,... (cycle through the listed nodes), complement:<spec>
(every non-edge of the inner graph) or a path to an edge-list file.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple

from loguru import logger

from gss.core.errors import GraphValidationError
from gss.core.rng import derive_rng
from gss.services.graph_core import (
    Graph,
    GridLayout,
    build_2regular_recursive,
    build_g7,
    build_graph,
    complement_graph,
    cycle_from_order,
    enumerate_noncontiguous_cycles,
    from_edge_list_text,
    rook_contiguity,
)

GRID_3X3 = GridLayout(3, 3)
GRID_20X20 = GridLayout(20, 20)

# G2 minus the edge {1, 5} is the 8-path used for path systematic sampling
G2_ORDER: Tuple[int, ...] = (1, 4, 7, 8, 9, 6, 3, 2, 5)
G3_ORDER: Tuple[int, ...] = (1, 5, 3, 4, 9, 7, 2, 6, 8)
G4_ORDER: Tuple[int, ...] = (3, 9, 2, 8, 4, 6, 7, 5, 1)
G5_TRIPLE = frozenset({2, 6, 9})


def contiguous_triples(order: Tuple[int, ...], contiguity: Graph) -> list:
    """Consecutive cycle triples holding at least one contiguous pair"""
    n = len(order)
    triples = []
    for k in range(n):
        a, b, c = order[k], order[(k + 1) % n], order[(k + 2) % n]
        if contiguity.has_edge(a, b) or contiguity.has_edge(b, c) or contiguity.has_edge(a, c):
            triples.append(frozenset({a, b, c}))
    return triples


@lru_cache(maxsize=None)
def g5_order() -> Tuple[int, ...]:
    """
    First non-contiguous 9-cycle whose only contiguous consecutive triple is
    {2, 6, 9}; otherwise the first cycle with the fewest contiguous triples.
    """
    contiguity = rook_contiguity(GRID_3X3)
    fallback: Optional[Tuple[int, ...]] = None
    fallback_count = None
    for g in enumerate_noncontiguous_cycles(contiguity, mode="exhaustive"):
        order = g.cycle_order()
        triples = contiguous_triples(order, contiguity)
        if triples == [G5_TRIPLE]:
            return order
        if fallback_count is None or len(triples) < fallback_count:
            fallback, fallback_count = order, len(triples)
    if fallback is None:
        raise GraphValidationError("no non-contiguous 9-cycle exists")
    logger.warning(f"No cycle isolates the triple {{2, 6, 9}}; using {fallback}")
    return fallback


@lru_cache(maxsize=None)
def builtin_graph(name: str, seed: int = 0) -> Graph:
    """G1..G7; G6 and G7 are randomized from seed"""
    key = name.lower()
    if key == "g1":
        return rook_contiguity(GRID_3X3)
    if key == "g2":
        return cycle_from_order(G2_ORDER)
    if key == "g3":
        return cycle_from_order(G3_ORDER)
    if key == "g4":
        return cycle_from_order(G4_ORDER)
    if key == "g5":
        return cycle_from_order(g5_order())
    if key == "g6":
        rng = derive_rng(seed, "g6")
        return build_2regular_recursive(GRID_20X20, 4, rook_contiguity(GRID_20X20), rng)
    if key == "g7":
        return build_g7(GRID_20X20, derive_rng(seed, "g7"))
    raise GraphValidationError(f"unknown builtin graph '{name}'")


def parse_grid(text: str) -> GridLayout:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError as e:
        raise GraphValidationError(f"grid spec '{text}' is not RxC") from e
    return GridLayout(rows, cols)


def resolve_graph(spec: str, seed: int = 0) -> Graph:
    """Graph named by a spec string"""
    spec = spec.strip()
    head, _, tail = spec.partition(":")
    head = head.lower()
    if head in {"g1", "g2", "g3", "g4", "g5", "g6", "g7"} and not tail:
        return builtin_graph(head, seed)
    if head == "triangle":
        return build_graph(3, [(1, 2), (2, 3), (1, 3)])
    if head == "cycle" and tail:
        n = int(tail)
        return cycle_from_order(tuple(range(1, n + 1)))
    if head == "grid" and tail:
        return rook_contiguity(parse_grid(tail))
    if head == "complement" and tail:
        return complement_graph(resolve_graph(tail, seed))
    if head == "order" and tail:
        return cycle_from_order(tuple(int(v) for v in tail.split(",")))
    path = Path(spec)
    if path.is_file():
        return from_edge_list_text(path.read_text())
    raise GraphValidationError(f"cannot resolve graph spec '{spec}'")
