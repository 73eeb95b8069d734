"""
Designed graphs for graph spatial sampling.

Node ids are 1..N. Grids use row-major numbering: (row, col) with 1-based
row and column maps to (row - 1) * cols + col.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from gss.core.config import settings
from gss.core.errors import ConstructionError, GraphValidationError


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 1..n_nodes"""

    n_nodes: int
    adjacency: Tuple[Tuple[int, ...], ...]  # adjacency[0] is unused padding

    def neighbors(self, node: int) -> Tuple[int, ...]:
        return self.adjacency[node]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def degrees(self) -> np.ndarray:
        """Degrees as a float array indexed 0..N-1 for nodes 1..N"""
        return np.array([len(self.adjacency[i]) for i in self.nodes()], dtype=float)

    def nodes(self) -> range:
        return range(1, self.n_nodes + 1)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._neighbor_sets[i]

    def edges(self) -> Iterator[Tuple[int, int]]:
        for i in self.nodes():
            for j in self.adjacency[i]:
                if i < j:
                    yield (i, j)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    @property
    def min_degree(self) -> int:
        return min((len(self.adjacency[i]) for i in self.nodes()), default=0)

    @property
    def walkable(self) -> bool:
        """Every node has degree >= 2, as the walker requires"""
        return self.n_nodes > 0 and self.min_degree >= 2

    def is_regular(self, k: int) -> bool:
        return all(len(self.adjacency[i]) == k for i in self.nodes())

    def is_connected(self) -> bool:
        if self.n_nodes == 0:
            return False
        return nx.is_connected(self.to_networkx())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes())
        g.add_edges_from(self.edges())
        return g

    def adjacency_matrix(self) -> np.ndarray:
        """Dense 0/1 matrix indexed 0..N-1"""
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int8)
        for i, j in self.edges():
            a[i - 1, j - 1] = 1
            a[j - 1, i - 1] = 1
        return a

    def cycle_order(self) -> Tuple[int, ...]:
        """Node order of a connected 2-regular graph, from node 1 towards its smaller neighbor"""
        if self.n_nodes < 3 or not self.is_regular(2) or not self.is_connected():
            raise GraphValidationError("cycle_order needs a connected 2-regular graph")
        order = [1, min(self.adjacency[1])]
        while len(order) < self.n_nodes:
            prev, cur = order[-2], order[-1]
            a, b = self.adjacency[cur]
            order.append(b if a == prev else a)
        return tuple(order)

    @property
    def _neighbor_sets(self) -> Tuple[FrozenSet[int], ...]:
        cached = self.__dict__.get("_sets")
        if cached is None:
            cached = tuple(frozenset(a) for a in self.adjacency)
            object.__setattr__(self, "_sets", cached)
        return cached


@dataclass(frozen=True)
class GridLayout:
    """rows x cols lattice with row-major node ids"""

    rows: int
    cols: int

    @property
    def n_nodes(self) -> int:
        return self.rows * self.cols

    def id_of(self, row: int, col: int) -> int:
        if not (1 <= row <= self.rows and 1 <= col <= self.cols):
            raise GraphValidationError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return (row - 1) * self.cols + col

    def position_of(self, node: int) -> Tuple[int, int]:
        if not 1 <= node <= self.n_nodes:
            raise GraphValidationError(f"node {node} outside 1..{self.n_nodes}")
        return (node - 1) // self.cols + 1, (node - 1) % self.cols + 1

    def coordinates(self) -> np.ndarray:
        """(row, col) per node as an N x 2 float array"""
        return np.array([self.position_of(i) for i in range(1, self.n_nodes + 1)], dtype=float)


@dataclass(frozen=True)
class RecursivePartition:
    """Recursive quadrant labelling of a grid into parts_per_side**2 parts"""

    layout: GridLayout
    parts_per_side: int
    part_of: Dict[int, int]  # node -> part label 0..P^2-1
    cell_of: Dict[int, int]  # node -> position label inside its part
    order: Tuple[int, ...]  # nodes grouped by part label

    @property
    def n_parts(self) -> int:
        return self.parts_per_side ** 2

    def members(self, part: int) -> List[int]:
        return [v for v in self.order if self.part_of[v] == part]

    def cell_classes(self) -> List[List[int]]:
        """Nodes sharing a within-part position, listed in part-label order"""
        n_cells = (self.layout.rows // self.parts_per_side) * (self.layout.cols // self.parts_per_side)
        classes: List[List[int]] = [[] for _ in range(n_cells)]
        for v in self.order:
            classes[self.cell_of[v]].append(v)
        return classes


def build_graph(n_nodes: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    """Validated simple graph; duplicate edges collapse"""
    if n_nodes < 1:
        raise GraphValidationError(f"n_nodes must be positive, got {n_nodes}")
    neighbor_sets: List[set] = [set() for _ in range(n_nodes + 1)]
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise GraphValidationError(f"loop edge ({i}, {j}) not allowed")
        for v in (i, j):
            if not 1 <= v <= n_nodes:
                raise GraphValidationError(f"node id {v} outside 1..{n_nodes}")
        neighbor_sets[i].add(j)
        neighbor_sets[j].add(i)
    adjacency = tuple(tuple(sorted(s)) for s in neighbor_sets)
    return Graph(n_nodes=n_nodes, adjacency=adjacency)


def rook_contiguity(layout: GridLayout) -> Graph:
    """Cells sharing a grid edge are adjacent"""
    edges = []
    for row in range(1, layout.rows + 1):
        for col in range(1, layout.cols + 1):
            v = layout.id_of(row, col)
            if col < layout.cols:
                edges.append((v, layout.id_of(row, col + 1)))
            if row < layout.rows:
                edges.append((v, layout.id_of(row + 1, col)))
    return build_graph(layout.n_nodes, edges)


def cycle_from_order(order: Sequence[int]) -> Graph:
    """2-regular graph whose single cycle visits nodes in the given order"""
    n = len(order)
    if n < 3:
        raise GraphValidationError(f"a cycle needs at least 3 nodes, got {n}")
    if sorted(order) != list(range(1, n + 1)):
        raise GraphValidationError("cycle order must be a permutation of 1..N")
    return build_graph(n, ((order[k], order[(k + 1) % n]) for k in range(n)))


def complement_graph(g: Graph) -> Graph:
    """Edge (i, j) present iff absent in g, i != j"""
    edges = (
        (i, j)
        for i in g.nodes()
        for j in range(i + 1, g.n_nodes + 1)
        if not g.has_edge(i, j)
    )
    return build_graph(g.n_nodes, edges)


def is_noncontiguous_wrt(g: Graph, contiguity: Graph) -> bool:
    """True iff no edge of g joins two contiguous units"""
    if g.n_nodes != contiguity.n_nodes:
        raise GraphValidationError(
            f"node count mismatch: {g.n_nodes} vs {contiguity.n_nodes}"
        )
    return not any(contiguity.has_edge(i, j) for i, j in g.edges())


def _quadrant_labels(n: int) -> Dict[Tuple[int, int], int]:
    """Recursive 2x2 quadrant labels for an n x n array of blocks (TL, TR, BL, BR)"""
    labels: Dict[Tuple[int, int], int] = {}

    def visit(r0: int, r1: int, c0: int, c1: int) -> None:
        if r1 - r0 == 1 and c1 - c0 == 1:
            labels[(r0, c0)] = len(labels)
            return
        rm = r0 + (r1 - r0 + 1) // 2
        cm = c0 + (c1 - c0 + 1) // 2
        for rr0, rr1 in ((r0, rm), (rm, r1)):
            for cc0, cc1 in ((c0, cm), (cm, c1)):
                if rr1 > rr0 and cc1 > cc0:
                    visit(rr0, rr1, cc0, cc1)

    visit(0, n, 0, n)
    return labels


def _rect_labels(rows: int, cols: int) -> Dict[Tuple[int, int], int]:
    if rows == cols:
        return _quadrant_labels(rows)
    return {(r, c): r * cols + c for r in range(rows) for c in range(cols)}


def recursive_partition_order(layout: GridLayout, parts_per_side: int) -> RecursivePartition:
    """Label every node with its part (recursive quadrants) and its cell inside the part"""
    p = parts_per_side
    if p < 1 or layout.rows % p or layout.cols % p:
        raise GraphValidationError(
            f"{layout.rows}x{layout.cols} grid is not divisible into {p} parts per side"
        )
    ph, pw = layout.rows // p, layout.cols // p
    part_labels = _quadrant_labels(p)
    cell_labels = _rect_labels(ph, pw)

    part_of: Dict[int, int] = {}
    cell_of: Dict[int, int] = {}
    for row in range(1, layout.rows + 1):
        for col in range(1, layout.cols + 1):
            v = layout.id_of(row, col)
            part_of[v] = part_labels[((row - 1) // ph, (col - 1) // pw)]
            cell_of[v] = cell_labels[((row - 1) % ph, (col - 1) % pw)]
    order = tuple(sorted(part_of, key=lambda v: (part_of[v], cell_of[v])))
    return RecursivePartition(
        layout=layout, parts_per_side=p, part_of=part_of, cell_of=cell_of, order=order
    )


def _reflection_paired_parts(parts_per_side: int, rng: np.random.Generator) -> List[int]:
    """Part labels with each part next to its point reflection; pair order and orientation random"""
    p = parts_per_side
    labels = _quadrant_labels(p)
    pairs: List[Tuple[int, ...]] = []
    seen: set = set()
    for (i, j), label in sorted(labels.items(), key=lambda item: item[1]):
        if label in seen:
            continue
        mirror = labels[(p - 1 - i, p - 1 - j)]
        seen.update((label, mirror))
        pair = (label,) if mirror == label else (label, mirror)
        pairs.append(pair[::-1] if rng.random() < 0.5 else pair)
    rng.shuffle(pairs)
    return [label for pair in pairs for label in pair]


def build_2regular_recursive(
    layout: GridLayout,
    parts_per_side: int,
    contiguity: Graph,
    rng: np.random.Generator,
) -> Graph:
    """
    Non-contiguous Hamiltonian cycle from a recursive partition.

    Units sharing a position inside their part form a class. Every class
    visits the parts in one shared order, so any run of n_parts consecutive
    nodes holds exactly one unit per part. The shared order lists each part
    next to its point reflection, which balances the runs that straddle two
    classes. Consecutive classes are linked end to start, and the last class
    closes back onto the first.
    """
    partition = recursive_partition_order(layout, parts_per_side)
    ph, pw = layout.rows // parts_per_side, layout.cols // parts_per_side
    if parts_per_side < 2 or ph < 2 or pw < 2:
        raise GraphValidationError(
            f"parts of {ph}x{pw} cells ({parts_per_side} per side) are too small "
            "to keep same-position units apart"
        )
    classes = partition.cell_classes()  # classes[cell][part]

    max_retries = settings.CONSTRUCTION_MAX_RETRIES
    for attempt in range(1, max_retries + 1):
        parts = _reflection_paired_parts(parts_per_side, rng)
        order = [members[part] for members in classes for part in parts]
        closed = order + order[:1]
        if not any(contiguity.has_edge(a, b) for a, b in zip(closed, closed[1:])):
            logger.debug(f"Recursive 2-regular graph built after {attempt} attempt(s)")
            return cycle_from_order(order)
    raise ConstructionError("recursive 2-regular construction dead end", retries=max_retries)


def build_g7(layout: GridLayout, rng: np.random.Generator) -> Graph:
    """
    Point-reflection graph on an even square grid.

    (r1, r2) is adjacent to (L+1-r1, L+1-r2); top-left units are matched to
    bottom-left units and top-right to bottom-right. The second matching is
    drawn so that the whole graph is one cycle.
    """
    size = layout.rows
    if layout.rows != layout.cols or size % 2 or size < 4:
        raise GraphValidationError("build_g7 needs an even square grid")
    half = size // 2

    def reflect(v: int) -> int:
        row, col = layout.position_of(v)
        return layout.id_of(size + 1 - row, size + 1 - col)

    top_left = [layout.id_of(r, c) for r in range(1, half + 1) for c in range(1, half + 1)]
    bottom_left = [layout.id_of(r, c) for r in range(half + 1, size + 1) for c in range(1, half + 1)]

    # first matching: top-left -> bottom-left, uniformly at random
    matched = rng.permutation(len(bottom_left))
    m1 = {a: bottom_left[int(k)] for a, k in zip(top_left, matched)}

    # a random cyclic order of top-left fixes the top-right -> bottom-right matching
    cyc = [top_left[int(k)] for k in rng.permutation(len(top_left))]
    successor = {cyc[k]: cyc[(k + 1) % len(cyc)] for k in range(len(cyc))}
    m2 = {reflect(m1[a]): reflect(successor[a]) for a in top_left}

    edges = [(v, reflect(v)) for v in layout_nodes(layout) if v < reflect(v)]
    edges += list(m1.items()) + list(m2.items())
    g = build_graph(layout.n_nodes, edges)
    logger.debug(f"G7 built on {size}x{size} grid with {g.n_edges} edges")
    return g


def layout_nodes(layout: GridLayout) -> range:
    return range(1, layout.n_nodes + 1)


def canonical_cycle(order: Sequence[int]) -> Tuple[int, ...]:
    """Lexicographically smallest rotation or reflection of a cycle order"""
    n = len(order)
    best: Optional[Tuple[int, ...]] = None
    for seq in (list(order), list(reversed(order))):
        for k in range(n):
            candidate = tuple(seq[k:] + seq[:k])
            if best is None or candidate < best:
                best = candidate
    assert best is not None
    return best


def _exhaustive_cycles(contiguity: Graph) -> Iterator[Tuple[int, ...]]:
    n = contiguity.n_nodes
    allowed = [
        [j for j in range(1, n + 1) if j != i and not contiguity.has_edge(i, j)] if i else []
        for i in range(n + 1)
    ]
    path = [1]
    used = [False] * (n + 1)
    used[1] = True

    def extend() -> Iterator[Tuple[int, ...]]:
        if len(path) == n:
            # path[1] < path[-1] keeps one of the two directions
            if path[1] < path[-1] and not contiguity.has_edge(path[-1], 1):
                yield tuple(path)
            return
        for j in allowed[path[-1]]:
            if not used[j]:
                used[j] = True
                path.append(j)
                yield from extend()
                path.pop()
                used[j] = False

    if n >= 3:
        yield from extend()


def _sampled_cycles(contiguity: Graph, rng: np.random.Generator) -> Iterator[Tuple[int, ...]]:
    n = contiguity.n_nodes
    a = contiguity.adjacency_matrix().astype(bool)
    seen = set()
    misses = 0
    max_misses = settings.CONSTRUCTION_MAX_RETRIES * 100
    while misses < max_misses:
        perm = rng.permutation(n)
        if a[perm, np.roll(perm, -1)].any():
            misses += 1
            continue
        key = canonical_cycle([int(v) + 1 for v in perm])
        if key in seen:
            misses += 1
            continue
        seen.add(key)
        misses = 0
        yield key
    logger.info(f"Sampled cycle stream exhausted after {len(seen)} distinct cycles")


def enumerate_noncontiguous_cycles(
    contiguity: Graph,
    limit: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    mode: str = "auto",
) -> Iterator[Graph]:
    """
    Distinct Hamiltonian cycles avoiding every contiguous pair.

    Exhaustive mode (N <= ENUMERATION_MAX_NODES) yields each qualifying cycle
    exactly once, in canonical DFS order from node 1; sampled mode draws
    uniform random qualifying cycles and drops repeats.
    """
    if mode == "auto":
        mode = "exhaustive" if contiguity.n_nodes <= settings.ENUMERATION_MAX_NODES else "sampled"
    if mode == "exhaustive":
        if contiguity.n_nodes > settings.ENUMERATION_MAX_NODES:
            raise GraphValidationError(
                f"exhaustive enumeration limited to N <= {settings.ENUMERATION_MAX_NODES}"
            )
        orders = _exhaustive_cycles(contiguity)
    elif mode == "sampled":
        if rng is None:
            raise GraphValidationError("sampled cycle enumeration needs an rng")
        if contiguity.n_nodes < 3:
            return
        orders = _sampled_cycles(contiguity, rng)
    else:
        raise GraphValidationError(f"unknown enumeration mode '{mode}'")

    for count, order in enumerate(orders, start=1):
        yield cycle_from_order(order)
        if limit is not None and count >= limit:
            return


def to_edge_list_text(g: Graph) -> str:
    """Exchange format: 'N' then one 'i j' line per edge, i < j"""
    lines = [str(g.n_nodes)] + [f"{i} {j}" for i, j in g.edges()]
    return "\n".join(lines) + "\n"


def from_edge_list_text(text: str) -> Graph:
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if not rows or len(rows[0]) != 1:
        raise GraphValidationError("edge list must start with a line holding N")
    try:
        n = int(rows[0][0])
        edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
    except (ValueError, IndexError) as e:
        raise GraphValidationError(f"malformed edge list: {e}") from e
    return build_graph(n, edges)
