"""
Estimators of the population total Y.

Ŷ_W averages y/p over walk states, Ŷ_H scales the tie terms of a window by
the expected tie count, and multi_walk combines independent walks into an
estimate with a between-walk variance.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from loguru import logger

from gss.core.errors import EstimatorError
from gss.models.schemas import EstimateReport, EstimatorKind
from gss.services.lmhw_walker import PairChain, Tie, WalkTrace


def horvitz_thompson(sample: Iterable[int], y: Sequence[float], pi: Sequence[float]) -> float:
    """sum over distinct sampled units of y_i / pi_i"""
    total = 0.0
    for i in sorted(set(sample)):
        p = pi[i - 1]
        if p <= 0:
            raise EstimatorError(f"unit {i} was sampled with inclusion probability {p}")
        total += y[i - 1] / p
    return total


def yhat_w(
    states: Sequence[int], y: Sequence[float], pi: Sequence[float], n: float, form: str = "pi"
) -> float:
    """
    (n/m) sum_j y_{X_j} / pi_{X_j}, repeats counted with multiplicity.

    form selects one of the equivalent expressions: "pi" as above, "p" for
    (1/m) sum y/p with p = pi/n, "counts" for (n/m) sum_h c_h y_h / pi_h over
    visit counts c_h.
    """
    m = len(states)
    if m == 0:
        raise EstimatorError("cannot estimate from an empty sequence")
    if form == "pi":
        return n / m * sum(y[h - 1] / pi[h - 1] for h in states)
    if form == "p":
        return sum(y[h - 1] / (pi[h - 1] / n) for h in states) / m
    if form == "counts":
        counts: Dict[int, int] = {}
        for h in states:
            counts[h] = counts.get(h, 0) + 1
        return n / m * sum(c * y[h - 1] / pi[h - 1] for h, c in counts.items())
    raise EstimatorError(f"unknown Ŷ_W form '{form}'")


def yhat_w_chain(states: Sequence[int], y: Sequence[float], chain: PairChain) -> float:
    """(1/m) sum y/p with p the exact stationary node law of the chain"""
    p = chain.stationary_node
    if len(states) == 0:
        raise EstimatorError("cannot estimate from an empty sequence")
    return sum(y[h - 1] / p[h - 1] for h in states) / len(states)


@dataclass(frozen=True)
class TieQuantities:
    """w = 0 transition probabilities around node h"""

    node: int
    a_h: float
    stay_after_stay: float  # p_(hh)h
    stay_after: Dict[int, float]  # i -> p_(ih)h, i != h
    move: Dict[int, Dict[int, float]]  # i -> j -> p_(ih)j, i, j != h


def tie_transition_quantities(chain: PairChain, h: int) -> TieQuantities:
    """Closed-form transition probabilities at h for a walk without backtracking"""
    g, cfg = chain.graph, chain.config
    if cfg.w != 0:
        raise EstimatorError(f"tie formulas assume w = 0, got w = {cfg.w}")
    u, r = cfg.u, cfg.r
    d = g.degree(h)
    big_d = d + r
    nbrs = g.neighbors(h)
    accept = {j: min(u[j - 1] / u[h - 1], 1.0) for j in nbrs}
    a_h = sum(accept.values())

    stay_after_stay = (r * u[h - 1] + d - a_h) / big_d
    stay_after: Dict[int, float] = {}
    move: Dict[int, Dict[int, float]] = {}
    for i in g.nodes():
        if i == h:
            continue
        if i in accept:
            stay_after[i] = r * u[h - 1] / big_d + d / big_d * (1 - (a_h - accept[i]) / (d - 1))
        else:
            stay_after[i] = r * u[h - 1] / big_d + (d - a_h) / big_d
        row: Dict[int, float] = {}
        for j in g.nodes():
            if j == h:
                continue
            value = r * u[j - 1] / big_d
            if j in accept and i != j:
                if i in accept:
                    value += d / ((d - 1) * big_d) * accept[j]
                else:
                    value += accept[j] / big_d
            row[j] = value
        move[i] = row
    return TieQuantities(
        node=h, a_h=a_h, stay_after_stay=stay_after_stay, stay_after=stay_after, move=move
    )


def tie_probability(chain: PairChain, h: int, order: int) -> float:
    """Stationary probability that a given window span of length order is a tie at h"""
    if order < 1:
        raise EstimatorError(f"tie order must be >= 1, got {order}")
    return _tie_probabilities_at(chain, tie_transition_quantities(chain, h), order)[-1]


def _tie_probabilities_at(chain: PairChain, q: TieQuantities, max_order: int) -> List[float]:
    h = q.node
    others = [i for i in chain.graph.nodes() if i != h]
    probs = [sum(chain.pair_prob(i, h) * (1.0 - q.stay_after[i]) for i in others)]
    entered = sum(chain.pair_prob(i, h) * q.stay_after[i] for i in others)
    for order in range(2, max_order + 1):
        probs.append(entered * q.stay_after_stay ** (order - 2) * (1.0 - q.stay_after_stay))
    return probs


def tie_probability_table(chain: PairChain, max_order: int) -> np.ndarray:
    """max_order x N array; row k-1 holds the order-k tie probability of every node"""
    if max_order < 1:
        raise EstimatorError(f"tie order must be >= 1, got {max_order}")
    columns = [
        _tie_probabilities_at(chain, tie_transition_quantities(chain, h), max_order)
        for h in chain.graph.nodes()
    ]
    return np.array(columns).T


def normalized_tie_probabilities(chain: PairChain, order: int) -> np.ndarray:
    """p̄ over all nodes for one tie order, indexed 0..N-1"""
    raw = tie_probability_table(chain, order)[order - 1]
    total = raw.sum()
    if total <= 0:
        raise EstimatorError(f"no tie of order {order} has positive probability")
    return raw / total


def tie_span(m: int, use_boundaries: bool = False) -> int:
    """Window positions a tie may occupy: 2..m-1, or 1..m with boundaries"""
    return m if use_boundaries else max(m - 2, 0)


def expected_tie_count(chain: PairChain, span: int) -> float:
    """E[n_m]: sum over orders k of (span - k + 1) times the total order-k tie probability"""
    if span < 1:
        return 0.0
    return _span_weighted(tie_probability_table(chain, span).sum(axis=1))


def _span_weighted(totals: np.ndarray) -> float:
    span = len(totals)
    return float(sum((span - k + 1) * t for k, t in enumerate(totals, start=1)))


def yhat_h(
    ties: Sequence[Tie],
    y: Sequence[float],
    chain: PairChain,
    span: Optional[int] = None,
    form: str = "expected",
) -> float:
    """
    Tie-based estimate sum_ties y_h / p̄ scaled by a tie count, where p̄ is
    the tie probability of h normalized over nodes within the tie's order.

    form="expected" divides by E[n_m] over a window of `span` tie positions
    and is unbiased for every window length; a window without ties
    estimates 0. form="observed" divides by the observed n_m; it is
    conditionally unbiased only when at most one tie fits and needs a tie.
    """
    if form == "observed":
        if not ties:
            raise EstimatorError("Ŷ_H needs at least one tie in the window")
        table = tie_probability_table(chain, max(t.order for t in ties))
        totals = table.sum(axis=1)
        scale = float(len(ties))
    elif form == "expected":
        if span is None or span < 1:
            raise EstimatorError(f"expected-count Ŷ_H needs a positive tie span, got {span}")
        if any(t.order > span for t in ties):
            raise EstimatorError(f"tie longer than the span of {span} positions")
        table = tie_probability_table(chain, span)
        totals = table.sum(axis=1)
        scale = _span_weighted(totals)
        if scale <= 0:
            raise EstimatorError("no tie can occur in this window; set a small r > 0")
        if not ties:
            return 0.0
    else:
        raise EstimatorError(f"unknown Ŷ_H form '{form}'")

    total = 0.0
    for tie in ties:
        order_total = totals[tie.order - 1]
        p_bar = table[tie.order - 1, tie.node - 1] / order_total if order_total > 0 else 0.0
        if p_bar <= 0:
            raise EstimatorError(
                f"tie of order {tie.order} at node {tie.node} has zero probability; "
                "set a small r > 0"
            )
        total += y[tie.node - 1] / p_bar
    return total / scale


def multi_walk(
    traces: Sequence[WalkTrace], y: Sequence[float], pi: Sequence[float], n: float
) -> EstimateReport:
    """Mean of per-walk Ŷ_W with the between-walk variance of that mean"""
    if len(traces) < 2:
        raise EstimatorError(f"multi-walk estimation needs >= 2 walks, got {len(traces)}")
    estimates = np.array([yhat_w(t.window, y, pi, n) for t in traces])
    k = len(estimates)
    variance = float(np.var(estimates, ddof=1) / k)
    logger.debug(f"Multi-walk estimate from {k} walks, variance {variance:.4g}")
    return EstimateReport(
        estimate=float(np.mean(estimates)),
        estimator=EstimatorKind.YHAT_W,
        variance_estimate=variance,
        n_walks=k,
        m=traces[0].m,
    )


def estimate(
    kind: EstimatorKind,
    units: Sequence[int],
    y: Sequence[float],
    pi: Sequence[float],
    n: float,
    chain: Optional[PairChain] = None,
    ties: Optional[List[Tie]] = None,
    span: Optional[int] = None,
) -> float:
    """Dispatch used by the harness"""
    if kind == EstimatorKind.HORVITZ_THOMPSON:
        return horvitz_thompson(units, y, pi)
    if kind == EstimatorKind.YHAT_W:
        return yhat_w(units, y, pi, n)
    if kind == EstimatorKind.YHAT_W_CHAIN:
        if chain is None:
            raise EstimatorError("chain-based Ŷ_W needs the pair chain")
        return yhat_w_chain(units, y, chain)
    if kind == EstimatorKind.YHAT_H:
        if chain is None or ties is None:
            raise EstimatorError("Ŷ_H needs the pair chain and the window ties")
        return yhat_h(ties, y, chain, span=span)
    raise EstimatorError(f"unknown estimator {kind}")
