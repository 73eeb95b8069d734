from collections import Counter

import numpy as np
import pytest

from gss.core.errors import DesignError, NotEnumerableError
from gss.models.schemas import Calibration, StartMode
from gss.services.builtin_graphs import G2_ORDER, builtin_graph
from gss.services.graph_core import GridLayout
from gss.services.sampling_designs import (
    EpssworGssDesign,
    Lpm1Design,
    SrsworDesign,
    SystematicDesign,
    UnequalGssDesign,
    epsswor_gss,
    gss_sequence,
    lpm1,
    preference_vector,
    sample_space,
    srswor,
    systematic_circular,
)
from gss.services.populations import inclusion_probs
from gss.services.spatial_measures import has_contiguous_pair

EIGHT_PATH = G2_ORDER


def xi_exact(design, contiguity):
    return sum(p for s, p in sample_space(design) if has_contiguous_pair(s.units, contiguity))


def unit_mass(design):
    mass = np.zeros(design.n_units)
    for s, p in sample_space(design):
        for unit in s.units:
            mass[unit - 1] += p
    return mass


class TestSrswor:
    def test_support(self):
        space = sample_space(SrsworDesign(9, 2))
        assert len(space) == 36
        assert all(p == pytest.approx(1 / 36) for _, p in space)

    def test_contiguous_pair_probabilities(self, rook3):
        assert xi_exact(SrsworDesign(9, 2), rook3) == pytest.approx(1 / 3, abs=1e-12)
        assert xi_exact(SrsworDesign(9, 3), rook3) == pytest.approx(62 / 84, abs=1e-12)

    def test_draw(self, rng):
        sample = srswor(9, 4, rng)
        assert len(set(sample.units)) == 4
        with pytest.raises(DesignError):
            srswor(9, 10, rng)

    def test_large_support_not_enumerable(self):
        assert not SrsworDesign(400, 48).enumerable


class TestSystematic:
    def test_eight_path(self, rook3):
        design = SystematicDesign(EIGHT_PATH, 3, path=True)
        space = sample_space(design)
        assert {frozenset(s.units) for s, _ in space} == {
            frozenset({1, 8, 3}),
            frozenset({4, 9, 2}),
            frozenset({7, 6, 5}),
        }
        assert all(p == pytest.approx(1 / 3) for _, p in space)
        assert xi_exact(design, rook3) == pytest.approx(1 / 3)

    def test_circle_nine_two(self):
        space = sample_space(SystematicDesign(tuple(range(1, 10)), 2))
        assert len(space) == 9
        for s, p in space:
            assert p == pytest.approx(1 / 9)
            a, b = s.units
            assert (b - a) % 9 in (4, 5)

    def test_circle_four_two(self):
        space = sample_space(SystematicDesign((1, 2, 3, 4), 2))
        assert sorted(s.units for s, _ in space) == [(1, 3), (2, 4)]
        assert all(p == pytest.approx(0.5) for _, p in space)

    @pytest.mark.parametrize("n_units, n", [(9, 2), (10, 3), (7, 4)])
    def test_equal_inclusion(self, n_units, n):
        design = SystematicDesign(tuple(range(1, n_units + 1)), n)
        np.testing.assert_allclose(unit_mass(design), np.full(n_units, n / n_units), atol=1e-12)

    def test_draw_matches_support(self, rng):
        support = {tuple(sorted(s.units)) for s, _ in sample_space(SystematicDesign(tuple(range(1, 10)), 2))}
        for _ in range(200):
            assert tuple(sorted(systematic_circular(tuple(range(1, 10)), 2, rng).units)) in support

    def test_path_needs_divisor(self):
        with pytest.raises(DesignError):
            SystematicDesign(tuple(range(1, 10)), 2, path=True)

    def test_order_must_be_permutation(self):
        with pytest.raises(DesignError):
            SystematicDesign((1, 1, 2), 1)


class TestPreferenceVector:
    def test_equal_pi_on_cycle(self, g4):
        u, _ = preference_vector(g4, np.full(9, 2 / 9), 2)
        np.testing.assert_allclose(u, np.full(9, 1 / 9))

    def test_rook_equal_pi(self, rook3):
        u, eta = preference_vector(rook3, np.full(9, 2 / 9), 2)
        assert eta == pytest.approx(43 / 108)
        np.testing.assert_allclose(u, 12 / (43 * rook3.degrees()))

    def test_rook_centre_ratio_two(self, rook3):
        u, eta = preference_vector(rook3, inclusion_probs(9, 2, 2.0, 5), 2)
        assert eta == pytest.approx(23 / 60)
        assert u[0] == pytest.approx(3 / 23)
        assert u[1] == pytest.approx(2 / 23)
        assert u[4] == pytest.approx(3 / 23)

    def test_sum_must_match(self, rook3):
        with pytest.raises(DesignError):
            preference_vector(rook3, np.full(9, 0.2), 2)


class TestEpsswor:
    def test_g4_pairs_never_contiguous(self, g4, rook3):
        assert xi_exact(EpssworGssDesign(g4, 2), rook3) == 0.0

    def test_g4_triples(self, g4, rook3):
        design = EpssworGssDesign(g4, 3)
        space = sample_space(design)
        assert len(space) == 9
        contiguous = {frozenset(s.units) for s, _ in space if has_contiguous_pair(s.units, rook3)}
        assert contiguous == {
            frozenset({3, 9, 2}),
            frozenset({9, 2, 8}),
            frozenset({4, 6, 7}),
            frozenset({6, 7, 5}),
        }
        assert xi_exact(design, rook3) == pytest.approx(4 / 9)

    def test_whole_population(self, g4):
        space = sample_space(EpssworGssDesign(g4, 9))
        assert len(space) == 1 and space[0][1] == 1.0

    def test_draw_is_cycle_run(self, g4, rng):
        for _ in range(50):
            units = epsswor_gss(g4, 4, rng).units
            assert all(g4.has_edge(a, b) for a, b in zip(units, units[1:]))

    @pytest.mark.parametrize("name, n", [("g4", 4), ("g6", 16)])
    def test_draw_frequencies_match_inclusion_probabilities(self, name, n):
        design = EpssworGssDesign(builtin_graph(name), n)
        rng = np.random.default_rng(100)
        reps = 100_000
        counts = np.zeros(design.n_units)
        for _ in range(reps):
            counts[np.asarray(design.draw(rng).units) - 1] += 1
        pi = design.inclusion_probabilities()
        sigma = np.sqrt(reps * pi * (1 - pi))
        assert np.all(np.abs(counts - reps * pi) < 5 * sigma)

    def test_needs_cycle(self, rook3):
        with pytest.raises(DesignError):
            EpssworGssDesign(rook3, 2)


class TestUnequalGss:
    def test_noncontiguous_cycle_pairs_never_contiguous(self, rook3):
        g = builtin_graph("g3")
        design = UnequalGssDesign(g, np.full(9, 2 / 9), 2)
        assert xi_exact(design, rook3) == pytest.approx(0.0, abs=1e-15)

    def test_uniform_cycle_matches_epsswor(self, g4):
        gss = UnequalGssDesign(g4, np.full(9, 2 / 9), 2)
        law = Counter()
        for s, p in sample_space(gss):
            law[frozenset(s.units)] += p
        assert len(law) == 9
        assert all(p == pytest.approx(1 / 9, abs=1e-10) for p in law.values())

    def test_support_mass(self, rook3):
        design = UnequalGssDesign(rook3, inclusion_probs(9, 2, 2.0, 5), 3)
        assert sum(p for _, p in sample_space(design)) == pytest.approx(1.0, abs=1e-12)
        assert not design.without_replacement

    def test_inclusion_uses_exact_law(self, rook3):
        design = UnequalGssDesign(rook3, np.full(9, 2 / 9), 2)
        np.testing.assert_allclose(unit_mass(design), design.inclusion_probabilities(), atol=1e-10)

    def test_exact_calibration(self, rook3):
        pi = inclusion_probs(9, 2, 2.0, 5)
        design = UnequalGssDesign(rook3, pi, 2, calibration=Calibration.EXACT)
        np.testing.assert_allclose(design.node_law, pi / 2, atol=1e-9)

    def test_positional_frequencies(self, rook3):
        design = UnequalGssDesign(rook3, np.full(9, 2 / 9), 2)
        rng = np.random.default_rng(12)
        reps = 20_000
        counts = np.zeros(9)
        for _ in range(reps):
            counts[design.draw(rng).units[1] - 1] += 1
        p = design.node_law
        assert np.all(np.abs(counts / reps - p) < 4 * np.sqrt(p * (1 - p) / reps))

    def test_burn_in_design_not_enumerable(self, rook3, rng):
        design = UnequalGssDesign(rook3, np.full(9, 2 / 9), 2, start=StartMode.BURN_IN)
        assert not design.enumerable
        assert len(design.draw(rng).units) == 2
        with pytest.raises(NotEnumerableError):
            design.sample_space()

    def test_sequence_function(self, rook3, rng):
        sample = gss_sequence(rook3, np.full(9, 2 / 9), 5, rng)
        assert sample.size == 5
        assert sample.trace is not None and sample.trace.window == sample.units


class TestLpm1:
    def test_fixed_size(self, rng):
        coords = GridLayout(5, 5).coordinates()
        pi = np.full(25, 0.2)
        for _ in range(200):
            assert len(lpm1(coords, pi, rng).units) == 5

    def test_unequal_pi_keeps_size(self, rng):
        coords = GridLayout(3, 3).coordinates()
        pi = inclusion_probs(9, 2, 2.0, 5)
        for _ in range(200):
            assert len(lpm1(coords, pi, rng).units) == 2

    def test_certainty_units(self, rng):
        coords = GridLayout(2, 2).coordinates()
        units = lpm1(coords, [1.0, 0.5, 0.5, 0.0], rng).units
        assert 1 in units and 4 not in units and len(units) == 2

    @pytest.mark.parametrize("n, target", [(2, 0.116), (3, 0.478)])
    def test_contiguous_selection_rate(self, rook3, n, target):
        design = Lpm1Design(GridLayout(3, 3).coordinates(), np.full(9, n / 9))
        rng = np.random.default_rng(2012 + n)
        reps = 10_000
        hits = sum(has_contiguous_pair(design.draw(rng).units, rook3) for _ in range(reps))
        assert hits / reps == pytest.approx(target, abs=0.02)

    def test_non_integral_total(self):
        with pytest.raises(DesignError):
            Lpm1Design(GridLayout(2, 2).coordinates(), [0.3, 0.3, 0.3, 0.3])

    def test_not_enumerable(self):
        assert not Lpm1Design(GridLayout(2, 2).coordinates(), [0.5] * 4).enumerable
