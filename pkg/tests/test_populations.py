import numpy as np
import pytest
from pydantic import ValidationError

from gss.core.errors import DesignError
from gss.models.schemas import PopulationKind, PopulationSpec, StylizedKind
from gss.services.populations import (
    build_population,
    inclusion_probs,
    sintrend,
    sintrend_values,
    stylized_3x3,
    stylized_grid,
    stylized_population,
)


class TestStylized:
    def test_printed_matrices(self):
        np.testing.assert_array_equal(stylized_3x3("centre"), [[1, 2, 1], [2, 3, 2], [1, 2, 1]])
        np.testing.assert_array_equal(stylized_3x3(StylizedKind.POLAR), [[3, 2, 1], [2, 1, 2], [1, 2, 3]])

    def test_centre_population(self, centre_pop):
        assert centre_pop.n_units == 9
        assert centre_pop.total == pytest.approx(15.0)
        assert centre_pop.n == 2
        np.testing.assert_allclose(centre_pop.pi, np.full(9, 2 / 9))
        assert centre_pop.contiguity.n_edges == 12

    def test_row_major_values(self):
        pop = stylized_population("corner", 3, 2)
        assert pop.y[0] == 3.0 and pop.y[8] == 1.0

    @pytest.mark.parametrize("kind", list(StylizedKind))
    def test_grid_range(self, kind):
        y = stylized_grid(kind, 20)
        assert y.min() == pytest.approx(0.5)
        assert y.max() == pytest.approx(5.0)

    def test_grid_shapes(self):
        centre = stylized_grid("centre", 20)
        assert centre[9, 9] == centre[10, 10] == pytest.approx(5.0)
        assert centre[0, 0] == pytest.approx(0.5)
        corner = stylized_grid("corner", 20)
        assert corner[0, 0] == pytest.approx(5.0)
        assert corner[19, 19] == pytest.approx(0.5)
        polar = stylized_grid("polar", 20)
        assert polar[0, 19] == pytest.approx(0.5)
        assert polar[0, 0] == polar[19, 19] == pytest.approx(5.0)

    def test_custom_range(self):
        y = stylized_grid("vortex", 5, value_range=(1.0, 2.0))
        assert y.min() == pytest.approx(1.0) and y.max() == pytest.approx(2.0)

    def test_invalid(self):
        with pytest.raises(DesignError):
            stylized_grid("spiral", 5)
        with pytest.raises(DesignError):
            stylized_grid("centre", 2)
        with pytest.raises(DesignError):
            stylized_grid("centre", 5, value_range=(2.0, 1.0))


class TestSintrend:
    def test_values(self):
        assert sintrend_values(np.array([[0.5, 0.5]]))[0] == pytest.approx(2.720584501801074)

    def test_population(self):
        pop = sintrend(20, 16)
        assert pop.n_units == 400
        np.testing.assert_allclose(pop.pi, np.full(400, 0.04))
        assert pop.coords.min() > 0 and pop.coords.max() < 1
        assert pop.coords[0] == pytest.approx([0.025, 0.025])


class TestInclusionProbs:
    def test_centre_ratio(self):
        pi = inclusion_probs(9, 2, 2.0, 5)
        assert pi[4] == pytest.approx(0.4)
        np.testing.assert_allclose(np.delete(pi, 4), np.full(8, 0.2))
        assert pi.sum() == pytest.approx(2.0)

    def test_equal(self):
        np.testing.assert_allclose(inclusion_probs(9, 3), np.full(9, 1 / 3))

    def test_errors(self):
        with pytest.raises(DesignError):
            inclusion_probs(9, 2, 2.0)
        with pytest.raises(DesignError):
            inclusion_probs(4, 3, 3.0, 1)
        with pytest.raises(DesignError):
            inclusion_probs(9, 2, 2.0, 10)
        with pytest.raises(DesignError):
            inclusion_probs(9, 0)

    def test_with_pi(self, centre_pop):
        updated = centre_pop.with_pi(inclusion_probs(9, 2, 2.0, 5))
        assert updated.pi[4] == pytest.approx(0.4)
        assert updated.y is centre_pop.y
        with pytest.raises(DesignError):
            centre_pop.with_pi(np.full(9, 0.3))


class TestBuildPopulation:
    def test_stylized_centre_unit_defaults_to_middle(self):
        spec = PopulationSpec(shape="vortex", side=3, n=2, center_ratio=2.0)
        pop = build_population(spec)
        assert pop.name == "vortex"
        assert pop.pi[4] == pytest.approx(0.4)

    def test_sintrend(self):
        pop = build_population(PopulationSpec(kind=PopulationKind.SINTREND, side=4, n=2))
        assert pop.n_units == 16
        assert pop.pi.sum() == pytest.approx(2.0)

    def test_labels(self):
        assert PopulationSpec(shape="centre", n=2).label == "centre-ratio1"
        assert PopulationSpec(id="c", shape="centre", n=2).label == "c"

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            PopulationSpec(n=2)
        with pytest.raises(ValidationError):
            PopulationSpec(shape="centre", side=3, n=10)
        with pytest.raises(ValidationError):
            PopulationSpec(shape="centre", n=2, value_range=[3.0, 1.0])
