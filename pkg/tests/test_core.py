import numpy as np
import pytest
from hypothesis import given, strategies as st

from swarmselect.core import (
    BinaryPosition,
    FitnessReport,
    VelocityVector,
    combine_fitness,
    ones_count,
    percentage_ones,
)
from swarmselect.fitness import PlantedOracle

from helpers import all_words


class TestBinaryPosition:
    def test_text_round_trip(self):
        w = BinaryPosition.from_text("10110")
        assert w.text == "10110"
        assert list(w.bits) == [1, 0, 1, 1, 0]
        assert BinaryPosition(w.bits) == w

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            BinaryPosition([0, 2, 1])
        with pytest.raises(ValueError):
            BinaryPosition([])
        with pytest.raises(ValueError):
            BinaryPosition.from_text("10a1")
        with pytest.raises(ValueError):
            BinaryPosition.from_text("")

    def test_immutability(self):
        w = BinaryPosition.ones(4)
        with pytest.raises(ValueError):
            w.bits[0] = 0

    def test_hamming_and_flip(self):
        a = BinaryPosition.from_text("1100")
        b = BinaryPosition.from_text("1010")
        assert a.hamming(b) == 2
        assert a.flipped(0).text == "0100"
        with pytest.raises(ValueError):
            a.hamming(BinaryPosition.ones(5))


class TestVelocityVector:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            VelocityVector([0.0, float("nan")])
        with pytest.raises(ValueError):
            VelocityVector([float("inf")])

    def test_equality(self):
        assert VelocityVector([1.0, 2.0]) == VelocityVector([1.0, 2.0])
        assert VelocityVector([1.0]) != VelocityVector([2.0])


class TestOnesCount:
    def test_zero_case(self):
        assert ones_count(BinaryPosition.zeros(82)) == 0

    def test_identity_case(self):
        assert ones_count(BinaryPosition.ones(82)) == 82

    def test_direct_count(self):
        assert ones_count(BinaryPosition.from_text("10110")) == 3


class TestPercentageOnes:
    def test_large_instance_scale(self):
        bits = np.zeros(82, dtype=np.uint8)
        bits[:63] = 1
        assert percentage_ones(BinaryPosition(bits)) == pytest.approx(100 * 63 / 82)

    def test_extremes(self):
        assert percentage_ones(BinaryPosition.ones(7)) == 100.0
        assert percentage_ones(BinaryPosition.zeros(7)) == 0.0


class TestCombineFitness:
    # The three rows of the published per-topology table, count convention.
    @pytest.mark.parametrize(
        "b,p,expected", [(92, 63, 77.5), (89, 30, 59.5), (76, 67, 71.5)]
    )
    def test_table_rows(self, b, p, expected):
        assert combine_fitness(b, p) == expected

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            combine_fitness(-0.1, 50)
        with pytest.raises(ValueError):
            combine_fitness(50, 100.1)

    @given(
        b=st.floats(0, 100),
        p=st.floats(0, 100),
        delta=st.floats(0.001, 10),
    )
    def test_strictly_monotone_in_each_argument(self, b, p, delta):
        f = combine_fitness(b, p)
        if b + delta <= 100:
            assert combine_fitness(b + delta, p) > f
        if p + delta <= 100:
            assert combine_fitness(b, p + delta) > f

    @given(b=st.floats(0, 100), p=st.floats(0, 100))
    def test_bounded_by_components(self, b, p):
        f = combine_fitness(b, p)
        assert min(b, p) - 1e-9 <= f <= max(b, p) + 1e-9


class TestHammingNeighborSmoothness:
    def test_planted_oracle_respects_lipschitz_bound(self):
        n = 8
        oracle = PlantedOracle(BinaryPosition.from_text("11110110"), noise_amplitude=2.0, seed=4)
        bound = oracle.lipschitz_bound
        words = list(all_words(n))
        reports = {w.text: oracle.evaluate(w).fitness for w in words}
        for w in words:
            for j in range(n):
                neighbor = w.flipped(j)
                delta = abs(reports[w.text] - reports[neighbor.text])
                assert delta <= bound + 1e-12


class TestFitnessReport:
    def test_topology_id_empty_when_absent(self):
        r = FitnessReport(b=10.0, p=20.0, fitness=15.0)
        assert r.topology_id == ""
