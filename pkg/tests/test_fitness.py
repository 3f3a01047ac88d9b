import pytest

from swarmselect.core import BinaryPosition, FitnessReport
from swarmselect.fitness import ConstantEvaluator, MemoizedEvaluator, PlantedOracle
from swarmselect.phylo.tree import TopologySignature

from helpers import all_words


class TestPlantedOracle:
    def test_planted_scores_full_support(self):
        oracle = PlantedOracle(BinaryPosition.ones(10))
        assert oracle.evaluate(BinaryPosition.ones(10)).b == 100.0

    def test_complement_scores_zero_support(self):
        oracle = PlantedOracle(BinaryPosition.ones(10))
        r = oracle.evaluate(BinaryPosition.zeros(10))
        assert r.b == 0.0

    def test_three_flips(self):
        oracle = PlantedOracle(BinaryPosition.ones(10))
        w = BinaryPosition.from_text("1110111010")
        assert oracle.evaluate(w).b == pytest.approx(70.0)

    def test_fitness_formula(self):
        oracle = PlantedOracle(BinaryPosition.ones(4))
        r = oracle.evaluate(BinaryPosition.from_text("1100"))
        assert r.p == 50.0
        assert r.b == 50.0
        assert r.fitness == 50.0

    def test_all_ones_planted_unique_maximum(self):
        n = 10
        oracle = PlantedOracle(BinaryPosition.ones(n))
        top = oracle.evaluate(BinaryPosition.ones(n)).fitness
        for w in all_words(n):
            if w.text != "1" * n:
                assert oracle.evaluate(w).fitness < top

    def test_noise_is_pure_per_word(self):
        oracle = PlantedOracle(BinaryPosition.ones(12), noise_amplitude=5.0, seed=3)
        w = BinaryPosition.from_text("101010101010")
        assert oracle.evaluate(w) == oracle.evaluate(w)

    def test_noise_clamped_to_range(self):
        oracle = PlantedOracle(BinaryPosition.ones(6), noise_amplitude=50.0, seed=8)
        for w in all_words(6):
            r = oracle.evaluate(w)
            assert 0.0 <= r.b <= 100.0

    def test_rejects_length_mismatch(self):
        oracle = PlantedOracle(BinaryPosition.ones(5))
        with pytest.raises(ValueError):
            oracle.evaluate(BinaryPosition.ones(6))

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError):
            PlantedOracle(BinaryPosition.ones(3), noise_amplitude=-1.0)


class CountingEvaluator(ConstantEvaluator):
    def __init__(self, n):
        super().__init__(n)
        self.calls = 0

    def evaluate(self, w):
        self.calls += 1
        return super().evaluate(w)


class TestMemoization:
    def test_repeat_word_hits_cache(self):
        inner = CountingEvaluator(6)
        memo = MemoizedEvaluator(inner)
        w = BinaryPosition.from_text("101010")
        memo.evaluate(w)
        memo.evaluate(w)
        assert inner.calls == 1
        assert memo.hits == 1 and memo.misses == 1

    def test_key_is_word_not_count(self):
        inner = CountingEvaluator(4)
        memo = MemoizedEvaluator(inner)
        memo.evaluate(BinaryPosition.from_text("1100"))
        memo.evaluate(BinaryPosition.from_text("0011"))
        assert inner.calls == 2

    def test_transparent_over_any_sequence(self):
        oracle = PlantedOracle(BinaryPosition.ones(8), noise_amplitude=2.0, seed=1)
        memo = MemoizedEvaluator(oracle)
        words = [w for w in all_words(8)][::3] * 2
        plain = [oracle.evaluate(w) for w in words]
        memoized = [memo.evaluate(w) for w in words]
        assert plain == memoized

    def test_cache_round_trip(self, tmp_path):
        oracle = PlantedOracle(BinaryPosition.ones(8), noise_amplitude=1.5, seed=2)
        memo = MemoizedEvaluator(oracle)
        words = [BinaryPosition.from_text(t) for t in ("11111111", "11101111", "00110011")]
        originals = [memo.evaluate(w) for w in words]
        path = tmp_path / "reports.cache"
        memo.save(path)

        reloaded = MemoizedEvaluator.load(path, oracle)
        assert reloaded.misses == 0
        again = [reloaded.evaluate(w) for w in words]
        assert again == originals
        assert reloaded.misses == 0  # everything came from the cache

    def test_cache_file_format(self, tmp_path):
        memo = MemoizedEvaluator(ConstantEvaluator(4, b=25.0))
        memo.evaluate(BinaryPosition.from_text("1010"))
        path = tmp_path / "c.cache"
        memo.save(path)
        line = path.read_text().splitlines()[0]
        assert line == "1010 25.0 25.0 25.0 -"

    def test_cache_preserves_topology_id(self, tmp_path):
        class TopoEval(ConstantEvaluator):
            def evaluate(self, w):
                return FitnessReport(
                    b=1.0, p=2.0, fitness=1.5,
                    topology=TopologySignature.from_id("deadbeef12345678"),
                )
        memo = MemoizedEvaluator(TopoEval(3))
        w = BinaryPosition.from_text("111")
        memo.evaluate(w)
        path = tmp_path / "t.cache"
        memo.save(path)
        reloaded = MemoizedEvaluator.load(path, TopoEval(3))
        assert reloaded.evaluate(w).topology_id == "deadbeef12345678"

    def test_insertion_order_preserved(self, tmp_path):
        memo = MemoizedEvaluator(ConstantEvaluator(2))
        for t in ("10", "01", "11"):
            memo.evaluate(BinaryPosition.from_text(t))
        path = tmp_path / "o.cache"
        memo.save(path)
        words = [line.split(" ")[0] for line in path.read_text().splitlines()]
        assert words == ["10", "01", "11"]

    def test_concurrent_evaluation_safe(self):
        import threading

        oracle = PlantedOracle(BinaryPosition.ones(10), noise_amplitude=2.0, seed=6)
        memo = MemoizedEvaluator(oracle)
        words = [w for w in all_words(10)][:64]
        results: list[list] = [[] for _ in range(8)]

        def hammer(slot):
            for w in words:
                results[slot].append(memo.evaluate(w))

        threads = [threading.Thread(target=hammer, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(r == results[0] for r in results)
        assert memo.misses == len(words)
