"""Flat key = value run configuration with section prefixes.

Sections: ``engine.`` (swarm parameters, keys named exactly after the
EngineConfig fields), ``phylo.`` (instance files and bootstrap settings),
``ga.`` (pipeline parameters), ``runtime.`` (method, evaluator choice,
transport, swarm/rep counts), ``report.`` (output directory, figures).
CLI ``--set key=value`` flags override file values; unknown keys are
rejected by name.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from swarmselect.bpso import EngineConfig, Variant
from swarmselect.core import BinaryPosition
from swarmselect.fitness import FitnessEvaluator, MemoizedEvaluator, PlantedOracle
from swarmselect.ga import GAConfig, PipelineConfig
from swarmselect.phylo.alignment import GeneMatrix, load_gene_matrix
from swarmselect.phylo.evaluate import ExternalTreeEvaluator, PhyloEvaluator


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, str] = {
    "engine.variant": "VersionII",
    "engine.L": "10",
    "engine.I_max": "100",
    "engine.c1": "1",
    "engine.c2": "1",
    "engine.C1": "2.05",
    "engine.C2": "2.05",
    "engine.w_max": "0.9",
    "engine.w_min": "0.4",
    "engine.r_accel_range": "0.1,0.5",
    "engine.r_threshold_range": "0.1,0.5",
    "engine.target_fitness": "95",
    "engine.init_ones_fraction_range": "0.85,1.0",
    "engine.velocity_clamp": "",
    "engine.seed": "0",
    "phylo.alignment": "",
    "phylo.partitions": "",
    "phylo.outgroup": "",
    "phylo.bootstrap": "100",
    "phylo.seed": "0",
    "phylo.p_mode": "percent",
    "phylo.gap_mode": "pairwise",
    "phylo.external_command": "",
    "ga.population": "30",
    "ga.generations": "200",
    "ga.crossover_rate": "0.9",
    "ga.mutation_rate": "",
    "ga.tournament_size": "3",
    "ga.elitism": "1",
    "ga.random_budget": "200",
    "ga.random_removal_range": "2,5",
    "ga.target_fitness": "95",
    "ga.seed": "0",
    "runtime.method": "bpso2",
    "runtime.evaluator": "phylo",
    "runtime.planted_word": "",
    "runtime.noise_amplitude": "0",
    "runtime.oracle_seed": "0",
    "runtime.swarms": "1",
    "runtime.reps": "1",
    "runtime.transport": "local",
    "runtime.port": "0",
    "runtime.workers": "0",
    "runtime.barrier_timeout": "120",
    "runtime.cache": "",
    "report.out_dir": "out",
    "report.figures": "true",
}

_CHOICES = {
    "engine.variant": ("VersionI", "VersionII"),
    "phylo.p_mode": ("percent", "count"),
    "phylo.gap_mode": ("pairwise", "complete"),
    "runtime.method": ("bpso1", "bpso2", "ga"),
    "runtime.evaluator": ("phylo", "planted", "external"),
    "runtime.transport": ("local", "tcp"),
    "report.figures": ("true", "false"),
}


class RunConfig:
    """Validated view over the flat key-value store."""

    def __init__(self, values: dict[str, str] | None = None):
        self.values = dict(DEFAULTS)
        for key, value in (values or {}).items():
            self.set(key, value)

    def set(self, key: str, value: str) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown configuration key: {key}")
        value = value.strip()
        choices = _CHOICES.get(key)
        if choices and value not in choices:
            raise ConfigError(
                f"{key} must be one of {', '.join(choices)}; got {value!r}"
            )
        self.values[key] = value

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        cfg = cls()
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            try:
                cfg.set(key.strip(), value.strip())
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        return cfg

    def apply_overrides(self, pairs: list[str]) -> None:
        for pair in pairs:
            key, eq, value = pair.partition("=")
            if not eq:
                raise ConfigError(f"--set expects key=value, got {pair!r}")
            self.set(key.strip(), value.strip())

    # typed accessors -----------------------------------------------------

    def _int(self, key: str) -> int:
        try:
            return int(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer: {self.values[key]!r}") from exc

    def _float(self, key: str) -> float:
        try:
            return float(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number: {self.values[key]!r}") from exc

    def _interval(self, key: str) -> tuple[float, float]:
        raw = self.values[key]
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"{key} must be 'low,high': {raw!r}")
        try:
            return float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"{key} must be 'low,high': {raw!r}") from exc

    def _bool(self, key: str) -> bool:
        return self.values[key] == "true"

    def get(self, key: str) -> str:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown configuration key: {key}")
        return self.values[key]

    def get_int(self, key: str) -> int:
        return self._int(key)

    def get_float(self, key: str) -> float:
        return self._float(key)

    # section builders ----------------------------------------------------

    def engine_config(self) -> EngineConfig:
        clamp_raw = self.values["engine.velocity_clamp"]
        clamp = None
        if clamp_raw:
            clamp = self._interval("engine.velocity_clamp")
        try:
            return EngineConfig(
                variant=Variant.parse(self.values["engine.variant"]),
                L=self._int("engine.L"),
                I_max=self._int("engine.I_max"),
                c1=self._float("engine.c1"),
                c2=self._float("engine.c2"),
                C1=self._float("engine.C1"),
                C2=self._float("engine.C2"),
                w_max=self._float("engine.w_max"),
                w_min=self._float("engine.w_min"),
                r_accel_range=self._interval("engine.r_accel_range"),
                r_threshold_range=self._interval("engine.r_threshold_range"),
                target_fitness=self._float("engine.target_fitness"),
                init_ones_fraction_range=self._interval("engine.init_ones_fraction_range"),
                velocity_clamp=clamp,
                seed=self._int("engine.seed"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def engine_items(self) -> dict[str, str]:
        return {k: v for k, v in self.values.items() if k.startswith("engine.")}

    def pipeline_config(self) -> PipelineConfig:
        raw_mut = self.values["ga.mutation_rate"]
        lo, hi = self._interval("ga.random_removal_range")
        try:
            return PipelineConfig(
                random_removal_range=(int(lo), int(hi)),
                random_budget=self._int("ga.random_budget"),
                ga=GAConfig(
                    population=self._int("ga.population"),
                    generations=self._int("ga.generations"),
                    crossover_rate=self._float("ga.crossover_rate"),
                    mutation_rate=float(raw_mut) if raw_mut else None,
                    tournament_size=self._int("ga.tournament_size"),
                    elitism=self._int("ga.elitism"),
                ),
                target_fitness=self._float("ga.target_fitness"),
                seed=self._int("ga.seed"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def load_matrix(self) -> GeneMatrix:
        fasta = self.values["phylo.alignment"]
        parts = self.values["phylo.partitions"]
        if not fasta or not parts:
            raise ConfigError(
                "phylo.alignment and phylo.partitions are required for the phylo evaluator"
            )
        outgroup = self.values["phylo.outgroup"] or None
        return load_gene_matrix(fasta, parts, outgroup=outgroup)

    def evaluator_factory(self) -> Callable[[], FitnessEvaluator]:
        """Factory building one fresh (memoized) evaluator per worker."""
        kind = self.values["runtime.evaluator"]
        if kind == "planted":
            word_text = self.values["runtime.planted_word"]
            if not word_text:
                raise ConfigError("runtime.planted_word is required for the planted oracle")
            planted = BinaryPosition.from_text(word_text)
            noise = self._float("runtime.noise_amplitude")
            oracle_seed = self._int("runtime.oracle_seed")

            def make_planted() -> FitnessEvaluator:
                return MemoizedEvaluator(PlantedOracle(planted, noise, oracle_seed))

            return make_planted
        if kind == "external":
            command = self.values["phylo.external_command"]
            if not command:
                raise ConfigError("phylo.external_command is required for runtime.evaluator=external")
            matrix = self.load_matrix()
            p_mode = self.values["phylo.p_mode"]

            def make_external() -> FitnessEvaluator:
                return MemoizedEvaluator(ExternalTreeEvaluator(matrix, command, p_mode))

            return make_external
        matrix = self.load_matrix()
        B = self._int("phylo.bootstrap")
        seed = self._int("phylo.seed")
        p_mode = self.values["phylo.p_mode"]
        gap_mode = self.values["phylo.gap_mode"]

        def make_phylo() -> FitnessEvaluator:
            return MemoizedEvaluator(PhyloEvaluator(matrix, B, seed, p_mode, gap_mode))

        return make_phylo

    def dump(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.values.items()))
