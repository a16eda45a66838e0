"""Benchmarks, scenario presets, convergence studies, file output, and CLI."""

from .scenarios import SCENARIOS, ScenarioPreset, build_field, get_scenario
from .bench import RandomBenchSpec, recover_bench, sample_primitives
from .convergence import ConvergenceReport, convergence_study
from .fieldio import emit_field, emit_stats, read_field
