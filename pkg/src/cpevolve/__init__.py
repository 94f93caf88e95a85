"""Evolve the critical part of an optimizer with a chat model in the loop.

Two optimizers are provided, each with a swappable critical part: a
fireworks algorithm for the TSP (its explosion, mutation and selection
operators) and a Nesterov/Barzilai-Borwein analytical placer (its step-size
rule). Candidate code is scored in a subprocess sandbox; the evolution loop,
visual diagnostics and a code-similarity analysis sit on top.
"""
from .errors import CPEvolveError
from .fwa import DEFAULT_SUITE, Firework, FwaParams, FwaResult, OperatorSuite, run_fwa
from .llm import ChatRequest, LiveBackend, NullBackend, ReplayBackend
from .orchestrator import Candidate, Pool, RunConfig, build_prompt, evolve, extract_code, greedy_insert, replay_pool
from .placement import (
    OptimizerState,
    PlacementProblem,
    bb_base_step,
    density_penalty,
    run_placement,
    synthetic_problem,
    theta_update,
    wa_wirelength,
    weighted_hpwl,
)
from .sandbox import Outcome, SandboxVerdict, run_step_candidate, run_tsp_candidate
from .similarity import jaccard, similarity_matrix, token_shingles, welch_t_test
from .tsp import (
    TspInstance,
    brute_force_optimum,
    bundled_instance,
    load_instance,
    parse_tsplib,
    relative_gap,
    tour_length,
    tsplib_distance,
)
from .visual import VisualArtifact, convex_hull, count_crossings, hex_bin_counts, render_artifact

__version__ = "0.1.0"

__all__ = [
    "CPEvolveError",
    "DEFAULT_SUITE",
    "Firework",
    "FwaParams",
    "FwaResult",
    "OperatorSuite",
    "run_fwa",
    "ChatRequest",
    "LiveBackend",
    "NullBackend",
    "ReplayBackend",
    "Candidate",
    "Pool",
    "RunConfig",
    "build_prompt",
    "evolve",
    "extract_code",
    "greedy_insert",
    "replay_pool",
    "OptimizerState",
    "PlacementProblem",
    "bb_base_step",
    "density_penalty",
    "run_placement",
    "synthetic_problem",
    "theta_update",
    "wa_wirelength",
    "weighted_hpwl",
    "Outcome",
    "SandboxVerdict",
    "run_step_candidate",
    "run_tsp_candidate",
    "jaccard",
    "similarity_matrix",
    "token_shingles",
    "welch_t_test",
    "TspInstance",
    "brute_force_optimum",
    "bundled_instance",
    "load_instance",
    "parse_tsplib",
    "relative_gap",
    "tour_length",
    "tsplib_distance",
    "VisualArtifact",
    "convex_hull",
    "count_crossings",
    "hex_bin_counts",
    "render_artifact",
]
