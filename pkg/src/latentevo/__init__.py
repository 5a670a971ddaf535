"""Multi-objective evolutionary search in the latent space of a sequence VAE."""

from .analysis import (BaselineResult, FrontComparison, compare_fronts,
                       distribution_summary, hypervolume, sobol_baseline)
from .config import ConfigError, RunConfig, load_config
from .domain import (PopulationQuality, PropertyTriple, ToyDomain,
                     gen_metrics_sampled, population_metrics)
from .engine import (BreedStats, Candidate, EngineInvariantError, Population,
                     RunResult, breed, initial_subset, merge, read_population,
                     run)
from .evo import (EvoConfig, crossover_discrete, crossover_linear, mutate,
                  tournament_select)
from .pareto import (FrontAssignment, crowded_less, crowding_distance,
                     dominates, nondominated_sort)
from .sobol import SobolSequence
from .vae import (BetaSchedule, LossBreakdown, OptimizerConfig, SequenceVae,
                  beta_at)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult", "BetaSchedule", "BreedStats", "Candidate",
    "ConfigError", "EngineInvariantError", "EvoConfig", "FrontAssignment",
    "FrontComparison", "LossBreakdown", "OptimizerConfig", "Population",
    "PopulationQuality", "PropertyTriple", "RunConfig", "RunResult",
    "SequenceVae", "SobolSequence", "ToyDomain", "beta_at", "breed",
    "compare_fronts", "crossover_discrete", "crossover_linear",
    "crowded_less", "crowding_distance", "distribution_summary", "dominates",
    "gen_metrics_sampled", "hypervolume", "initial_subset", "load_config",
    "merge", "mutate", "nondominated_sort", "population_metrics",
    "read_population", "run", "sobol_baseline", "tournament_select",
]
