"""Robust process-parameter optimization on a separable reduced-order surrogate.

Pipeline: fit (or load) a surrogate whose outputs are weighted sums of
products of one-dimensional factors, define a stochastic tracking cost under
truncated input uncertainty, optimize the controllable parameters with
restarted Bayesian optimization, select the candidate with the smallest
99th-percentile cost, benchmark against a Nelder-Mead baseline, and emit
Monte-Carlo percentile bands of the controlled distance along the line.
"""

__version__ = "0.1.0"

from .als import AlsFit, default_grids, fit_als, fit_rom
from .errors import (ConfigError, DomainError, EmptyDatasetError,
                     EmptyInputError, ExtrapolationError, FormatError,
                     IllConditionedError, RomoptError, SingularSolveError,
                     UnknownOutputError)
from .gp import (GpModel, expected_improvement, expected_improvement_values,
                 fit_gp, make_gp, posterior)
from .objective import (CostSpec, GaugedGeometry, auto_setpoint, cost,
                        cost_batch, gauged_distance, gauged_distance_batch,
                        gauged_distance_grid, stochastic_cost)
from .optimizers import (BoOptions, BoResult, NmOptions, NmResult,
                         bayes_optimize, nelder_mead, propose_next)
from .parameter_space import (ParameterSpace, ParameterSpec, default_space)
from .pipeline import (CandidateEvaluation, PercentileBands, Problem,
                       RestartOutcome, default_trajectory_positions,
                       make_problem, mc_evaluate, percentile,
                       quantile_summary, run_restarts, select_best,
                       simplex_representative, trajectory_bands)
from .plant import PLANT_OUTPUTS, PLANT_V1, PlantSpec, generate_dataset, plant_eval
from .rom import (Factor, RomModel, Term, TrainingDataset, evaluate,
                  evaluate_batch, evaluate_grid, read_dataset_csv,
                  write_dataset_csv)
from .rom import load as load_rom
from .rom import save as save_rom
from .streams import RandomStream
from .uncertainty import (DistributionSpec, default_distributions,
                          sample_uncertain, sample_uncertain_for_seeds,
                          truncated_cdf, truncated_ppf)
