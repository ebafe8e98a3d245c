"""Sampling and reconstruction of multiband signals with synchronous multi-rate schemes."""
from .bands import (Band, IndexSets, MultibandSupport, OccupancyReport, expanded_index_sets,
                    support_metrics)
from .design import (AugmentResult, RankReport, SensitivityReport, check_rank, greedy_augment,
                     sensitivity)
from .errors import NumericalError, RankDeficientError, ValidationError
from .music import DataMatrix, MusicResult, assemble_data, estimate_support, music_spectrum
from .reconstruct import (BlockPlan, BlockResult, BoundEvaluator, ErrorBudget, FunctionSource,
                          SampleStore, error_bound, plan_block, reconstruct_block,
                          stream_reconstruct)
from .scenario import Scenario
from .scheme import (PeriodAdjustment, SmrsScheme, build_scheme, consecutive_moduli, is_prime,
                     next_prime, universalize_period)
from .siggen import (Mixture, Signal, SignalSpec, add_noise, gen_exp_sum, gen_psk,
                     gen_sinc_train)
from .solver import (CoefficientVector, FoldedData, FoldedSystem, build_folded_system,
                     fold_samples, solve_coefficients)
from .window import WindowSpec, design_window, eval_window, tail_bound, tail_sum

__all__ = [
    "Band", "IndexSets", "MultibandSupport", "OccupancyReport", "expanded_index_sets",
    "support_metrics", "AugmentResult", "RankReport", "SensitivityReport", "check_rank",
    "greedy_augment", "sensitivity", "NumericalError", "RankDeficientError", "ValidationError",
    "DataMatrix", "MusicResult", "assemble_data", "estimate_support", "music_spectrum",
    "BlockPlan", "BlockResult", "BoundEvaluator", "ErrorBudget", "FunctionSource", "SampleStore",
    "error_bound", "plan_block", "reconstruct_block", "stream_reconstruct", "Scenario",
    "PeriodAdjustment", "SmrsScheme", "build_scheme", "consecutive_moduli", "is_prime",
    "next_prime", "universalize_period", "Mixture", "Signal", "SignalSpec", "add_noise",
    "gen_exp_sum", "gen_psk", "gen_sinc_train", "CoefficientVector", "FoldedData", "FoldedSystem",
    "build_folded_system", "fold_samples", "solve_coefficients", "WindowSpec", "design_window",
    "eval_window", "tail_bound", "tail_sum",
]

__version__ = "0.1.0"
