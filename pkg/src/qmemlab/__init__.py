"""qmemlab: driven superconducting quantum memristors, end to end.

Simulates the dissipative dynamics of one or two coupled memristive
modes, measures the pinched-hysteresis form factor and two-qubit
concurrence, generates reproducible parameter-sweep datasets, trains
surrogate regressors on the form factor, and searches the surrogate for
configurations of extreme memristivity.
"""

from .data import Dataset, coupled_grid_space, coupled_space, generate, single_space
from .dynamics import IntegratorConfig, Trajectory, evolve, evolve_mean
from .entanglement import concurrence, concurrence_series
from .loops import form_factor, form_factor_target, per_period_metrics
from .ml import SplitSpec, benchmark, make_regressor
from .model import (CircuitParams, DriveParams, InitialStateParams, QMSystem,
                    build_system, coupled_circuit, single_circuit)
from .search import SearchSpec, compare, optimize

__version__ = "0.1.0"

__all__ = [
    "CircuitParams", "Dataset", "DriveParams", "InitialStateParams",
    "IntegratorConfig", "QMSystem", "SearchSpec", "SplitSpec", "Trajectory",
    "benchmark", "build_system", "compare", "concurrence",
    "concurrence_series", "coupled_circuit", "coupled_grid_space",
    "coupled_space", "evolve", "evolve_mean", "form_factor",
    "form_factor_target", "generate", "make_regressor", "optimize",
    "per_period_metrics", "single_circuit", "single_space",
]
