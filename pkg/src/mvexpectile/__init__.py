"""Multivariate expectiles of heavy-tailed random vectors: exact solutions,
extreme-level limits and sample estimators."""

from .asymptotics import (
    LimitVector,
    TailDependenceModel,
    limit_comonotonic,
    limit_dominant,
    limit_independent,
    solve_limit_system,
)
from .estimation import (
    SampleMatrix,
    TailEstimates,
    extreme_expectile_comonotonic,
    extreme_expectile_independent,
    hill_estimator,
    tail_equivalence_estimates,
    weissman_quantile,
)
from .expectile import Dependence, ExpectileProblem, solve_multivariate_expectile, univariate_expectile
from .margins import MarginSpec, burr, pareto, student
from .rootfind import ConvergenceError

__version__ = "0.1.0"
