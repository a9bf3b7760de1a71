# -*- coding: utf-8 -*-

"""survint.exceptions module."""


class SurvintError(Exception):
    """Base class of the numerical failures raised by survint."""


class ConvergenceError(SurvintError):
    """Newton-Raphson did not converge or diverged.

    Args:
        message (str):
            Description of the failure.
        trace (list):
            List of ``(iteration, log_likelihood, gradient_norm, beta_norm)`` tuples.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class QuadratureError(SurvintError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NonFiniteError(SurvintError, FloatingPointError):
    """A model evaluation produced ``inf`` or ``nan``."""

    def __init__(self, message, quantity=None):
        super().__init__(message)
        self.quantity = quantity


class RankDeficiencyError(SurvintError):
    """A regression design matrix does not have full column rank."""

    def __init__(self, message, rank, columns):
        super().__init__(message)
        self.rank = rank
        self.columns = columns


class CoalitionEvaluationError(SurvintError):
    """The prediction function failed while evaluating a coalition."""

    def __init__(self, message, coalition):
        super().__init__(message)
        self.coalition = coalition


class MemoryBudgetError(SurvintError, MemoryError):
    """The estimated size of a computation exceeds the memory budget."""

    def __init__(self, message, required, budget):
        super().__init__(message)
        self.required = required
        self.budget = budget


class ConvergenceWarning(UserWarning):
    """Convergence was reached with diagnostics worth a second look."""


class InstabilityWarning(UserWarning):
    """An estimate was computed from an under-determined problem."""
