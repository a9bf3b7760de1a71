"""Exact and approximate Shapley interaction attributions."""

from survint.interactions.approximators import (
    ApproximationResult, ApproximatorConfig, approx_montecarlo, approx_permutation,
    approx_regression, approximate)
from survint.interactions.exact import (
    discrete_derivative, exact_ksii, exact_sii, ksii_from_moebius, moebius_transform)
from survint.interactions.explanation import build_game, explain, explain_instances

__all__ = (
    'ApproximationResult',
    'ApproximatorConfig',
    'approx_montecarlo',
    'approx_permutation',
    'approx_regression',
    'approximate',
    'discrete_derivative',
    'exact_ksii',
    'exact_sii',
    'ksii_from_moebius',
    'moebius_transform',
    'build_game',
    'explain',
    'explain_instances',
)
