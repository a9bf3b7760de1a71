# -*- coding: utf-8 -*-

"""survint.benchmark module.

Approximation error against the exact k-SII as a function of the evaluation budget.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from survint.core import PredictionTarget, build_time_grid, derived_seed
from survint.games import MarginalImputer
from survint.interactions.approximators import METHODS, ApproximatorConfig
from survint.interactions.explanation import build_game, explain
from survint.metrics import approximation_error
from survint.simulation import (
    T_MAX, build_scenario, extend_with_inert_features, sample_features, scenario_sampler)

LOGGER = logging.getLogger(__name__)

RESULT_COLUMNS = ['method', 'budget', 'run', 'mse']
DEFAULT_BUDGETS = (64, 128, 256, 512)
FULL_BUDGET_TOLERANCE = 1e-8


def benchmark_game(scenario=8, inert_features=7, target=PredictionTarget.HAZARD,
                   timepoints=41, background_size=100, seed=0, t_max=T_MAX,
                   integration='quadrature'):
    """Game of one sampled instance of a scenario extended with inert features.

    Inert features enter no term of the risk score, so their attributions are zero.

    Returns:
        SurvivalGame
    """
    model = extend_with_inert_features(build_scenario(scenario), inert_features)
    sampler = scenario_sampler(scenario, seed=seed, n_features=model.n_features)
    X = sample_features(sampler, background_size + 1)
    grid = build_time_grid(t_max, timepoints)
    game = build_game(model, X[0], MarginalImputer(X[1:]), grid, target, integration)
    LOGGER.info('Benchmark game on %s features, %s timepoints', model.n_features, timepoints)
    return game


def run_benchmark(game, order=3, budgets=DEFAULT_BUDGETS, repetitions=30, methods=METHODS,
                  seed=0, threads=1):
    """Approximate the game ``repetitions`` times per method and budget.

    Repetition ``r`` of every method and budget uses the seed derived from ``(seed, r)``.

    Args:
        game (SurvivalGame):
            Game with at most 16 features.
        order (int):
            Explanation order.
        budgets (sequence):
            Evaluation budgets, each at most ``2^p``.
        repetitions (int):
            Runs per method and budget.
        methods (sequence):
            Approximation methods.
        seed (int):
            Base seed.
        threads (int):
            Worker threads over the runs.

    Returns:
        tuple:
            ``(results, exact, unstable)``: the ``method,budget,run,mse`` table, the exact
            explanation and the ``(method, budget)`` pairs flagged unstable.
    """
    p = game.n_features
    for budget in budgets:
        if budget > 1 << p:
            raise ValueError('Budget {} exceeds the 2^{} coalitions'.format(budget, p))

    exact = explain(game, order, threads=threads)
    tasks = [
        (method, int(budget), run)
        for method in methods
        for budget in budgets
        for run in range(repetitions)
    ]

    def evaluate(task):
        method, budget, run = task
        config = ApproximatorConfig(method, budget, seed=derived_seed(seed, run))
        approx, result = explain(game, order, method, config, return_result=True)
        return approximation_error(approx, exact), result.unstable

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = list(executor.map(evaluate, tasks))
    else:
        outcomes = [evaluate(task) for task in tasks]

    results = pd.DataFrame(
        [task + (mse, ) for task, (mse, _) in zip(tasks, outcomes)], columns=RESULT_COLUMNS)
    unstable = sorted({task[:2] for task, (_, flag) in zip(tasks, outcomes) if flag})
    LOGGER.info('Benchmarked %s runs, %s unstable method/budget pairs', len(tasks),
                len(unstable))
    return results, exact, unstable


def full_budget_errors(game, order, exact, methods=METHODS, seed=0):
    """Approximation error of every method when the budget covers all ``2^p`` coalitions."""
    budget = 1 << game.n_features
    errors = {}
    for method in methods:
        config = ApproximatorConfig(method, budget, seed=seed)
        errors[method] = approximation_error(explain(game, order, method, config), exact)

    return errors


def summarize(results, unstable, basis_size=None, full_errors=None):
    """Median errors and the budget trend checks of a benchmark.

    Returns:
        dict:
            ``medians`` per method and budget, ``regression_monotone`` above the second
            smallest budget, ``regression_best`` at the largest budget, the ``unstable``
            pairs and, when given, the full budget errors.
    """
    medians = results.groupby(['method', 'budget'])['mse'].median().unstack('method')
    summary = {
        'medians': {
            method: {int(budget): float(value) for budget, value in medians[method].items()}
            for method in medians.columns
        },
        'unstable': [[method, int(budget)] for method, budget in unstable],
        'basis_size': basis_size,
    }

    if 'regression' in medians.columns:
        regression = medians['regression'].to_numpy()
        summary['regression_monotone'] = bool(np.all(np.diff(regression[1:]) <= 0))
        last = medians.iloc[-1]
        summary['regression_best'] = bool(last['regression'] <= last.min())

    if full_errors is not None:
        summary['full_budget_errors'] = full_errors
        summary['full_budget_exact'] = bool(
            all(error < FULL_BUDGET_TOLERANCE for error in full_errors.values()))

    return summary
