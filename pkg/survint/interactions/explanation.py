# -*- coding: utf-8 -*-

"""survint.interactions.explanation module."""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from survint.core import InteractionExplanation, PredictionTarget
from survint.games import SurvivalGame, evaluate_all_coalitions, make_predictor
from survint.interactions.approximators import ApproximatorConfig, approximate
from survint.interactions.exact import exact_ksii

LOGGER = logging.getLogger(__name__)


def build_game(model, instance, imputer, grid, target, integration='quadrature',
               predictor=None):
    """Build the ``SurvivalGame`` of one instance, reusing ``predictor`` when given."""
    target = PredictionTarget.parse(target)
    if predictor is None:
        predictor = make_predictor(model, target, integration)

    return SurvivalGame(predictor, instance, imputer, grid, target=target)


def explain(game, order, method='exact', config=None, threads=1, target=None,
            return_result=False):
    """Explain one game with k-SII attribution curves.

    Args:
        game (SurvivalGame):
            Game of the explained instance.
        order (int):
            Explanation order ``k``.
        method (str):
            ``exact`` or an approximation method name.
        config (ApproximatorConfig):
            Budget and seed of the approximation, required unless ``method`` is ``exact``.
        threads (int):
            Worker threads of the exact table evaluation.
        target (PredictionTarget):
            Overrides the target recorded in the game.
        return_result (bool):
            Also return the ``ApproximationResult`` of approximate explanations.

    Returns:
        InteractionExplanation
    """
    target = target if target is not None else game.target
    if target is None:
        raise ValueError('The prediction target is unknown; pass target=')

    if method == 'exact':
        table = evaluate_all_coalitions(game, threads=threads)
        values = exact_ksii(table, order)
        result = None
    else:
        if config is None:
            raise ValueError('Approximate explanations need an ApproximatorConfig')

        if not isinstance(config, ApproximatorConfig):
            raise ValueError('config must be an ApproximatorConfig')

        result = approximate(game, order, config)
        values = result.values
        LOGGER.debug('%s approximation used %s evaluations', config.method, result.evaluations)

    explanation = InteractionExplanation(order, target, game.grid, game.baseline, values)
    if return_result:
        return explanation, result

    return explanation


def explain_instances(model, instances, imputer, grid, order, target, method='exact',
                      config=None, integration='quadrature', threads=1):
    """Explain many instances against one reference distribution.

    All games share one cached predictor, so the reference block is predicted once.

    Returns:
        list:
            ``(InteractionExplanation, prediction)`` pairs, ``prediction`` being
            ``F(t|x)`` on the grid.
    """
    instances = np.atleast_2d(np.asarray(instances, dtype=float))
    target = PredictionTarget.parse(target)
    predictor = make_predictor(model, target, integration)

    def run(instance):
        game = build_game(model, instance, imputer, grid, target, predictor=predictor)
        return explain(game, order, method, config), game.prediction

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, instances))
    else:
        results = [run(instance) for instance in instances]

    LOGGER.info('Explained %s instances (k=%s, %s, %s)', len(results), order, method,
                target.value)
    return results
