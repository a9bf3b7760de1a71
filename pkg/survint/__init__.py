# -*- coding: utf-8 -*-

"""Top-level package for survint."""

__author__ = 'MIT Data To AI Lab'
__email__ = 'dai-lab@mit.edu'
__version__ = '0.1.0.dev0'

import os

from mlblocks import discovery

from survint.core import (
    InteractionExplanation, PredictionTarget, SurvivalDataset, TimeGrid, build_time_grid,
    coalition_iter)
from survint.games import (
    ConditionalGaussianImputer, MarginalImputer, SurvivalGame, evaluate_all_coalitions)
from survint.interactions import explain, explain_instances
from survint.models import GroundTruthModel, fit_coxph
from survint.simulation import build_scenario, simulate_dataset

_BASE_PATH = os.path.abspath(os.path.dirname(__file__))
MLBLOCKS_PRIMITIVES = os.path.join(_BASE_PATH, 'primitives')

__all__ = (
    'InteractionExplanation',
    'PredictionTarget',
    'SurvivalDataset',
    'TimeGrid',
    'build_time_grid',
    'coalition_iter',
    'ConditionalGaussianImputer',
    'MarginalImputer',
    'SurvivalGame',
    'evaluate_all_coalitions',
    'explain',
    'explain_instances',
    'GroundTruthModel',
    'fit_coxph',
    'build_scenario',
    'simulate_dataset',
)


def get_primitives(primitive_type=None):
    """Get a list of the available primitives.

    Optionally filter by primitive type: ``metric`` or ``transformation``.

    Args:
        primitive_type (str):
            Filter by primitive type. ``metric`` or ``transformation``.

    Returns:
        list:
            List of the names of the available primitives.
    """
    if primitive_type and primitive_type not in ('metric', 'transformation'):
        raise ValueError('primitive_type must be `metric` or `transformation`')

    filters = {'classifiers.type': primitive_type} if primitive_type else None
    return discovery.find_primitives('survint', filters)
