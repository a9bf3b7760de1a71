import json
import logging
import os

import numpy as np
import pandas as pd

from survint.core import (
    InteractionExplanation, PredictionTarget, SurvivalDataset, TimeGrid, coalition_size,
    format_coalition, parse_coalition)

LOGGER = logging.getLogger(__name__)

BASELINE_LABEL = 'baseline'


def _ensure_parent(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def write_json(data, path):
    _ensure_parent(path)
    with open(path, 'w') as json_file:
        json.dump(data, json_file, indent=2)

    LOGGER.info('Written %s', path)


def read_json(path):
    with open(path) as json_file:
        return json.load(json_file)


def load_dataset_csv(path):
    """Load a dataset CSV with header ``x1,...,xp,time,event``.

    Args:
        path (str):
            Path to the CSV file.

    Returns:
        SurvivalDataset
    """
    df = pd.read_csv(path, float_precision='round_trip')
    missing = {'time', 'event'} - set(df.columns)
    if missing:
        raise ValueError('Dataset CSV {} is missing the columns {}'.format(path, sorted(missing)))

    feature_columns = [column for column in df.columns if column not in ('time', 'event')]
    LOGGER.info('Loaded %s rows with %s features from %s', len(df), len(feature_columns), path)
    return SurvivalDataset(
        df[feature_columns].to_numpy(dtype=float),
        df['time'].to_numpy(dtype=float),
        df['event'].to_numpy(dtype=int),
    )


def dataset_to_frame(dataset):
    columns = ['x{}'.format(j + 1) for j in range(dataset.n_features)]
    df = pd.DataFrame(dataset.features, columns=columns)
    df['time'] = dataset.times
    df['event'] = dataset.events
    return df


def write_dataset_csv(dataset, path):
    _ensure_parent(path)
    dataset_to_frame(dataset).to_csv(path, index=False)
    LOGGER.info('Written %s rows to %s', dataset.n_samples, path)


def explanation_to_frame(explanation):
    """Long table ``coalition,t,value`` including the ``baseline`` pseudo-coalition."""
    points = explanation.grid.points
    frames = [pd.DataFrame({
        'coalition': BASELINE_LABEL,
        't': points,
        'value': explanation.baseline,
    })]
    for bits, curve in explanation.values.items():
        frames.append(pd.DataFrame({
            'coalition': format_coalition(bits),
            't': points,
            'value': curve,
        }))

    return pd.concat(frames, ignore_index=True)


def write_explanation_csv(explanation, path):
    _ensure_parent(path)
    explanation_to_frame(explanation).to_csv(path, index=False)
    LOGGER.info('Written explanation with %s coalitions to %s', len(explanation.values), path)


def load_explanation_csv(path, target, order=None, t_max=None):
    """Load an explanation from its long CSV.

    The CSV does not carry the order, the target or ``t_max``: the order defaults to the
    largest coalition found and ``t_max`` to the last timepoint.
    """
    df = pd.read_csv(path, dtype={'coalition': str}, float_precision='round_trip')
    baseline = df[df['coalition'] == BASELINE_LABEL]
    points = baseline['t'].to_numpy(dtype=float)
    grid = TimeGrid(points, t_max if t_max is not None else points[-1])

    values = {}
    for label, group in df[df['coalition'] != BASELINE_LABEL].groupby('coalition', sort=False):
        group = group.set_index('t').reindex(points)
        values[parse_coalition(label)] = group['value'].to_numpy(dtype=float)

    if order is None:
        order = max((coalition_size(bits) for bits in values), default=1)

    return InteractionExplanation(order, target, grid, baseline['value'].to_numpy(), values)


def explanation_to_dict(explanation):
    return {
        'order': explanation.order,
        'target': explanation.target.value,
        'grid': {
            'points': explanation.grid.points.tolist(),
            't_max': explanation.grid.t_max,
        },
        'baseline': explanation.baseline.tolist(),
        'values': {
            format_coalition(bits): curve.tolist()
            for bits, curve in explanation.values.items()
        },
    }


def explanation_from_dict(data):
    grid = data['grid']
    if isinstance(grid, dict):
        grid = TimeGrid(grid['points'], grid['t_max'])
    else:
        grid = TimeGrid(grid, grid[-1])

    values = {
        parse_coalition(label): np.asarray(curve, dtype=float)
        for label, curve in data['values'].items()
    }
    return InteractionExplanation(
        int(data['order']),
        PredictionTarget.parse(data['target']),
        grid,
        np.asarray(data['baseline'], dtype=float),
        values,
    )


def write_explanation_json(explanation, path):
    write_json(explanation_to_dict(explanation), path)


def load_explanation_json(path):
    return explanation_from_dict(read_json(path))
