# -*- coding: utf-8 -*-

"""survint.plotting module.

Line plots of attribution curves, local accuracy and benchmark errors, written as SVG
polylines together with the CSV data behind them.
"""

import logging
import os

import pandas as pd
from matplotlib.figure import Figure

from survint.core import format_coalition

LOGGER = logging.getLogger(__name__)

FIGURE_SIZE = (8, 5)


def explanation_plot_frame(explanation, include_baseline=False):
    """Wide table with a ``t`` column and one column per coalition."""
    data = {'t': explanation.grid.points}
    if include_baseline:
        data['baseline'] = explanation.baseline

    for bits, curve in explanation.values.items():
        data[format_coalition(bits)] = curve

    return pd.DataFrame(data)


def _save(figure, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    figure.savefig(path, format='svg')
    LOGGER.info('Written %s', path)
    return path


def _new_axes(title, xlabel, ylabel):
    figure = Figure(figsize=FIGURE_SIZE)
    axes = figure.subplots()
    axes.set_title(title)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    return figure, axes


def plot_explanation(explanation, path, title=None, data_path=None):
    """Write one polyline per coalition to ``path``.

    Args:
        explanation (InteractionExplanation):
            Curves to draw.
        path (str):
            Output SVG path.
        title (str):
            Plot title, the target and order by default.
        data_path (str):
            Optional CSV path for the plotted values.

    Returns:
        str:
            The SVG path.
    """
    frame = explanation_plot_frame(explanation)
    if title is None:
        title = '{} k={}'.format(explanation.target.value, explanation.order)

    figure, axes = _new_axes(title, 't', 'attribution')
    for column in frame.columns[1:]:
        axes.plot(frame['t'], frame[column], label=column)

    axes.axhline(0.0, color='grey', linewidth=0.5)
    axes.legend(loc='best', fontsize='small')
    if data_path:
        frame.to_csv(data_path, index=False)

    return _save(figure, path)


def plot_local_accuracy(curves, path):
    """Plot ``sigma(t)`` of several ``LocalAccuracyCurve`` keyed by label."""
    figure, axes = _new_axes('local accuracy', 't', 'sigma(t)')
    for label, curve in curves.items():
        axes.plot(curve.grid.points, curve.sigma, label=str(label))

    axes.legend(loc='best', fontsize='small')
    return _save(figure, path)


def plot_benchmark(results, path):
    """Median approximation error per method against the budget, both axes logarithmic.

    Args:
        results (pandas.DataFrame):
            Benchmark rows with columns ``method``, ``budget``, ``run`` and ``mse``.
        path (str):
            Output SVG path.
    """
    medians = results.groupby(['method', 'budget'])['mse'].median().unstack('method')
    figure, axes = _new_axes('approximation error', 'budget', 'median MSE')
    for method in medians.columns:
        axes.plot(medians.index, medians[method], marker='o', label=method)

    axes.set_xscale('log', base=2)
    axes.set_yscale('log')
    axes.legend(loc='best', fontsize='small')
    return _save(figure, path)
