# -*- coding: utf-8 -*-
"""Tests for survint.plotting."""
import numpy as np
import pandas as pd

from survint.core import InteractionExplanation, build_time_grid
from survint.metrics import LocalAccuracyCurve
from survint.plotting import (
    explanation_plot_frame, plot_benchmark, plot_explanation, plot_local_accuracy)


def _explanation():
    grid = build_time_grid(10.0, 4)
    values = {0b1: [1.0, 0.5, 0.2, 0.0], 0b10: [0.0, 0.1, 0.2, 0.3], 0b11: [0.1, 0.1, 0.1, 0.1]}
    return InteractionExplanation(2, 'hazard', grid, np.ones(4), values)


def test_explanation_plot_frame():
    explanation = _explanation()

    frame = explanation_plot_frame(explanation, include_baseline=True)

    assert list(frame.columns) == ['t', 'baseline', '1', '2', '1+2']
    np.testing.assert_array_equal(frame['t'], explanation.grid.points)
    np.testing.assert_array_equal(frame['1+2'], [0.1] * 4)


def test_plot_explanation(tmp_path):
    svg = str(tmp_path / 'plots' / 'explanation.svg')
    data = str(tmp_path / 'plot-data.csv')

    returned = plot_explanation(_explanation(), svg, data_path=data)

    assert returned == svg
    with open(svg) as svg_file:
        content = svg_file.read()

    assert '<svg' in content
    assert 'hazard k=2' in content
    assert list(pd.read_csv(data).columns) == ['t', '1', '2', '1+2']


def test_plot_local_accuracy(tmp_path):
    grid = build_time_grid(10.0, 4)
    curve = LocalAccuracyCurve(grid, np.array([0.0, 0.01, 0.02, 0.01]), 0.01)

    path = plot_local_accuracy({'scenario 1': curve}, str(tmp_path / 'accuracy.svg'))

    with open(path) as svg_file:
        assert '<svg' in svg_file.read()


def test_plot_benchmark(tmp_path):
    results = pd.DataFrame({
        'method': ['montecarlo'] * 4 + ['regression'] * 4,
        'budget': [64, 64, 128, 128] * 2,
        'run': [0, 1] * 4,
        'mse': [0.4, 0.6, 0.2, 0.3, 0.1, 0.2, 0.01, 0.02],
    })

    path = plot_benchmark(results, str(tmp_path / 'benchmark.svg'))

    with open(path) as svg_file:
        assert 'approximation error' in svg_file.read()
