#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.metrics."""
from unittest import TestCase
from unittest.mock import patch

import numpy as np
import pytest
from scipy import integrate

from survint.core import InteractionExplanation, SurvivalDataset, TimeGrid, build_time_grid
from survint.metrics import (
    approximation_error, brier_scores, classify_time_dependence, concordance_index,
    integrated_brier, kaplan_meier, local_accuracy, savgol_smooth, smooth_explanation)


def make_explanation(values, grid=None, baseline=None, order=2):
    n_points = len(next(iter(values.values())))
    grid = grid or build_time_grid(n_points, n_points)
    baseline = np.zeros(len(grid)) if baseline is None else baseline
    return InteractionExplanation(order, 'hazard', grid, baseline, values)


class TestLocalAccuracy(TestCase):

    def test_exact(self):
        predictions = np.array([[1.0, 2.0], [3.0, 1.0]])
        baseline = np.array([2.0, 1.5])
        explanations = [
            make_explanation({0b1: row - baseline}, baseline=baseline) for row in predictions
        ]

        curve = local_accuracy(explanations, predictions)

        np.testing.assert_allclose(curve.sigma, [0.0, 0.0])
        assert curve.mean == 0.0

    def test_residual(self):
        predictions = np.array([[1.0, 2.0], [3.0, 2.0]])
        explanations = [
            make_explanation({0b1: [0.0, 1.0]}, baseline=[1.0, 1.0]),
            make_explanation({0b1: [1.0, 1.0]}, baseline=[1.0, 1.0]),
        ]

        curve = local_accuracy(explanations, predictions)

        # residuals (0, 0) and (1, 0) against E[F^2] = (5, 4)
        np.testing.assert_allclose(curve.sigma, [np.sqrt(0.5 / 5.0), 0.0])
        np.testing.assert_allclose(curve.mean, np.sqrt(0.1) / 2)

    def test_zero_denominator(self):
        explanations = [make_explanation({0b1: [0.0, 0.0]})]

        with pytest.raises(ValueError):
            local_accuracy(explanations, [[0.0, 1.0]])

    def test_shape_mismatch(self):
        explanations = [make_explanation({0b1: [0.0, 0.0]})]

        with pytest.raises(ValueError):
            local_accuracy(explanations, [[1.0, 1.0], [1.0, 1.0]])

        with pytest.raises(ValueError):
            local_accuracy([], [])


class TestConcordance(TestCase):

    def test_hand_case(self):
        data = SurvivalDataset([[0.0]] * 3, [1.0, 2.0, 3.0], [1, 1, 0])

        assert concordance_index([3.0, 1.0, 2.0], data) == pytest.approx(2 / 3)

    def test_constant_risk(self):
        data = SurvivalDataset(np.zeros((5, 1)), [1.0, 2.0, 3.0, 4.0, 5.0], [1, 0, 1, 1, 0])

        assert concordance_index(np.ones(5), data) == 0.5

    def test_perfect_ranking(self):
        times = np.arange(1.0, 3001.0)
        data = SurvivalDataset(np.zeros((3000, 1)), times, np.ones(3000))

        assert concordance_index(-times, data) == 1.0

    def test_no_comparable_pairs(self):
        data = SurvivalDataset([[0.0], [0.0]], [1.0, 2.0], [0, 1])

        with pytest.raises(ValueError):
            concordance_index([1.0, 2.0], data)

    def test_size_mismatch(self):
        data = SurvivalDataset([[0.0], [0.0]], [1.0, 2.0], [1, 1])

        with pytest.raises(ValueError):
            concordance_index([1.0], data)


def test_kaplan_meier():
    event_times, survival = kaplan_meier([1.0, 2.0, 3.0, 4.0], [1, 0, 1, 1])

    np.testing.assert_array_equal(event_times, [1.0, 3.0, 4.0])
    np.testing.assert_allclose(survival, [0.75, 0.375, 0.0])


class TestBrier(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.data = SurvivalDataset(np.zeros((4, 1)), [1.0, 2.0, 3.0, 4.0], np.ones(4))
        cls.grid = TimeGrid([1.5, 2.5], 4.0)

    def test_oracle(self):
        survival = (self.data.times[:, None] > self.grid.points[None, :]).astype(float)

        np.testing.assert_allclose(brier_scores(survival, self.data, self.grid), [0.0, 0.0])
        assert integrated_brier(survival, self.data, self.grid) == 0.0

    @patch('survint.metrics.integrate.trapezoid', wraps=integrate.trapezoid)
    @patch('survint.metrics.brier_scores')
    def test_integrated_uneven_grid(self, scores_mock, trapezoid_mock):
        scores_mock.return_value = np.array([0.1, 0.3, 0.2])
        grid = TimeGrid([1.0, 2.0, 4.0], 4.0)

        returned = integrated_brier(np.zeros((4, 3)), self.data, grid)

        expected = ((0.1 + 0.3) / 2 + (0.3 + 0.2) / 2 * 2) / 3
        assert returned == pytest.approx(expected)
        trapezoid_mock.assert_called_once()

    def test_uninformative(self):
        survival = np.full((4, 2), 0.5)

        np.testing.assert_allclose(brier_scores(survival, self.data, self.grid), [0.25, 0.25])
        assert integrated_brier(survival, self.data, self.grid) == pytest.approx(0.25)

    def test_censoring_weights(self):
        data = SurvivalDataset(np.zeros((4, 1)), [1.0, 2.0, 3.0, 4.0], [1, 0, 1, 1])
        survival = np.full((4, 1), 0.5)

        returned = brier_scores(survival, data, TimeGrid([3.5], 4.0))

        # censoring survival is 2/3 after t=2: the two events after it are reweighted
        expected = (0.25 + 0.25 / (2 / 3) + 0.25 / (2 / 3)) / 4
        np.testing.assert_allclose(returned, [expected])

    def test_grid_beyond_data(self):
        with pytest.raises(ValueError):
            brier_scores(np.ones((4, 1)), self.data, TimeGrid([4.0], 4.0))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            brier_scores(np.ones((3, 2)), self.data, self.grid)


class TestSmoothing(TestCase):

    def test_constant(self):
        np.testing.assert_allclose(savgol_smooth(np.full(15, 2.5)), np.full(15, 2.5))

    def test_cubic(self):
        t = np.linspace(0, 1, 21)
        series = 1 - 2 * t + 3 * t ** 2 - t ** 3

        np.testing.assert_allclose(savgol_smooth(series), series, atol=1e-10)

    def test_noise_is_reduced(self):
        t = np.linspace(0, 1, 41)
        noise = np.random.default_rng(0).normal(scale=0.1, size=41)

        smoothed = savgol_smooth(np.sin(t) + noise)

        assert np.mean((smoothed - np.sin(t)) ** 2) < np.mean(noise ** 2)

    def test_invalid(self):
        with pytest.raises(ValueError):
            savgol_smooth(np.ones(15), window=10)

        with pytest.raises(ValueError):
            savgol_smooth(np.ones(5), window=11)

        with pytest.raises(ValueError):
            savgol_smooth(np.ones(15), window=5, poly_order=5)

    def test_smooth_explanation(self):
        curve = np.linspace(0, 1, 11) ** 2
        explanation = make_explanation({0b1: curve}, baseline=np.arange(11.0))

        returned = smooth_explanation(explanation, window=5, poly_order=2)

        np.testing.assert_allclose(returned.values[0b1], curve, atol=1e-12)
        np.testing.assert_array_equal(returned.baseline, explanation.baseline)


class TestTimeDependence(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.explanation = make_explanation({
            0b1: [1.0, 1.0, 1.0],
            0b10: [0.0, 0.5, 1.0],
            0b11: [0.2, 0.2 + 1e-9, 0.2],
        })

    def test_default_tolerance(self):
        partition = classify_time_dependence(self.explanation)

        assert partition.dependent == frozenset({0b10})
        assert partition.independent == frozenset({0b1, 0b11})
        assert partition.deviations[0b10] == 0.5

    def test_per_coalition_tolerance(self):
        partition = classify_time_dependence(
            self.explanation, {0b1: 0.1, 0b10: 0.6, 0b11: 1e-12})

        assert partition.dependent == frozenset({0b11})

    def test_single_timepoint(self):
        with pytest.raises(ValueError):
            classify_time_dependence(make_explanation({0b1: [1.0]}))


class TestApproximationError(TestCase):

    def test_constant_shift(self):
        exact = make_explanation({0b1: [1.0, 2.0], 0b11: [0.0, -1.0]})
        approx = make_explanation({0b1: [1.1, 2.1], 0b11: [0.1, -0.9]})

        assert approximation_error(approx, exact) == pytest.approx(0.01)
        assert approximation_error(exact, exact) == 0.0

    def test_mismatch(self):
        exact = make_explanation({0b1: [1.0, 2.0]})

        with pytest.raises(ValueError):
            approximation_error(make_explanation({0b10: [1.0, 2.0]}), exact)

        with pytest.raises(ValueError):
            approximation_error(make_explanation({0b1: [1.0, 2.0]}, order=1), exact)
