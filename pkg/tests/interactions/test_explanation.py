#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.interactions.explanation."""
from unittest import TestCase

import numpy as np
import pytest

from survint.core import PredictionTarget, build_time_grid
from survint.games import MarginalImputer, SurvivalGame
from survint.interactions.approximators import ApproximatorConfig
from survint.interactions.explanation import build_game, explain, explain_instances
from survint.simulation import build_scenario, sample_features, scenario_sampler


class TestExplain(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.model = build_scenario(3)
        X = sample_features(scenario_sampler(3, seed=1), 51)
        cls.instance = X[0]
        cls.imputer = MarginalImputer(X[1:])
        cls.grid = build_time_grid(70, 8)

    def test_log_hazard_interaction(self):
        game = build_game(self.model, self.instance, self.imputer, self.grid, 'loghazard')

        explanation = explain(game, 2)

        assert explanation.target == PredictionTarget.LOG_HAZARD
        assert explanation.coalitions == [0b1, 0b10, 0b100, 0b11, 0b101, 0b110]
        np.testing.assert_allclose(explanation.values[0b11], 0.0, atol=1e-10)
        np.testing.assert_allclose(explanation.values[0b110], 0.0, atol=1e-10)
        assert np.all(np.abs(explanation.values[0b101]) > 0)

    def test_local_accuracy(self):
        game = build_game(self.model, self.instance, self.imputer, self.grid, 'survival')

        explanation = explain(game, 2, threads=2)

        np.testing.assert_allclose(
            explanation.baseline + explanation.total(), game.prediction, atol=1e-10)

    def test_approximate(self):
        game = build_game(self.model, self.instance, self.imputer, self.grid, 'hazard')
        config = ApproximatorConfig('regression', 8)

        explanation, result = explain(game, 2, 'regression', config, return_result=True)
        exact, none = explain(game, 2, return_result=True)

        assert none is None
        assert result.evaluations == 8
        for bits in exact.coalitions:
            np.testing.assert_allclose(explanation.values[bits], exact.values[bits], atol=1e-8)

    def test_missing_config(self):
        game = build_game(self.model, self.instance, self.imputer, self.grid, 'hazard')

        with pytest.raises(ValueError):
            explain(game, 2, 'montecarlo')

        with pytest.raises(ValueError):
            explain(game, 2, 'montecarlo', config={'budget': 8})

    def test_explain_instances(self):
        instances = sample_features(scenario_sampler(3, seed=9), 3)

        results = explain_instances(
            self.model, instances, self.imputer, self.grid, 1, 'hazard', threads=2)

        assert len(results) == 3
        for (explanation, prediction), instance in zip(results, instances):
            expected = self.model.hazard(instance[None, :], self.grid.points)[0]
            np.testing.assert_allclose(prediction, expected)
            np.testing.assert_allclose(
                explanation.baseline + explanation.total(), prediction, rtol=1e-10)


def symmetric_predictor(X, times):
    score = X[:, 0] * X[:, 1] + np.exp(X[:, 0]) + np.exp(X[:, 1]) + X[:, 1] * X[:, 2]
    score = score + X[:, 0] * X[:, 2]
    return score[:, None] * np.log1p(np.asarray(times))[None, :]


def cubic_predictor(X, times):
    score = X[:, 0] ** 3 - X[:, 1] * X[:, 2] + X[:, 0] * X[:, 1] * X[:, 2]
    return score[:, None] * np.asarray(times)[None, :]


class TestAxioms(TestCase):

    @classmethod
    def setUpClass(cls):
        background = np.random.default_rng(4).normal(size=(20, 3))
        cls.imputer = MarginalImputer(np.vstack([background, background[:, [1, 0, 2]]]))
        cls.instance = np.array([0.7, 0.7, -0.3])
        cls.grid = build_time_grid(70, 6)

    def explain(self, predictor, order=2):
        game = SurvivalGame(predictor, self.instance, self.imputer, self.grid)
        return explain(game, order, target=PredictionTarget.HAZARD)

    def test_symmetry(self):
        explanation = self.explain(symmetric_predictor)

        np.testing.assert_allclose(
            explanation.values[0b001], explanation.values[0b010], rtol=0, atol=1e-12)
        np.testing.assert_allclose(
            explanation.values[0b101], explanation.values[0b110], rtol=0, atol=1e-12)
        assert np.all(np.abs(explanation.values[0b011]) > 0)

    def test_linearity(self):
        a, b = 2.5, -0.75

        def combined(X, times):
            return a * symmetric_predictor(X, times) + b * cubic_predictor(X, times)

        for order in (1, 2, 3):
            first = self.explain(symmetric_predictor, order)
            second = self.explain(cubic_predictor, order)
            returned = self.explain(combined, order)

            np.testing.assert_allclose(
                returned.baseline, a * first.baseline + b * second.baseline, rtol=0,
                atol=1e-10)
            for bits in returned.coalitions:
                expected = a * first.values[bits] + b * second.values[bits]
                np.testing.assert_allclose(returned.values[bits], expected, rtol=0, atol=1e-10)
