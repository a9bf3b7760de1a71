#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.models.ground_truth."""
import json
from unittest import TestCase

import numpy as np
import pytest

from survint.core import PredictionTarget
from survint.exceptions import NonFiniteError
from survint.models.ground_truth import (
    GroundTruthModel, RiskScoreSpec, RiskTerm, apply_transform, cumulative_hazard,
    eval_risk_score, eval_target, load_model_spec, parse_transform)


def test_parse_transform():
    assert parse_transform('identity') == ('identity', None)
    assert parse_transform('square') == ('square', None)
    assert parse_transform('scaled_arctan(2.5)') == ('scaled_arctan', 2.5)

    with pytest.raises(ValueError):
        parse_transform('cube')


def test_apply_transform():
    values = np.array([-1.0, 0.0, 1.0])

    np.testing.assert_array_equal(apply_transform('identity', values), values)
    np.testing.assert_array_equal(apply_transform('square', values), [1.0, 0.0, 1.0])
    np.testing.assert_allclose(apply_transform('scaled_arctan(1)', values), [-0.5, 0.0, 0.5])


def test_risk_term_invalid():
    with pytest.raises(ValueError):
        RiskTerm((), 1.0)

    with pytest.raises(ValueError):
        RiskTerm((0, 0), 1.0)

    with pytest.raises(ValueError):
        RiskTerm((0, ), 1.0, ('identity', 'square'))

    with pytest.raises(ValueError):
        RiskTerm((0, ), 1.0, time_modifier='sqrt')


def test_risk_score_term_out_of_range():
    with pytest.raises(ValueError):
        RiskScoreSpec(2, (RiskTerm((2, ), 1.0), ))


class TestGroundTruthModel(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.risk = RiskScoreSpec(3, (
            RiskTerm((0, ), 0.4),
            RiskTerm((2, ), -0.6, ('square', )),
            RiskTerm((0, 1), -0.5, time_modifier='log1p'),
        ))
        cls.model = GroundTruthModel(0.03, cls.risk, name='test')
        cls.X = np.array([[1.0, 2.0, 0.5], [-0.3, 0.7, 1.1]])

    def test_time_dependent_subsets(self):
        assert self.risk.time_dependent_subsets() == frozenset({0b11})
        assert not self.risk.time_independent

    def test_eval_risk_score(self):
        returned = eval_risk_score(self.risk, [1.0, 2.0, 0.5], np.e - 1)

        np.testing.assert_allclose(returned, 0.4 - 0.6 * 0.25 - 0.5 * 2.0)

    def test_eval_risk_score_invalid(self):
        with pytest.raises(ValueError):
            eval_risk_score(self.risk, [1.0, 2.0], 1.0)

        with pytest.raises(ValueError):
            eval_risk_score(self.risk, [1.0, 2.0, 0.5], -1.0)

    def test_log_hazard(self):
        times = [0.0, 5.0]
        returned = self.model.log_hazard(self.X, times)

        expected = np.log(0.03) + self.risk.evaluate(self.X, times)
        np.testing.assert_allclose(returned, expected)
        np.testing.assert_allclose(np.exp(returned), self.model.hazard(self.X, times))

    def test_cumulative_hazard_methods_agree(self):
        times = [0.0, 1.0, 10.0, 70.0]

        quadrature = self.model.cumulative_hazard(self.X, times)
        analytic = self.model.cumulative_hazard(self.X, times, integration='analytic')

        np.testing.assert_allclose(quadrature, analytic, rtol=1e-8, atol=1e-10)
        np.testing.assert_array_equal(quadrature[:, 0], [0.0, 0.0])

    def test_cumulative_hazard_time_independent(self):
        risk = RiskScoreSpec(1, (RiskTerm((0, ), 0.4), ))
        model = GroundTruthModel(0.03, risk)

        returned = cumulative_hazard(model, [2.0], 10.0)

        np.testing.assert_allclose(returned, 0.03 * 10.0 * np.exp(0.8))

    def test_cumulative_hazard_unknown_integration(self):
        with pytest.raises(ValueError):
            self.model.cumulative_hazard(self.X, [1.0], integration='trapezoid')

    def test_paired_cumulative_hazard(self):
        times = np.array([3.0, 40.0])

        returned = self.model.paired_cumulative_hazard(self.X, times)

        full = self.model.cumulative_hazard(self.X, times)
        np.testing.assert_allclose(returned, np.diag(full), rtol=1e-8)

    def test_predict_targets(self):
        times = [1.0, 20.0]

        survival = self.model.predict(self.X, times)
        hazard = self.model.predict(self.X, times, PredictionTarget.HAZARD)
        log_hazard = self.model.predict(self.X, times, 'loghazard')

        np.testing.assert_allclose(survival, np.exp(-self.model.cumulative_hazard(self.X, times)))
        np.testing.assert_allclose(np.log(hazard), log_hazard)
        assert np.all((survival > 0) & (survival <= 1))

    def test_eval_target(self):
        returned = eval_target(self.model, 'survival', self.X[0], 0.0)

        assert returned == 1.0

    def test_non_finite_hazard(self):
        model = GroundTruthModel(0.03, RiskScoreSpec(1, (RiskTerm((0, ), 1000.0), )))

        with pytest.raises(NonFiniteError):
            model.hazard([[1.0]], [1.0])

    def test_invalid_baseline(self):
        with pytest.raises(ValueError):
            GroundTruthModel(0.0, self.risk)

    def test_to_dict(self):
        returned = self.model.to_dict()

        assert returned['p'] == 3
        assert returned['terms'][2] == {
            'features': [1, 2],
            'beta': -0.5,
            'transforms': ['identity', 'identity'],
            'time': 'log1p',
        }
        assert GroundTruthModel.from_dict(returned).to_dict() == returned

    def test_term_orders(self):
        assert self.model.term_orders() == [1, 2]


def test_load_model_spec(tmp_path):
    spec = {
        'p': 2,
        'lambda': 0.1,
        'terms': [{'features': [2], 'beta': 1.5}],
    }
    path = tmp_path / 'model.json'
    path.write_text(json.dumps(spec))

    model = load_model_spec(str(path))

    assert model.name == 'model.json'
    assert model.n_features == 2
    assert model.risk.terms == (RiskTerm((1, ), 1.5), )
