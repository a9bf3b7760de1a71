#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.validation."""
import os
from unittest import TestCase
from unittest.mock import Mock, patch

import pandas as pd
import pytest

from survint.exceptions import ConvergenceError
from survint.validation import (
    SUITE_ALIASES, SUITE_NAMES, SUITES, Check, ValidationContext, ValidationReport,
    resolve_suites, run_validation, write_report)


def test_check_passed():
    assert Check('suite', 'upper', 0.1, 0.2).passed
    assert not Check('suite', 'upper', 0.3, 0.2).passed
    assert Check('suite', 'lower', 0.3, 0.2, '>').passed
    assert Check('suite', 'count', 18, 18, '>=').passed
    assert not Check('suite', 'exact', 1, 0, '==').passed


def test_suite_names():
    assert set(SUITES) == set(SUITE_NAMES)


def test_resolve_suites():
    assert resolve_suites(['thm5', 'identities', 'marginal_dummy']) == [
        'marginal_dummy', 'identities']
    assert set(SUITE_ALIASES.values()) <= set(SUITE_NAMES)

    with pytest.raises(ValueError):
        resolve_suites(['thm3'])


def test_context_limit():
    assert ValidationContext().limit(0.05) == 0.05
    assert ValidationContext(tolerance=1.0).limit(0.05) == 1.0


class TestRunValidation(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.context = ValidationContext(n=200, timepoints=5)

    def test_identities(self):
        report = run_validation(self.context, ['identities'])

        assert [check.name for check in report.checks] == [
            'full-order k-SII equals Moebius',
            'order-1 equals permutation Shapley',
            'k-SII equals SII aggregation',
            'Moebius reconstruction',
            'efficiency residual',
        ]
        assert report.passed
        assert report.checks[0].measured == 0.0

    def test_time_dependence(self):
        report = run_validation(self.context, ['time_dependence', 'downward_propagation'])

        assert report.passed
        assert {check.suite for check in report.checks} == {
            'time_dependence', 'downward_propagation'}

    def test_failing_suite(self):
        failing = Mock(side_effect=ConvergenceError('no convergence'))
        with patch.dict(SUITES, {'coxph': failing}):
            report = run_validation(self.context, ['coxph'])

        assert not report.passed
        assert report.checks[0].name == 'completed'
        assert report.checks[0].detail == 'no convergence'


def test_write_report(tmp_path):
    table = pd.DataFrame({'scenario': [1], 'target': ['hazard'], 'k': [2], 'sigma_bar': [0.0]})
    report = ValidationReport([Check('local_accuracy', 'scenario 1 hazard', 0.0, 1e-5)],
                              {'local-accuracy': table})

    paths = write_report(report, str(tmp_path))

    assert [os.path.basename(path) for path in paths] == [
        'validation.csv', 'local-accuracy.csv']
    frame = pd.read_csv(paths[0])
    assert list(frame.columns) == [
        'suite', 'check', 'passed', 'measured', 'comparison', 'threshold', 'detail']
    assert frame['passed'].tolist() == [True]


class TestSuites(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.context = ValidationContext()

    def names(self, report):
        return [check.name for check in report.checks]

    def test_context_defaults(self):
        assert self.context.instances is None
        assert self.context.survival_instances is None

    def test_marginal_dummy(self):
        report = run_validation(ValidationContext(n=200), ['marginal_dummy'])

        assert self.names(report) == ['marginal x3 attribution', 'conditional x3 attribution']
        assert report.checks[0].measured == 0.0
        assert report.checks[1].measured > 1.0
        assert report.passed

    def test_reference_means(self):
        report = run_validation(self.context, ['reference_means'])

        assert self.names(report) == [
            'x1 mean', 'x1 linear effect', 'x2 mean', 'x2 linear effect',
            'x3 mean', 'x3 linear effect', 'pairwise means',
        ]
        for check in report.checks:
            if check.name.endswith('linear effect'):
                assert check.measured < 1e-9

        assert report.passed

    def test_interaction_emergence(self):
        report = run_validation(self.context, ['interaction_emergence'])

        assert self.names(report) == [
            'scenario 1 hazard pairwise',
            'scenario 1 survival pairwise',
            'scenario 4 hazard time-independent terms vary',
            'scenario 8 survival time-independent terms vary',
        ]
        assert report.passed

    def test_coxph(self):
        report = run_validation(self.context, ['coxph'])

        assert self.names(report) == ['mean C-index', 'mean IBS', 'coefficients within 3 SE']
        assert report.passed

    def test_simulation(self):
        report = run_validation(ValidationContext(n=200), ['simulation'])

        assert len(report.checks) == 7
        assert {check.suite for check in report.checks} == {'simulation'}
        assert report.passed
