#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.config."""
import json
import os
from unittest import TestCase
from unittest.mock import patch

import pytest

from survint.config import (
    DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, RunConfig, build_config, load_config_file,
    write_manifest)


class TestBuildConfig(TestCase):

    def test_explain_defaults(self):
        with patch.dict(os.environ, {}, clear=True):
            config = build_config('explain')

        assert config.scenario == '1'
        assert config.target == 'loghazard'
        assert config.order == 2
        assert config.timepoints == 41
        assert config.method == 'exact'
        assert config.output_dir == DEFAULT_OUTPUT_DIR

    def test_benchmark_defaults(self):
        config = build_config('benchmark')

        assert config.scenario == '8'
        assert config.target == 'hazard'
        assert config.order == 3
        assert config.budgets == [64, 128, 256, 512]
        assert config.methods == ['montecarlo', 'permutation', 'regression']
        assert config.background_size == 100

    def test_output_dir_from_environment(self):
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: '/tmp/survint-runs'}):
            config = build_config('simulate')

        assert config.output_dir == '/tmp/survint-runs'

    def test_flags_override_file(self):
        with patch('survint.config.load_config_file') as load_mock:
            load_mock.return_value = {'seed': 3, 'order': 3, 'scenario': 4}
            config = build_config('explain', 'run.json', seed=5, order=None)

        load_mock.assert_called_once_with('run.json')
        assert config.seed == 5
        assert config.order == 3
        assert config.scenario == '4'

    def test_method_alias(self):
        config = build_config('explain', method='kernel', budget=64)

        assert config.method == 'regression'
        assert config.approximator_config().budget == 64

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            build_config('explain', colour='red')

    def test_unknown_command(self):
        with pytest.raises(ValueError):
            build_config('train')


class TestValidate(TestCase):

    def test_invalid_values(self):
        invalid = [
            ('simulate', {'scenario': '11'}),
            ('simulate', {'rho': 1.0}),
            ('simulate', {'n': 0}),
            ('simulate', {'test_size': 1.0}),
            ('explain', {'target': 'density'}),
            ('explain', {'model': 'coxph', 'target': 'hazard'}),
            ('explain', {'method': 'montecarlo'}),
            ('explain', {'method': 'regression', 'budget': 4, 'order': 2}),
            ('explain', {'smooth': True, 'window': 10}),
            ('explain', {'smooth': True, 'timepoints': 5}),
            ('explain', {'dataset': '/does/not/exist.csv'}),
            ('validate', {'only': ['everything']}),
            ('validate', {'tolerance': -1.0}),
            ('benchmark', {'inert_features': 20}),
            ('benchmark', {'budgets': [2048]}),
            ('benchmark', {'methods': ['svarm']}),
        ]
        for command, flags in invalid:
            with pytest.raises(ValueError):
                build_config(command, **flags)

    def test_suite_alias(self):
        config = build_config('validate', only=['thm5', 'marginal_dummy', 'thm1'])

        assert config.only == ['marginal_dummy', 'time_dependence']
        assert config.survival_instances is None

    def test_valid_coxph(self):
        config = build_config('explain', model='coxph', target='survival')

        assert config.model == 'coxph'


def test_load_config_file(tmp_path):
    path = tmp_path / 'run-manifest.json'
    path.write_text(json.dumps({'command': 'explain', 'config': {'seed': 9, 'order': 1}}))

    assert load_config_file(str(path)) == {'seed': 9, 'order': 1}


def test_load_config_file_unknown(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps({'seeds': 9}))

    with pytest.raises(ValueError):
        load_config_file(str(path))


def test_write_manifest(tmp_path):
    config = build_config('simulate', output_dir=str(tmp_path), seed=7)

    path = write_manifest(config, [str(tmp_path / 'b.csv'), str(tmp_path / 'a.csv')])

    with open(path) as manifest_file:
        manifest = json.load(manifest_file)

    assert manifest['command'] == 'simulate'
    assert manifest['config']['seed'] == 7
    assert manifest['seeds']['seed'] == 7
    assert manifest['seeds']['streams']['features'] == 0
    assert manifest['outputs'] == [str(tmp_path / 'a.csv'), str(tmp_path / 'b.csv')]
    assert set(manifest['versions']) == {'survint', 'numpy', 'scipy', 'pandas'}
    assert RunConfig(**manifest['config']) == config
