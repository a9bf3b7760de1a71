# -*- coding: utf-8 -*-

"""survint.config module.

Run configuration of the command line interface. Values are resolved from the built-in
defaults, then an optional JSON config file, then the explicit command line flags.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
import scipy

import survint
from survint.core import PredictionTarget, RngPurpose
from survint.interactions.approximators import METHODS, ApproximatorConfig, parse_method
from survint.models.ground_truth import INTEGRATION_METHODS
from survint.simulation import T_MAX, parse_scenario_id
from survint.utils import read_json, write_json
from survint.validation import resolve_suites

LOGGER = logging.getLogger(__name__)

COMMANDS = ('simulate', 'explain', 'validate', 'benchmark')
MODELS = ('ground_truth', 'coxph')
IMPUTERS = ('marginal', 'conditional')
OUTPUT_DIR_ENV = 'SURVINT_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'survint-output'
MANIFEST_NAME = 'run-manifest.json'
MAX_BENCHMARK_FEATURES = 16

BASE_DEFAULTS = {
    'scenario': '1',
    'target': 'loghazard',
    'order': 2,
    'timepoints': 41,
}

COMMAND_DEFAULTS = {
    'simulate': {},
    'explain': {},
    'validate': {},
    'benchmark': {
        'scenario': '8',
        'target': 'hazard',
        'order': 3,
        'timepoints': 41,
        'background_size': 100,
        'budgets': [64, 128, 256, 512],
        'methods': list(METHODS),
    },
}


@dataclass
class RunConfig:
    """Every setting of one command line run.

    Settings that do not apply to the selected command are ignored. ``None`` values of
    ``scenario``, ``target``, ``order``, ``timepoints`` and the benchmark settings are
    filled with the command defaults by ``resolve``.
    """

    command: str
    output_dir: str = None
    seed: int = 0
    threads: int = 1

    scenario: str = None
    n: int = 1000
    rho: float = None
    t_max: float = T_MAX
    split: bool = False
    test_size: float = 0.2

    dataset: str = None
    model_spec: str = None
    model: str = 'ground_truth'
    instance: int = 0
    observation: List[float] = None
    target: str = None
    order: int = None
    method: str = 'exact'
    budget: int = None
    strict: bool = False
    share_samples: bool = True
    timepoints: int = None
    integration: str = 'quadrature'
    imputer: str = 'marginal'
    background_size: int = None
    conditional_samples: int = 1000
    smooth: bool = False
    window: int = 11
    poly_order: int = 3
    plot: bool = False

    only: List[str] = None
    tolerance: float = None
    instances: int = None
    survival_instances: int = None

    budgets: List[int] = None
    repetitions: int = 30
    methods: List[str] = None
    inert_features: int = 7

    @classmethod
    def field_names(cls):
        return [field.name for field in dataclasses.fields(cls)]

    def resolve(self):
        """Copy with the command defaults and the output directory filled in."""
        if self.command not in COMMANDS:
            raise ValueError('Unknown command {!r}'.format(self.command))

        defaults = dict(BASE_DEFAULTS)
        defaults.update(COMMAND_DEFAULTS[self.command])
        updates = {
            name: value
            for name, value in defaults.items()
            if getattr(self, name) is None
        }
        if self.output_dir is None:
            updates['output_dir'] = os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)

        return dataclasses.replace(self, **updates)

    def _check_positive_int(self, name, minimum=1):
        value = getattr(self, name)
        if value is None:
            return

        if int(value) != value or value < minimum:
            raise ValueError('{} must be an integer >= {}, got {}'.format(name, minimum, value))

    def validate(self):
        """Check every setting of the command before any computation.

        Raises:
            ValueError:
                Naming the first invalid setting.
        """
        if self.command not in COMMANDS:
            raise ValueError('Unknown command {!r}'.format(self.command))

        for name in ('threads', 'n', 'timepoints', 'background_size', 'conditional_samples',
                     'survival_instances', 'instances', 'repetitions', 'order', 'window'):
            self._check_positive_int(name)

        for name in ('seed', 'instance', 'poly_order', 'inert_features'):
            self._check_positive_int(name, minimum=0)

        parse_scenario_id(self.scenario)
        if self.rho is not None and not -1 < self.rho < 1:
            raise ValueError('rho must be in (-1, 1), got {}'.format(self.rho))

        if self.t_max <= 0:
            raise ValueError('t_max must be positive, got {}'.format(self.t_max))

        if not 0 < self.test_size < 1:
            raise ValueError('test_size must be in (0, 1), got {}'.format(self.test_size))

        if self.command == 'explain':
            self._validate_explain()
        elif self.command == 'validate':
            if self.only:
                self.only = resolve_suites(self.only)

            if self.tolerance is not None and self.tolerance < 0:
                raise ValueError('tolerance must be non-negative')
        elif self.command == 'benchmark':
            self._validate_benchmark()

        return self

    def _validate_explain(self):
        target = PredictionTarget.parse(self.target)
        if self.model not in MODELS:
            raise ValueError('Unknown model {!r}; use one of {}'.format(
                self.model, ', '.join(MODELS)))

        if self.model == 'coxph' and target != PredictionTarget.SURVIVAL:
            raise ValueError('Cox models explain the survival target only')

        if self.model == 'coxph' and self.model_spec:
            raise ValueError('--model-spec describes a ground-truth model, not a Cox model')

        if self.imputer not in IMPUTERS:
            raise ValueError('Unknown imputer {!r}; use one of {}'.format(
                self.imputer, ', '.join(IMPUTERS)))

        if self.integration not in INTEGRATION_METHODS:
            raise ValueError('Unknown integration {!r}'.format(self.integration))

        for path in (self.dataset, self.model_spec):
            if path and not os.path.isfile(path):
                raise ValueError('File {} does not exist'.format(path))

        if self.method != 'exact':
            if self.budget is None:
                raise ValueError('--budget is required by the {} method'.format(self.method))

            self.approximator_config().validate(self.order)

        if self.smooth:
            if self.window % 2 == 0 or self.poly_order >= self.window:
                raise ValueError('Smoothing needs an odd window larger than poly_order')

            if self.window > self.timepoints:
                raise ValueError('The smoothing window {} exceeds {} timepoints'.format(
                    self.window, self.timepoints))

    def _validate_benchmark(self):
        PredictionTarget.parse(self.target)
        for method in self.methods:
            parse_method(method)

        n_features = 3 + self.inert_features
        if n_features > MAX_BENCHMARK_FEATURES:
            raise ValueError('The exact oracle supports at most {} features, got {}'.format(
                MAX_BENCHMARK_FEATURES, n_features))

        if self.order > n_features:
            raise ValueError('order {} exceeds {} features'.format(self.order, n_features))

        for budget in self.budgets:
            if int(budget) != budget or budget < 2:
                raise ValueError('Budgets must be integers >= 2, got {}'.format(budget))

            if budget > 1 << n_features:
                raise ValueError('Budget {} exceeds the 2^{} coalitions'.format(
                    budget, n_features))

    def approximator_config(self):
        return ApproximatorConfig(self.method, self.budget, seed=self.seed,
                                  share_samples=self.share_samples, strict=self.strict)

    def to_dict(self):
        return dataclasses.asdict(self)


def load_config_file(path):
    """Read a config JSON, either bare or the ``config`` object of a run manifest."""
    data = read_json(path)
    if 'config' in data and isinstance(data['config'], dict):
        data = data['config']

    unknown = set(data) - set(RunConfig.field_names())
    if unknown:
        raise ValueError('Unknown settings in {}: {}'.format(path, sorted(unknown)))

    return data


def build_config(command, config_path=None, **flags):
    """Resolve the ``RunConfig`` of a command.

    Args:
        command (str):
            Subcommand name.
        config_path (str):
            Optional JSON config file.
        **flags:
            Command line values; ``None`` means not given.

    Returns:
        RunConfig:
            Resolved and validated config.
    """
    values = {}
    if config_path:
        values.update(load_config_file(config_path))

    values.update({name: value for name, value in flags.items() if value is not None})
    values['command'] = command
    unknown = set(values) - set(RunConfig.field_names())
    if unknown:
        raise ValueError('Unknown settings {}'.format(sorted(unknown)))

    if 'scenario' in values:
        values['scenario'] = str(values['scenario'])

    if values.get('method') is not None and values['method'] != 'exact':
        values['method'] = parse_method(values['method'])

    return RunConfig(**values).resolve().validate()


def versions():
    return {
        'survint': survint.__version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
    }


def write_manifest(config, outputs=None):
    """Write ``run-manifest.json`` into the output directory of the run.

    The manifest holds the resolved config, the package versions and the seed of every
    random stream, so the run can be repeated with ``--config``.
    """
    manifest = {
        'command': config.command,
        'config': config.to_dict(),
        'versions': versions(),
        'seeds': {
            'seed': config.seed,
            'streams': {purpose.name.lower(): int(purpose) for purpose in RngPurpose},
        },
        'outputs': sorted(outputs or ()),
    }
    path = os.path.join(config.output_dir, MANIFEST_NAME)
    write_json(manifest, path)
    return path
