#!/usr/bin/env python
# coding: utf-8

import argparse
import logging
import os
import sys
import warnings

import numpy as np

from survint.benchmark import benchmark_game, full_budget_errors, run_benchmark, summarize
from survint.config import build_config, write_manifest
from survint.core import (
    PredictionTarget, RngPurpose, build_time_grid, coalition_iter, format_coalition, rng_stream)
from survint.exceptions import InstabilityWarning, SurvintError
from survint.games import ConditionalGaussianImputer, MarginalImputer
from survint.interactions.explanation import build_game, explain
from survint.metrics import smooth_explanation
from survint.models.coxph import fit_coxph
from survint.models.ground_truth import load_model_spec
from survint.plotting import plot_benchmark, plot_explanation
from survint.simulation import (
    FeatureSampler, build_scenario, parse_scenario_id, scenario_sampler, simulate_dataset)
from survint.utils import (
    load_dataset_csv, write_dataset_csv, write_explanation_csv, write_explanation_json,
    write_json)
from survint.validation import (
    SUITE_ALIASES, SUITE_NAMES, ValidationContext, run_validation, write_report)

LOGGER = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2
EXIT_VALIDATION = 3

CONFIG_FLAGS = (
    'output_dir', 'seed', 'threads', 'scenario', 'n', 'rho', 't_max', 'split', 'test_size',
    'dataset', 'model_spec', 'model', 'instance', 'observation', 'target', 'order', 'method',
    'budget', 'strict', 'share_samples', 'timepoints', 'integration', 'imputer',
    'background_size', 'conditional_samples', 'smooth', 'window', 'poly_order', 'plot',
    'only', 'tolerance', 'instances', 'survival_instances', 'budgets', 'repetitions',
    'methods', 'inert_features',
)


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


def logging_setup(verbosity=1, logfile=None, logger_name=None):
    logger = logging.getLogger(logger_name)
    log_level = (3 - verbosity) * 10
    fmt = '%(asctime)s - %(process)d - %(levelname)s - %(module)s - %(message)s'
    formatter = logging.Formatter(fmt)
    logger.setLevel(log_level)
    logger.propagate = False

    if logfile:
        file_handler = logging.FileHandler(logfile)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    else:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    logging.captureWarnings(True)


def _csv_list(cast):
    def parse(value):
        try:
            return [cast(item) for item in value.split(',') if item.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError('Invalid list {!r}'.format(value)) from None

    return parse


def _output(config, name):
    return os.path.join(config.output_dir, name)


def _simulation_inputs(config):
    scenario = parse_scenario_id(config.scenario)
    if config.model_spec:
        model = load_model_spec(config.model_spec)
        sampler = FeatureSampler.equicorrelated(model.n_features, config.rho or 0.0, config.seed)
    else:
        model = build_scenario(scenario)
        sampler = scenario_sampler(scenario, config.rho, config.seed)

    return scenario, model, sampler


def _simulate(config):
    scenario, model, sampler = _simulation_inputs(config)
    dataset, metadata = simulate_dataset(model, sampler, config.n, config.seed, config.t_max,
                                         scenario=scenario)

    outputs = [_output(config, 'dataset.csv'), _output(config, 'metadata.json')]
    write_dataset_csv(dataset, outputs[0])
    if config.split:
        train, test = dataset.train_test_split(config.test_size, config.seed)
        write_dataset_csv(train, _output(config, 'train.csv'))
        write_dataset_csv(test, _output(config, 'test.csv'))
        outputs += [_output(config, 'train.csv'), _output(config, 'test.csv')]
        metadata['split'] = {'train': train.n_samples, 'test': test.n_samples}

    write_json(metadata, outputs[1])
    LOGGER.info('Censoring rate: %.3f', metadata['censoring_rate'])
    return outputs, EXIT_SUCCESS


def _explain_inputs(config):
    """Resolve model, instance and imputer; failures here are usage errors."""
    scenario, model, sampler = _simulation_inputs(config)
    if config.dataset:
        dataset = load_dataset_csv(config.dataset)
        sampler = None
    else:
        dataset, _ = simulate_dataset(model, sampler, config.n, config.seed, config.t_max,
                                      scenario=scenario)

    if dataset.n_features != model.n_features and config.model != 'coxph':
        raise ValueError('The dataset has {} features but the model {}'.format(
            dataset.n_features, model.n_features))

    if config.observation is not None:
        instance = np.asarray(config.observation, dtype=float)
        if instance.size != dataset.n_features:
            raise ValueError('The observation has {} values for {} features'.format(
                instance.size, dataset.n_features))
    elif config.instance >= dataset.n_samples:
        raise ValueError('Instance {} is out of range for {} rows'.format(
            config.instance, dataset.n_samples))
    else:
        instance = dataset.features[config.instance]

    background = dataset.features
    if config.background_size and config.background_size < dataset.n_samples:
        rows = rng_stream(config.seed, RngPurpose.BACKGROUND).choice(
            dataset.n_samples, config.background_size, replace=False)
        background = background[np.sort(rows)]

    if config.imputer == 'conditional':
        if sampler is not None:
            mean, covariance = sampler.mean, sampler.covariance
        else:
            mean, covariance = background.mean(axis=0), np.cov(background, rowvar=False)

        imputer = ConditionalGaussianImputer(mean, covariance, config.conditional_samples,
                                             config.seed)
    else:
        imputer = MarginalImputer(background)

    return {
        'model': model,
        'dataset': dataset,
        'instance': instance,
        'imputer': imputer,
    }


def _explain(config, model, dataset, instance, imputer):
    outputs = []
    if config.model == 'coxph':
        model = fit_coxph(dataset)
        outputs.append(_output(config, 'coxph.json'))
        write_json(model.to_dict(), outputs[-1])

    target = PredictionTarget.parse(config.target)
    grid = build_time_grid(config.t_max, config.timepoints)
    game = build_game(model, instance, imputer, grid, target, config.integration)

    approximator = None if config.method == 'exact' else config.approximator_config()
    explanation, result = explain(game, config.order, config.method, approximator,
                                  threads=config.threads, return_result=True)

    outputs += [_output(config, 'explanation.csv'), _output(config, 'explanation.json')]
    write_explanation_csv(explanation, outputs[-2])
    write_explanation_json(explanation, outputs[-1])

    if result is not None:
        LOGGER.info('%s approximation: %s evaluations, rank %s of basis %s%s', result.method,
                    result.evaluations, result.rank, result.basis_size,
                    ', unstable' if result.unstable else '')
        outputs.append(_output(config, 'approximation.json'))
        write_json({
            'method': result.method,
            'evaluations': int(result.evaluations),
            'rank': None if result.rank is None else int(result.rank),
            'basis_size': None if result.basis_size is None else int(result.basis_size),
            'unstable': bool(result.unstable),
        }, outputs[-1])

    if config.smooth:
        smoothed = smooth_explanation(explanation, config.window, config.poly_order)
        outputs += [_output(config, 'smoothed.csv'), _output(config, 'smoothed.json')]
        write_explanation_csv(smoothed, outputs[-2])
        write_explanation_json(smoothed, outputs[-1])

    if config.plot:
        outputs += [_output(config, 'explanation.svg'), _output(config, 'plot-data.csv')]
        plot_explanation(explanation, outputs[-2], data_path=outputs[-1])

    for bits, (mean, std) in explanation.time_summary().items():
        LOGGER.info('    %s: mean %.4f, std %.4f', format_coalition(bits), mean, std)

    return outputs, EXIT_SUCCESS


def _validate(config):
    context = ValidationContext(
        seed=config.seed,
        n=config.n,
        timepoints=config.timepoints,
        t_max=config.t_max,
        instances=config.instances,
        survival_instances=config.survival_instances,
        tolerance=config.tolerance,
        threads=config.threads,
    )
    report = run_validation(context, config.only)
    outputs = write_report(report, config.output_dir)
    for check in report.checks:
        level = logging.INFO if check.passed else logging.WARNING
        LOGGER.log(level, '%s %s / %s: %.6g %s %.6g %s', 'PASS' if check.passed else 'FAIL',
                   check.suite, check.name, check.measured, check.comparison, check.threshold,
                   check.detail)

    return outputs, EXIT_SUCCESS if report.passed else EXIT_VALIDATION


def _benchmark(config):
    game = benchmark_game(parse_scenario_id(config.scenario), config.inert_features,
                          config.target, config.timepoints, config.background_size,
                          config.seed, config.t_max, config.integration)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', InstabilityWarning)
        results, exact, unstable = run_benchmark(game, config.order, config.budgets,
                                                 config.repetitions, config.methods,
                                                 config.seed, config.threads)
        full_errors = full_budget_errors(game, config.order, exact, config.methods,
                                         config.seed)

    basis_size = sum(1 for bits in coalition_iter(game.n_features, config.order) if bits)
    summary = summarize(results, unstable, basis_size, full_errors)

    outputs = [_output(config, 'benchmark.csv'), _output(config, 'benchmark-summary.json')]
    os.makedirs(config.output_dir, exist_ok=True)
    results.to_csv(outputs[0], index=False)
    write_json(summary, outputs[1])
    if config.plot:
        outputs.append(plot_benchmark(results, _output(config, 'benchmark.svg')))

    return outputs, EXIT_SUCCESS


def _no_inputs(config):
    return {}


def _flags(args):
    return {name: getattr(args, name, None) for name in CONFIG_FLAGS}


def get_parser():
    """
    $ survint simulate --scenario 1 --n 1000 --seed 7 -o output/
    $ survint explain --scenario 1 --observation=-1.2650,2.4162,-0.6436 --order 2
    $ survint validate --only marginal_dummy
    $ survint benchmark --budgets 64,128,256,512 --repetitions 30
    """

    # Common Parent - Shared options
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument('-l', '--logfile',
                      help='Name of the logfile. If not given, log to stderr.')
    base.add_argument('-v', '--verbose', action='count', default=0,
                      help='Be verbose. Use -vv for increased verbosity.')
    base.add_argument('-c', '--config', help='JSON config file or run manifest.')
    base.add_argument('-o', '--output-dir',
                      help='Output directory. Defaults to $SURVINT_OUTPUT_DIR.')
    base.add_argument('-s', '--seed', type=int, help='Random seed.')
    base.add_argument('-t', '--threads', type=int, help='Worker threads.')

    scenario = argparse.ArgumentParser(add_help=False, parents=[base])
    scenario.add_argument('--scenario', help='Simulation scenario: 1..10 or dep_demo.')
    scenario.add_argument('-n', '--n', type=int, help='Number of simulated observations.')
    scenario.add_argument('--rho', type=float, help='Feature correlation.')
    scenario.add_argument('--t-max', type=float, help='Administrative censoring time.')
    scenario.add_argument('--timepoints', type=int, help='Number of grid timepoints.')

    parser = ArgumentParser(description='survint Command Line Interface.')
    parser.set_defaults(function=None, prepare=_no_inputs)

    action = parser.add_subparsers(title='action', dest='action')
    action.required = True

    simulate = action.add_parser('simulate', help='Simulate a survival dataset',
                                 parents=[scenario])
    simulate.set_defaults(function=_simulate)
    simulate.add_argument('--split', action='store_true', default=None,
                          help='Also write the train/test split.')
    simulate.add_argument('--test-size', type=float, help='Test fraction of the split.')

    explain_parser = action.add_parser('explain', help='Explain one instance',
                                       parents=[scenario])
    explain_parser.set_defaults(function=_explain, prepare=_explain_inputs)
    explain_parser.add_argument('--dataset', help='Dataset CSV instead of simulating one.')
    explain_parser.add_argument('--model-spec', help='Ground-truth model JSON.')
    explain_parser.add_argument('--model', choices=['ground_truth', 'coxph'])
    explain_parser.add_argument('-i', '--instance', type=int, help='Row of the dataset.')
    explain_parser.add_argument('--observation', type=_csv_list(float),
                                help='Comma separated feature values.')
    explain_parser.add_argument('--target', help='loghazard, hazard or survival.')
    explain_parser.add_argument('-k', '--order', type=int, help='Explanation order.')
    explain_parser.add_argument('-m', '--method',
                                help='exact, montecarlo, permutation or regression.')
    explain_parser.add_argument('-b', '--budget', type=int, help='Coalition budget.')
    explain_parser.add_argument('--strict', action='store_true', default=None,
                                help='Fail on rank-deficient regression designs.')
    explain_parser.add_argument('--per-timepoint', dest='share_samples', action='store_false',
                                default=None, help='Sample coalitions per timepoint.')
    explain_parser.add_argument('--integration', choices=['quadrature', 'analytic'])
    explain_parser.add_argument('--imputer', choices=['marginal', 'conditional'])
    explain_parser.add_argument('--background-size', type=int)
    explain_parser.add_argument('--conditional-samples', type=int)
    explain_parser.add_argument('--smooth', action='store_true', default=None,
                                help='Also write Savitzky-Golay smoothed curves.')
    explain_parser.add_argument('--window', type=int)
    explain_parser.add_argument('--poly-order', type=int)
    explain_parser.add_argument('--plot', action='store_true', default=None,
                                help='Write an SVG line plot and its data.')

    validate = action.add_parser('validate', help='Run the validation suites',
                                 parents=[scenario])
    validate.set_defaults(function=_validate)
    validate.add_argument('--only', action='append', choices=SUITE_NAMES + tuple(SUITE_ALIASES),
                          help='Suite to run. Can be used multiple times.')
    validate.add_argument('--tolerance', type=float,
                          help='Override every upper-bound tolerance.')
    validate.add_argument('--instances', type=int,
                          help='Explained instances of the local accuracy suite.')
    validate.add_argument('--survival-instances', type=int,
                          help='Survival local accuracy instances, all by default.')

    benchmark = action.add_parser('benchmark', help='Approximation error against budget',
                                  parents=[scenario])
    benchmark.set_defaults(function=_benchmark)
    benchmark.add_argument('--target')
    benchmark.add_argument('-k', '--order', type=int)
    benchmark.add_argument('--budgets', type=_csv_list(int),
                           help='Comma separated budgets.')
    benchmark.add_argument('--repetitions', type=int)
    benchmark.add_argument('--methods', type=_csv_list(str),
                           help='Comma separated approximation methods.')
    benchmark.add_argument('--background-size', type=int)
    benchmark.add_argument('--inert-features', type=int)
    benchmark.add_argument('--integration', choices=['quadrature', 'analytic'])
    benchmark.add_argument('--plot', action='store_true', default=None)

    return parser


def run(args):
    """Execute a parsed command and return its exit code."""
    try:
        config = build_config(args.action, args.config, **_flags(args))
        inputs = args.prepare(config)
    except (ValueError, KeyError, OSError) as error:
        LOGGER.error('Invalid configuration: %s', error)
        return EXIT_USAGE
    except SurvintError as error:
        LOGGER.exception('Computation failed: %s', error)
        return EXIT_COMPUTATION

    try:
        outputs, code = args.function(config, **inputs)
    except (SurvintError, ValueError, ArithmeticError, MemoryError, OSError) as error:
        LOGGER.exception('Computation failed: %s', error)
        return EXIT_COMPUTATION

    write_manifest(config, outputs)
    return code


def main(argv=None):
    parser = get_parser()
    args = parser.parse_args(argv)

    logging_setup(args.verbose, args.logfile)

    sys.exit(run(args))


if __name__ == '__main__':
    main()
