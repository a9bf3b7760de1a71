# -*- coding: utf-8 -*-

"""survint.simulation module.

Scenario catalog, correlated Gaussian feature sampling, event-time simulation by inversion
of the cumulative hazard and administrative censoring.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from survint.core import RngPurpose, SurvivalDataset, rng_stream
from survint.models.ground_truth import GroundTruthModel, RiskScoreSpec, RiskTerm

LOGGER = logging.getLogger(__name__)

BASELINE_HAZARD = 0.03
BETA_1 = 0.4
BETA_2 = -0.8
BETA_3 = -0.6
BETA_12 = -0.5
BETA_13 = 0.2
ARCTAN = 'scaled_arctan(0.7)'

DEP_DEMO = 'dep_demo'
DEP_DEMO_BETA_1 = 0.8
DEP_DEMO_BETA_2 = -0.4
DEP_DEMO_RHO = 0.9

SCENARIO_IDS = tuple(range(1, 11)) + (DEP_DEMO, )

T_MAX = 70.0
MAX_EVENT_TIME = 1e6
ROOT_TOLERANCE = 1e-9


def _term(features, beta, transforms=None, time='constant'):
    return RiskTerm(tuple(feature - 1 for feature in features), beta, transforms, time)


def _linear(x1_time='constant'):
    return [
        _term([1], BETA_1, time=x1_time),
        _term([2], BETA_2),
        _term([3], BETA_3),
    ]


def _additive(x1_time='constant'):
    return [
        _term([1], BETA_1, ['square'], x1_time),
        _term([2], BETA_2, [ARCTAN]),
        _term([3], BETA_3),
    ]


def _interactions(x13_time='constant'):
    return [
        _term([1, 2], BETA_12),
        _term([1, 3], BETA_13, ['identity', 'square'], x13_time),
    ]


_SCENARIOS = {
    1: lambda: _linear(),
    2: lambda: _linear('log1p'),
    3: lambda: _linear() + [_term([1, 3], BETA_13)],
    4: lambda: _linear('log1p') + [_term([1, 3], BETA_13)],
    5: lambda: _linear() + [_term([1, 3], BETA_13, time='log1p')],
    6: lambda: _additive(),
    7: lambda: _additive('log1p'),
    8: lambda: _additive() + _interactions(),
    9: lambda: _additive('log1p') + _interactions(),
    10: lambda: _additive() + _interactions('log1p'),
    DEP_DEMO: lambda: [
        _term([1], DEP_DEMO_BETA_1, time='log1p'),
        _term([2], DEP_DEMO_BETA_2),
    ],
}


def parse_scenario_id(value):
    """Parse ``1``..``10`` or ``dep_demo`` from an int or a string."""
    if isinstance(value, str):
        value = value.strip()
        if value == DEP_DEMO:
            return DEP_DEMO

        try:
            value = int(value)
        except ValueError:
            raise ValueError('Unknown scenario {!r}'.format(value)) from None

    if value not in _SCENARIOS:
        raise ValueError('Unknown scenario {!r}; use 1..10 or {}'.format(value, DEP_DEMO))

    return value


def build_scenario(scenario):
    """Build the ground-truth model of a simulation scenario.

    Args:
        scenario (int or str):
            ``1``..``10`` or ``dep_demo``.

    Returns:
        GroundTruthModel

    Raises:
        KeyError:
            If the scenario is unknown.
    """
    if scenario not in _SCENARIOS:
        raise KeyError('Unknown scenario {!r}'.format(scenario))

    terms = _SCENARIOS[scenario]()
    model = GroundTruthModel(BASELINE_HAZARD, RiskScoreSpec(3, tuple(terms)),
                             name='scenario-{}'.format(scenario))
    LOGGER.debug('Built %s', model)
    return model


def extend_with_inert_features(model, extra):
    """Same risk score over ``extra`` additional features that appear in no term."""
    if extra < 0:
        raise ValueError('extra must be non-negative')

    risk = RiskScoreSpec(model.n_features + extra, model.risk.terms)
    name = '{}+{}'.format(model.name, extra) if model.name else None
    return GroundTruthModel(model.baseline_hazard, risk, name=name)


@dataclass(frozen=True, eq=False)
class FeatureSampler:
    """Multivariate normal feature distribution with a fixed seed.

    The covariance must be symmetric positive-definite with unit diagonal. ``rho`` is
    informative only and ends up in the simulation metadata.
    """

    n_features: int
    covariance: np.ndarray = None
    mean: np.ndarray = None
    seed: int = 0
    rho: float = None

    def __post_init__(self):
        p = int(self.n_features)
        if p < 1:
            raise ValueError('n_features must be positive')

        covariance = np.eye(p) if self.covariance is None else np.array(
            self.covariance, dtype=float)
        mean = np.zeros(p) if self.mean is None else np.array(self.mean, dtype=float).ravel()

        if covariance.shape != (p, p) or mean.shape != (p, ):
            raise ValueError('Mean and covariance must match {} features'.format(p))

        if not np.allclose(covariance, covariance.T, atol=1e-12):
            raise ValueError('The covariance must be symmetric')

        if not np.allclose(np.diag(covariance), 1.0):
            raise ValueError('The covariance must have unit diagonal')

        try:
            cholesky = np.linalg.cholesky(covariance)
        except np.linalg.LinAlgError:
            raise ValueError('The covariance is not positive-definite') from None

        for array in (covariance, mean, cholesky):
            array.setflags(write=False)

        object.__setattr__(self, 'n_features', p)
        object.__setattr__(self, 'covariance', covariance)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cholesky', cholesky)

    @classmethod
    def equicorrelated(cls, n_features, rho=0.0, seed=0):
        covariance = np.full((n_features, n_features), float(rho))
        np.fill_diagonal(covariance, 1.0)
        return cls(n_features, covariance, seed=seed, rho=float(rho))


def sample_features(sampler, n):
    """Draw ``n`` rows through the Cholesky factor of the sampler covariance."""
    if int(n) != n or n < 1:
        raise ValueError('n must be a positive integer, got {}'.format(n))

    rng = rng_stream(sampler.seed, RngPurpose.FEATURES)
    normals = rng.standard_normal((int(n), sampler.n_features))
    return sampler.mean + normals @ sampler.cholesky.T


def scenario_sampler(scenario, rho=None, seed=0, n_features=None):
    """Generating feature distribution of a scenario.

    Numbered scenarios use unit variances with pairwise correlation ``rho`` (default 0).
    ``dep_demo`` correlates ``x1`` and ``x3`` with ``rho`` (default 0.9) and keeps ``x2``
    independent.
    """
    if scenario == DEP_DEMO:
        rho = DEP_DEMO_RHO if rho is None else float(rho)
        covariance = np.eye(3)
        covariance[0, 2] = covariance[2, 0] = rho
        return FeatureSampler(3, covariance, seed=seed, rho=rho)

    if scenario not in _SCENARIOS:
        raise KeyError('Unknown scenario {!r}'.format(scenario))

    return FeatureSampler.equicorrelated(n_features or 3, rho or 0.0, seed)


def _check_uniform(u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError('Uniform draws must lie in (0, 1)')

    return u


def simulate_event_time(model, x, u, method='auto', integration='quadrature'):
    """Solve ``H(T|x) = -log(u)`` for one instance.

    Args:
        model (GroundTruthModel):
            Data generating model.
        x (array-like):
            Feature vector.
        u (float):
            Uniform draw in ``(0, 1)``.
        method (str):
            ``auto`` uses the closed form for time-independent risk scores and root
            finding otherwise, ``root`` always finds the root.
        integration (str):
            Cumulative hazard integration used by the root finder.

    Returns:
        float:
            The event time, ``inf`` when ``H`` does not reach ``-log(u)`` before ``1e6``.
    """
    u = float(_check_uniform(u))
    x = np.asarray(x, dtype=float).ravel()[None, :]
    target = -np.log(u)

    if method == 'auto' and model.risk.time_independent:
        constant, _ = model.risk.parts(x)
        return float(target / (model.baseline_hazard * np.exp(constant[0])))

    if method not in ('auto', 'root'):
        raise ValueError('Unknown method {!r}'.format(method))

    def excess(time):
        return model.cumulative_hazard(x, [time], integration)[0, 0] - target

    upper = 1.0
    while excess(upper) < 0:
        upper *= 2
        if upper > MAX_EVENT_TIME:
            LOGGER.debug('No bracket below %s for u=%s', MAX_EVENT_TIME, u)
            return np.inf

    lower = 0.0 if upper == 1.0 else upper / 2
    return optimize.brentq(excess, lower, upper, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def simulate_event_times(model, X, u, method='auto', integration='quadrature'):
    """Vectorised ``simulate_event_time`` over the rows of ``X``.

    Root finding doubles every row's bracket from ``T = 1`` and then bisects all rows at
    once until ``|H(T) + log(u)| < 1e-9``.
    """
    u = _check_uniform(u).ravel()
    X = model.risk.check_features(X)
    target = -np.log(u)

    if method == 'auto' and model.risk.time_independent:
        constant, _ = model.risk.parts(X)
        return target / (model.baseline_hazard * np.exp(constant))

    if method not in ('auto', 'root'):
        raise ValueError('Unknown method {!r}'.format(method))

    def excess(times, rows):
        return model.paired_cumulative_hazard(X[rows], times, integration) - target[rows]

    everyone = np.arange(X.shape[0])
    upper = np.ones(X.shape[0])
    growing = everyone[excess(upper, everyone) < 0]
    while growing.size:
        upper[growing] *= 2
        growing = growing[upper[growing] <= MAX_EVENT_TIME]
        growing = growing[excess(upper[growing], growing) < 0]

    unbounded = upper > MAX_EVENT_TIME
    lower = np.where(upper == 1.0, 0.0, upper / 2)
    LOGGER.debug('Brackets found, %s rows beyond %s', unbounded.sum(), MAX_EVENT_TIME)

    times = upper.copy()
    active = everyone[~unbounded]
    for _ in range(200):
        if not active.size:
            break

        middle = (lower[active] + upper[active]) / 2
        residual = excess(middle, active)
        times[active] = middle
        below = residual < 0
        lower[active[below]] = middle[below]
        upper[active[~below]] = middle[~below]

        width = upper[active] - lower[active]
        scale = np.maximum(1.0, upper[active])
        done = ((np.abs(residual) < ROOT_TOLERANCE) & (width <= 1e-10 * scale)) | (
            width <= 1e-15 * scale)
        active = active[~done]

    times[unbounded] = np.inf
    return times


def apply_censoring(times, t_max=T_MAX):
    """Administrative censoring: ``y = min(t, t_max)`` and ``delta = 1`` iff ``t < t_max``."""
    if not t_max > 0:
        raise ValueError('t_max must be positive, got {}'.format(t_max))

    times = np.asarray(times, dtype=float)
    return np.minimum(times, t_max), (times < t_max).astype(int)


def simulate_dataset(model, sampler, n=1000, seed=None, t_max=T_MAX, scenario=None,
                     method='auto', integration='quadrature'):
    """Simulate a censored survival dataset from a ground-truth model.

    Args:
        model (GroundTruthModel):
            Data generating model.
        sampler (FeatureSampler):
            Feature distribution; its seed drives the feature stream.
        n (int):
            Number of observations.
        seed (int):
            Seed of the event-time stream, the sampler seed by default.
        t_max (float):
            Administrative censoring time.
        scenario:
            Label recorded in the metadata.

    Returns:
        tuple:
            ``(SurvivalDataset, metadata)``.
    """
    if sampler.n_features != model.n_features:
        raise ValueError('The sampler draws {} features but the model uses {}'.format(
            sampler.n_features, model.n_features))

    seed = sampler.seed if seed is None else seed
    X = sample_features(sampler, n)
    u = rng_stream(seed, RngPurpose.EVENT_TIMES).uniform(size=int(n))
    # uniform() can return exactly 0
    u = np.clip(u, np.finfo(float).tiny, None)

    event_times = simulate_event_times(model, X, u, method, integration)
    times, events = apply_censoring(event_times, t_max)
    dataset = SurvivalDataset(X, times, events)

    metadata = {
        'scenario': scenario if scenario is not None else model.name,
        'seed': int(seed),
        'n': int(n),
        'rho': sampler.rho,
        't_max': float(t_max),
        'censoring_rate': dataset.censoring_rate,
    }
    LOGGER.info('Simulated %s observations from %s, censoring rate %.3f', n, model.name,
                dataset.censoring_rate)
    return dataset, metadata
