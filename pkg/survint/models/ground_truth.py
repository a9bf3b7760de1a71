# -*- coding: utf-8 -*-

"""survint.models.ground_truth module.

Multiplicative hazard models ``h(t|x) = lambda * exp(G(t|x))`` whose risk score ``G`` is a
sum of feature-subset terms ``beta_M * prod_j g_j(x_j) * l(t)``.
"""

import json
import logging
import os
import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import integrate

from survint.core import PredictionTarget, coalition_size, encode
from survint.exceptions import NonFiniteError, QuadratureError

LOGGER = logging.getLogger(__name__)

TIME_MODIFIERS = ('constant', 'log1p')
INTEGRATION_METHODS = ('quadrature', 'analytic')
QUADRATURE_TOLERANCE = 1e-10

_ARCTAN = re.compile(r'^scaled_arctan\(\s*([-+0-9.eE]+)\s*\)$')


def parse_transform(tag):
    """Parse a transform tag into ``(name, parameter)``.

    Accepted tags are ``identity``, ``square`` and ``scaled_arctan(a)``.
    """
    tag = str(tag).strip()
    if tag in ('identity', 'square'):
        return tag, None

    match = _ARCTAN.match(tag)
    if match:
        return 'scaled_arctan', float(match.group(1))

    raise ValueError('Unknown feature transform {!r}'.format(tag))


def apply_transform(tag, values):
    name, parameter = parse_transform(tag)
    if name == 'identity':
        return values
    if name == 'square':
        return values ** 2

    return 2 / np.pi * np.arctan(parameter * values)


@dataclass(frozen=True)
class RiskTerm:
    """One additive term ``beta * prod_j g_j(x_j) * l(t)`` of the risk score."""

    features: Tuple[int, ...]
    coefficient: float
    transforms: Tuple[str, ...] = None
    time_modifier: str = 'constant'

    def __post_init__(self):
        features = tuple(int(feature) for feature in self.features)
        if not features:
            raise ValueError('A risk term needs at least one feature')

        if len(set(features)) != len(features) or min(features) < 0:
            raise ValueError('Invalid risk term features {}'.format(features))

        transforms = self.transforms
        if transforms is None:
            transforms = ('identity', ) * len(features)

        transforms = tuple(str(tag) for tag in transforms)
        if len(transforms) != len(features):
            raise ValueError('A risk term needs one transform per feature')

        for tag in transforms:
            parse_transform(tag)

        if self.time_modifier not in TIME_MODIFIERS:
            raise ValueError('Unknown time modifier {!r}'.format(self.time_modifier))

        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'coefficient', float(self.coefficient))
        object.__setattr__(self, 'transforms', transforms)

    @property
    def subset(self):
        return encode(self.features)

    @property
    def time_dependent(self):
        return self.time_modifier != 'constant'

    def feature_part(self, X):
        """``beta * prod_j g_j(x_j)`` for every row of ``X``."""
        value = np.full(X.shape[0], self.coefficient)
        for feature, tag in zip(self.features, self.transforms):
            value = value * apply_transform(tag, X[:, feature])

        return value


@dataclass(frozen=True)
class RiskScoreSpec:
    """Term-based specification of the risk score ``G(t|x)``."""

    n_features: int
    terms: Tuple[RiskTerm, ...] = ()

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError('n_features must be positive')

        terms = tuple(self.terms)
        for term in terms:
            if max(term.features) >= self.n_features:
                raise ValueError('Term on features {} does not fit in {} features'.format(
                    term.features, self.n_features))

        object.__setattr__(self, 'terms', terms)

    @property
    def time_independent(self):
        return not any(term.time_dependent for term in self.terms)

    def time_dependent_subsets(self):
        """Ground-truth set of coalitions with a time-dependent effect."""
        return frozenset(term.subset for term in self.terms if term.time_dependent)

    def check_features(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError('Expected {} features, got {}'.format(self.n_features, X.shape[1]))

        return X

    def parts(self, X):
        """Split ``G(t|x) = a(x) + b(x) * log(t + 1)`` into its two row vectors."""
        X = self.check_features(X)
        constant = np.zeros(X.shape[0])
        slope = np.zeros(X.shape[0])
        for term in self.terms:
            if term.time_dependent:
                slope = slope + term.feature_part(X)
            else:
                constant = constant + term.feature_part(X)

        return constant, slope

    def evaluate(self, X, times):
        """``G(t|x)`` as a ``(rows, timepoints)`` matrix."""
        constant, slope = self.parts(X)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return constant[:, None] + slope[:, None] * np.log1p(times)[None, :]


def eval_risk_score(risk, x, t):
    """Evaluate the risk score of a single instance at a single time.

    Args:
        risk (RiskScoreSpec):
            Risk score specification.
        x (array-like):
            Feature vector of length ``p``.
        t (float):
            Time, ``t >= 0``.

    Returns:
        float
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != risk.n_features:
        raise ValueError('Expected {} features, got {}'.format(risk.n_features, x.size))

    if t < 0:
        raise ValueError('Times must be non-negative, got {}'.format(t))

    return float(risk.evaluate(x[None, :], [t])[0, 0])


def _check_times(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError('Times must be non-negative')

    return times


def _check_finite(values, quantity):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError('Non-finite {} encountered'.format(quantity), quantity)

    return values


class GroundTruthModel:
    """Constant baseline hazard combined with a risk score specification.

    Args:
        baseline_hazard (float):
            Constant baseline hazard ``lambda > 0``.
        risk (RiskScoreSpec):
            Risk score ``G(t|x)``.
        name (str):
            Optional label, used in logs and metadata.
    """

    def __init__(self, baseline_hazard, risk, name=None):
        if not baseline_hazard > 0:
            raise ValueError('The baseline hazard must be positive, got {}'.format(
                baseline_hazard))

        self.baseline_hazard = float(baseline_hazard)
        self.risk = risk
        self.name = name

    def __repr__(self):
        return 'GroundTruthModel(name={!r}, lambda={}, terms={})'.format(
            self.name, self.baseline_hazard, len(self.risk.terms))

    @property
    def n_features(self):
        return self.risk.n_features

    def log_hazard(self, X, times):
        return np.log(self.baseline_hazard) + self.risk.evaluate(X, times)

    def hazard(self, X, times):
        with np.errstate(over='ignore'):
            values = self.baseline_hazard * np.exp(self.risk.evaluate(X, times))

        return _check_finite(values, 'hazard')

    def cumulative_hazard(self, X, times, integration='quadrature'):
        """Integrate the hazard over ``[0, t]`` for every row and timepoint.

        Time-independent risk scores use the closed form ``lambda * t * exp(G(x))``.
        Otherwise ``integration`` selects adaptive Gauss-Kronrod quadrature with absolute
        tolerance ``1e-10`` or the closed-form antiderivative of
        ``exp(a + b * log(u + 1))``.

        Args:
            X (np.ndarray):
                Feature matrix.
            times (array-like):
                Non-negative times.
            integration (str):
                ``quadrature`` or ``analytic``.

        Returns:
            np.ndarray:
                ``(rows, timepoints)`` cumulative hazards.

        Raises:
            QuadratureError:
                If the quadrature did not reach the tolerance.
        """
        times = _check_times(times)
        constant, slope = self.risk.parts(X)
        return self._integrate(constant[:, None], slope[:, None], times[None, :], integration)

    def paired_cumulative_hazard(self, X, times, integration='quadrature'):
        """Cumulative hazard of row ``i`` at its own time ``times[i]``."""
        times = _check_times(times)
        constant, slope = self.risk.parts(X)
        if times.size != constant.size:
            raise ValueError('Expected one time per row')

        return self._integrate(constant, slope, times, integration)

    def _integrate(self, constant, slope, times, integration):
        if integration not in INTEGRATION_METHODS:
            raise ValueError('Unknown integration method {!r}'.format(integration))

        with np.errstate(over='ignore'):
            scale = self.baseline_hazard * np.exp(constant)

        _check_finite(scale, 'hazard')
        if self.risk.time_independent or not np.any(slope):
            return scale * times

        if integration == 'analytic':
            power = slope + 1
            log_time = np.log1p(times)
            safe_power = np.where(np.abs(power) > 1e-12, power, 1.0)
            with np.errstate(over='ignore'):
                integral = np.where(
                    np.abs(power) > 1e-12,
                    np.expm1(power * log_time) / safe_power,
                    log_time,
                )

            return _check_finite(scale * integral, 'cumulative hazard')

        def integrand(s):
            with np.errstate(over='ignore'):
                return times * scale * np.exp(slope * np.log1p(s * times))

        values, residual, info = integrate.quad_vec(
            integrand, 0.0, 1.0, epsabs=QUADRATURE_TOLERANCE, epsrel=1e-12, norm='max',
            full_output=True)

        _check_finite(values, 'cumulative hazard')
        if not info.success:
            raise QuadratureError(
                'Quadrature did not converge: {} (residual {:.3g})'.format(
                    info.message, residual), residual)

        LOGGER.debug('Quadrature over %s values used %s intervals, residual %.3g',
                     np.size(values), len(info.intervals), residual)
        return values

    def survival(self, X, times, integration='quadrature'):
        return np.exp(-self.cumulative_hazard(X, times, integration))

    def predict(self, X, times, target=PredictionTarget.SURVIVAL, integration='quadrature'):
        """Evaluate a prediction target as a ``(rows, timepoints)`` matrix."""
        target = PredictionTarget.parse(target)
        if target is PredictionTarget.LOG_HAZARD:
            return self.log_hazard(X, times)
        if target is PredictionTarget.HAZARD:
            return self.hazard(X, times)

        return self.survival(X, times, integration)

    def to_dict(self):
        return {
            'p': self.n_features,
            'lambda': self.baseline_hazard,
            'terms': [
                {
                    'features': [feature + 1 for feature in term.features],
                    'beta': term.coefficient,
                    'transforms': list(term.transforms),
                    'time': term.time_modifier,
                }
                for term in self.risk.terms
            ],
        }

    @classmethod
    def from_dict(cls, data, name=None):
        terms = [
            RiskTerm(
                tuple(int(feature) - 1 for feature in term['features']),
                term['beta'],
                tuple(term.get('transforms') or ['identity'] * len(term['features'])),
                term.get('time', 'constant'),
            )
            for term in data.get('terms', [])
        ]
        return cls(data['lambda'], RiskScoreSpec(int(data['p']), tuple(terms)), name=name)

    def term_orders(self):
        return sorted({coalition_size(term.subset) for term in self.risk.terms})


def eval_target(model, target, x, t, integration='quadrature'):
    """Evaluate a prediction target of a ground-truth model for one instance and time."""
    if t < 0:
        raise ValueError('Times must be non-negative, got {}'.format(t))

    x = np.asarray(x, dtype=float).ravel()
    return float(model.predict(x[None, :], [t], target, integration)[0, 0])


def cumulative_hazard(model, x, t, integration='quadrature'):
    """Cumulative hazard ``int_0^t h(u|x) du`` of one instance."""
    x = np.asarray(x, dtype=float).ravel()
    return float(model.cumulative_hazard(x[None, :], [t], integration)[0, 0])


def load_model_spec(path, name=None):
    """Load a ``GroundTruthModel`` from its JSON specification."""
    with open(path) as spec_file:
        data = json.load(spec_file)

    model = GroundTruthModel.from_dict(data, name=name or os.path.basename(path))
    LOGGER.info('Loaded model %s with %s terms', model.name, len(model.risk.terms))
    return model
