# -*- coding: utf-8 -*-

"""survint.models.coxph module.

Cox proportional hazards fitter with Breslow tie handling and Breslow cumulative baseline.
"""

import logging
import warnings

import numpy as np
from scipy import linalg

from survint.core import SurvivalDataset
from survint.exceptions import ConvergenceError, ConvergenceWarning

LOGGER = logging.getLogger(__name__)

MAX_ITERATIONS = 100
STEP_TOLERANCE = 1e-9
GRADIENT_TOLERANCE = 1e-8
SEPARATION_NORM = 100.0


class CoxModel:
    """Fitted Cox model ``h(t|x) = h0(t) * exp((x - mean) @ beta)``.

    Args:
        beta (array-like):
            Coefficients.
        baseline_times (array-like):
            Distinct event times, increasing.
        baseline_hazard (array-like):
            Breslow cumulative baseline hazard at ``baseline_times``.
        mean (array-like):
            Centering vector, zeros if not given.
        standard_errors (array-like):
            Standard errors from the observed information, optional.
    """

    def __init__(self, beta, baseline_times, baseline_hazard, mean=None,
                 standard_errors=None, trace=None):
        self.beta = np.asarray(beta, dtype=float).ravel()
        self.baseline_times = np.asarray(baseline_times, dtype=float).ravel()
        self.baseline_hazard = np.asarray(baseline_hazard, dtype=float).ravel()
        if mean is None:
            mean = np.zeros_like(self.beta)

        self.mean = np.asarray(mean, dtype=float).ravel()
        self.standard_errors = (
            None if standard_errors is None else np.asarray(standard_errors, dtype=float))
        self.trace = list(trace or [])

        if self.baseline_times.size != self.baseline_hazard.size:
            raise ValueError('Baseline times and values must have the same length')

        if np.any(np.diff(self.baseline_hazard) < 0) or np.any(self.baseline_hazard < 0):
            raise ValueError('The cumulative baseline hazard must be non-negative and '
                             'non-decreasing')

        if self.mean.size != self.beta.size:
            raise ValueError('The centering vector must match the coefficients')

    @property
    def n_features(self):
        return self.beta.size

    def _check_features(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError('Expected {} features, got {}'.format(self.n_features, X.shape[1]))

        return X

    def predict_risk(self, X):
        """Centered linear predictor ``(x - mean) @ beta`` of every row."""
        return (self._check_features(X) - self.mean) @ self.beta

    def cumulative_baseline(self, times):
        """Right-continuous step interpolation of ``H0``, flat after the last event time."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times < 0):
            raise ValueError('Times must be non-negative')

        index = np.searchsorted(self.baseline_times, times, side='right')
        padded = np.concatenate([[0.0], self.baseline_hazard])
        return padded[index]

    def predict(self, X, times):
        """Survival matrix ``exp(-H0(t) * exp(risk))`` of shape ``(rows, timepoints)``."""
        risk = np.exp(self.predict_risk(X))
        return np.exp(-risk[:, None] * self.cumulative_baseline(times)[None, :])

    def to_dict(self):
        return {
            'beta': self.beta.tolist(),
            'baseline': [[t, h] for t, h in zip(self.baseline_times.tolist(),
                                                 self.baseline_hazard.tolist())],
            'mean': self.mean.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        baseline = np.asarray(data['baseline'], dtype=float).reshape(-1, 2)
        return cls(data['beta'], baseline[:, 0], baseline[:, 1], data.get('mean'))


def _partial_likelihood(X, times, events, beta):
    """Breslow log partial likelihood with its gradient and Hessian.

    Rows must be sorted by decreasing time so that risk sets are prefixes.
    """
    eta = X @ beta
    risk = np.exp(eta)
    weighted = risk[:, None] * X

    # cumulative sums over the prefix up to the last row of each tied block
    s0 = np.cumsum(risk)
    s1 = np.cumsum(weighted, axis=0)
    s2 = np.cumsum(weighted[:, :, None] * X[:, None, :], axis=0)
    last = _last_of_ties(times)
    s0, s1, s2 = s0[last], s1[last], s2[last]

    mask = events == 1
    mean = s1[mask] / s0[mask, None]
    loglik = np.sum(eta[mask] - np.log(s0[mask]))
    gradient = np.sum(X[mask] - mean, axis=0)
    hessian = -np.sum(
        s2[mask] / s0[mask, None, None] - mean[:, :, None] * mean[:, None, :], axis=0)

    return loglik, gradient, hessian


def _last_of_ties(times):
    """Index of the last row sharing each row's time, for times sorted decreasingly."""
    n = times.size
    is_last = np.ones(n, dtype=bool)
    is_last[:-1] = times[:-1] != times[1:]
    positions = np.where(is_last, np.arange(n), n)
    return np.minimum.accumulate(positions[::-1])[::-1]


def fit_coxph(data, max_iterations=MAX_ITERATIONS, tolerance=STEP_TOLERANCE,
              gradient_tolerance=GRADIENT_TOLERANCE):
    """Fit a Cox model with Newton-Raphson on the Breslow partial likelihood.

    Features are centered at their training means before fitting.

    Args:
        data (SurvivalDataset):
            Training data, with at least one event.
        max_iterations (int):
            Maximum number of Newton steps.
        tolerance (float):
            Convergence threshold on the norm of the Newton step.
        gradient_tolerance (float):
            Convergence threshold on the norm of the score, required together with the
            step threshold.

    Returns:
        CoxModel

    Raises:
        ValueError:
            If a feature column is constant.
        ConvergenceError:
            If the iteration does not converge or the coefficients diverge.
    """
    if not isinstance(data, SurvivalDataset):
        raise ValueError('fit_coxph expects a SurvivalDataset')

    X = data.features
    if np.any(np.ptp(X, axis=0) == 0):
        constant = np.flatnonzero(np.ptp(X, axis=0) == 0) + 1
        raise ValueError('Constant feature columns {} cannot be fitted'.format(
            constant.tolist()))

    mean = X.mean(axis=0)
    order = np.lexsort((data.events, -data.times))
    Xc = (X - mean)[order]
    times = data.times[order]
    events = data.events[order]

    beta = np.zeros(X.shape[1])
    loglik, gradient, hessian = _partial_likelihood(Xc, times, events, beta)
    trace = [(0, loglik, float(np.linalg.norm(gradient)), 0.0)]
    converged = False
    for iteration in range(1, max_iterations + 1):
        try:
            step = linalg.solve(-hessian, gradient, assume_a='pos')
        except (linalg.LinAlgError, ValueError):
            raise ConvergenceError('Singular information matrix at iteration {}'.format(
                iteration), trace) from None

        # separated data keep taking full steps while the gradient vanishes
        if np.linalg.norm(step) < tolerance and np.linalg.norm(gradient) < gradient_tolerance:
            converged = True
            break

        step_size = 1.0
        while True:
            candidate = beta + step_size * step
            new_loglik, new_gradient, new_hessian = _partial_likelihood(
                Xc, times, events, candidate)
            if np.isfinite(new_loglik) and new_loglik >= loglik - 1e-12:
                break

            step_size /= 2
            if step_size < 1e-10:
                raise ConvergenceError('Step halving failed at iteration {}'.format(iteration),
                                       trace)

        beta, loglik, gradient, hessian = candidate, new_loglik, new_gradient, new_hessian
        beta_norm = float(np.linalg.norm(beta))
        trace.append((iteration, loglik, float(np.linalg.norm(gradient)), beta_norm))
        LOGGER.debug('Newton step %s: loglik=%.10g gradient=%.3g step=%s', iteration, loglik,
                     trace[-1][2], step_size)

        if beta_norm > SEPARATION_NORM:
            raise ConvergenceError(
                'Coefficient norm {:.3g} diverges: the data looks separable'.format(beta_norm),
                trace)

    if not converged:
        raise ConvergenceError('Newton-Raphson did not converge in {} iterations'.format(
            max_iterations), trace)

    try:
        covariance = np.linalg.inv(-hessian)
        standard_errors = np.sqrt(np.diag(covariance))
    except np.linalg.LinAlgError:
        warnings.warn('Information matrix is singular; standard errors unavailable',
                      ConvergenceWarning)
        standard_errors = None

    baseline_times, baseline_hazard = breslow_baseline(
        Xc, times, events, beta)

    LOGGER.info('Cox model converged after %s iterations, loglik=%.6g', len(trace) - 1,
                loglik)
    return CoxModel(beta, baseline_times, baseline_hazard, mean, standard_errors, trace)


def breslow_baseline(X, times, events, beta):
    """Breslow cumulative baseline hazard at the distinct event times.

    ``H0(t) = sum_{t_i <= t} d_i / sum_{j: y_j >= t_i} exp(x_j @ beta)``.
    """
    risk = np.exp(X @ beta)
    event_times = np.unique(times[events == 1])
    # number of rows at risk at each event time
    at_risk = np.array([risk[times >= t].sum() for t in event_times])
    deaths = np.array([np.sum((times == t) & (events == 1)) for t in event_times])
    return event_times, np.cumsum(deaths / at_risk)


def coxph_survival(model, x, t):
    """Predicted survival ``exp(-H0(t) * exp((x - mean) @ beta))`` of one instance.

    After the last event time the last ``H0`` value is used.
    """
    if t < 0:
        raise ValueError('Times must be non-negative, got {}'.format(t))

    x = np.asarray(x, dtype=float).ravel()
    return float(model.predict(x[None, :], [t])[0, 0])
