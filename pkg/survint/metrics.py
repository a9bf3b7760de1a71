# -*- coding: utf-8 -*-

"""survint.metrics module.

Local accuracy of attribution curves, survival model performance, curve smoothing and
time-dependence classification.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet

import numpy as np
from scipy import integrate, signal

from survint.core import InteractionExplanation, SurvivalDataset, TimeGrid

LOGGER = logging.getLogger(__name__)

DEFAULT_WINDOW = 11
DEFAULT_POLY_ORDER = 3
DEFAULT_TOLERANCE = 1e-6
CONCORDANCE_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class LocalAccuracyCurve:
    """Normalised reconstruction error ``sigma(t)`` and its mean over the grid."""

    grid: TimeGrid
    sigma: np.ndarray
    mean: float


def local_accuracy(explanations, predictions, baseline=None):
    """Time-dependent local accuracy of a set of explanations.

    ``sigma(t) = sqrt(E[(F - E[F] - Phi)^2] / E[F^2])`` where ``Phi`` is the sum of the
    attribution curves of an instance and expectations run over the instances.

    Args:
        explanations (list):
            ``InteractionExplanation`` of every instance, all on the same grid.
        predictions (np.ndarray):
            ``(instances, timepoints)`` predictions ``F(t|x)``.
        baseline (np.ndarray):
            Expected prediction ``E[F(t|X)]``; the baseline stored in the first
            explanation by default.

    Returns:
        LocalAccuracyCurve

    Raises:
        ValueError:
            If the inputs disagree or ``E[F^2]`` vanishes at some timepoint.
    """
    if not explanations:
        raise ValueError('local_accuracy needs at least one explanation')

    grid = explanations[0].grid
    predictions = np.atleast_2d(np.asarray(predictions, dtype=float))
    if predictions.shape != (len(explanations), len(grid)):
        raise ValueError('Predictions must have shape (instances, timepoints)')

    if any(explanation.grid != grid for explanation in explanations):
        raise ValueError('All explanations must share one grid')

    baseline = explanations[0].baseline if baseline is None else np.asarray(baseline, float)
    totals = np.vstack([explanation.total() for explanation in explanations])
    residuals = predictions - baseline[None, :] - totals

    denominator = np.mean(predictions ** 2, axis=0)
    if np.any(denominator <= 0):
        raise ValueError('E[F(t|X)^2] vanishes at some timepoint')

    sigma = np.sqrt(np.mean(residuals ** 2, axis=0) / denominator)
    return LocalAccuracyCurve(grid, sigma, float(np.mean(sigma)))


def _check_dataset(data):
    if not isinstance(data, SurvivalDataset):
        raise ValueError('Expected a SurvivalDataset')

    return data


def concordance_index(risk_scores, data):
    """Harrell's concordance index.

    A pair is comparable when the shorter observed time is an event. Concordant pairs give
    the higher risk to the shorter time; risk ties count one half.

    Args:
        risk_scores (np.ndarray):
            Risk of every row of ``data``, higher meaning earlier events.
        data (SurvivalDataset):
            Observed times and events.

    Returns:
        float
    """
    data = _check_dataset(data)
    risk = np.asarray(risk_scores, dtype=float).ravel()
    if risk.size != data.n_samples:
        raise ValueError('Expected {} risk scores, got {}'.format(data.n_samples, risk.size))

    times = data.times
    events = data.events.astype(bool)
    concordant = 0.0
    comparable = 0
    for start in range(0, risk.size, CONCORDANCE_CHUNK):
        rows = slice(start, start + CONCORDANCE_CHUNK)
        pairs = (times[rows, None] < times[None, :]) & events[rows, None]
        difference = risk[rows, None] - risk[None, :]
        comparable += int(pairs.sum())
        concordant += np.sum(pairs & (difference > 0)) + 0.5 * np.sum(pairs & (difference == 0))

    if comparable == 0:
        raise ValueError('No comparable pairs')

    return float(concordant / comparable)


def kaplan_meier(times, events):
    """Kaplan-Meier estimate as ``(distinct event times, survival after each)``."""
    times = np.asarray(times, dtype=float).ravel()
    events = np.asarray(events).ravel().astype(bool)
    event_times = np.unique(times[events])
    at_risk = np.array([np.sum(times >= t) for t in event_times])
    deaths = np.array([np.sum((times == t) & events) for t in event_times])
    survival = np.cumprod(1.0 - deaths / np.maximum(at_risk, 1))
    return event_times, survival


def _step(estimate, t, left=False):
    event_times, survival = estimate
    index = np.searchsorted(event_times, t, side='left' if left else 'right')
    return np.concatenate([[1.0], survival])[index]


def brier_scores(survival, data, grid):
    """IPCW Brier score at every grid point.

    Observations with an event before ``t`` are weighted by the censoring survival
    ``G(y-)``, observations still at risk by ``G(t)``; censored observations before ``t``
    do not contribute.

    Args:
        survival (np.ndarray):
            ``(rows, timepoints)`` predicted survival.
        data (SurvivalDataset):
            Observed times and events.
        grid (TimeGrid):
            Evaluation timepoints.

    Returns:
        np.ndarray
    """
    data = _check_dataset(data)
    survival = np.atleast_2d(np.asarray(survival, dtype=float))
    points = grid.points
    if survival.shape != (data.n_samples, points.size):
        raise ValueError('Survival must have shape (rows, timepoints)')

    if points[-1] >= data.times.max():
        raise ValueError('Grid points must lie below the largest observed time {}'.format(
            data.times.max()))

    censoring = kaplan_meier(data.times, 1 - data.events)
    censoring_at_times = _step(censoring, points)
    censoring_before_y = _step(censoring, data.times, left=True)

    died = (data.times[:, None] <= points[None, :]) & (data.events[:, None] == 1)
    alive = data.times[:, None] > points[None, :]
    if np.any(alive.any(axis=0) & (censoring_at_times <= 0)) or np.any(
            died.any(axis=1) & (censoring_before_y <= 0)):
        raise ValueError('The censoring distribution reaches zero inside the grid')

    with np.errstate(divide='ignore', invalid='ignore'):
        event_part = np.where(died, survival ** 2 / censoring_before_y[:, None], 0.0)
        alive_part = np.where(alive, (1 - survival) ** 2 / censoring_at_times[None, :], 0.0)

    return np.mean(event_part + alive_part, axis=0)


def integrated_brier(survival, data, grid):
    """Trapezoid integral of the IPCW Brier score divided by the grid span."""
    scores = brier_scores(survival, data, grid)
    points = grid.points
    if points.size == 1:
        return float(scores[0])

    return float(integrate.trapezoid(scores, points) / (points[-1] - points[0]))


def savgol_smooth(series, window=DEFAULT_WINDOW, poly_order=DEFAULT_POLY_ORDER):
    """Savitzky-Golay smoothing of a curve.

    Local least-squares polynomial fits; the edges evaluate the polynomial fitted to the
    first and last window.

    Args:
        series (np.ndarray):
            Curve values.
        window (int):
            Odd window length, at most the series length.
        poly_order (int):
            Polynomial order, smaller than ``window``.

    Returns:
        np.ndarray
    """
    series = np.asarray(series, dtype=float).ravel()
    if window < 1 or window % 2 == 0:
        raise ValueError('The window must be a positive odd integer, got {}'.format(window))

    if window > series.size:
        raise ValueError('The window {} is longer than the series ({})'.format(
            window, series.size))

    if not 0 <= poly_order < window:
        raise ValueError('poly_order must be in [0, {}), got {}'.format(window, poly_order))

    return signal.savgol_filter(series, window, poly_order, mode='interp')


def smooth_explanation(explanation, window=DEFAULT_WINDOW, poly_order=DEFAULT_POLY_ORDER):
    """New explanation with every attribution curve smoothed; the baseline is kept."""
    values = {
        bits: savgol_smooth(curve, window, poly_order)
        for bits, curve in explanation.values.items()
    }
    return InteractionExplanation(explanation.order, explanation.target, explanation.grid,
                                  explanation.baseline, values)


@dataclass(frozen=True)
class TimeDependencePartition:
    """Coalitions split by whether their attribution curve varies over time."""

    dependent: FrozenSet[int]
    independent: FrozenSet[int]
    deviations: Dict[int, float] = field(default_factory=dict, compare=False)


def classify_time_dependence(explanation, tol=DEFAULT_TOLERANCE):
    """Split coalitions into time-dependent and time-independent ones.

    A coalition is time-dependent when ``max_t |phi_M(t) - mean_t phi_M| > tol``.

    Args:
        explanation (InteractionExplanation):
            Explanation with at least two timepoints.
        tol (float or dict):
            Threshold, or a per-coalition mapping of thresholds.

    Returns:
        TimeDependencePartition
    """
    if len(explanation.grid) < 2:
        raise ValueError('Time dependence needs at least two timepoints')

    deviations = {}
    dependent = set()
    for bits, curve in explanation.values.items():
        deviation = float(np.max(np.abs(curve - np.mean(curve))))
        deviations[bits] = deviation
        threshold = tol[bits] if isinstance(tol, dict) else tol
        if deviation > threshold:
            dependent.add(bits)

    independent = set(explanation.values) - dependent
    return TimeDependencePartition(frozenset(dependent), frozenset(independent), deviations)


def approximation_error(approx, exact):
    """Mean squared difference over every ``(coalition, timepoint)`` pair."""
    if approx.grid != exact.grid or approx.order != exact.order:
        raise ValueError('Explanations must share grid and order')

    if approx.values.keys() != exact.values.keys():
        raise ValueError('Explanations must cover the same coalitions')

    coalitions = list(exact.values)
    return float(np.mean((approx.matrix(coalitions) - exact.matrix(coalitions)) ** 2))
