# -*- coding: utf-8 -*-

"""survint.games module.

Time-dependent cooperative games ``nu(t|M) = E[F(t|x_M, X_rest)] - E[F(t|X)]`` over a
time grid, with marginal (interventional) or conditional Gaussian (observational)
imputation of the absent features.
"""

import hashlib
import logging
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg

from survint.core import (
    MAX_EXACT_FEATURES, PredictionTarget, RngPurpose, TimeGrid, check_coalition, decode,
    format_coalition, rng_stream)
from survint.exceptions import CoalitionEvaluationError, MemoryBudgetError
from survint.models.coxph import CoxModel
from survint.models.ground_truth import GroundTruthModel

LOGGER = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3
DEFAULT_BATCH_ROWS = 200000
DEFAULT_MAX_CACHED = 1 << 16
EMPTY_LABEL = 'empty'


class CachedPredictor:
    """Prediction handle ``(X, times) -> (rows, timepoints)`` with a bounded block memo.

    Blocks are keyed on a digest of the feature and time arrays, so the background block
    shared by many instances is predicted only once.
    """

    def __init__(self, function, max_blocks=64, name=None):
        self.function = function
        self.max_blocks = max_blocks
        self.name = name
        self.hits = 0
        self.misses = 0
        self._memo = OrderedDict()
        self._lock = threading.Lock()

    @staticmethod
    def _key(X, times):
        digest = hashlib.blake2b(digest_size=16)
        digest.update(np.asarray(X.shape, dtype=np.int64).tobytes())
        digest.update(np.ascontiguousarray(X, dtype=float).tobytes())
        digest.update(np.ascontiguousarray(times, dtype=float).tobytes())
        return digest.digest()

    def __call__(self, X, times):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        times = np.atleast_1d(np.asarray(times, dtype=float))
        key = self._key(X, times)
        with self._lock:
            if key in self._memo:
                self.hits += 1
                self._memo.move_to_end(key)
                return self._memo[key]

        predictions = np.asarray(self.function(X, times), dtype=float)
        predictions.setflags(write=False)
        with self._lock:
            self.misses += 1
            self._memo[key] = predictions
            if len(self._memo) > self.max_blocks:
                self._memo.popitem(last=False)

        return predictions


def make_predictor(model, target=PredictionTarget.SURVIVAL, integration='quadrature',
                   max_blocks=64):
    """Adapt a ground-truth or Cox model to a cached prediction handle.

    Args:
        model (GroundTruthModel or CoxModel):
            Model to explain.
        target (PredictionTarget or str):
            Prediction target. Cox models only predict survival.
        integration (str):
            Cumulative hazard integration of ground-truth survival predictions.

    Returns:
        CachedPredictor
    """
    target = PredictionTarget.parse(target)
    if isinstance(model, GroundTruthModel):
        def function(X, times):
            return model.predict(X, times, target, integration)

    elif isinstance(model, CoxModel):
        if target is not PredictionTarget.SURVIVAL:
            raise ValueError('Cox models can only be explained on the survival target')

        function = model.predict

    else:
        raise ValueError('Cannot build a predictor for {!r}'.format(model))

    return CachedPredictor(function, max_blocks, name='{}:{}'.format(
        getattr(model, 'name', None) or type(model).__name__, target.value))


def conditional_gaussian_params(mean, covariance, coalition, x_present):
    """Gaussian conditional of the absent features given the present ones.

    Args:
        mean (array-like):
            Mean vector of length ``p``.
        covariance (array-like):
            Symmetric positive-definite ``p x p`` covariance.
        coalition (int):
            Present features, neither empty nor complete.
        x_present (array-like):
            Values of the present features, in increasing feature order.

    Returns:
        tuple:
            ``(conditional_mean, conditional_covariance)`` of the absent features, in
            increasing feature order.

    Raises:
        ValueError:
            If the present block of the covariance is singular.
    """
    mean = np.asarray(mean, dtype=float).ravel()
    covariance = np.asarray(covariance, dtype=float)
    p = mean.size
    check_coalition(coalition, p)
    present = list(decode(coalition))
    absent = [j for j in range(p) if j not in present]
    if not present or not absent:
        raise ValueError('Conditioning needs a coalition that is neither empty nor complete')

    x_present = np.asarray(x_present, dtype=float).ravel()
    if x_present.size != len(present):
        raise ValueError('Expected {} conditioning values'.format(len(present)))

    sigma_pp = covariance[np.ix_(present, present)]
    sigma_ap = covariance[np.ix_(absent, present)]
    sigma_aa = covariance[np.ix_(absent, absent)]
    try:
        factor = linalg.cho_factor(sigma_pp)
    except linalg.LinAlgError:
        raise ValueError('Singular covariance block for coalition {}'.format(
            format_coalition(coalition))) from None

    cond_mean = mean[absent] + sigma_ap @ linalg.cho_solve(factor, x_present - mean[present])
    cond_cov = sigma_aa - sigma_ap @ linalg.cho_solve(factor, sigma_ap.T)
    cond_cov = (cond_cov + cond_cov.T) / 2
    return cond_mean, cond_cov


def _matrix_sqrt(covariance):
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        # positive semi-definite after conditioning on a near-collinear block
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        return eigenvectors * np.sqrt(np.clip(eigenvalues, 0, None))


class MarginalImputer:
    """Impute absent features from the rows of a background matrix."""

    conditional = False

    def __init__(self, background):
        background = np.array(background, dtype=float)
        if background.ndim != 2 or background.shape[0] < 1:
            raise ValueError('The background needs at least one row')

        if not np.all(np.isfinite(background)):
            raise ValueError('The background must be finite')

        background.setflags(write=False)
        self.background = background

    @property
    def n_features(self):
        return self.background.shape[1]

    @property
    def n_rows(self):
        return self.background.shape[0]

    def reference(self):
        return self.background

    def impute(self, x, coalition):
        block = self.background.copy()
        present = list(decode(coalition))
        block[:, present] = x[present]
        return block


class ConditionalGaussianImputer:
    """Impute absent features from their Gaussian conditional given the present ones.

    All coalitions transform the same standard normal draws.
    """

    conditional = True

    def __init__(self, mean, covariance, n_samples=1000, seed=0):
        mean = np.array(mean, dtype=float).ravel()
        covariance = np.array(covariance, dtype=float)
        if covariance.shape != (mean.size, mean.size):
            raise ValueError('Mean and covariance do not match')

        if not np.allclose(covariance, covariance.T):
            raise ValueError('The covariance must be symmetric')

        try:
            self._cholesky = np.linalg.cholesky(covariance)
        except np.linalg.LinAlgError:
            raise ValueError('The covariance is not positive-definite') from None

        if n_samples < 1:
            raise ValueError('n_samples must be positive')

        self.mean = mean
        self.covariance = covariance
        self.n_samples = int(n_samples)
        self.seed = seed
        self.normals = rng_stream(seed, RngPurpose.CONDITIONAL).standard_normal(
            (self.n_samples, mean.size))
        self._reference = mean + self.normals @ self._cholesky.T

    @property
    def n_features(self):
        return self.mean.size

    @property
    def n_rows(self):
        return self.n_samples

    def reference(self):
        return self._reference

    def impute(self, x, coalition):
        p = self.n_features
        if coalition == 0:
            return self._reference

        present = list(decode(coalition))
        if len(present) == p:
            return np.repeat(x[None, :], self.n_samples, axis=0)

        absent = [j for j in range(p) if j not in present]
        cond_mean, cond_cov = conditional_gaussian_params(
            self.mean, self.covariance, coalition, x[present])
        block = np.empty((self.n_samples, p))
        block[:, present] = x[present]
        block[:, absent] = cond_mean + self.normals[:, absent] @ _matrix_sqrt(cond_cov).T
        return block


class SurvivalGame:
    """Centered game ``nu(t|M)`` of one instance over a time grid.

    Args:
        predictor (callable):
            Prediction handle ``(X, times) -> (rows, timepoints)``.
        instance (array-like):
            Explained feature vector.
        imputer (MarginalImputer or ConditionalGaussianImputer):
            Reference distribution of the absent features.
        grid (TimeGrid):
            Timepoints of the game.
        target (PredictionTarget):
            Label of the explained prediction, carried into explanations.
        batch_rows (int):
            Maximum number of imputed rows sent to the predictor at once.
        max_cached (int):
            Maximum number of coalition curves kept, least recently used evicted first.
    """

    def __init__(self, predictor, instance, imputer, grid, target=None,
                 batch_rows=DEFAULT_BATCH_ROWS, max_cached=DEFAULT_MAX_CACHED):
        instance = np.array(instance, dtype=float).ravel()
        if instance.size != imputer.n_features:
            raise ValueError('The instance has {} features but the imputer {}'.format(
                instance.size, imputer.n_features))

        if not isinstance(grid, TimeGrid):
            raise ValueError('grid must be a TimeGrid')

        if int(max_cached) != max_cached or max_cached < 1:
            raise ValueError('max_cached must be a positive integer, got {}'.format(max_cached))

        instance.setflags(write=False)
        self.predictor = predictor
        self.instance = instance
        self.imputer = imputer
        self.grid = grid
        self.target = None if target is None else PredictionTarget.parse(target)
        self.batch_rows = batch_rows
        self.max_cached = max_cached
        self._cache = OrderedDict()
        self._lock = threading.Lock()

        reference = self._predict(imputer.reference(), 0)
        self._reference_predictions = reference
        self.baseline = reference.mean(axis=0)
        self.prediction = self._predict(instance[None, :], (1 << self.n_features) - 1)[0]
        self.baseline.setflags(write=False)

    @property
    def n_features(self):
        return self.instance.size

    @property
    def n_timepoints(self):
        return len(self.grid)

    def _predict(self, X, coalition):
        try:
            return self.predictor(X, self.grid.points)
        except CoalitionEvaluationError:
            raise
        except Exception as error:
            raise CoalitionEvaluationError('Prediction failed for coalition {{{}}}: {}'.format(
                format_coalition(coalition), error), coalition) from error

    def _block_curves(self, coalitions):
        blocks = [self.imputer.impute(self.instance, bits) for bits in coalitions]
        sizes = [block.shape[0] for block in blocks]
        if len(coalitions) == 1:
            predictions = self._predict(blocks[0], coalitions[0])
        else:
            try:
                predictions = self.predictor(np.vstack(blocks), self.grid.points)
            except Exception:
                # find the offending coalition
                curves = {}
                for bits in coalitions:
                    curves.update(self._block_curves([bits]))

                return curves

        curves = {}
        start = 0
        for bits, size in zip(coalitions, sizes):
            curves[bits] = predictions[start:start + size].mean(axis=0) - self.baseline
            start += size

        return curves

    def values(self, coalitions):
        """``nu(t|M)`` of every requested coalition as a ``(coalitions, timepoints)`` array."""
        coalitions = [int(bits) for bits in coalitions]
        full = (1 << self.n_features) - 1
        with self._lock:
            known = {}
            for bits in dict.fromkeys(coalitions):
                if bits in self._cache:
                    self._cache.move_to_end(bits)
                    known[bits] = self._cache[bits]

        missing = [bits for bits in dict.fromkeys(coalitions) if bits not in known]

        computed = {}
        batch = []
        for bits in missing:
            check_coalition(bits, self.n_features)
            if bits == 0:
                computed[0] = np.zeros(self.n_timepoints)
            elif bits == full:
                computed[full] = self.prediction - self.baseline
            else:
                batch.append(bits)

            if batch and len(batch) * self.imputer.n_rows >= self.batch_rows:
                computed.update(self._block_curves(batch))
                batch = []

        if batch:
            computed.update(self._block_curves(batch))

        with self._lock:
            self._cache.update(computed)
            while len(self._cache) > self.max_cached:
                self._cache.popitem(last=False)

        known.update(computed)
        if not coalitions:
            return np.empty((0, self.n_timepoints))

        return np.vstack([known[bits] for bits in coalitions])

    def value(self, coalition, t_index=None):
        curve = self.values([coalition])[0]
        return curve if t_index is None else float(curve[t_index])

    def value_standard_error(self, coalition):
        """Monte-Carlo standard error of ``nu(t|M)`` under conditional imputation.

        The paired differences against the unconditional draws share their normals, so the
        error of the difference is estimated directly. Marginal imputation is an exact
        empirical mean and gets zeros.
        """
        check_coalition(coalition, self.n_features)
        if not self.imputer.conditional or coalition == 0:
            return np.zeros(self.n_timepoints)

        block = self.imputer.impute(self.instance, coalition)
        differences = self._predict(block, coalition) - self._reference_predictions
        return differences.std(axis=0, ddof=1) / np.sqrt(block.shape[0])

    def restrict(self, t_index):
        """Single-timepoint view sharing this game's cached values."""
        return RestrictedGame(self, t_index)


class RestrictedGame:
    """View of a ``SurvivalGame`` at one timepoint of its grid."""

    def __init__(self, game, t_index):
        if not 0 <= t_index < game.n_timepoints:
            raise ValueError('Timepoint index {} out of range'.format(t_index))

        self.parent = game
        self.t_index = t_index
        self.grid = game.grid.subgrid(t_index)
        self.instance = game.instance
        self.baseline = game.baseline[t_index:t_index + 1]
        self.prediction = game.prediction[t_index:t_index + 1]

    @property
    def n_features(self):
        return self.parent.n_features

    @property
    def n_timepoints(self):
        return 1

    def values(self, coalitions):
        return self.parent.values(coalitions)[:, self.t_index:self.t_index + 1]

    def value_standard_error(self, coalition):
        return self.parent.value_standard_error(coalition)[self.t_index:self.t_index + 1]


def value(game, coalition, t):
    """``nu(t|M)`` at a timepoint of the game grid."""
    matches = np.flatnonzero(np.isclose(game.grid.points, t, rtol=1e-12, atol=0))
    if matches.size == 0:
        raise ValueError('t={} is not a point of the game grid'.format(t))

    return float(game.values([coalition])[0, matches[0]])


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Coalition values over a grid, one row per coalition.

    A complete table holds all ``2^p`` coalitions with row index equal to the bit set.
    """

    n_features: int
    grid: TimeGrid
    coalitions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        coalitions = np.array(self.coalitions, dtype=np.int64).ravel()
        values = np.array(self.values, dtype=float)
        if values.shape != (coalitions.size, len(self.grid)):
            raise ValueError('Values must have shape (coalitions, timepoints)')

        if np.unique(coalitions).size != coalitions.size:
            raise ValueError('Duplicate coalitions in the value table')

        coalitions.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, 'coalitions', coalitions)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, '_index', {int(bits): row for row, bits in
                                            enumerate(coalitions)})

    @classmethod
    def complete_from(cls, n_features, grid, values):
        return cls(n_features, grid, np.arange(1 << n_features), values)

    @property
    def complete(self):
        return self.coalitions.size == 1 << self.n_features and np.array_equal(
            self.coalitions, np.arange(1 << self.n_features))

    def __contains__(self, coalition):
        return int(coalition) in self._index

    def value(self, coalition, t_index=None):
        try:
            row = self.values[self._index[int(coalition)]]
        except KeyError:
            raise ValueError('Coalition {{{}}} is not in the table'.format(
                format_coalition(coalition))) from None

        return row if t_index is None else float(row[t_index])

    def restrict(self, t_index):
        return ValueTable(self.n_features, self.grid.subgrid(t_index), self.coalitions,
                          self.values[:, t_index:t_index + 1])

    def to_frame(self):
        """Debug dump with columns ``t,coalition,value``."""
        labels = [format_coalition(bits) or EMPTY_LABEL for bits in self.coalitions]
        n_points = len(self.grid)
        return pd.DataFrame({
            't': np.tile(self.grid.points, len(labels)),
            'coalition': np.repeat(labels, n_points),
            'value': self.values.ravel(),
        })


def estimate_table_bytes(n_features, n_timepoints, n_rows):
    """Up-front memory estimate of a complete table and its largest prediction batch."""
    table = (1 << n_features) * n_timepoints * 8
    batch = min(1 << n_features, max(1, DEFAULT_BATCH_ROWS // max(1, n_rows))) * n_rows
    return table * 2 + batch * (n_timepoints + n_features) * 8


def evaluate_all_coalitions(game, threads=1, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Evaluate ``nu(t|M)`` for all ``2^p`` coalitions at every grid point.

    Args:
        game (SurvivalGame):
            Game to tabulate.
        threads (int):
            Number of worker threads, each filling a contiguous block of coalitions.
        memory_budget (int):
            Maximum estimated bytes.

    Returns:
        ValueTable

    Raises:
        MemoryBudgetError:
            If the estimated memory exceeds the budget.
    """
    p = game.n_features
    if p > MAX_EXACT_FEATURES:
        raise ValueError('Exact tables support at most {} features, got {}'.format(
            MAX_EXACT_FEATURES, p))

    required = estimate_table_bytes(p, game.n_timepoints, game.imputer.n_rows)
    if required > memory_budget:
        raise MemoryBudgetError('A complete table for {} features needs about {} bytes'.format(
            p, required), required, memory_budget)

    coalitions = np.arange(1 << p)
    if threads > 1 and coalitions.size > 1:
        blocks = np.array_split(coalitions, min(threads, coalitions.size))
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(game.values, blocks))

        values = np.vstack(parts)
    else:
        values = game.values(coalitions)

    LOGGER.debug('Evaluated %s coalitions at %s timepoints', coalitions.size,
                 game.n_timepoints)
    return ValueTable.complete_from(p, game.grid, values)
