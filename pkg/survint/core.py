# -*- coding: utf-8 -*-

"""survint.core module.

Shared domain types. Coalitions are plain non-negative ``int`` bit sets over the
0-based feature indices: bit ``j`` is set when feature ``j`` is present.
"""

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, Sequence

import numpy as np

LOGGER = logging.getLogger(__name__)

MAX_EXACT_FEATURES = 30
MAX_APPROX_FEATURES = 64


class PredictionTarget(enum.Enum):
    """Prediction function being explained."""

    LOG_HAZARD = 'loghazard'
    HAZARD = 'hazard'
    SURVIVAL = 'survival'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value

        try:
            return cls(str(value).lower().replace('-', '').replace('_', ''))
        except ValueError:
            choices = ', '.join(target.value for target in cls)
            raise ValueError('Unknown prediction target {!r}; use one of {}'.format(
                value, choices)) from None


def encode(members):
    """Build the bit set of the given 0-based feature indices."""
    bits = 0
    for member in members:
        member = int(member)
        if member < 0 or member >= MAX_APPROX_FEATURES:
            raise ValueError('Feature index {} out of range'.format(member))

        bits |= 1 << member

    return bits


def decode(bits):
    """Return the sorted tuple of 0-based feature indices contained in ``bits``."""
    if bits < 0:
        raise ValueError('Coalitions are non-negative bit sets, got {}'.format(bits))

    members = []
    index = 0
    while bits:
        if bits & 1:
            members.append(index)

        bits >>= 1
        index += 1

    return tuple(members)


def coalition_size(bits):
    return bin(bits).count('1')


def format_coalition(bits):
    """Render a coalition as sorted 1-based indices joined by ``+`` (``{0, 2}`` -> ``1+3``)."""
    return '+'.join(str(member + 1) for member in decode(bits))


def parse_coalition(label):
    """Inverse of ``format_coalition``."""
    label = str(label).strip()
    if not label:
        raise ValueError('Empty coalition label')

    return encode(int(part) - 1 for part in label.split('+'))


def coalition_sort_key(bits):
    return coalition_size(bits), bits


def check_coalition(bits, n_features):
    if bits < 0 or bits >> n_features:
        raise ValueError('Coalition {} does not fit in {} features'.format(bits, n_features))


def coalition_iter(n_features, max_order) -> Iterator[int]:
    """Iterate over every coalition of size ``<= max_order``.

    Coalitions are yielded exactly once, ordered by size and then by bit value.

    Args:
        n_features (int):
            Number of features ``p``, ``0 <= p <= 30``.
        max_order (int):
            Largest coalition size, ``0 <= max_order <= p``.

    Yields:
        int:
            Coalition bit sets.
    """
    if not 0 <= n_features <= MAX_EXACT_FEATURES:
        raise ValueError('n_features must be in [0, {}], got {}'.format(
            MAX_EXACT_FEATURES, n_features))

    if not 0 <= max_order <= n_features:
        raise ValueError('max_order must be in [0, {}], got {}'.format(n_features, max_order))

    for size in range(max_order + 1):
        layer = sorted(encode(members) for members in itertools.combinations(
            range(n_features), size))
        yield from layer


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing timepoints in ``(0, t_max]``."""

    points: np.ndarray
    t_max: float

    def __post_init__(self):
        points = np.array(self.points, dtype=float).ravel()
        if points.size == 0:
            raise ValueError('A time grid needs at least one point')

        if not np.all(np.isfinite(points)):
            raise ValueError('Time grid points must be finite')

        if np.any(np.diff(points) <= 0):
            raise ValueError('Time grid points must be strictly increasing')

        if points[0] <= 0 or points[-1] > self.t_max:
            raise ValueError('Time grid points must lie in (0, {}]'.format(self.t_max))

        points.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 't_max', float(self.t_max))

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented

        return self.t_max == other.t_max and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.t_max, self.points.tobytes()))

    def subgrid(self, index):
        return TimeGrid(self.points[index:index + 1], self.t_max)


def build_time_grid(t_max, n_points, mode='even', times=None):
    """Build the grid of timepoints at which attributions are computed.

    ``t = 0`` is never part of a grid.

    Args:
        t_max (float):
            Upper end of the time horizon.
        n_points (int):
            Number of points.
        mode (str):
            ``even`` for ``{i * t_max / n_points : i = 1..n_points}`` or ``quantile`` for
            the empirical quantiles ``i / n_points`` of ``times`` (duplicates collapse).
        times (array-like, optional):
            Time sample required by the ``quantile`` mode.

    Returns:
        TimeGrid
    """
    if not t_max > 0:
        raise ValueError('t_max must be positive, got {}'.format(t_max))

    if int(n_points) != n_points or n_points < 1:
        raise ValueError('n_points must be a positive integer, got {}'.format(n_points))

    n_points = int(n_points)
    if mode == 'even':
        points = np.arange(1, n_points + 1) * (t_max / n_points)
        points[-1] = t_max
    elif mode == 'quantile':
        sample = np.asarray(times if times is not None else [], dtype=float).ravel()
        sample = sample[(sample > 0) & (sample <= t_max)]
        if sample.size == 0:
            raise ValueError('The quantile mode needs a non-empty sample of times in (0, t_max]')

        levels = np.arange(1, n_points + 1) / n_points
        points = np.unique(np.quantile(sample, levels))
    else:
        raise ValueError('Unknown grid mode {!r}'.format(mode))

    return TimeGrid(points, t_max)


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Feature matrix with observed times and event indicators."""

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)

        times = np.array(self.times, dtype=float).ravel()
        events = np.array(self.events).ravel()

        if features.ndim != 2 or features.shape[0] != times.size or times.size != events.size:
            raise ValueError('features, times and events must describe the same rows')

        if not np.all(np.isfinite(features)):
            raise ValueError('All feature values must be finite')

        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise ValueError('Observed times must be finite and non-negative')

        if not np.all(np.isin(events, (0, 1))):
            raise ValueError('Event indicators must be 0 or 1')

        if not np.any(events == 1):
            raise ValueError('A survival dataset needs at least one event')

        events = events.astype(int)
        for array in (features, times, events):
            array.setflags(write=False)

        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'events', events)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def censoring_rate(self):
        return float(1 - self.events.mean())

    def subset(self, indices):
        indices = np.asarray(indices)
        return SurvivalDataset(self.features[indices], self.times[indices], self.events[indices])

    def train_test_split(self, test_size=0.2, seed=0):
        """Randomly split the rows into a train and a test dataset."""
        n_test = int(round(self.n_samples * test_size))
        if not 0 < n_test < self.n_samples:
            raise ValueError('test_size {} leaves an empty split'.format(test_size))

        order = rng_stream(seed, RngPurpose.SPLIT).permutation(self.n_samples)
        return self.subset(np.sort(order[n_test:])), self.subset(np.sort(order[:n_test]))


@dataclass(frozen=True, eq=False)
class InteractionExplanation:
    """Per-coalition attribution curves of one instance.

    ``values`` maps every explained coalition (``1 <= |M| <= order``) to its curve over
    the grid; ``baseline`` holds the expected prediction ``f_0(t)``.
    """

    order: int
    target: PredictionTarget
    grid: TimeGrid
    baseline: np.ndarray
    values: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n_points = len(self.grid)
        baseline = np.array(self.baseline, dtype=float).ravel()
        if baseline.size != n_points:
            raise ValueError('The baseline must have one value per timepoint')

        values = {}
        for bits in sorted(self.values, key=coalition_sort_key):
            curve = np.array(self.values[bits], dtype=float).ravel()
            size = coalition_size(bits)
            if not 1 <= size <= self.order:
                raise ValueError('Coalition {} does not have a size in [1, {}]'.format(
                    format_coalition(bits), self.order))

            if curve.size != n_points:
                raise ValueError('Curve of {} has {} values for {} timepoints'.format(
                    format_coalition(bits), curve.size, n_points))

            curve.setflags(write=False)
            values[int(bits)] = curve

        baseline.setflags(write=False)
        object.__setattr__(self, 'target', PredictionTarget.parse(self.target))
        object.__setattr__(self, 'baseline', baseline)
        object.__setattr__(self, 'values', values)

    def __eq__(self, other):
        if not isinstance(other, InteractionExplanation):
            return NotImplemented

        return (
            self.order == other.order
            and self.target == other.target
            and self.grid == other.grid
            and np.array_equal(self.baseline, other.baseline)
            and self.values.keys() == other.values.keys()
            and all(np.array_equal(self.values[key], other.values[key]) for key in self.values)
        )

    @property
    def coalitions(self):
        return list(self.values)

    def total(self):
        """Sum of all attribution curves, without the baseline."""
        total = np.zeros(len(self.grid))
        for curve in self.values.values():
            total = total + curve

        return total

    def matrix(self, coalitions: Sequence[int] = None):
        coalitions = self.coalitions if coalitions is None else coalitions
        return np.vstack([self.values[bits] for bits in coalitions])

    def time_summary(self):
        """Time-wise mean and standard deviation of every attribution curve.

        Returns:
            dict:
                Mapping ``coalition -> (mean, std)``.
        """
        return {
            bits: (float(np.mean(curve)), float(np.std(curve)))
            for bits, curve in self.values.items()
        }


class RngPurpose(enum.IntEnum):
    """Independent random streams derived from one seed."""

    FEATURES = 0
    EVENT_TIMES = 1
    CONDITIONAL = 2
    APPROXIMATOR = 3
    SPLIT = 4
    BACKGROUND = 5
    VALIDATION = 6


def rng_stream(seed, purpose, index=0):
    """Generator for the stream ``(purpose, index)`` of ``seed``.

    Streams of different purposes or indices are statistically independent, so each
    consumer stays reproducible on its own.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(index)))
    return np.random.default_rng(sequence)


def derived_seed(seed, index):
    """Seed of the ``index``-th repetition of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])
