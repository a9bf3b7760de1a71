#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for survint.core."""
from unittest import TestCase

import numpy as np
import pytest

from survint.core import (
    InteractionExplanation, PredictionTarget, RngPurpose, SurvivalDataset, TimeGrid,
    build_time_grid, coalition_iter, coalition_size, decode, derived_seed, encode,
    format_coalition, parse_coalition, rng_stream)


def test_encode_decode():
    assert encode([0, 2]) == 0b101
    assert decode(0b101) == (0, 2)
    assert decode(0) == ()
    assert coalition_size(0b1011) == 3


def test_decode_negative():
    with pytest.raises(ValueError):
        decode(-1)


def test_format_coalition():
    assert format_coalition(0b101) == '1+3'
    assert format_coalition(0b1) == '1'
    assert parse_coalition('1+3') == 0b101
    assert parse_coalition(' 2 ') == 0b10


def test_parse_coalition_empty():
    with pytest.raises(ValueError):
        parse_coalition('')


def test_coalition_iter_order():
    returned = list(coalition_iter(3, 2))

    expected = [0, 0b1, 0b10, 0b100, 0b11, 0b101, 0b110]
    assert returned == expected


def test_coalition_iter_counts():
    assert len(list(coalition_iter(10, 3))) == 1 + 10 + 45 + 120
    assert len(set(coalition_iter(6, 6))) == 64
    assert list(coalition_iter(0, 0)) == [0]


def test_coalition_iter_invalid():
    with pytest.raises(ValueError):
        list(coalition_iter(3, 4))

    with pytest.raises(ValueError):
        list(coalition_iter(31, 1))


def test_prediction_target_parse():
    assert PredictionTarget.parse('Hazard') == PredictionTarget.HAZARD
    assert PredictionTarget.parse(PredictionTarget.SURVIVAL) == PredictionTarget.SURVIVAL

    with pytest.raises(ValueError):
        PredictionTarget.parse('density')


class TestTimeGrid(TestCase):

    def test_build_even(self):
        grid = build_time_grid(70, 41)

        assert len(grid) == 41
        assert grid.points[-1] == 70
        assert grid.points[0] > 0
        np.testing.assert_allclose(grid.points[0], 70 / 41)

    def test_build_single_point(self):
        grid = build_time_grid(10, 1)

        np.testing.assert_array_equal(grid.points, [10.0])

    def test_build_quantile(self):
        times = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 100.0])
        grid = build_time_grid(10, 2, mode='quantile', times=times)

        assert grid.points[-1] == 4.0
        assert np.all(np.diff(grid.points) > 0)

    def test_build_quantile_without_times(self):
        with pytest.raises(ValueError):
            build_time_grid(10, 5, mode='quantile')

    def test_build_invalid(self):
        with pytest.raises(ValueError):
            build_time_grid(0, 5)

        with pytest.raises(ValueError):
            build_time_grid(10, 0)

        with pytest.raises(ValueError):
            build_time_grid(10, 5, mode='log')

    def test_zero_not_allowed(self):
        with pytest.raises(ValueError):
            TimeGrid([0.0, 1.0], 1.0)

    def test_not_increasing(self):
        with pytest.raises(ValueError):
            TimeGrid([1.0, 1.0], 2.0)

    def test_equality(self):
        grid = build_time_grid(5, 5)

        assert grid == TimeGrid([1.0, 2.0, 3.0, 4.0, 5.0], 5)
        assert grid != build_time_grid(5, 4)
        assert hash(grid) == hash(TimeGrid([1.0, 2.0, 3.0, 4.0, 5.0], 5))

    def test_subgrid(self):
        grid = build_time_grid(5, 5)

        np.testing.assert_array_equal(grid.subgrid(2).points, [3.0])


class TestSurvivalDataset(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.dataset = SurvivalDataset(
            np.arange(20, dtype=float).reshape(10, 2),
            np.arange(1, 11, dtype=float),
            [1, 0] * 5,
        )

    def test_properties(self):
        assert self.dataset.n_samples == 10
        assert self.dataset.n_features == 2
        assert self.dataset.censoring_rate == 0.5

    def test_read_only(self):
        with pytest.raises(ValueError):
            self.dataset.times[0] = 5

    def test_no_events(self):
        with pytest.raises(ValueError):
            SurvivalDataset([[1.0], [2.0]], [1.0, 2.0], [0, 0])

    def test_invalid_rows(self):
        with pytest.raises(ValueError):
            SurvivalDataset([[1.0], [2.0]], [1.0], [1, 0])

        with pytest.raises(ValueError):
            SurvivalDataset([[np.nan], [2.0]], [1.0, 2.0], [1, 0])

        with pytest.raises(ValueError):
            SurvivalDataset([[1.0], [2.0]], [-1.0, 2.0], [1, 0])

        with pytest.raises(ValueError):
            SurvivalDataset([[1.0], [2.0]], [1.0, 2.0], [1, 2])

    def test_subset(self):
        subset = self.dataset.subset([0, 2])

        np.testing.assert_array_equal(subset.times, [1.0, 3.0])
        np.testing.assert_array_equal(subset.events, [1, 1])

    def test_train_test_split(self):
        data = SurvivalDataset(
            np.arange(20, dtype=float).reshape(-1, 1), np.arange(1, 21), np.ones(20))

        train, test = data.train_test_split(test_size=0.25, seed=3)
        again_train, again_test = data.train_test_split(test_size=0.25, seed=3)

        assert train.n_samples == 15
        assert test.n_samples == 5
        assert set(train.times) | set(test.times) == set(data.times)
        assert not set(train.times) & set(test.times)
        np.testing.assert_array_equal(test.times, again_test.times)

    def test_train_test_split_empty(self):
        with pytest.raises(ValueError):
            self.dataset.train_test_split(test_size=0.01)


class TestInteractionExplanation(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.grid = build_time_grid(3, 3)
        cls.explanation = InteractionExplanation(
            order=2,
            target='hazard',
            grid=cls.grid,
            baseline=[1.0, 1.0, 1.0],
            values={0b11: [0.5, 0.5, 0.5], 0b10: [1.0, 2.0, 3.0], 0b1: [0.0, 1.0, 0.0]},
        )

    def test_canonical_order(self):
        assert self.explanation.coalitions == [0b1, 0b10, 0b11]
        assert self.explanation.target == PredictionTarget.HAZARD

    def test_total(self):
        np.testing.assert_allclose(self.explanation.total(), [1.5, 3.5, 3.5])

    def test_matrix(self):
        returned = self.explanation.matrix([0b10, 0b1])

        np.testing.assert_array_equal(returned, [[1.0, 2.0, 3.0], [0.0, 1.0, 0.0]])

    def test_time_summary(self):
        summary = self.explanation.time_summary()

        assert summary[0b11] == (0.5, 0.0)
        np.testing.assert_allclose(summary[0b10], (2.0, np.std([1.0, 2.0, 3.0])))

    def test_equality(self):
        same = InteractionExplanation(
            2, PredictionTarget.HAZARD, self.grid, [1.0, 1.0, 1.0],
            {0b1: [0.0, 1.0, 0.0], 0b10: [1.0, 2.0, 3.0], 0b11: [0.5, 0.5, 0.5]})

        assert same == self.explanation

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            InteractionExplanation(1, 'hazard', self.grid, [0, 0, 0], {0b11: [0, 0, 0]})

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            InteractionExplanation(1, 'hazard', self.grid, [0, 0, 0], {0b1: [0, 0]})

        with pytest.raises(ValueError):
            InteractionExplanation(1, 'hazard', self.grid, [0, 0], {})


def test_rng_streams_are_reproducible():
    first = rng_stream(7, RngPurpose.FEATURES).normal(size=5)
    again = rng_stream(7, RngPurpose.FEATURES).normal(size=5)
    other = rng_stream(7, RngPurpose.EVENT_TIMES).normal(size=5)
    indexed = rng_stream(7, RngPurpose.FEATURES, 1).normal(size=5)

    np.testing.assert_array_equal(first, again)
    assert not np.allclose(first, other)
    assert not np.allclose(first, indexed)


def test_derived_seed():
    assert derived_seed(0, 1) == derived_seed(0, 1)
    assert derived_seed(0, 1) != derived_seed(0, 2)
    assert derived_seed(0, 1) != derived_seed(1, 1)
