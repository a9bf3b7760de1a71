# -*- coding: utf-8 -*-

"""survint.interactions.exact module.

Exact interaction indices of a complete value table: Moebius transform, discrete
derivatives, Shapley interaction index (SII) and its efficient aggregation k-SII.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from survint.core import (
    TimeGrid, check_coalition, coalition_iter, coalition_size, format_coalition)
from survint.games import ValueTable

LOGGER = logging.getLogger(__name__)

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)

SII_CHUNK = 1 << 22


def popcount(bits):
    """Number of set bits of every entry of a ``uint64`` array."""
    v = np.array(bits, dtype=np.uint64)
    v = v - ((v >> np.uint64(1)) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return ((v * _H01) >> np.uint64(56)).astype(np.int64)


def _complete_values(table):
    if isinstance(table, ValueTable):
        if not table.complete:
            raise ValueError('The value table is incomplete')

        return table.values, table.n_features

    values = np.asarray(table, dtype=float)
    if values.ndim == 1:
        values = values[:, None]

    p = int(values.shape[0]).bit_length() - 1
    if values.shape[0] != 1 << p:
        raise ValueError('The value table is incomplete: {} rows'.format(values.shape[0]))

    return values, p


def _grid_of(table, n_points):
    if isinstance(table, ValueTable):
        return table.grid

    return TimeGrid(np.arange(1, n_points + 1, dtype=float), float(n_points))


@dataclass(frozen=True, eq=False)
class MoebiusCoefficients:
    """Moebius coefficients ``m_S(t)`` of every subset, row index equal to the bit set."""

    n_features: int
    grid: TimeGrid
    values: np.ndarray

    def coefficient(self, coalition, t_index=None):
        check_coalition(coalition, self.n_features)
        row = self.values[coalition]
        return row if t_index is None else float(row[t_index])

    def reconstruct(self):
        """Zeta transform back to the value table."""
        return ValueTable.complete_from(self.n_features, self.grid, zeta_transform(self.values))

    def as_dict(self, max_order=None):
        max_order = self.n_features if max_order is None else max_order
        return {
            bits: self.values[bits]
            for bits in coalition_iter(self.n_features, max_order) if bits
        }


def _subset_transform(values, sign):
    values = np.array(values, dtype=float)
    squeeze = values.ndim == 1
    if squeeze:
        values = values[:, None]

    p = values.shape[0].bit_length() - 1
    n_points = values.shape[1]
    for i in range(p):
        view = values.reshape(-1, 2, 1 << i, n_points)
        view[:, 1] += sign * view[:, 0]

    return values[:, 0] if squeeze else values


def zeta_transform(values):
    """Subset sums ``sum_{S <= M} m_S`` of a ``(2^p, ...)`` array."""
    return _subset_transform(values, 1.0)


def moebius_transform(table):
    """Moebius coefficients ``m_S(t) = sum_{L <= S} (-1)^{|S|-|L|} nu(t|L)``.

    Computed with the in-place subset-sum transform, ``O(p 2^p)`` per timepoint.

    Args:
        table (ValueTable or np.ndarray):
            Complete value table.

    Returns:
        MoebiusCoefficients
    """
    values, p = _complete_values(table)
    coefficients = _subset_transform(values, -1.0)
    return MoebiusCoefficients(p, _grid_of(table, values.shape[1]), coefficients)


def _time_index(table, t):
    if t is None:
        return None

    grid = table.grid if isinstance(table, ValueTable) else None
    if grid is None:
        return int(t)

    matches = np.flatnonzero(np.isclose(grid.points, t, rtol=1e-12, atol=0))
    if matches.size == 0:
        raise ValueError('t={} is not a point of the table grid'.format(t))

    return int(matches[0])


def discrete_derivative(table, K, M, t=None):
    """Discrete derivative ``Delta_K(M) = sum_{L <= K} (-1)^{|K|-|L|} nu(t|M + L)``.

    Args:
        table (ValueTable or np.ndarray):
            Complete value table.
        K (int):
            Coalition differentiated.
        M (int):
            Coalition added to, disjoint from ``K``.
        t (float):
            Grid time, the whole curve when omitted.

    Returns:
        float or np.ndarray
    """
    values, p = _complete_values(table)
    check_coalition(K, p)
    check_coalition(M, p)
    if K & M:
        raise ValueError('Coalitions {{{}}} and {{{}}} overlap'.format(
            format_coalition(K), format_coalition(M)))

    size = coalition_size(K)
    result = np.zeros(values.shape[1])
    subset = K
    while True:
        sign = -1.0 if (size - coalition_size(subset)) % 2 else 1.0
        result = result + sign * values[M | subset]
        if subset == 0:
            break

        subset = (subset - 1) & K

    index = _time_index(table, t)
    return result if index is None else float(result[index])


def sii_weights(n_features, order):
    """Weights ``1 / ((p - k + 1) C(p - k, m))`` for ``m = 0..p-k``."""
    m = np.arange(n_features - order + 1)
    return 1.0 / ((n_features - order + 1) * special.binom(n_features - order, m))


def sii_from_samples(n_features, targets, coalitions, scales, values):
    """Weighted SII sums ``sum_T scale_T c_K(T) nu(T)`` for every target ``K``.

    ``c_K(T) = (-1)^{|K| - |K & T|} w_{|K|}(|T - K|)`` expands every discrete derivative of
    the SII definition into its value-function terms. With all ``2^p`` coalitions and unit
    scales the sums are the exact SII.

    Args:
        n_features (int):
            Number of players.
        targets (sequence of int):
            Coalitions ``K`` to estimate.
        coalitions (sequence of int):
            Evaluated coalitions ``T``.
        scales (np.ndarray):
            Per-coalition inverse inclusion probability.
        values (np.ndarray):
            ``(coalitions, timepoints)`` values.

    Returns:
        np.ndarray:
            ``(targets, timepoints)`` sums.
    """
    targets_arr = np.array([int(bits) for bits in targets], dtype=np.uint64)
    coalitions_arr = np.array([int(bits) for bits in coalitions], dtype=np.uint64)
    values = np.asarray(values, dtype=float)
    scales = np.asarray(scales, dtype=float)
    result = np.zeros((targets_arr.size, values.shape[1]))
    if not targets_arr.size or not coalitions_arr.size:
        return result

    target_sizes = popcount(targets_arr)
    weights = [sii_weights(n_features, order) for order in range(n_features + 1)]
    chunk = max(1, SII_CHUNK // coalitions_arr.size)
    for start in range(0, targets_arr.size, chunk):
        block = targets_arr[start:start + chunk, None]
        sizes = target_sizes[start:start + chunk, None]
        inside = popcount(block & coalitions_arr[None, :])
        outside = popcount(coalitions_arr[None, :] & ~block)
        signs = np.where((sizes - inside) % 2, -1.0, 1.0)
        coefficients = np.empty(signs.shape)
        for order in np.unique(sizes):
            rows = sizes[:, 0] == order
            coefficients[rows] = signs[rows] * weights[order][outside[rows]]

        result[start:start + chunk] = (coefficients * scales[None, :]) @ values

    return result


def exact_sii(table, k):
    """Shapley interaction index of every coalition with ``1 <= |K| <= k``.

    Every order uses its own weight normalisation, so order 1 gives the Shapley values.

    Args:
        table (ValueTable or np.ndarray):
            Complete value table.
        k (int):
            Maximum order, ``1 <= k <= p``.

    Returns:
        dict:
            Mapping ``coalition -> curve``.
    """
    values, p = _complete_values(table)
    if not 1 <= k <= p:
        raise ValueError('k must be in [1, {}], got {}'.format(p, k))

    targets = [bits for bits in coalition_iter(p, k) if bits]
    sums = sii_from_samples(p, targets, range(1 << p), np.ones(1 << p), values)
    return dict(zip(targets, sums))


def bernoulli_numbers(k):
    """Bernoulli numbers ``B_0..B_k`` with ``B_1 = -1/2``."""
    return special.bernoulli(k) if k > 0 else np.ones(1)


def aggregate_ksii(sii, k, n_features):
    """Aggregate SII values into k-SII values.

    ``phi_S = sum_{L disjoint from S, |S + L| <= k} B_{|L|} SII_{S + L}`` with Bernoulli
    numbers ``B``. The top order is the SII itself, the result is efficient, ``k = 1``
    gives the Shapley values and ``k = p`` the Moebius coefficients.

    Args:
        sii (dict):
            SII curves of every coalition with ``1 <= |K| <= k``.
        k (int):
            Explanation order.
        n_features (int):
            Number of players.

    Returns:
        dict:
            Mapping ``coalition -> curve`` in canonical order.
    """
    if not 1 <= k <= n_features:
        raise ValueError('k must be in [1, {}], got {}'.format(n_features, k))

    by_order = {}
    for bits in sii:
        by_order.setdefault(coalition_size(bits), []).append(bits)

    missing = [order for order in range(1, k + 1) if order not in by_order]
    if missing:
        raise ValueError('SII values of orders {} are missing'.format(missing))

    expected = {bits for bits in coalition_iter(n_features, k) if bits}
    if not expected <= set(sii):
        raise ValueError('SII values do not cover every coalition up to order {}'.format(k))

    bernoulli = bernoulli_numbers(k)
    result = {}
    for bits in sorted(expected, key=lambda bits: (coalition_size(bits), bits)):
        size = coalition_size(bits)
        curve = np.array(sii[bits], dtype=float)
        for order in range(size + 1, k + 1):
            weight = bernoulli[order - size]
            if weight == 0:
                continue

            for superset in by_order[order]:
                if superset & bits == bits:
                    curve = curve + weight * np.asarray(sii[superset])

        result[bits] = curve

    return result


def _superset_sums(values):
    values = np.array(values, dtype=float)
    p = values.shape[0].bit_length() - 1
    n_points = values.shape[1]
    for i in range(p):
        view = values.reshape(-1, 2, 1 << i, n_points)
        view[:, 0] += view[:, 1]

    return values


def ksii_weight(size, superset_size, k):
    """Weight of ``m_T`` in the k-SII value of ``S`` for ``S <= T``, ``|S| = size``.

    Equal to ``sum_{l=0}^{min(n, k-size)} C(n, l) B_l / (n - l + 1)`` with
    ``n = superset_size - size``, which is exactly ``1`` for ``T = S`` and ``0`` for any
    other ``T`` of order at most ``k``.
    """
    if superset_size <= k:
        return 1.0 if superset_size == size else 0.0

    n = superset_size - size
    extra = np.arange(k - size + 1)
    bernoulli = bernoulli_numbers(k - size)
    return float(np.sum(special.binom(n, extra) * bernoulli / (n - extra + 1)))


def ksii_from_moebius(moebius, k):
    """k-SII values as weighted sums of the Moebius coefficients of their supersets.

    Coefficients of order at most ``k`` are kept as they are, so the full-order index is
    the Moebius transform itself.

    Args:
        moebius (MoebiusCoefficients):
            Coefficients of every subset.
        k (int):
            Explanation order.

    Returns:
        dict:
            Mapping ``coalition -> curve`` in canonical order.
    """
    p = moebius.n_features
    if not 1 <= k <= p:
        raise ValueError('k must be in [1, {}], got {}'.format(p, k))

    values = np.asarray(moebius.values, dtype=float)

    sizes = popcount(np.arange(1 << p))
    result = values.copy()
    for order in range(k + 1, p + 1):
        stratum = np.where((sizes == order)[:, None], values, 0.0)
        sums = _superset_sums(stratum)
        for size in range(1, k + 1):
            rows = sizes == size
            result[rows] += ksii_weight(size, order, k) * sums[rows]

    return {bits: result[bits] for bits in coalition_iter(p, k) if bits}


def exact_ksii(table, k):
    """k-SII values of a complete value table."""
    return ksii_from_moebius(moebius_transform(table), k)
