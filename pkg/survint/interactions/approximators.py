# -*- coding: utf-8 -*-

"""survint.interactions.approximators module.

Budgeted k-SII estimators. One budget unit is one coalition evaluation ``nu(t|M)``.
"""

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy import special

from survint.core import (
    MAX_APPROX_FEATURES, RngPurpose, coalition_size, encode, rng_stream)
from survint.exceptions import InstabilityWarning, RankDeficiencyError
from survint.interactions.exact import (
    aggregate_ksii, exact_sii, popcount, sii_from_samples)

LOGGER = logging.getLogger(__name__)

METHODS = ('montecarlo', 'permutation', 'regression')
METHOD_ALIASES = {
    'mc': 'montecarlo',
    'montecarlo': 'montecarlo',
    'monte_carlo': 'montecarlo',
    'perm': 'permutation',
    'permutation': 'permutation',
    'regression': 'regression',
    'kernel': 'regression',
}

RIDGE = 1e-8
MAX_EXHAUSTIVE_PERMUTATION_FEATURES = 6
ENUMERATION_LIMIT = 100000
MAX_PERMUTATIONS_PER_UNIT = 100


def parse_method(method):
    try:
        return METHOD_ALIASES[str(method).lower()]
    except KeyError:
        raise ValueError('Unknown approximation method {!r}; use one of {}'.format(
            method, ', '.join(METHODS))) from None


@dataclass(frozen=True)
class ApproximatorConfig:
    """Approximation method, evaluation budget per timepoint and seed.

    With ``share_samples`` one coalition sample serves every timepoint; otherwise each
    timepoint draws its own sample from the substream of its index.
    """

    method: str
    budget: int
    seed: int = 0
    share_samples: bool = True
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'method', parse_method(self.method))
        if int(self.budget) != self.budget:
            raise ValueError('The budget must be an integer, got {}'.format(self.budget))

        object.__setattr__(self, 'budget', int(self.budget))

    def validate(self, order):
        minimum = 2 * (order + 1) if self.method == 'regression' else 2
        if self.budget < minimum:
            raise ValueError('The {} approximator needs a budget of at least {}, got {}'.format(
                self.method, minimum, self.budget))


@dataclass
class ApproximationResult:
    """k-SII estimates with the SII they were aggregated from and solver diagnostics."""

    order: int
    values: Dict[int, np.ndarray]
    sii: Dict[int, np.ndarray]
    evaluations: int
    method: str
    rank: int = None
    basis_size: int = None
    unstable: bool = False
    diagnostics: dict = field(default_factory=dict)


def _full_coalition(n_features):
    return (1 << n_features) - 1


def _check_game(game, order):
    p = game.n_features
    if p > MAX_APPROX_FEATURES:
        raise ValueError('Approximators support at most {} features, got {}'.format(
            MAX_APPROX_FEATURES, p))

    if not 1 <= order <= p:
        raise ValueError('k must be in [1, {}], got {}'.format(p, order))

    return p


def _kernel_mass(n_features, size):
    """Shapley kernel mass of a whole size stratum, ``(p - 1) / (s (p - s))``."""
    return (n_features - 1) / (size * (n_features - size))


def _allocate(n_features, budget):
    """Split the interior budget over size strata.

    Pairs of complementary strata are enumerated from the outside in while every member
    can get at least one expected sample; the rest is split by kernel mass.

    Returns:
        dict:
            ``size -> number of coalitions`` and the set of complete sizes.
    """
    p = n_features
    remaining = budget - 2
    sizes = list(range(1, p))
    if not sizes or remaining <= 0:
        return {}, set()

    mass = {size: _kernel_mass(p, size) for size in sizes}
    complete = set()
    pending = list(sizes)
    for size in range(1, p // 2 + 1):
        group = sorted({size, p - size})
        n_group = sum(int(special.comb(p, s, exact=True)) for s in group)
        share = sum(mass[s] for s in group) / sum(mass[s] for s in pending)
        if remaining * share / n_group >= 1.0 - 1e-8 and n_group <= remaining:
            complete.update(group)
            pending = [s for s in pending if s not in group]
            remaining -= n_group
            LOGGER.debug('Enumerating sizes %s with %s coalitions', group, n_group)
        else:
            break

    allocation = {size: int(special.comb(p, size, exact=True)) for size in complete}
    if pending and remaining > 0:
        total = sum(mass[s] for s in pending)
        raw = {s: remaining * mass[s] / total for s in pending}
        counts = {s: min(int(np.floor(raw[s])), int(special.comb(p, s, exact=True)))
                  for s in pending}
        leftover = remaining - sum(counts.values())
        for s in sorted(pending, key=lambda s: raw[s] - np.floor(raw[s]), reverse=True):
            if leftover <= 0:
                break

            if counts[s] < special.comb(p, s, exact=True):
                counts[s] += 1
                leftover -= 1

        allocation.update({s: n for s, n in counts.items() if n > 0})
        LOGGER.debug('Sampling sizes %s', {s: counts[s] for s in pending})

    return allocation, complete


def _sample_stratum(n_features, size, count, rng):
    total = int(special.comb(n_features, size, exact=True))
    if count >= total or total <= ENUMERATION_LIMIT:
        members = [encode(combination)
                   for combination in itertools.combinations(range(n_features), size)]
        if count >= total:
            return members

        chosen = rng.choice(total, size=count, replace=False)
        return [members[index] for index in np.sort(chosen)]

    chosen = set()
    sample = []
    while len(sample) < count:
        bits = encode(rng.choice(n_features, size=size, replace=False))
        if bits not in chosen:
            chosen.add(bits)
            sample.append(bits)

    return sample


def sample_coalitions(n_features, budget, rng):
    """Stratified coalition sample with both borders.

    Args:
        n_features (int):
            Number of players.
        budget (int):
            Number of coalitions, at least 2.
        rng (np.random.Generator):
            Random stream.

    Returns:
        tuple:
            ``(coalitions, scales, complete_sizes)`` where ``scales`` holds the inverse
            within-stratum inclusion probability ``C(p, s) / n_s``.
    """
    p = n_features
    full = _full_coalition(p)
    if p < 63 and budget >= 1 << p:
        coalitions = list(range(1 << p))
        return coalitions, np.ones(len(coalitions)), set(range(p + 1))

    allocation, complete = _allocate(p, budget)
    coalitions = [0, full]
    scales = [1.0, 1.0]
    for size in sorted(allocation):
        count = allocation[size]
        members = _sample_stratum(p, size, count, rng)
        coalitions.extend(members)
        scales.extend([special.comb(p, size, exact=True) / len(members)] * len(members))

    return coalitions, np.asarray(scales, dtype=float), complete | {0, p}


def _ksii_targets(n_features, order):
    """Every coalition with ``1 <= |K| <= order`` in canonical order."""
    targets = []
    for size in range(1, order + 1):
        targets.extend(sorted(encode(combination) for combination in
                              itertools.combinations(range(n_features), size)))

    return targets


def _result(game, order, sii, evaluations, method, **kwargs):
    values = aggregate_ksii(sii, order, game.n_features)
    return ApproximationResult(order, values, sii, evaluations, method, **kwargs)


def _per_timepoint(game, order, config, estimator):
    """Run ``estimator`` once per timepoint on independent substreams."""
    results = []
    for t_index in range(game.n_timepoints):
        rng = rng_stream(config.seed, RngPurpose.APPROXIMATOR, t_index + 1)
        results.append(estimator(game.restrict(t_index), order, config.budget, rng, config))

    sii = {
        bits: np.concatenate([result.sii[bits] for result in results])
        for bits in results[0].sii
    }
    first = results[0]
    ranks = [result.rank for result in results if result.rank is not None]
    return _result(
        game, order, sii, first.evaluations, first.method,
        rank=min(ranks) if ranks else None, basis_size=first.basis_size,
        unstable=any(result.unstable for result in results),
    )


def _run(game, order, config, estimator):
    _check_game(game, order)
    config.validate(order)
    if config.share_samples:
        rng = rng_stream(config.seed, RngPurpose.APPROXIMATOR, 0)
        return estimator(game, order, config.budget, rng, config)

    return _per_timepoint(game, order, config, estimator)


def _montecarlo(game, order, budget, rng, config):
    p = game.n_features
    coalitions, scales, complete = sample_coalitions(p, budget, rng)
    values = game.values(coalitions)
    targets = _ksii_targets(p, order)
    sums = sii_from_samples(p, targets, coalitions, scales, values)
    sii = dict(zip(targets, sums))
    return _result(game, order, sii, len(coalitions), 'montecarlo',
                   diagnostics={'complete_sizes': sorted(complete)})


def approx_montecarlo(game, k, budget, seed=0, share_samples=True):
    """Stratified Monte-Carlo estimate of the k-SII values.

    Coalitions are drawn by size stratum, complete strata first and uniformly without
    replacement inside the others. Each evaluated coalition enters every SII sum with
    its SII coefficient scaled by the inverse inclusion probability, which makes each SII
    estimate unbiased. The empty and the grand coalition are always evaluated.

    Args:
        game (SurvivalGame):
            Game to explain.
        k (int):
            Explanation order.
        budget (int):
            Coalition evaluations per timepoint, at least 2.
        seed (int):
            Seed of the sampling streams.

    Returns:
        ApproximationResult
    """
    config = ApproximatorConfig('montecarlo', budget, seed, share_samples)
    return _run(game, k, config, _montecarlo)


def _permutation(game, order, budget, rng, config):
    p = game.n_features
    full = _full_coalition(p)
    cache = {}

    def ensure(coalitions):
        missing = [bits for bits in dict.fromkeys(coalitions) if bits not in cache]
        if missing:
            cache.update(zip(missing, game.values(missing)))

    ensure([0, full])
    exhaustive = p < 63 and budget >= 1 << p
    if exhaustive:
        ensure(range(1 << p))

    targets = _ksii_targets(p, order)
    sums = {bits: np.zeros(game.n_timepoints) for bits in targets}
    counts = dict.fromkeys(targets, 0)

    def placements(permutation):
        needed = []
        windows = []
        prefix = 0
        for position in range(p):
            for size in range(1, order + 1):
                if position + size > p:
                    break

                window = encode(permutation[position:position + size])
                windows.append((window, prefix))
                subset = window
                while True:
                    needed.append(prefix | subset)
                    if subset == 0:
                        break

                    subset = (subset - 1) & window

            prefix |= 1 << int(permutation[position])

        return windows, needed

    def accumulate(windows):
        for window, prefix in windows:
            size = coalition_size(window)
            derivative = np.zeros(game.n_timepoints)
            subset = window
            while True:
                sign = -1.0 if (size - coalition_size(subset)) % 2 else 1.0
                derivative = derivative + sign * cache[prefix | subset]
                if subset == 0:
                    break

                subset = (subset - 1) & window

            sums[window] += derivative
            counts[window] += 1

    n_permutations = 0
    if exhaustive and p <= MAX_EXHAUSTIVE_PERMUTATION_FEATURES:
        for permutation in itertools.permutations(range(p)):
            windows, _ = placements(np.asarray(permutation))
            accumulate(windows)
            n_permutations += 1

    elif exhaustive:
        table = np.vstack([cache[bits] for bits in range(1 << p)])
        sii = exact_sii(table, order)
        return _result(game, order, sii, len(cache), 'permutation')

    else:
        for _ in range(MAX_PERMUTATIONS_PER_UNIT * budget):
            windows, needed = placements(rng.permutation(p))
            new = {bits for bits in needed if bits not in cache}
            if len(cache) + len(new) > budget:
                if n_permutations == 0:
                    # not even one permutation fits: use the windows that do
                    fitting = []
                    for window, prefix in windows:
                        required = {prefix | subset for subset in _submasks(window)}
                        extra = required - set(cache)
                        if len(cache) + len(extra) > budget:
                            break

                        ensure(sorted(extra))
                        fitting.append((window, prefix))

                    accumulate(fitting)
                    warnings.warn('Budget {} is too small for one permutation; {} of {} '
                                  'windows used'.format(budget, len(fitting), len(windows)),
                                  InstabilityWarning)

                break

            ensure(sorted(new))
            accumulate(windows)
            n_permutations += 1

    sii = {
        bits: sums[bits] / counts[bits] if counts[bits] else sums[bits]
        for bits in targets
    }
    LOGGER.debug('Permutation sampling used %s permutations and %s coalitions',
                 n_permutations, len(cache))
    return _result(game, order, sii, len(cache), 'permutation',
                   diagnostics={'permutations': n_permutations,
                                'unseen': sum(1 for bits in targets if not counts[bits])})


def _submasks(bits):
    subset = bits
    while True:
        yield subset
        if subset == 0:
            return

        subset = (subset - 1) & bits


def approx_permutation(game, k, budget, seed=0, share_samples=True):
    """Permutation sampling estimate of the k-SII values.

    Every window of ``1..k`` consecutive players of a random permutation contributes the
    discrete derivative at the set of players preceding it. Coalitions are cached, so the
    budget counts distinct evaluations. With a budget of ``2^p`` every permutation is
    enumerated (or, for many players, the exact formula is used on the full table).
    """
    config = ApproximatorConfig('permutation', budget, seed, share_samples)
    return _run(game, k, config, _permutation)


def _design(coalitions, basis):
    coalitions_arr = np.array(coalitions, dtype=np.uint64)
    basis_arr = np.array(basis, dtype=np.uint64)
    return ((coalitions_arr[:, None] & basis_arr[None, :]) == basis_arr[None, :]).astype(float)


def _regression(game, order, budget, rng, config):
    p = game.n_features
    full = _full_coalition(p)
    coalitions, scales, complete = sample_coalitions(p, budget, rng)
    values = game.values(coalitions)

    basis = _ksii_targets(p, order)
    basis_size = len(basis)
    interior = [row for row, bits in enumerate(coalitions) if bits not in (0, full)]
    sizes = popcount(np.array([coalitions[row] for row in interior], dtype=np.uint64))
    kernel = np.array([
        _kernel_mass(p, size) / special.comb(p, size) for size in sizes]) if interior \
        else np.empty(0)
    weights = kernel * scales[interior]

    grand = values[coalitions.index(full)]
    design = _design([coalitions[row] for row in interior], basis)
    # eliminate the last coefficient through sum(beta) = nu(P)
    reduced = design[:, :-1] - design[:, -1:]
    response = values[interior] - design[:, -1:] * grand[None, :]

    sqrt_w = np.sqrt(weights)[:, None]
    weighted_design = sqrt_w * reduced
    rank = int(np.linalg.matrix_rank(weighted_design)) if reduced.size else 0
    unstable = budget < basis_size or rank < reduced.shape[1]
    if rank < reduced.shape[1]:
        message = 'Regression design has rank {} for {} free coefficients (budget {})'.format(
            rank, reduced.shape[1], budget)
        if config.strict:
            raise RankDeficiencyError(message, rank, reduced.shape[1])

        warnings.warn(message + '; using a ridge-stabilized solve', InstabilityWarning)
    elif budget < basis_size:
        warnings.warn('Budget {} is below the {} basis functions'.format(budget, basis_size),
                      InstabilityWarning)

    gram = weighted_design.T @ weighted_design
    rhs = weighted_design.T @ (sqrt_w * response)
    if unstable:
        gram = gram + RIDGE * np.eye(gram.shape[0])

    if not gram.size:
        coefficients = np.zeros((0, values.shape[1]))
    else:
        try:
            coefficients = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            coefficients = np.linalg.lstsq(gram, rhs, rcond=None)[0]

    beta = np.vstack([coefficients, grand[None, :] - coefficients.sum(axis=0)])

    # SII of the k-additive surrogate
    basis_arr = np.array(basis, dtype=np.uint64)
    basis_sizes = popcount(basis_arr)
    surrogate = {}
    for index, bits in enumerate(basis):
        supersets = (basis_arr & np.uint64(bits)) == np.uint64(bits)
        denominators = basis_sizes[supersets] - basis_sizes[index] + 1
        surrogate[bits] = (beta[supersets] / denominators[:, None]).sum(axis=0)

    # add the stratified estimate of the residual game's SII
    fitted = _design(coalitions, basis) @ beta
    residual = values - fitted
    corrections = sii_from_samples(p, basis, coalitions, scales, residual)
    sii = {bits: surrogate[bits] + corrections[index] for index, bits in enumerate(basis)}

    LOGGER.debug('Regression on %s coalitions: rank %s of %s, basis %s', len(coalitions), rank,
                 reduced.shape[1], basis_size)
    return _result(game, order, sii, len(coalitions), 'regression', rank=rank,
                   basis_size=basis_size, unstable=unstable,
                   diagnostics={'complete_sizes': sorted(complete)})


def approx_regression(game, k, budget, seed=0, share_samples=True, strict=False):
    """Regression-adjusted kernel estimate of the k-SII values.

    A k-additive surrogate is fitted by weighted least squares with Shapley kernel
    weights on a stratified coalition sample, with ``nu(empty) = 0`` and
    ``nu(P) = sum(beta)`` as exact constraints. The SII of the surrogate follows in closed
    form from its coefficients; an unbiased stratified estimate of the SII of the residual
    game is added. Budgets below the basis size use a ridge of ``1e-8`` and raise an
    ``InstabilityWarning``.

    Args:
        game (SurvivalGame):
            Game to explain.
        k (int):
            Explanation order.
        budget (int):
            Coalition evaluations per timepoint, at least ``2 (k + 1)``.
        seed (int):
            Seed of the sampling streams.
        strict (bool):
            Raise ``RankDeficiencyError`` instead of regularising a rank-deficient design.

    Returns:
        ApproximationResult
    """
    config = ApproximatorConfig('regression', budget, seed, share_samples, strict)
    return _run(game, k, config, _regression)


_ESTIMATORS = {
    'montecarlo': _montecarlo,
    'permutation': _permutation,
    'regression': _regression,
}


def approximate(game, k, config):
    """Dispatch to the estimator selected by an ``ApproximatorConfig``."""
    return _run(game, k, config, _ESTIMATORS[config.method])
