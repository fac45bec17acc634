"""Receptive and classical metric entropy of cylinder partitions.

H_mu of a join is evaluated by closed form whenever one exists: Bernoulli
measures give |S| * H(p) (kept exact as a combination of prime logarithms) and
stationary Markov chains on Z_+ give the chain-rule sum over the gaps of S.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.data.symbolic import (
    CoordinatePartition,
    MeasureOracle,
    Site,
    SymbolicSystem,
    _matrix_power,
    cylinder_measure,
    join_over,
    permute_alphabet,
    product_system,
    shift_partition,
)
from src.lattice.semigroup import (
    RegularSystem,
    dilated_system,
    growth_constant,
    product_regular_system,
    restricted_system,
    scaled_system,
    standard_system,
)
from src.utils.config import Config
from src.utils.errors import BudgetExceededError, EntropyError, IndexOverflowError
from src.utils.exact_log import ZERO, ExactLog

log = logging.getLogger(__name__)

NORMALIZATIONS = ("receptive", "classical")


@dataclass(frozen=True)
class EntropySample:
    n: int
    raw: float
    normalized: float
    normalizer: int
    coords_size: int
    exact: Optional[ExactLog] = None


@dataclass(frozen=True)
class EntropySequence:
    normalization: str
    samples: Tuple[EntropySample, ...]
    label: str = "system"
    quantity: str = "metric"
    system_hash: str = ""
    tail_fraction: float = 0.25

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise EntropyError(f"unknown normalization {self.normalization!r}")
        ns = [s.n for s in self.samples]
        if any(a >= b for a, b in zip(ns, ns[1:])):
            raise EntropyError("samples must be strictly increasing in n")

    @property
    def n_max(self) -> int:
        return self.samples[-1].n

    @property
    def headline(self) -> float:
        return self.samples[-1].normalized

    def tail(self) -> Tuple[EntropySample, ...]:
        size = max(2, math.ceil(len(self.samples) * self.tail_fraction))
        return self.samples[-size:]

    def _secant(self, against_normalizer: bool) -> float:
        window = self.tail()
        first, last = window[0], window[-1]
        if first is last:
            return self.headline
        if against_normalizer:
            span = last.normalizer - first.normalizer
        else:
            span = last.n - first.n
        if span == 0:
            return 0.0
        if first.exact is not None and last.exact is not None:
            return float((last.exact - first.exact) * Fraction(1, span))
        return (last.raw - first.raw) / span

    @property
    def slope(self) -> float:
        """Secant slope of the raw value against n over the tail window"""
        return self._secant(against_normalizer=False)

    @property
    def estimate(self) -> float:
        """Growth-rate estimate: tail secant slope of the raw value against the normalizer"""
        return self._secant(against_normalizer=True)

    @property
    def raw_non_decreasing(self) -> bool:
        return all(a.raw <= b.raw for a, b in zip(self.samples, self.samples[1:]))

    @property
    def normalized_non_increasing(self) -> bool:
        return all(a.normalized >= b.normalized for a, b in zip(self.samples, self.samples[1:]))

    def value_at(self, n: int) -> EntropySample:
        for sample in self.samples:
            if sample.n == n:
                return sample
        raise IndexOverflowError(n, self.n_max)


def bernoulli_entropy(p: Sequence[Fraction]) -> ExactLog:
    """H(p) = -sum p_i log p_i, exactly"""
    total = ZERO
    for value in p:
        if value > 0:
            total = total + ExactLog.neg_log(value) * value
    return total


def _entropy_of_row(row: np.ndarray) -> float:
    return math.fsum(-v * math.log(v) for v in row if v > 0)


def exact_partition_entropy(measure: MeasureOracle, partition: CoordinatePartition) -> ExactLog:
    """Bernoulli shortcut: sum over layers of |S_c| * H(p_c)"""
    if measure.kind != "bernoulli":
        raise EntropyError("exact entropies exist for Bernoulli measures only")
    counts: Dict[int, int] = {}
    for site in partition.coords:
        counts[site.layer] = counts.get(site.layer, 0) + 1
    total = ZERO
    for layer, count in sorted(counts.items()):
        total = total + bernoulli_entropy(measure.vector_for(layer)) * count
    return total


def markov_partition_entropy(measure: MeasureOracle, partition: CoordinatePartition) -> float:
    """H(pi) + sum over gaps of sum_a pi_a H((P^gap)_a), for a stationary chain on Z_+"""
    positions = sorted(site.point[0] for site in partition.coords)
    if any(site.layer != 0 or len(site.point) != 1 for site in partition.coords):
        raise EntropyError("Markov partitions must sit on one-dimensional single-layer sites")
    pi = np.asarray(measure.stationary)
    terms = [_entropy_of_row(pi)]
    for a, b in zip(positions, positions[1:]):
        step = _matrix_power(measure.matrix, b - a)
        terms.extend(pi[i] * _entropy_of_row(step[i]) for i in range(len(pi)))
    return math.fsum(terms)


def enumerated_partition_entropy(measure: MeasureOracle, partition: CoordinatePartition,
                                 alphabet_sizes: Optional[Sequence[int]] = None):
    """-sum mu(cell) log mu(cell) over all cylinders on S.

    Returns an ExactLog for Bernoulli measures and a float otherwise.
    """
    sites = partition.coords
    if alphabet_sizes is None:
        alphabet_sizes = [
            len(measure.vector_for(s.layer)) if measure.kind == "bernoulli" else measure.alphabet_size
            for s in sites
        ]
    cells = math.prod(alphabet_sizes)
    budget = Config().enumeration_budget
    if cells > budget:
        raise BudgetExceededError("partition enumeration", cells, budget)

    if measure.kind == "bernoulli":
        weight: Dict[Fraction, Fraction] = {}
        for word in itertools.product(*(range(r) for r in alphabet_sizes)):
            mass = cylinder_measure(measure, sites, word)
            if mass == 0:
                continue
            for site, symbol in zip(sites, word):
                p = measure.vector_for(site.layer)[symbol]
                weight[p] = weight.get(p, Fraction(0)) + mass
        total = ZERO
        for p, coefficient in sorted(weight.items()):
            total = total + ExactLog.neg_log(p) * coefficient
        return total

    masses = (
        cylinder_measure(measure, sites, word)
        for word in itertools.product(*(range(r) for r in alphabet_sizes))
    )
    return math.fsum(-m * math.log(m) for m in masses if m > 0)


def partition_entropy(measure: MeasureOracle, partition: CoordinatePartition) -> float:
    """H_mu(A) in nats"""
    if partition.role != "partition":
        raise EntropyError("entropy is defined for partitions, not covers")
    if measure.kind == "bernoulli":
        return float(exact_partition_entropy(measure, partition))
    return markov_partition_entropy(measure, partition)


def receptive_metric_sequence(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                              regular: RegularSystem, n_max: int,
                              normalization: str = "receptive") -> EntropySequence:
    """Samples (n, H_mu(A^n), H_mu(A^n)/n or /|N_n|) for n = 1..n_max"""
    if n_max > regular.n_max:
        raise IndexOverflowError(n_max, regular.n_max)
    if normalization not in NORMALIZATIONS:
        raise EntropyError(f"unknown normalization {normalization!r}")
    measure.check_system(system)

    samples = []
    for n in range(1, n_max + 1):
        joined = join_over(partition, regular, n, system)
        if measure.kind == "bernoulli":
            exact = exact_partition_entropy(measure, joined)
            raw = float(exact)
        else:
            exact = None
            raw = markov_partition_entropy(measure, joined)
        normalizer = n if normalization == "receptive" else regular.size(n)
        samples.append(EntropySample(n, raw, raw / normalizer, normalizer, len(joined), exact))
    return EntropySequence(normalization, tuple(samples), label=system.name, system_hash=system.fingerprint,
                           tail_fraction=Config().tail_fraction)


def diagonal_closed_form(k: int, p: Sequence) -> float:
    """k * H(p) for k generators all acting as the same Bernoulli shift"""
    return float(diagonal_closed_form_exact(k, p))


def diagonal_closed_form_exact(k: int, p: Sequence) -> ExactLog:
    measure = MeasureOracle.bernoulli(p)
    return bernoulli_entropy(measure.vectors[0]) * k


def _raw_equal(a: EntropySample, b: EntropySample) -> bool:
    if a.exact is not None and b.exact is not None:
        return a.exact == b.exact
    return a.raw == b.raw


@dataclass(frozen=True)
class ScalingReport:
    p: int
    base: EntropySequence
    scaled: EntropySequence
    identity_holds: bool
    mismatches: Tuple[int, ...]
    headline_ratio: float


def verify_scaling_law(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                       regular: RegularSystem, p: int, n_max: int) -> ScalingReport:
    """Compare the sequence over N'_n = N_{pn} with the sequence over N_n at pn"""
    if p * n_max > regular.n_max:
        raise IndexOverflowError(p * n_max, regular.n_max)
    base = receptive_metric_sequence(system, measure, partition, regular, p * n_max)
    scaled_regular = scaled_system(regular, p, n_max)
    scaled = receptive_metric_sequence(system, measure, partition, scaled_regular, n_max)

    mismatches = tuple(
        n for n in range(1, n_max + 1)
        if not _raw_equal(scaled.value_at(n), base.value_at(p * n))
    )
    if mismatches:
        log.warning("scaling identity fails at n in %s", list(mismatches)[:10])
    ratio = scaled.headline / base.headline if base.headline else float(p)
    return ScalingReport(p, base, scaled, not mismatches, mismatches, ratio)


@dataclass(frozen=True)
class GeneratorEntry:
    generator: Tuple[int, ...]
    is_unit: bool
    sequence: EntropySequence


@dataclass(frozen=True)
class GeneratorReport:
    generators: Tuple[GeneratorEntry, ...]
    action: EntropySequence
    margin_headline: float
    margin_estimate: float
    satisfied: bool


def generator_entropy_report(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                             regular: RegularSystem, n_max: int, tol: float = 1e-9) -> GeneratorReport:
    """Single-map sequences of every g in N_1 against the full action"""
    action = receptive_metric_sequence(system, measure, partition, regular, n_max)
    clock = standard_system(1, n_max)
    entries = []
    for g in regular[1]:
        single = system.single_map(g)
        sequence = receptive_metric_sequence(single, measure, partition, clock, n_max)
        entries.append(GeneratorEntry(g, sum(g) == 1, sequence))
    best_headline = max(e.sequence.headline for e in entries)
    best_estimate = max(e.sequence.estimate for e in entries)
    margin_estimate = action.estimate - best_estimate
    return GeneratorReport(
        tuple(entries), action,
        margin_headline=action.headline - best_headline,
        margin_estimate=margin_estimate,
        satisfied=margin_estimate >= -tol,
    )


@dataclass(frozen=True)
class ProductReport:
    first: EntropySequence
    second: EntropySequence
    product: EntropySequence
    identity_holds: bool
    mismatches: Tuple[int, ...]
    lower_margin: float
    upper_margin: float


def product_bounds_report(first_system: SymbolicSystem, second_system: SymbolicSystem,
                          first_measure: MeasureOracle, second_measure: MeasureOracle,
                          first_partition: CoordinatePartition, second_partition: CoordinatePartition,
                          regular: RegularSystem, n_max: int,
                          second_regular: Optional[RegularSystem] = None) -> ProductReport:
    """H(C^n) = H(A^n) + H(B^n) per n, then max <= product <= sum on the estimates"""
    second_regular = second_regular or regular
    system, measure = product_system(first_system, second_system, first_measure, second_measure)
    joint = CoordinatePartition(
        first_partition.coords + shift_partition(second_partition, len(first_system.layers)).coords
    )
    product_regular = product_regular_system(regular, second_regular)

    first = receptive_metric_sequence(first_system, first_measure, first_partition, regular, n_max)
    second = receptive_metric_sequence(second_system, second_measure, second_partition, second_regular, n_max)
    product = receptive_metric_sequence(system, measure, joint, product_regular, n_max)

    mismatches = tuple(
        s.n for s, a, b in zip(product.samples, first.samples, second.samples)
        if s.exact != a.exact + b.exact
    )
    return ProductReport(
        first, second, product, not mismatches, mismatches,
        lower_margin=product.estimate - max(first.estimate, second.estimate),
        upper_margin=first.estimate + second.estimate - product.estimate,
    )


@dataclass(frozen=True)
class SubactionReport:
    moduli: Tuple[int, ...]
    full: EntropySequence
    restricted: EntropySequence
    lower_margin: float
    upper_margin: float
    dilation_sets_match: Optional[bool]
    dilation_identity: Optional[bool]
    refinement_holds: bool


def subaction_report(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                     regular: RegularSystem, moduli: Sequence[int], n_max: int) -> SubactionReport:
    """Restriction to H = p_1 Z_+ x ... x p_k Z_+ and the bounds h(S) <= h(T) <= (prod p) h(S)"""
    moduli = tuple(int(m) for m in moduli)
    restricted_regular = restricted_system(regular, moduli)
    full = receptive_metric_sequence(system, measure, partition, regular, n_max)
    restricted = receptive_metric_sequence(system, measure, partition, restricted_regular, n_max)
    index = math.prod(moduli)

    sets_match = identity = None
    refinement_holds = True
    if len(set(moduli)) == 1 and moduli[0] > 1:
        p = moduli[0]
        top = regular.n_max // p
        dilated = dilated_system(regular, p)
        if regular.kind == "standard":
            sets_match = all(
                set(dilated[n]) == set(restricted_regular[p * n]) for n in range(top + 1)
            )
        if len(partition) == 1 and measure.kind == "bernoulli":
            upto = min(n_max, dilated.n_max)
            on_dilated = receptive_metric_sequence(system, measure, partition, dilated, upto)
            identity = all(
                _raw_equal(a, b) for a, b in zip(on_dilated.samples, full.samples[:upto])
            )
        # refinement: the join over pN_n is coarser than the join over N_{pn} with H
        for n in range(1, top + 1):
            coarse = partition_entropy(measure, join_over(partition, dilated, n, system))
            fine = partition_entropy(measure, join_over(partition, restricted_regular, p * n, system))
            if coarse > fine + 1e-12:
                refinement_holds = False
                break

    return SubactionReport(
        moduli, full, restricted,
        lower_margin=full.headline - restricted.headline,
        upper_margin=index * restricted.headline - full.headline,
        dilation_sets_match=sets_match,
        dilation_identity=identity,
        refinement_holds=refinement_holds,
    )


@dataclass(frozen=True)
class ConjugacyReport:
    permutation: Tuple[int, ...]
    original: EntropySequence
    permuted: EntropySequence
    identical: bool


def conjugacy_report(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                     regular: RegularSystem, permutation: Sequence[int], n_max: int) -> ConjugacyReport:
    original = receptive_metric_sequence(system, measure, partition, regular, n_max)
    permuted = receptive_metric_sequence(system, permute_alphabet(measure, permutation),
                                         partition, regular, n_max)
    identical = all(
        a.raw == b.raw and a.normalized == b.normalized and a.exact == b.exact
        for a, b in zip(original.samples, permuted.samples)
    )
    return ConjugacyReport(tuple(permutation), original, permuted, identical)


@dataclass(frozen=True)
class DivergenceReport:
    receptive: EntropySequence
    classical: EntropySequence
    growth_constant: Fraction
    doubling_ratio: float
    linear_growth: bool


def classical_divergence_report(system: SymbolicSystem, measure: MeasureOracle, partition: CoordinatePartition,
                                regular: RegularSystem, n_max: int) -> DivergenceReport:
    """Receptive and Folner normalizations side by side.

    With |N_n| >= c n^2 and a positive classical value, the receptive value grows
    at least linearly; `linear_growth` checks value(n) >= n * classical estimate.
    """
    receptive = receptive_metric_sequence(system, measure, partition, regular, n_max, "receptive")
    classical = receptive_metric_sequence(system, measure, partition, regular, n_max, "classical")
    half = receptive.value_at(max(1, n_max // 2)).normalized
    rate = classical.estimate
    linear = all(s.normalized >= s.n * rate * (1 - 1e-12) for s in receptive.samples)
    return DivergenceReport(
        receptive, classical, growth_constant(regular),
        doubling_ratio=receptive.headline / half if half else math.inf,
        linear_growth=linear,
    )
