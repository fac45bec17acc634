from fractions import Fraction

import numpy as np
import pytest

from src.data.symbolic import (
    CoordinatePartition,
    MeasureOracle,
    Site,
    cylinder_measure,
    diagonal_system,
    displacement_set,
    full_shift,
    grid_epsilon,
    join_over,
    log_cylinder_measure,
    permute_alphabet,
    product_system,
    pullback,
    resolution,
    sample_point,
    single_point_approximation,
    translation_system,
    trivial_system,
    truncate,
)
from src.lattice.semigroup import even_system, standard_system
from src.utils.config import Config
from src.utils.errors import (
    BudgetExceededError,
    DomainError,
    DyadicEpsilonError,
    EntropyError,
    IndexOverflowError,
    MeasureError,
)


def site(*point, layer=0):
    return Site(layer, tuple(point))


@pytest.mark.parametrize("epsilon, t", [(0.75, 0), (0.3, 1), (0.15, 2), (0.1, 3), (0.06, 4)])
def test_resolution(epsilon, t):
    assert resolution(epsilon) == t


def test_grid_epsilon_has_its_own_resolution():
    for t in range(8):
        assert resolution(grid_epsilon(t)) == t


def test_dyadic_and_out_of_range_epsilon():
    with pytest.raises(DyadicEpsilonError):
        resolution(0.25)
    with pytest.raises(EntropyError):
        resolution(1.0)
    with pytest.raises(EntropyError):
        resolution(0.0)


def test_ball_and_displacements():
    field = full_shift(2, d=2)
    assert len(field.ball(1)) == 4
    assert field.displacement((2, 3)) == ((2, 3),)

    diagonal = diagonal_system(2, 2)
    assert diagonal.displacement((2, 3)) == ((5,),)
    assert displacement_set(diagonal, standard_system(2, 3), 2) == tuple(((c,),) for c in range(5))


def test_displacements_continue_past_n_max_for_standard_systems():
    system = full_shift(2)
    assert displacement_set(system, standard_system(1, 3), 6) == tuple(((c,),) for c in range(7))
    with pytest.raises(IndexOverflowError):
        displacement_set(system, even_system(3), 5)


def test_join_over_and_pullback():
    system = full_shift(2)
    joined = join_over(CoordinatePartition.at(0), standard_system(1, 5), 3, system)
    assert joined.coords == tuple(site(c) for c in range(4))
    assert pullback(CoordinatePartition.at(0, 1), (2,), system).coords == (site(2), site(3))


def test_partition_constructors():
    product, _ = product_system(full_shift(2), full_shift(3),
                                MeasureOracle.bernoulli(["1/2", "1/2"]),
                                MeasureOracle.bernoulli(["1/3", "1/3", "1/3"]))
    assert CoordinatePartition.origin(product).coords == (site(0), site(0, layer=1))
    assert CoordinatePartition.on_ball(full_shift(2), 2).role == "cover"
    assert CoordinatePartition.at(3, 1, 3).coords == (site(1), site(3))
    with pytest.raises(EntropyError):
        CoordinatePartition(())
    with pytest.raises(EntropyError):
        CoordinatePartition((site(0),), role="sieve")


def test_system_validation():
    with pytest.raises(EntropyError):
        translation_system(2, 1, [(-1,)])
    assert trivial_system(3, 2).is_trivial
    assert full_shift(2, d=3).lattice_dim == 3
    assert not full_shift(2).is_trivial


def test_bernoulli_measure_validation():
    with pytest.raises(MeasureError):
        MeasureOracle.bernoulli(["1/2", "1/3"])
    with pytest.raises(MeasureError):
        MeasureOracle.bernoulli(["3/2", "-1/2"])
    with pytest.raises(MeasureError):
        MeasureOracle.bernoulli(["1/3", "1/3", "1/3"]).check_system(full_shift(2))


def test_bernoulli_cylinders_are_exact(quarter):
    sites = [site(0), site(1), site(5)]
    assert cylinder_measure(quarter, sites, {site(0): 0, site(1): 1, site(5): 1}) == Fraction(9, 64)
    assert cylinder_measure(quarter, sites, [0, 0, 0]) == Fraction(1, 64)
    assert log_cylinder_measure(quarter, sites, [0, 1, 1]) == pytest.approx(np.log(9 / 64))


def test_markov_cylinders():
    chain = MeasureOracle.markov([[0.9, 0.1], [0.5, 0.5]])
    assert chain.stationary == pytest.approx((5 / 6, 1 / 6))
    assert cylinder_measure(chain, [site(0), site(1)], [0, 0]) == pytest.approx(5 / 6 * 0.9)
    # a gap of two steps uses P^2
    assert cylinder_measure(chain, [site(0), site(2)], [0, 1]) == pytest.approx(5 / 6 * 0.14)
    with pytest.raises(MeasureError):
        MeasureOracle.markov([[0.9, 0.2], [0.5, 0.5]])
    with pytest.raises(MeasureError):
        chain.check_system(full_shift(2, d=2))


def test_sampling_is_seeded(quarter):
    sites = [site(c) for c in range(2000)]
    first = sample_point(quarter, sites, 11)
    assert first == sample_point(quarter, sites, 11)
    assert first != sample_point(quarter, sites, 12)
    assert np.mean(list(first.values())) == pytest.approx(0.75, abs=0.04)


def test_permuted_measure():
    measure = MeasureOracle.bernoulli(["1/5", "3/10", "1/2"])
    permuted = permute_alphabet(measure, [2, 1, 0])
    assert permuted.vectors[0] == (Fraction(1, 2), Fraction(3, 10), Fraction(1, 5))
    with pytest.raises(MeasureError):
        permute_alphabet(measure, [0, 0, 1])


def test_product_system_acts_on_its_own_factor():
    system, measure = product_system(full_shift(2), diagonal_system(3, 1),
                                     MeasureOracle.bernoulli(["1/4", "3/4"]),
                                     MeasureOracle.bernoulli(["1/3", "1/3", "1/3"]))
    assert system.k == 2
    assert system.displacement((1, 0)) == ((1,), (0,))
    assert system.displacement((0, 1)) == ((0,), (1,))
    assert measure.vector_for(1) == (Fraction(1, 3),) * 3
    with pytest.raises(MeasureError):
        product_system(full_shift(2), full_shift(2), MeasureOracle.markov([[0.5, 0.5], [0.5, 0.5]]),
                       MeasureOracle.bernoulli(["1/2", "1/2"]))


def test_truncation_enumerates_every_pattern():
    fa = truncate(full_shift(2), 3)
    assert fa.size == 16
    assert len({tuple(row) for row in fa.patterns}) == 16
    assert fa.distance(0, 0) == 0.0
    assert fa.distance(0, 1) == 2.0 ** -3
    assert fa.distance(0, 8) == 1.0


def test_truncation_budget(fresh_cache):
    Config().override("budgets", "enumeration", 100)
    with pytest.raises(BudgetExceededError):
        truncate(full_shift(2), 9)


def test_first_difference_levels():
    fa = truncate(full_shift(2), 4)
    levels = fa.first_difference(((1,),), depth=2)
    # the shifted view reads sites 1..3 of each point
    i, j = 0b00000, 0b00010
    assert levels[i, j] == 2
    assert levels[i, 0b10000] == 3
    assert (np.diag(levels) == 3).all()


def test_domain_check():
    fa = truncate(full_shift(2), 3)
    fa.check_domain([((1,),)], 2)
    with pytest.raises(DomainError):
        fa.check_domain([((2,),)], 2)


def test_single_point_table():
    fa = single_point_approximation(full_shift(2), 3, [1, 0, 1, 1])
    table = fa.export_table()
    assert table["pattern"].to_list() == ["1011"]
    assert table.height == 1
