import math

import pytest

from src.data.symbolic import CoordinatePartition, Site, diagonal_system, full_shift, trivial_system
from src.lattice.semigroup import standard_system
from src.models.dimensional_entropy import (
    CoverCandidate,
    CoverElement,
    b_c_h_comparison,
    bowen_exponent,
    bowen_log_weight,
    bowen_min_weight,
    cover_weight,
    critical_exponent,
    order_of_set,
    pesin_exponent,
    pesin_log_weight,
    pesin_min_weight,
    uniform_cover,
)
from src.utils.errors import EntropyError, HorizonError, NonMonotoneWeightError

LOG2 = math.log(2)
ORIGIN = CoordinatePartition.at(0)


def test_cover_weight():
    candidate = CoverCandidate.from_orders([1, 2, 2])
    assert candidate.size == 3
    assert candidate.min_order == 1
    assert cover_weight(candidate, LOG2) == pytest.approx(1.0)
    assert cover_weight(candidate, 0.0) == 3.0
    with pytest.raises(EntropyError):
        cover_weight(candidate, -0.1)


def test_huge_counts_go_through_logs():
    candidate = CoverCandidate((CoverElement(order=2000, count=2 ** 2000),))
    assert cover_weight(candidate, LOG2) == pytest.approx(1.0)
    assert cover_weight(candidate, 1.0) < 1e-200


def test_infinite_elements_weigh_nothing_for_positive_lambda():
    candidate = CoverCandidate((CoverElement(order=5, count=4, infinite=True),))
    assert cover_weight(candidate, 0.0) == pytest.approx(4.0)
    assert cover_weight(candidate, 1e-6) == 0.0
    assert candidate.min_order == math.inf


def test_order_of_a_window(full2):
    regular = standard_system(1, 64)
    assert order_of_set(full2, regular, ORIGIN, full2.window(5)) == order_of_set(full2, regular, ORIGIN,
                                                                               full2.window(5), 10)
    assert order_of_set(full2, regular, ORIGIN, full2.window(5)).order == 5
    # windows missing the partition's sites have order zero
    assert order_of_set(full2, regular, ORIGIN, [Site(0, (1,))]).order == 0


def test_trivial_orders_are_infinite():
    order = order_of_set(trivial_system(2, 1), standard_system(1, 64), ORIGIN, [Site(0, (0,))], n_cap=10)
    assert order.order == 10
    assert order.saturated
    assert order.infinite


def test_uniform_cover_counts_every_cylinder(full2):
    candidate = uniform_cover(full2, standard_system(1, 64), ORIGIN, 3)
    assert candidate.size == 16
    assert candidate.min_order == 3


def test_bowen_on_the_full_shift(full2):
    result = bowen_exponent(full2, standard_system(1, 64), ORIGIN, N=1)
    assert result.lambda_star == pytest.approx(LOG2, abs=0.02)
    assert result.construction == "bowen"
    assert not result.upper_bound


def test_bowen_is_zero_for_the_trivial_action():
    result = bowen_exponent(trivial_system(2, 1), standard_system(1, 64), ORIGIN, N=1)
    assert result.lambda_star == 0.0


def test_bowen_off_a_single_line_is_an_upper_bound():
    result = bowen_exponent(full_shift(2, d=2), standard_system(2, 8), CoordinatePartition.at((0, 0)), N=1,
                            n_cap=8)
    assert result.upper_bound
    assert result.lambda_star > 0


def test_bowen_weight_arguments(full2):
    regular = standard_system(1, 64)
    with pytest.raises(EntropyError):
        bowen_log_weight(full2, regular, ORIGIN, -1.0, 1)
    with pytest.raises(EntropyError):
        bowen_log_weight(full2, regular, ORIGIN, 1.0, 0)
    with pytest.raises(HorizonError):
        bowen_log_weight(full2, regular, ORIGIN, 1.0, 10, n_cap=5)


def test_pesin_on_the_full_shift(full2):
    result = pesin_exponent(full2, standard_system(1, 64), 1, 0.3, horizon=256)
    assert result.lambda_star == pytest.approx(258 / 256 * LOG2, abs=1e-3)
    assert result.epsilon == 0.3


def test_pesin_diagonal_doubles_the_rate():
    result = pesin_exponent(diagonal_system(2, 2), standard_system(2, 64), 1, 0.3, horizon=256)
    assert result.lambda_star == pytest.approx(2 * LOG2, abs=0.02)


def test_pesin_stabilizes_for_the_trivial_action():
    assert pesin_log_weight(trivial_system(2, 1), standard_system(1, 10), 0.5, 1, 0.3) == -math.inf
    assert pesin_exponent(trivial_system(2, 1), standard_system(1, 10), 1, 0.3).lambda_star == 0.0


def test_pesin_horizon_below_order(full2):
    with pytest.raises(HorizonError):
        pesin_log_weight(full2, standard_system(1, 10), 0.5, 20, 0.3, horizon=10)


def test_critical_exponent_bisects():
    result = critical_exponent(lambda lam: 2 * math.exp(-lam))
    assert result.lambda_star == pytest.approx(LOG2, abs=result.tol)
    assert result.weight_below >= 1.0 > result.weight_above


def test_critical_exponent_of_a_light_weight():
    assert critical_exponent(lambda lam: 0.5).lambda_star == 0.0


def test_critical_exponent_rejects_increasing_weights():
    with pytest.raises(NonMonotoneWeightError):
        critical_exponent(lambda lam: 2 + lam)
    with pytest.raises(NonMonotoneWeightError):
        critical_exponent(lambda lam: 1.0)


def test_b_c_h_comparison(full2):
    report = b_c_h_comparison(full2, standard_system(1, 64))
    assert report.exact_instance
    assert report.topological == pytest.approx(LOG2)
    assert report.b_minus_h <= report.tol
    assert report.passed


def test_min_weights_leave_log_space(full2):
    regular = standard_system(1, 10)
    # at lambda = 0 the cheapest balls are the order-1 ones: 3 free sites at eps = 0.3
    assert pesin_min_weight(full2, regular, 0.0, 1, 0.3, horizon=10) == pytest.approx(8.0)
    assert pesin_min_weight(trivial_system(2, 1), regular, 0.5, 1, 0.3) == 0.0
    log_weight, _ = bowen_log_weight(full2, regular, ORIGIN, LOG2, 1)
    assert bowen_min_weight(full2, regular, ORIGIN, LOG2, 1) == pytest.approx(math.exp(log_weight))
