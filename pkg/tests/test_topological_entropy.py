import math

import pytest

from src.data.symbolic import CoordinatePartition, full_shift, truncate
from src.lattice.semigroup import standard_system
from src.models.topological_entropy import (
    CountRecord,
    admissible_epsilon,
    ball_window,
    count_inequality_suite,
    cylinder_lebesgue_number,
    join_covers,
    lebesgue_number,
    minimal_subcover,
    minimal_subcover_count,
    open_cover_entropy_sequence,
    separated_entropy_sequence,
    separated_max_bruteforce,
    separated_max_closed_form,
    spanning_min,
)
from src.utils.errors import DomainError, EntropyError
from src.utils.exact_log import ExactLog

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def fa6():
    return truncate(full_shift(2), 6)


def test_closed_form_counts_the_window(full2):
    regular = standard_system(1, 10)
    # t = 1 at eps = 0.3, so the window is [0, n + 1]
    assert len(ball_window(full2, regular, 3, 0.3)) == 5
    record = separated_max_closed_form(full2, regular, 3, 0.3)
    assert record.count == 32
    assert record.method == "closed_form"
    assert record.exact


@pytest.mark.parametrize("n, epsilon", [(0, 0.3), (1, 0.3), (2, 0.15), (3, 0.15), (2, 0.1), (1, 0.06)])
def test_brute_force_agrees_with_closed_form(fa6, full2, n, epsilon):
    regular = standard_system(1, 6)
    expected = separated_max_closed_form(full2, regular, n, epsilon).count
    separated = separated_max_bruteforce(fa6, regular, n, epsilon)
    spanning = spanning_min(fa6, regular, n, epsilon)
    assert separated.method == "exact_bruteforce"
    assert separated.count == expected
    assert spanning.method == "exact_bruteforce"
    assert spanning.count == expected


def test_brute_force_outside_the_window(fa6):
    # n + t = 7 needs sites the truncation never enumerated
    with pytest.raises(DomainError):
        separated_max_bruteforce(fa6, standard_system(1, 10), 3, 0.06)


def test_count_record_validation():
    with pytest.raises(EntropyError):
        CountRecord(1, 0.3, "separated", 4, "greedy_bound")
    with pytest.raises(EntropyError):
        CountRecord(1, 0.3, "separated", 4, "closed_form", "upper")
    with pytest.raises(EntropyError):
        CountRecord(1, 0.3, "separated", 4, "guess")
    assert not CountRecord(1, 0.3, "spanning", 4, "greedy_bound", "upper").exact


def test_minimal_subcover_closed_form_and_brute_force(full2):
    cover = CoordinatePartition.at(0, 1, 2, role="cover")
    assert minimal_subcover(cover, system=full2).count == 8
    brute = minimal_subcover(cover, truncate(full2, 4))
    assert brute.count == 8
    assert brute.exact
    assert minimal_subcover_count(cover, system=full2) == 8
    with pytest.raises(EntropyError):
        minimal_subcover(cover)


def test_point_covers_and_joins(fa6):
    everything = range(fa6.size)
    halves = [range(0, 64), range(64, 128)]
    assert minimal_subcover([everything, range(5)], fa6).count == 1
    assert minimal_subcover(halves, fa6).count == 2
    joined = join_covers([{0, 1, 2}, {2, 3}], [{1, 2, 3}, {4}])
    assert joined == [frozenset({1, 2}), frozenset({2, 3})]


def test_open_cover_sequence(full2):
    sequence = open_cover_entropy_sequence(full2, CoordinatePartition.at(0, role="cover"), standard_system(1, 20), 20)
    log2 = ExactLog.log_int(2)
    assert all(s.exact == log2 * (s.n + 1) for s in sequence.samples)
    assert sequence.headline == pytest.approx(21 / 20 * LOG2)
    assert sequence.estimate == pytest.approx(LOG2)


def test_separated_sequences(full2):
    receptive = separated_entropy_sequence(full2, standard_system(1, 30), 0.15, 30)
    # t = 2 adds two sites beyond [0, n]
    assert receptive.value_at(30).raw == pytest.approx(33 * LOG2)
    assert receptive.estimate == pytest.approx(LOG2)

    field = full_shift(2, d=2)
    classical = separated_entropy_sequence(field, standard_system(2, 10), 0.3, 10, "classical")
    assert all(s.normalized == pytest.approx((s.n + 2) ** 2 / (s.n + 1) ** 2 * LOG2) for s in classical.samples)


def test_closed_forms_need_a_full_shift(fa6):
    with pytest.raises(EntropyError):
        separated_max_closed_form(fa6, standard_system(1, 4), 1, 0.3)


@pytest.mark.parametrize("delta, expected", [(0.5, 0.375), (0.375, 0.1875), (1.0, 0.75), (0.1, 0.09375)])
def test_admissible_epsilon(delta, expected):
    assert admissible_epsilon(delta) == expected


def test_admissible_epsilon_needs_a_positive_number():
    with pytest.raises(EntropyError):
        admissible_epsilon(0.0)


def test_lebesgue_numbers_agree_on_cylinder_covers(fa6):
    cover = CoordinatePartition.at(0, 1, role="cover")
    analytic = cylinder_lebesgue_number(cover)
    finite = lebesgue_number(fa6, cover)
    assert analytic.value == finite.value == 0.5
    assert analytic.admissible == 0.375
    assert (analytic.provenance, finite.provenance) == ("analytic", "finite")


def test_lebesgue_number_of_a_single_cell(fa6):
    assert lebesgue_number(fa6, [range(fa6.size)]).value == 1.0


def test_count_inequalities_hold_on_the_full_shift(fa6):
    report = count_inequality_suite(
        fa6, standard_system(1, 6), [CoordinatePartition.at(0, 1, role="cover")], (0.3, 0.15), range(0, 3)
    )
    assert report.passed
    assert report.records
    assert all(record.exact for record in report.records)
    assert report.lebesgue[0].value == 0.5


@pytest.mark.slow
def test_count_inequalities_up_to_n4_with_half_epsilon(full2):
    fa = truncate(full2, 10)
    report = count_inequality_suite(
        fa, standard_system(1, 6), [CoordinatePartition.at(0, 1, role="cover")], (0.3, 0.15, 0.06), range(5)
    )
    assert report.violations == []
    assert len(report.records) == 90
    assert all(record.exact for record in report.records)
    assert max(record.n for record in report.records) == 4
