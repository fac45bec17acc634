from fractions import Fraction

import pytest

from src.lattice.semigroup import (
    _checked,
    custom_system,
    dilated_system,
    even_system,
    folner_defect,
    folner_profile,
    from_document,
    growth_constant,
    product_regular_system,
    regularity_work,
    restricted_system,
    scaled_system,
    standard_system,
    to_document,
    unit_generators,
    verify_regular,
)
from src.utils.errors import EntropyError, IndexOverflowError, RegularityError


def test_standard_system_sets():
    system = standard_system(2, 3)
    assert system.size(0) == 1
    assert system.size(3) == 16
    assert system[1] == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert system.nested


def test_standard_and_even_are_regular():
    assert verify_regular(standard_system(1, 10)).valid
    assert verify_regular(standard_system(3, 3)).valid
    assert verify_regular(even_system(8)).valid


def test_doubling_intervals_fail_with_first_witness():
    doubling = custom_system([range(2 ** n + 1) for n in range(5)], k=1)
    assert doubling.nested
    report = verify_regular(doubling)
    assert not report.valid
    assert report.witness == (1, 0, (3,))


def test_missing_identity_is_reported():
    report = verify_regular(custom_system([[1], [1, 2]], k=1))
    assert not report.valid
    assert report.witness is None
    assert "identity" in report.reason


def test_checked_construction_raises_on_irregular_sets():
    # N_1 + N_0 reaches 4
    with pytest.raises(RegularityError):
        _checked(custom_system([[0, 2], [0, 1, 2]], k=1))


def test_index_beyond_n_max():
    system = standard_system(1, 4)
    with pytest.raises(IndexOverflowError):
        system[5]


def test_custom_system_rejects_bad_input():
    with pytest.raises(EntropyError):
        custom_system([[]], k=1)
    with pytest.raises(EntropyError):
        custom_system([[(0, 0)], [(0, 1, 2)]])
    with pytest.raises(EntropyError):
        custom_system([[-1]], k=1)


def test_scaled_system_picks_every_pth_set():
    base = standard_system(1, 12)
    scaled = scaled_system(base, 3)
    assert scaled.n_max == 4
    assert scaled[2] == base[6]
    assert verify_regular(scaled).valid
    with pytest.raises(IndexOverflowError):
        scaled_system(base, 5, 3)


def test_restricted_and_dilated_systems():
    base = standard_system(2, 6)
    restricted = restricted_system(base, (2, 2))
    dilated = dilated_system(base, 2)
    assert set(restricted[6]) == {(a, b) for a in range(0, 7, 2) for b in range(0, 7, 2)}
    assert set(dilated[3]) == set(restricted[6])
    assert verify_regular(restricted).valid
    assert verify_regular(dilated).valid


def test_product_of_standard_systems_is_standard():
    product = product_regular_system(standard_system(1, 5), standard_system(1, 4))
    assert product.kind == "standard"
    assert product.k == 2
    assert product.n_max == 4


def test_product_of_mixed_systems():
    product = product_regular_system(even_system(3), standard_system(1, 3))
    assert product.kind == "product"
    assert set(product[1]) == {(0, 0), (0, 1), (2, 0), (2, 1)}
    assert verify_regular(product).valid


def test_folner_defects():
    standard = standard_system(1, 10)
    assert folner_defect(standard, (1,), 9) == Fraction(2, 10)
    assert folner_profile(standard, (1,)).compatible

    even = even_system(10)
    # shifting even numbers by one never overlaps
    assert all(d == 2 for d in folner_profile(even, (1,)).defects)
    assert not folner_profile(even, (1,)).compatible


def test_growth_constant():
    assert growth_constant(standard_system(2, 10)) == Fraction(121, 100)
    assert growth_constant(standard_system(1, 4)) == Fraction(5, 16)


def test_documents_rebuild_the_same_system():
    for system in (
        standard_system(2, 4),
        even_system(5),
        scaled_system(standard_system(1, 10), 2),
        restricted_system(standard_system(2, 4), (1, 2)),
        dilated_system(standard_system(1, 4), 3),
        custom_system([[0], [0, 1]], k=1),
    ):
        rebuilt = from_document(to_document(system))
        assert rebuilt.sets == system.sets
        assert rebuilt.fingerprint == system.fingerprint


def test_unknown_document_kind():
    with pytest.raises(EntropyError):
        from_document({"kind": "spiral", "n_max": 3})


def test_unit_generators_and_work():
    assert unit_generators(3) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    # pairs (i, j) with i + j <= 1 over sets of sizes 1 and 2
    assert regularity_work(standard_system(1, 1)) == 1 * 1 + 1 * 2 + 2 * 1
