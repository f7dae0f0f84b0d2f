import math

import numpy as np
import pytest

from randfam.derangements import (
    Derangement,
    block_rng,
    count_derangements,
    enumerate_derangements,
    is_derangement,
    iter_derangement_blocks,
    iter_derangements,
    sample_derangement,
    sample_derangement_block,
)
from randfam.errors import CountRangeError, DomainError, SizeRefusalError

from conftest import brute_force_derangements

LISTED_FIRST_FIVE = [
    (2, 1, 4, 3, 6, 5, 8, 7, 10, 9),
    (2, 1, 4, 3, 6, 5, 8, 9, 10, 7),
    (2, 1, 4, 3, 6, 5, 8, 10, 7, 9),
    (2, 1, 4, 3, 6, 5, 9, 7, 10, 8),
    (2, 1, 4, 3, 6, 5, 9, 10, 7, 8),
]


@pytest.mark.parametrize(
    "n, expected",
    [(1, 0), (2, 1), (3, 2), (4, 9), (5, 44), (6, 265), (7, 1854),
     (8, 14833), (9, 133496), (10, 1334961)],
)
def test_count_matches_published_table(n, expected):
    assert count_derangements(n) == expected


@pytest.mark.parametrize("n", range(2, 35))
def test_count_is_rounded_n_factorial_over_e(n):
    # exact rational check: |N(n) - n!/e| < 1/2
    approx = sum((-1) ** k * math.factorial(n) // math.factorial(k) for k in range(n + 1))
    assert count_derangements(n) == approx
    assert count_derangements(n) < 2**128


def test_count_range_error_past_128_bits():
    assert count_derangements(34) < 2**128
    with pytest.raises(CountRangeError):
        count_derangements(35)
    with pytest.raises(CountRangeError):
        count_derangements(40)


@pytest.mark.parametrize("bad", [0, -3, 2.5, "4", True])
def test_count_rejects_bad_arguments(bad):
    with pytest.raises(DomainError):
        count_derangements(bad)


@pytest.mark.parametrize(
    "mapping, expected",
    [
        ((2, 1, 4, 3, 6, 5, 8, 7, 10, 9), True),
        ((1, 2, 3), False),
        ((2, 1, 3), False),
        ((2, 3, 1), True),
        ((2, 2, 1), False),
        ((0, 1), False),
        ((3, 1), False),
        ((), False),
        ((1,), False),
        (("a", "b"), False),
        ((2.5, 1), False),
    ],
)
def test_is_derangement(mapping, expected):
    assert is_derangement(mapping) is expected


def test_enumerate_n3_visits_both_in_order():
    seen = []
    assert enumerate_derangements(3, seen.append) == 2
    assert [d.mapping for d in seen] == [(2, 3, 1), (3, 1, 2)]


def test_enumerate_n2_and_n1():
    seen = []
    assert enumerate_derangements(2, seen.append) == 1
    assert seen[0].mapping == (2, 1)
    assert enumerate_derangements(1, seen.append) == 0


@pytest.mark.parametrize("n", range(2, 9))
def test_enumeration_equals_brute_force(n):
    got = [d.mapping for d in iter_derangements(n)]
    assert got == brute_force_derangements(n)
    assert len(got) == count_derangements(n)


def test_first_five_for_n10_match_listing():
    got = []
    for d in iter_derangements(10):
        got.append(d.mapping)
        if len(got) == 5:
            break
    assert got == LISTED_FIRST_FIVE


@pytest.mark.parametrize("n", [9, 10])
def test_blocks_are_strictly_lexicographic(n):
    rows = np.concatenate(list(iter_derangement_blocks(n))).astype(np.int64)
    assert len(rows) == count_derangements(n)
    assert not (rows == np.arange(n)).any()
    assert (np.sort(rows, axis=1) == np.arange(n)).all()
    # strictly increasing as base-n numbers
    keys = rows @ (n ** np.arange(n - 1, -1, -1, dtype=np.int64))
    assert (np.diff(keys) > 0).all()


@pytest.mark.parametrize("n", [3, 5, 9, 10])
def test_partitions_cover_family(n):
    whole = np.concatenate(list(iter_derangement_blocks(n)))
    parts = np.concatenate(
        [b for first in range(2, n + 1) for b in iter_derangement_blocks(n, first=first)]
    )
    assert np.array_equal(whole, parts)


def test_enumeration_cap():
    with pytest.raises(SizeRefusalError, match="N\\(13\\)=2,290,792,932"):
        enumerate_derangements(13, lambda d: None)
    # override lifts the refusal
    it = iter_derangements(13, allow_large=True)
    assert next(it).mapping == (2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 13, 11)


def test_derangement_type_validates():
    assert Derangement((2, 1)).n == 2
    assert str(Derangement((2, 3, 1))) == "2,3,1"
    with pytest.raises(DomainError):
        Derangement((1, 2))
    with pytest.raises(DomainError):
        Derangement((1,))


def test_sample_n2_is_forced():
    for seed in range(5):
        assert sample_derangement(2, np.random.default_rng(seed)).mapping == (2, 1)


def test_sample_n3_only_two_values(rng):
    seen = {sample_derangement(3, rng).mapping for _ in range(300)}
    assert seen == {(2, 3, 1), (3, 1, 2)}


@pytest.mark.parametrize("n", [0, 1])
def test_sample_rejects_empty_family(n, rng):
    with pytest.raises(DomainError):
        sample_derangement(n, rng)
    with pytest.raises(DomainError):
        sample_derangement_block(n, 3, rng)


def test_sample_is_reproducible():
    a = [sample_derangement(7, np.random.default_rng(11)).mapping for _ in range(3)]
    b = [sample_derangement(7, np.random.default_rng(11)).mapping for _ in range(3)]
    assert a == b
    x = sample_derangement_block(9, 1000, block_rng(5, 3))
    y = sample_derangement_block(9, 1000, block_rng(5, 3))
    assert np.array_equal(x, y)
    assert not np.array_equal(x, sample_derangement_block(9, 1000, block_rng(5, 4)))


def test_block_sampler_uniform_n4():
    family = brute_force_derangements(4)
    draws = sample_derangement_block(4, 90_000, block_rng(123, 0)) + 1
    index = {p: i for i, p in enumerate(family)}
    counts = np.bincount([index[tuple(r)] for r in draws.tolist()], minlength=9)
    expected = 90_000 / 9
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 26.12


def test_block_sampler_rows_are_derangements():
    draws = sample_derangement_block(12, 5000, block_rng(0, 0))
    assert draws.shape == (5000, 12)
    assert not (draws == np.arange(12)).any()
    assert (np.sort(draws, axis=1) == np.arange(12)).all()
