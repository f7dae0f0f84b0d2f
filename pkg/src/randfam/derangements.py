"""Counting, lexicographic enumeration and uniform sampling of derangements.

A derangement of ``{1..n}`` is a permutation with no fixed point.  Public
objects use 1-based mappings; the block-oriented helpers used by the
engine return 0-based ``numpy`` index arrays so they can be fed straight
into fancy indexing.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from randfam.errors import CountRangeError, DomainError, SizeRefusalError

#: Largest value representable by the exact count (unsigned 128-bit).
COUNT_LIMIT = 2**128 - 1

#: Default cap on ``n`` for exhaustive enumeration.
DEFAULT_MAX_EXACT_N = 12

# Suffix length resolved by a precomputed permutation table (8! rows).
_SUFFIX = 8


@dataclass(frozen=True)
class Derangement:
    """A fixed-point-free bijection on ``{1..n}``.

    ``mapping[j - 1]`` holds the image of ``j``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", tuple(int(v) for v in self.mapping))
        if len(self.mapping) < 2:
            raise DomainError("a derangement needs n >= 2")
        if not is_derangement(self.mapping):
            raise DomainError(f"{self.mapping} is not a derangement")

    @property
    def n(self) -> int:
        return len(self.mapping)

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.intp) - 1

    def __str__(self) -> str:
        return ",".join(map(str, self.mapping))


def count_derangements(n: int) -> int:
    """Return the exact number of derangements of ``n`` elements.

    Uses ``N(n) = (n - 1) * (N(n - 1) + N(n - 2))`` seeded with
    ``N(1) = 0`` and ``N(2) = 1``.  Raises :class:`CountRangeError` when the
    result does not fit in an unsigned 128-bit integer (``n > 34``).
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise DomainError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    prev, cur = 1, 0  # N(0), N(1)
    for k in range(2, n + 1):
        prev, cur = cur, (k - 1) * (cur + prev)
        if cur > COUNT_LIMIT:
            raise CountRangeError(
                f"N({n}) exceeds the 128-bit range (overflow first at n={k})"
            )
    return cur


def is_derangement(mapping: Sequence[int]) -> bool:
    """True iff ``mapping`` is a 1-based permutation of ``{1..n}`` without fixed points."""
    try:
        values = [int(v) for v in mapping]
        if any(int(v) != v for v in mapping):
            return False
    except (TypeError, ValueError):
        return False
    n = len(values)
    if n == 0 or sorted(values) != list(range(1, n + 1)):
        return False
    return all(v != j for j, v in enumerate(values, start=1))


def _check_enumeration_size(n: int, max_n: int, allow_large: bool) -> None:
    if n > max_n and not allow_large:
        raise SizeRefusalError(
            f"exhaustive enumeration for n={n} visits N({n})="
            f"{count_derangements(n):,} derangements, above the cap n<={max_n}; "
            "raise the cap explicitly or use Monte Carlo sampling"
        )


@lru_cache(maxsize=None)
def _perm_table(k: int) -> np.ndarray:
    # all permutations of range(k) in lexicographic order
    table = np.array(list(itertools.permutations(range(k))), dtype=np.int8)
    table.flags.writeable = False
    return table


def iter_derangement_blocks(
    n: int, first: int | None = None
) -> Iterator[np.ndarray]:
    """Yield all derangements of ``n`` as 0-based ``(rows, n)`` blocks.

    Concatenating the blocks gives the family in lexicographic order.  With
    ``first`` (1-based, in ``2..n``) only derangements mapping 1 to ``first``
    are produced; the partitions over ``first = 2..n`` cover the family.
    No size cap is applied here.
    """
    if n < 2:
        return
    if first is not None and not 2 <= first <= n:
        raise DomainError(f"first must lie in 2..{n}, got {first}")
    k = min(n, _SUFFIX)
    depth = n - k
    table = _perm_table(k)
    positions = np.arange(depth, n)
    dtype = np.int8 if n <= 127 else np.int16

    def rec(prefix: list[int], remaining: list[int]) -> Iterator[np.ndarray]:
        d = len(prefix)
        if d == depth:
            cand = np.asarray(remaining, dtype=dtype)[table]
            keep = (cand != positions).all(axis=1)
            if not keep.any():
                return
            cand = cand[keep]
            if depth:
                head = np.broadcast_to(
                    np.asarray(prefix, dtype=dtype), (len(cand), depth)
                )
                cand = np.concatenate([head, cand], axis=1)
            yield cand
            return
        if d == 0 and first is not None:
            choices = [first - 1]
        else:
            choices = remaining
        for v in choices:
            if v == d:
                continue
            rest = [r for r in remaining if r != v]
            yield from rec(prefix + [v], rest)

    if depth == 0 and first is not None:
        # the whole family is one block; select the partition afterwards
        for block in rec([], list(range(n))):
            sel = block[block[:, 0] == first - 1]
            if len(sel):
                yield sel
        return
    yield from rec([], list(range(n)))


def iter_derangements(
    n: int,
    *,
    max_n: int = DEFAULT_MAX_EXACT_N,
    allow_large: bool = False,
) -> Iterator[Derangement]:
    """Iterate over derangements of ``{1..n}`` in lexicographic order."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    _check_enumeration_size(n, max_n, allow_large)
    for block in iter_derangement_blocks(n):
        for row in (block.astype(np.intp) + 1).tolist():
            # already validated by construction; skip __post_init__ checks
            d = object.__new__(Derangement)
            object.__setattr__(d, "mapping", tuple(row))
            yield d


def enumerate_derangements(
    n: int,
    visitor: Callable[[Derangement], object],
    *,
    max_n: int = DEFAULT_MAX_EXACT_N,
    allow_large: bool = False,
) -> int:
    """Call ``visitor`` on every derangement of ``{1..n}`` in lexicographic order.

    Returns the number of derangements visited, which equals
    ``count_derangements(n)``.  ``n = 1`` visits nothing.  For ``n > max_n``
    a :class:`SizeRefusalError` is raised unless ``allow_large`` is set.
    """
    visited = 0
    for d in iter_derangements(n, max_n=max_n, allow_large=allow_large):
        visitor(d)
        visited += 1
    return visited


def sample_derangement_block(
    n: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``size`` independent uniform derangements as a 0-based ``(size, n)`` array.

    Rejection sampling: shuffle uniformly and discard rows with a fixed
    point.  The accepted rows keep their draw order, so the output depends
    only on the generator state.
    """
    if n < 2:
        raise DomainError(f"no derangement of {n} element(s) exists")
    if size < 0:
        raise DomainError("size must be non-negative")
    out = np.empty((size, n), dtype=np.intp)
    filled = 0
    base = np.arange(n)
    while filled < size:
        need = size - filled
        batch = max(16, int(need * 2.9) + 8)
        cand = rng.permuted(np.broadcast_to(base, (batch, n)), axis=1)
        cand = cand[(cand != base).all(axis=1)][:need]
        out[filled : filled + len(cand)] = cand
        filled += len(cand)
    return out


def sample_derangement(n: int, rng: np.random.Generator) -> Derangement:
    """Draw one derangement of ``{1..n}`` uniformly at random."""
    if n < 2:
        raise DomainError(f"no derangement of {n} element(s) exists")
    base = np.arange(n)
    while True:
        perm = rng.permutation(n)
        if (perm != base).all():
            return Derangement(tuple((perm + 1).tolist()))


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for Monte Carlo block ``block`` derived from the master ``seed``.

    Streams are keyed by block index, not worker index, so any number of
    workers reproduces the same draws.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
