"""Chunked enumeration of integer vectors in max-norm balls and shells.

The ball of radius q is {v in Z^n : max_i |v_i| <= q}; the shell is the set
of vectors whose max-norm is exactly q.  Everything downstream (constrained
counting, series evaluation, hit counting) iterates these sets, so the
enumeration is chunked numpy and guarded by an operation budget to keep
accidental (2q+1)^n blowups from hanging a session.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DEFAULT_BUDGET = 10**9

DEFAULT_CHUNK = 1 << 18


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed its configured operation budget."""


@dataclass
class Budget:
    """Mutable counter of inner-loop operations.

    ``charge`` is called with an upfront estimate before each enumeration;
    exceeding ``limit`` raises instead of silently grinding.
    """

    limit: int = DEFAULT_BUDGET
    used: int = 0

    def charge(self, amount: int) -> None:
        if amount < 0:
            raise ValueError("budget charge must be nonnegative")
        if self.used + amount > self.limit:
            raise ResourceLimitError(
                f"needs about {amount} more inner-loop operations "
                f"({self.used} already used, limit {self.limit}); "
                "retry with a larger budget or smaller parameters"
            )
        self.used += amount


def as_budget(budget: Budget | int | None) -> Budget:
    """Coerce an int limit (or None for the default) into a Budget."""
    if budget is None:
        return Budget()
    if isinstance(budget, Budget):
        return budget
    return Budget(limit=int(budget))


def ball_count(n: int, q: int, include_zero: bool = False) -> int:
    """Number of integer vectors v in Z^n with |v| <= q (max-norm)."""
    total = (2 * q + 1) ** n
    return total if include_zero else total - 1


def shell_count(n: int, q: int) -> int:
    """Number of integer vectors v in Z^n with |v| = q exactly."""
    if q == 0:
        return 1
    return (2 * q + 1) ** n - (2 * q - 1) ** n


def _product_chunks(
    ranges: list[tuple[int, int]], chunk: int
) -> Iterator[np.ndarray]:
    """Yield the Cartesian product of integer ranges as (k, len(ranges)) arrays.

    Each range is (start, size).  The last axis varies fastest, so the
    enumeration order is lexicographic and deterministic.
    """
    sizes = [size for _, size in ranges]
    total = math.prod(sizes)
    width = len(ranges)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        out = np.empty((idx.size, width), dtype=np.int64)
        rem = idx
        for axis in range(width - 1, -1, -1):
            start, size = ranges[axis]
            rem, offset = np.divmod(rem, size)
            out[:, axis] = offset + start
        yield out


def iter_box(
    lows: list[int], highs: list[int], chunk: int = DEFAULT_CHUNK
) -> Iterator[np.ndarray]:
    """Yield all integer vectors with lows[i] <= v_i <= highs[i], in chunks."""
    ranges = []
    for lo, hi in zip(lows, highs):
        if hi < lo:
            return
        ranges.append((lo, hi - lo + 1))
    yield from _product_chunks(ranges, chunk)


def iter_ball(
    n: int, q: int, chunk: int = DEFAULT_CHUNK, include_zero: bool = False
) -> Iterator[np.ndarray]:
    """Yield all integer vectors with |v| <= q, the zero vector excluded by default."""
    if q < 0:
        raise ValueError("ball radius must be nonnegative")
    for block in _product_chunks([(-q, 2 * q + 1)] * n, chunk):
        if not include_zero:
            block = block[np.any(block != 0, axis=1)]
        if block.size:
            yield block


def iter_shell(n: int, q: int, chunk: int = DEFAULT_CHUNK) -> Iterator[np.ndarray]:
    """Yield all integer vectors with |v| = q exactly.

    Face decomposition: a vector is attributed to the first axis whose
    coordinate has absolute value q; earlier axes then range over
    [-(q-1), q-1] and later axes over [-q, q].  Faces are disjoint and
    cover the shell, so no vector repeats.
    """
    if q < 0:
        raise ValueError("shell radius must be nonnegative")
    if q == 0:
        yield np.zeros((1, n), dtype=np.int64)
        return
    for axis in range(n):
        for sign in (q, -q):
            free = (
                [(-(q - 1), 2 * q - 1)] * axis
                + [(sign, 1)]
                + [(-q, 2 * q + 1)] * (n - axis - 1)
            )
            yield from _product_chunks(free, chunk)
