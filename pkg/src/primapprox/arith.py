"""Sieved multiplicative functions and exact arithmetic sums over lattice balls.

All sums returned by this module are exact: integer counts stay integers and
rational sums are ``fractions.Fraction`` values.  Floating point appears only
in :class:`BoundReport` rows, which exist for human consumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np


@dataclass(frozen=True)
class SieveTable:
    """Totient, Moebius, and smallest-prime-factor tables for 1..limit.

    Arrays are indexed directly by the integer (index 0 is unused filler).
    The table is immutable after construction and safe to share between
    threads.
    """

    limit: int
    phi: np.ndarray
    mu: np.ndarray
    smallest_prime_factor: np.ndarray

    def factorize(self, q: int) -> list[tuple[int, int]]:
        """Prime factorization of q as (prime, exponent) pairs, q <= limit."""
        if not 1 <= q <= self.limit:
            raise ValueError(f"q={q} outside sieve range 1..{self.limit}")
        out = []
        spf = self.smallest_prime_factor
        while q > 1:
            p = int(spf[q])
            e = 0
            while q % p == 0:
                q //= p
                e += 1
            out.append((p, e))
        return out

    def divisors(self, q: int) -> list[int]:
        """All positive divisors of q, ascending."""
        divs = [1]
        for p, e in self.factorize(q):
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)

    def squarefree_divisors(self, q: int) -> list[tuple[int, int]]:
        """(d, mu(d)) for the squarefree divisors d of q."""
        out = [(1, 1)]
        for p, _ in self.factorize(q):
            out = out + [(d * p, -s) for d, s in out]
        return out


def build_sieve(limit: int) -> SieveTable:
    """Sieve phi, mu, and smallest prime factors for 1..limit.

    Runs in O(limit log log limit) using vectorized strided updates.
    """
    if limit < 1:
        raise ValueError("sieve limit must be a positive integer")
    phi = np.arange(limit + 1, dtype=np.int64)
    mu = np.ones(limit + 1, dtype=np.int8)
    spf = np.zeros(limit + 1, dtype=np.int64)
    spf[1] = 1
    is_prime = np.ones(limit + 1, dtype=bool)
    if limit >= 1:
        is_prime[:2] = False
    for p in range(2, limit + 1):
        if not is_prime[p]:
            continue
        if p * p <= limit:
            is_prime[p * p :: p] = False
        phi[p::p] -= phi[p::p] // p
        mu[p::p] = -mu[p::p]
        if p * p <= limit:
            mu[p * p :: p * p] = 0
        block = spf[p::p]
        block[block == 0] = p
    return SieveTable(limit=limit, phi=phi, mu=mu, smallest_prime_factor=spf)


@lru_cache(maxsize=4)
def cached_sieve(limit: int) -> SieveTable:
    """Small cache so repeated scans do not rebuild identical tables."""
    return build_sieve(limit)


def _require_sieve(sieve: SieveTable | None, limit: int) -> SieveTable:
    if sieve is not None and sieve.limit >= limit:
        return sieve
    return cached_sieve(max(limit, 1))


def sum_fractions(terms: Sequence[Fraction]) -> Fraction:
    """Pairwise sum; keeps intermediate denominators far smaller than a fold."""
    items = list(terms)
    if not items:
        return Fraction(0)
    while len(items) > 1:
        items = [
            items[i] + items[i + 1] if i + 1 < len(items) else items[i]
            for i in range(0, len(items), 2)
        ]
    return items[0]


def _orthant_blocks(dim: int, q: int):
    """Yield (gcd_grid, weight_grid) blocks covering the nonnegative orthant.

    Each lattice vector v in [0, q]^dim appears exactly once across blocks
    with weight 2^{#nonzero coords}, the number of sign patterns producing
    distinct vectors of Z^dim with the same absolute values.  gcd of the
    zero vector comes out as 0.
    """
    r = np.arange(q + 1, dtype=np.int64)
    w = np.where(r > 0, 2, 1).astype(np.int64)
    if dim == 1:
        yield r, w
        return
    grid2 = np.gcd.outer(r, r)
    weight2 = np.outer(w, w)
    if dim == 2:
        yield grid2, weight2
        return
    for prefix in np.ndindex(*(q + 1,) * (dim - 2)):
        g0 = 0
        mult = 1
        for v in prefix:
            g0 = math.gcd(g0, v)
            if v:
                mult *= 2
        yield np.gcd(grid2, g0), weight2 * mult


def count_primitive_ball(dim: int, q: int) -> int:
    """Count nonzero v in Z^dim with |v| <= q and gcd of |coords| equal to 1.

    Exact enumeration over the nonnegative orthant with sign multiplicities.
    The asymptotic density of primitive vectors forces the count to grow like
    (2q+1)^dim / zeta(dim).
    """
    if dim < 2:
        raise ValueError("primitive ball count requires dimension >= 2")
    if q < 1:
        raise ValueError("ball radius must be a positive integer")
    total = 0
    for grid, weight in _orthant_blocks(dim, q):
        total += int(weight[grid == 1].sum())
    return total


def primitive_ball_table(dim: int, q_max: int, sieve: SieveTable | None = None) -> np.ndarray:
    """Counts of primitive vectors with |v| <= x for every x in 0..q_max.

    Uses Moebius inversion over the full ball count (2x+1)^dim - 1; this is
    the fast route backing the rational gcd-class sums, independent of the
    enumeration in :func:`count_primitive_ball`.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    sieve = _require_sieve(sieve, q_max)
    x = np.arange(q_max + 1, dtype=np.int64)
    if (2 * q_max + 1) ** dim >= 2**62:
        table = [0] * (q_max + 1)
        for d in range(1, q_max + 1):
            m = int(sieve.mu[d])
            if m:
                for xi in range(d, q_max + 1):
                    table[xi] += m * ((2 * (xi // d) + 1) ** dim - 1)
        return np.array(table, dtype=object)
    counts = np.zeros(q_max + 1, dtype=np.int64)
    for d in range(1, q_max + 1):
        m = int(sieve.mu[d])
        if m:
            counts += m * ((2 * (x // d) + 1) ** dim - 1)
    return counts


def count_coprime_shell(dim: int, q: int) -> int:
    """Count nonzero v in Z^dim with |v| <= q and gcd(gcd(v), q) = 1.

    For dim = 1 this is 2 phi(q): the coprime residues counted with both
    signs.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    if q < 1:
        raise ValueError("q must be a positive integer")
    total = 0
    for grid, weight in _orthant_blocks(dim, q):
        mask = (grid > 0) & (np.gcd(grid, q) == 1)
        total += int(weight[mask].sum())
    return total


GcdSumMode = Literal["plain", "coprime_to_q"]


def sum_phi_gcd_ball(
    dim: int,
    q: int,
    mode: GcdSumMode = "plain",
    sieve: SieveTable | None = None,
) -> Fraction:
    """Exact sum of phi(g)/g over nonzero v in Z^dim with |v| <= q.

    g is gcd(v) in mode ``plain`` and gcd(gcd(v), q) in mode ``coprime_to_q``.
    Vectors are grouped by gcd class: there are exactly
    primitive_ball(dim, q // d) vectors with gcd equal to d.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    if q < 1:
        raise ValueError("q must be a positive integer")
    if mode not in ("plain", "coprime_to_q"):
        raise ValueError(f"unknown mode {mode!r}")
    sieve = _require_sieve(sieve, q)
    prim = primitive_ball_table(dim, q, sieve)
    terms = []
    for d in range(1, q + 1):
        count = int(prim[q // d])
        if not count:
            continue
        g = d if mode == "plain" else math.gcd(d, q)
        terms.append(Fraction(int(sieve.phi[g]) * count, g))
    return sum_fractions(terms)


def dirichlet_identity_check(
    q: int, sieve: SieveTable | None = None
) -> tuple[Fraction, Fraction]:
    """Evaluate both sides of sum_{d|q} phi(d) phi(q/d) / d = q prod_{p|q} (1 - p^-2).

    The left side is computed by divisor enumeration, the right side from the
    prime factorization; the caller asserts equality.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    sieve = _require_sieve(sieve, q)
    lhs = sum_fractions(
        [
            Fraction(int(sieve.phi[d]) * int(sieve.phi[q // d]), d)
            for d in sieve.divisors(q)
        ]
    )
    rhs = Fraction(q)
    for p, _ in sieve.factorize(q):
        rhs *= 1 - Fraction(1, p * p)
    return lhs, rhs


def totient_average(N: int, sieve: SieveTable | None = None) -> Fraction:
    """Exact sum of phi(n)/n for n = 1..N; grows like (6/pi^2) N."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    sieve = _require_sieve(sieve, N)
    return sum_fractions([Fraction(int(sieve.phi[n]), n) for n in range(1, N + 1)])


@dataclass
class BoundReport:
    """Empirical check of an asserted inequality across a range of q.

    ``values`` rows are (q, exact_value, comparator_value) with q strictly
    increasing.  ``fitted_constant`` is the empirical infimum of
    exact/comparator over the reported threshold range; it stands in for the
    inequality's unspecified constant and must be positive whenever the
    inequality applies.  ``threshold`` is the smallest q from which the
    checked inequality holds through the end of the range (None when no such
    q exists in range).
    """

    params: str
    values: list[tuple[int, float, float]] = field(default_factory=list)
    fitted_constant: float | None = None
    threshold: int | None = None

    def __post_init__(self) -> None:
        qs = [row[0] for row in self.values]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("report rows must be strictly increasing in q")


def lower_bound_report(
    params: str, rows: list[tuple[int, float, float]]
) -> BoundReport:
    """Build a BoundReport for a one-sided bound exact >= C * comparator.

    The fitted constant is the global infimum of exact/comparator over rows
    with a positive comparator; with that constant the inequality holds from
    the first row onward by construction.
    """
    ratios = [exact / comp for _, exact, comp in rows if comp > 0]
    fitted = min(ratios) if ratios else None
    threshold = rows[0][0] if rows else None
    return BoundReport(
        params=params, values=rows, fitted_constant=fitted, threshold=threshold
    )
