"""Coordinate partitions and the constrained lattice counts they induce.

A partition splits the m+n coordinate indices (the first m label the
p-coordinates, the last n the q-coordinates) into parts of size at least
two; each part imposes "the projected coordinates are coprime".  This module
holds the partition data model plus the exact counting operations: coprime
integers in an interval (two independent routes), primitive vectors in boxes,
and the shell sums driving the constrained-approximation bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import (
    BoundReport,
    SieveTable,
    _require_sieve,
    count_primitive_ball,
    sum_fractions,
)
from .shells import Budget, as_budget, iter_box, iter_shell, shell_count


@dataclass(frozen=True)
class Dims:
    """Problem dimensions: m linear forms (p-coords), n variables (q-coords)."""

    m: int
    n: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError("both dimensions must be positive")

    @property
    def total(self) -> int:
        return self.m + self.n


@dataclass(frozen=True)
class Partition:
    """A validated partition of the coordinate indices 1..m+n.

    Parts are stored 1-based with ascending indices, ordered mixed parts
    first (touching both coordinate groups), then parts inside the first m
    indices, then parts inside the last n.  ``a`` counts the mixed parts,
    ``b`` is a plus the count of p-only parts, and ``k`` is the total.
    """

    dims: Dims
    parts: tuple[tuple[int, ...], ...]
    a: int
    b: int
    k: int

    def pcols(self, j: int) -> tuple[int, ...]:
        """0-based p-vector positions of part j (0-based part index)."""
        m = self.dims.m
        return tuple(i - 1 for i in self.parts[j] if i <= m)

    def qcols(self, j: int) -> tuple[int, ...]:
        """0-based q-vector positions of part j."""
        m = self.dims.m
        return tuple(i - m - 1 for i in self.parts[j] if i > m)

    @property
    def mixed_parts(self) -> range:
        return range(0, self.a)

    @property
    def p_only_parts(self) -> range:
        return range(self.a, self.b)

    @property
    def q_only_parts(self) -> range:
        return range(self.b, self.k)

    def spec_string(self) -> str:
        """Canonical textual form: parts joined by '|', indices by ','."""
        return "|".join(",".join(str(i) for i in part) for part in self.parts)


def make_partition(dims: Dims, parts: Iterable[Iterable[int]]) -> Partition:
    """Validate and canonically order a partition given as index collections."""
    seen: set[int] = set()
    cleaned: list[tuple[int, ...]] = []
    for raw in parts:
        part = tuple(sorted(int(i) for i in raw))
        if not part:
            raise ValueError("empty part in partition")
        if len(set(part)) != len(part):
            raise ValueError(f"part {part} repeats an index")
        if part[0] < 1 or part[-1] > dims.total:
            raise ValueError(
                f"part {part} has indices outside 1..{dims.total}"
            )
        if len(part) < 2:
            raise ValueError(f"part {part} has size {len(part)}; parts need size >= 2")
        overlap = seen.intersection(part)
        if overlap:
            raise ValueError(f"part {part} overlaps earlier parts at {sorted(overlap)}")
        seen.update(part)
        cleaned.append(part)
    missing = set(range(1, dims.total + 1)) - seen
    if missing:
        raise ValueError(f"partition leaves indices {sorted(missing)} uncovered")

    m = dims.m
    mixed = [p for p in cleaned if p[0] <= m < p[-1]]
    p_only = [p for p in cleaned if p[-1] <= m]
    q_only = [p for p in cleaned if p[0] > m]
    mixed.sort(key=min)
    p_only.sort(key=min)
    q_only.sort(key=min)
    ordered = tuple(mixed + p_only + q_only)
    return Partition(
        dims=dims,
        parts=ordered,
        a=len(mixed),
        b=len(mixed) + len(p_only),
        k=len(ordered),
    )


def parse_partition(dims: Dims, spec: str) -> Partition:
    """Parse the CLI partition format, e.g. "1,3|2,4" for m=2, n=2."""
    try:
        parts = [
            [int(tok) for tok in chunk.split(",") if tok.strip() != ""]
            for chunk in spec.split("|")
        ]
    except ValueError as exc:
        raise ValueError(f"malformed partition spec {spec!r}: {exc}") from exc
    return make_partition(dims, parts)


def trivial_partition(dims: Dims) -> Partition:
    """The single-part partition covering every coordinate index."""
    return make_partition(dims, [range(1, dims.total + 1)])


def _vector_gcd(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, v)
    return g


def in_P_pi(partition: Partition, p: Sequence[int], q: Sequence[int]) -> bool:
    """True iff every part's projection of (p, q) has coordinate gcd 1.

    An all-zero projection has gcd 0 and simply fails the test.
    """
    dims = partition.dims
    if len(p) != dims.m or len(q) != dims.n:
        raise ValueError(
            f"expected vectors of lengths {dims.m} and {dims.n}, "
            f"got {len(p)} and {len(q)}"
        )
    combined = list(p) + list(q)
    return all(
        _vector_gcd(combined[i - 1] for i in part) == 1 for part in partition.parts
    )


def in_Q_pi(partition: Partition, q: Sequence[int]) -> bool:
    """True iff some p completes q to a fully coprime tuple.

    Only parts lying entirely in the q-coordinates constrain q: any part
    that meets the p-coordinates can be satisfied by choosing p_i = 1 there.
    """
    if len(q) != partition.dims.n:
        raise ValueError(f"expected q of length {partition.dims.n}, got {len(q)}")
    return all(
        _vector_gcd(q[c] for c in partition.qcols(j)) == 1
        for j in partition.q_only_parts
    )


def has_ell(partition: Partition) -> bool:
    """True iff some part has size >= 3 and touches the q-coordinates.

    Selects which lower-bound regime applies to the shell sums: q^{n-1}
    when true, q^{n-2} phi(q) when false.
    """
    m = partition.dims.m
    return any(len(part) >= 3 and part[-1] > m for part in partition.parts)


# ---------------------------------------------------------------------------
# Interval and box counts


def _int_ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _int_floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _multiples_in_range(d: int, lo: int, hi: int) -> int:
    """Number of multiples of d in [lo, hi]."""
    if hi < lo:
        return 0
    return hi // d - -(-lo // d) + 1


def coprime_count_in_range(lo: int, hi: int, modulus: int, sieve: SieveTable) -> int:
    """Count integers p in [lo, hi] with gcd(p, modulus) = 1.

    modulus = 0 means the gcd condition degenerates to |p| = 1.  Uses
    inclusion-exclusion over the squarefree divisors of the modulus.
    """
    if hi < lo:
        return 0
    if modulus == 0:
        return int(lo <= 1 <= hi) + int(lo <= -1 <= hi)
    total = 0
    for d, sign in sieve.squarefree_divisors(modulus):
        total += sign * _multiples_in_range(d, lo, hi)
    return total


def count_coprime_interval(
    q: int,
    alpha: Fraction | int | str,
    beta: Fraction | int | str,
    sieve: SieveTable | None = None,
) -> int:
    """Count integers p with gcd(p, q) = 1 and alpha*q <= p <= beta*q.

    Computed two independent ways -- a direct coprimality scan and Moebius
    inversion over the divisors of q -- which must agree; the common value is
    returned.  Endpoints are included, so the count can differ from the
    open-interval convention by at most 2.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if not (0 <= alpha < beta <= 1):
        raise ValueError("need 0 <= alpha < beta <= 1")
    sieve = _require_sieve(sieve, q)
    lo = _int_ceil(alpha * q)
    hi = _int_floor(beta * q)
    if hi < lo:
        direct = 0
    else:
        p = np.arange(lo, hi + 1, dtype=np.int64)
        direct = int(np.count_nonzero(np.gcd(p, q) == 1))
    via_mobius = 0
    for e, sign in sieve.squarefree_divisors(q):
        d = q // e
        via_mobius += sign * (
            _int_floor(beta * d) - _int_ceil(alpha * d) + 1
        )
    if direct != via_mobius:
        raise RuntimeError(
            f"internal mismatch for q={q}, [{alpha}, {beta}]: "
            f"scan={direct}, mobius={via_mobius}"
        )
    return direct


def niederreiter_threshold(
    gamma: Fraction | int | str,
    q_max: int,
    trials: int,
    seed: int = 0,
    sieve: SieveTable | None = None,
) -> BoundReport:
    """Find the empirical onset of the two-sided coprime interval bound.

    For ``trials`` random placements of a width-gamma window inside [0, 1],
    checks phi(q)*gamma/2 <= count <= 3*phi(q)*gamma/2 for each q up to
    q_max, and reports the smallest threshold from which every larger q
    passes for every placement.  Report rows carry the extreme normalized
    ratios count/(phi(q)*gamma) over the placements; the fitted constant is
    the smallest low-side ratio beyond the threshold.
    """
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if q_max < 1:
        raise ValueError("q_max must be a positive integer")
    if trials < 1:
        raise ValueError("trials must be a positive integer")
    sieve = _require_sieve(sieve, q_max)
    den = 10**6
    rng = np.random.default_rng((seed, 0x1D))
    amax = _int_floor((1 - gamma) * den)
    if amax <= 0:
        alphas = [Fraction(0)] * trials
    else:
        alphas = [Fraction(int(a), den) for a in rng.integers(0, amax + 1, size=trials)]
    pairs = [(alpha, alpha + gamma) for alpha in alphas]

    rows: list[tuple[int, float, float]] = []
    ok = np.zeros(q_max + 1, dtype=bool)
    for q in range(1, q_max + 1):
        sf = sieve.squarefree_divisors(q)
        phi_gamma = int(sieve.phi[q]) * gamma
        lo_count: int | None = None
        hi_count: int | None = None
        for alpha, beta in pairs:
            count = 0
            for e, sign in sf:
                d = q // e
                count += sign * (_int_floor(beta * d) - _int_ceil(alpha * d) + 1)
            lo_count = count if lo_count is None else min(lo_count, count)
            hi_count = count if hi_count is None else max(hi_count, count)
        ok[q] = (2 * lo_count >= phi_gamma) and (2 * hi_count <= 3 * phi_gamma)
        rows.append((q, lo_count / float(phi_gamma), hi_count / float(phi_gamma)))

    threshold: int | None = None
    q = q_max
    while q >= 1 and ok[q]:
        threshold = q
        q -= 1
    fitted = (
        min(row[1] for row in rows if row[0] >= threshold)
        if threshold is not None
        else None
    )
    return BoundReport(
        params=f"gamma={gamma}, q_max={q_max}, trials={trials}, seed={seed}",
        values=rows,
        fitted_constant=fitted,
        threshold=threshold,
    )


@dataclass(frozen=True)
class Box:
    """Axis-aligned box of integer points: alpha_i * scale <= p_i <= beta_i * scale.

    All coordinates share the same width gamma = beta_i - alpha_i in (0, 1],
    and 0 <= alpha_i < beta_i <= 1.
    """

    alphas: tuple[Fraction, ...]
    betas: tuple[Fraction, ...]
    scale: int

    def __post_init__(self) -> None:
        if len(self.alphas) != len(self.betas) or not self.alphas:
            raise ValueError("box needs matching nonempty alpha/beta tuples")
        if self.scale < 1:
            raise ValueError("box scale must be a positive integer")
        widths = set()
        for a, b in zip(self.alphas, self.betas):
            if not (0 <= a < b <= 1):
                raise ValueError(f"need 0 <= alpha < beta <= 1, got [{a}, {b}]")
            widths.add(b - a)
        if len(widths) != 1:
            raise ValueError("all box coordinates must share one width")

    @property
    def gamma(self) -> Fraction:
        return self.betas[0] - self.alphas[0]

    @property
    def dim(self) -> int:
        return len(self.alphas)

    def int_ranges(self) -> tuple[list[int], list[int]]:
        lows = [_int_ceil(a * self.scale) for a in self.alphas]
        highs = [_int_floor(b * self.scale) for b in self.betas]
        return lows, highs


def make_box(
    alphas: Sequence[Fraction | int | str],
    betas: Sequence[Fraction | int | str],
    scale: int,
) -> Box:
    return Box(
        alphas=tuple(Fraction(a) for a in alphas),
        betas=tuple(Fraction(b) for b in betas),
        scale=scale,
    )


def full_box(dim: int, scale: int) -> Box:
    return make_box([0] * dim, [1] * dim, scale)


def random_box(
    dim: int, gamma: Fraction, scale: int, rng: np.random.Generator, den: int = 1000
) -> Box:
    """Random placement of a width-gamma box with rational corners."""
    gamma = Fraction(gamma)
    amax = _int_floor((1 - gamma) * den)
    alphas = [
        Fraction(int(a), den) for a in rng.integers(0, max(amax, 0) + 1, size=dim)
    ]
    return make_box(alphas, [a + gamma for a in alphas], scale)


def count_primitive_box(
    d: int, box: Box, budget: Budget | int | None = None
) -> int:
    """Count p in Z^d with gcd(p) = 1 inside the box, by enumeration."""
    if d < 2:
        raise ValueError("primitive box count requires dimension >= 2")
    if box.dim != d:
        raise ValueError(f"box has {box.dim} coordinates, expected {d}")
    budget = as_budget(budget)
    lows, highs = box.int_ranges()
    cells = math.prod(max(hi - lo + 1, 0) for lo, hi in zip(lows, highs))
    budget.charge(cells)
    total = 0
    for block in iter_box(lows, highs):
        g = np.gcd.reduce(np.abs(block), axis=1)
        total += int(np.count_nonzero(g == 1))
    return total


# ---------------------------------------------------------------------------
# Shell sums


def _part_gcds(block: np.ndarray, cols: tuple[int, ...]) -> np.ndarray:
    sub = np.abs(block[:, cols])
    return np.gcd.reduce(sub, axis=1)


def _mixed_part_table(
    pcols: tuple[int, ...],
    lows: list[int],
    highs: list[int],
    q: int,
    sieve: SieveTable,
    budget: Budget,
) -> np.ndarray:
    """Lookup N[g] = #{p-block in its box ranges : gcd(block, g) = 1} for g in 0..q."""
    blows = [lows[c] for c in pcols]
    bhighs = [highs[c] for c in pcols]
    table = np.zeros(q + 1, dtype=np.int64)
    if len(pcols) == 1:
        lo, hi = blows[0], bhighs[0]
        for g in range(0, q + 1):
            table[g] = coprime_count_in_range(lo, hi, g, sieve)
        return table
    # Multi-coordinate block: inclusion-exclusion over squarefree divisors of g.
    cells = math.prod(max(hi - lo + 1, 0) for lo, hi in zip(blows, bhighs))
    budget.charge(cells)
    prim = 0
    for block in iter_box(blows, bhighs):
        g = np.gcd.reduce(np.abs(block), axis=1)
        prim += int(np.count_nonzero(g == 1))
    table[0] = prim
    for g in range(1, q + 1):
        total = 0
        for e, sign in sieve.squarefree_divisors(g):
            total += sign * math.prod(
                _multiples_in_range(e, lo, hi) for lo, hi in zip(blows, bhighs)
            )
        table[g] = total
    return table


def counting_sum(
    partition: Partition,
    q: int,
    box: Box,
    sieve: SieveTable | None = None,
    budget: Budget | int | None = None,
) -> int:
    """Total count, over the shell |q| = q, of box-constrained coprime completions.

    For each shell vector the number of p in the box with (p, q) satisfying
    every part's coprimality is a product of independent per-part counts;
    the sum of these products over the shell is returned exactly.
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    dims = partition.dims
    if box.dim != dims.m:
        raise ValueError(f"box must cover the {dims.m} p-coordinates")
    if box.scale != q:
        raise ValueError("box scale must equal the shell radius q")
    sieve = _require_sieve(sieve, q)
    budget = as_budget(budget)
    lows, highs = box.int_ranges()

    constant = 1
    for j in partition.p_only_parts:
        pcols = partition.pcols(j)
        sub = make_box(
            [box.alphas[c] for c in pcols], [box.betas[c] for c in pcols], q
        )
        constant *= count_primitive_box(len(pcols), sub, budget)
    if constant == 0:
        return 0

    mixed = [
        (partition.qcols(j), _mixed_part_table(partition.pcols(j), lows, highs, q, sieve, budget))
        for j in partition.mixed_parts
    ]
    q_only_cols = [partition.qcols(j) for j in partition.q_only_parts]

    budget.charge(shell_count(dims.n, q) * (len(mixed) + len(q_only_cols) + 1))
    total = 0
    for block in iter_shell(dims.n, q):
        mask = np.ones(block.shape[0], dtype=bool)
        for cols in q_only_cols:
            mask &= _part_gcds(block, cols) == 1
        if not mask.any():
            continue
        prod = np.ones(block.shape[0], dtype=np.int64)
        for cols, table in mixed:
            prod *= table[_part_gcds(block, cols)]
        total += int(prod[mask].sum())
    return constant * total


def funny_sum(
    partition: Partition,
    q: int,
    sieve: SieveTable | None = None,
    budget: Budget | int | None = None,
) -> Fraction:
    """Exact shell sum of the per-part totient ratios phi(g)/g.

    Sums over shell vectors admitting a coprime completion; the product runs
    over parts holding exactly one p-coordinate, with g the gcd of the
    part's q-coordinates.  An empty product is 1.  A part whose
    q-projection is all zero contributes factor 0 (its gcd degenerates; the
    corresponding completions are the bounded set |p| = 1, negligible at the
    sum's scale).
    """
    if q < 1:
        raise ValueError("q must be a positive integer")
    dims = partition.dims
    sieve = _require_sieve(sieve, q)
    budget = as_budget(budget)

    singleton_cols = [
        partition.qcols(j)
        for j in partition.mixed_parts
        if len(partition.pcols(j)) == 1
    ]
    q_only_cols = [partition.qcols(j) for j in partition.q_only_parts]
    budget.charge(shell_count(dims.n, q) * (len(singleton_cols) + len(q_only_cols) + 1))

    if len(singleton_cols) >= 1 and (q + 1) ** len(singleton_cols) >= 2**62:
        raise ValueError("too many tracked parts for this shell radius")

    if not singleton_cols:
        count = 0
        for block in iter_shell(dims.n, q):
            mask = np.ones(block.shape[0], dtype=bool)
            for cols in q_only_cols:
                mask &= _part_gcds(block, cols) == 1
            count += int(np.count_nonzero(mask))
        return Fraction(count)

    signature_counts: dict[int, int] = {}
    base = q + 1
    for block in iter_shell(dims.n, q):
        mask = np.ones(block.shape[0], dtype=bool)
        for cols in q_only_cols:
            mask &= _part_gcds(block, cols) == 1
        if not mask.any():
            continue
        keys = np.zeros(block.shape[0], dtype=np.int64)
        for cols in singleton_cols:
            keys = keys * base + _part_gcds(block, cols)
        uniq, counts = np.unique(keys[mask], return_counts=True)
        for key, cnt in zip(uniq.tolist(), counts.tolist()):
            signature_counts[key] = signature_counts.get(key, 0) + cnt

    terms = []
    for key, cnt in sorted(signature_counts.items()):
        factor = Fraction(cnt)
        rem = key
        for _ in singleton_cols:
            rem, g = divmod(rem, base)
            if g == 0:
                factor = Fraction(0)
                break
            factor *= Fraction(int(sieve.phi[g]), g)
        if factor:
            terms.append(factor)
    return sum_fractions(terms)
