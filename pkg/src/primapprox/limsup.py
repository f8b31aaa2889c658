"""Membership kernels and Monte Carlo measure estimation for target-hitting sets.

A point is an n-by-m matrix x with entries in [0, 1].  For an integer vector
q of length n, the row-vector product q x lands in R^m, and the sets of
interest collect the x admitting an integer translate q x + p inside a target
ball: unconstrained, partition-constrained on (p, q), or with each p_i
coprime to the whole of q.  Membership reduces modulo 1 per coordinate, so
only the few integer candidates p_i that could land in the ball are ever
examined.

Monte Carlo estimates are sharded into batches with counter-based seeds
derived from (seed, batch index); partial results are reduced in batch order,
so estimates do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Literal, Protocol, Sequence

import numpy as np

from .partition import Dims, Partition, in_P_pi
from .shells import Budget, ResourceLimitError, as_budget, ball_count, iter_ball, iter_shell, shell_count

DEFAULT_TOL = 1e-12

MAX_CANDIDATE_COMBOS = 4096

_BATCH = 1 << 14

SetKind = Literal["A", "A_pi", "A_prime"]


@dataclass(frozen=True)
class TargetBall:
    """Max-norm ball in R^m: center y, radius r, volume (2r)^m."""

    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        if center.ndim != 1 or center.size < 1:
            raise ValueError("ball center must be a 1-d vector")
        if not self.radius >= 0:
            raise ValueError("ball radius must be nonnegative")
        object.__setattr__(self, "center", center)

    @property
    def m(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        return (2.0 * self.radius) ** self.m


def ball_at(center: Sequence[float] | float, radius: float) -> TargetBall:
    center_arr = np.atleast_1d(np.asarray(center, dtype=float))
    return TargetBall(center=center_arr, radius=float(radius))


@dataclass(frozen=True)
class BoxUnion:
    """Finite union of pairwise-disjoint axis-aligned boxes inside [0, 1]^d.

    Serves as the open set against which set measures are localized; points
    are sampled box-proportionally, then uniformly inside the chosen box.
    """

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self) -> None:
        lows = np.atleast_2d(np.asarray(self.lows, dtype=float))
        highs = np.atleast_2d(np.asarray(self.highs, dtype=float))
        if lows.shape != highs.shape or lows.ndim != 2 or lows.shape[0] < 1:
            raise ValueError("box union needs matching (k, d) corner arrays")
        if np.any(lows < 0) or np.any(highs > 1) or np.any(lows >= highs):
            raise ValueError("boxes must satisfy 0 <= low < high <= 1 per coordinate")
        for i in range(lows.shape[0]):
            for j in range(i + 1, lows.shape[0]):
                if np.all(
                    (lows[i] < highs[j]) & (lows[j] < highs[i])
                ):
                    raise ValueError(f"boxes {i} and {j} overlap")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if not self.volume > 0:
            raise ValueError("box union must have positive volume")

    @property
    def dim(self) -> int:
        return self.lows.shape[1]

    @property
    def box_volumes(self) -> np.ndarray:
        return np.prod(self.highs - self.lows, axis=1)

    @property
    def volume(self) -> float:
        return float(self.box_volumes.sum())

    @classmethod
    def full_cube(cls, dim: int) -> "BoxUnion":
        return cls(lows=np.zeros((1, dim)), highs=np.ones((1, dim)))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw `count` uniform points from the union, shape (count, dim)."""
        vols = self.box_volumes
        cdf = np.cumsum(vols / vols.sum())
        which = np.searchsorted(cdf, rng.random(count), side="right")
        which = np.minimum(which, len(cdf) - 1)
        u = rng.random((count, self.dim))
        return self.lows[which] + u * (self.highs[which] - self.lows[which])


@dataclass(frozen=True)
class MeasureEstimate:
    """Indicator-sampling estimate of a set's measure within a region.

    ``mean`` is the hit fraction, i.e. the estimated measure of the set
    relative to the region; ``measure`` rescales by the region volume.
    """

    mean: float
    std_error: float
    samples: int
    seed: int
    region_volume: float = 1.0

    @property
    def measure(self) -> float:
        return self.mean * self.region_volume

    @property
    def measure_std_error(self) -> float:
        return self.std_error * self.region_volume


class BallSchedule(Protocol):
    """Radius/center schedules indexed by the max-norm of q."""

    dims: Dims

    def radius_array(self, norms: np.ndarray) -> np.ndarray: ...

    def center_array(self, norms: np.ndarray) -> np.ndarray: ...


# ---------------------------------------------------------------------------
# Scalar membership kernels


def _as_point(x, dims: Dims) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(dims.n, dims.m)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("point matrix entries must lie in [0, 1]")
    return arr


def _as_qvec(q, n: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(q, dtype=np.int64))
    if arr.shape != (n,):
        raise ValueError(f"expected integer vector of length {n}")
    if not arr.any():
        raise ValueError("q must be nonzero")
    return arr


def in_A(x, q, ball: TargetBall, tol: float = DEFAULT_TOL) -> bool:
    """True iff some integer translate of q x lies in the ball.

    Per coordinate, q x_i + p_i hits the ball interval iff the distance of
    q x_i - center_i to the nearest integer is at most the radius.
    """
    m = ball.m
    n = np.atleast_1d(np.asarray(q)).size
    point = _as_point(x, Dims(m=m, n=n))
    qvec = _as_qvec(q, n)
    t = qvec @ point
    d = np.abs(((t - ball.center + 0.5) % 1.0) - 0.5)
    return bool(np.all(d <= ball.radius + tol))


def _candidate_range(
    t: np.ndarray, ball: TargetBall, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Integer candidates p with t + p inside the ball: [lo, hi] per coordinate."""
    lo = np.ceil(ball.center - ball.radius - tol - t).astype(np.int64)
    hi = np.floor(ball.center + ball.radius + tol - t).astype(np.int64)
    return lo, hi


def _check_combo_budget(counts: Iterable[int]) -> None:
    combos = math.prod(max(int(c), 1) for c in counts)
    if combos > MAX_CANDIDATE_COMBOS:
        raise ResourceLimitError(
            f"{combos} candidate translate combinations exceed the cap "
            f"{MAX_CANDIDATE_COMBOS}; shrink the ball radius"
        )


def in_A_pi(
    x, q, ball: TargetBall, partition: Partition, tol: float = DEFAULT_TOL
) -> bool:
    """True iff q x + p hits the ball for some p making (p, q) part-wise coprime."""
    dims = partition.dims
    if ball.m != dims.m:
        raise ValueError("ball dimension must match the partition's m")
    point = _as_point(x, dims)
    qvec = _as_qvec(q, dims.n)
    t = qvec @ point
    lo, hi = _candidate_range(t, ball, tol)
    counts = np.maximum(hi - lo + 1, 0)
    if np.any(counts == 0):
        return False
    _check_combo_budget(counts)
    qlist = qvec.tolist()
    for offsets in np.ndindex(*counts.tolist()):
        p = (lo + np.array(offsets, dtype=np.int64)).tolist()
        if in_P_pi(partition, p, qlist):
            return True
    return False


def in_A_prime(x, q, ball: TargetBall, tol: float = DEFAULT_TOL) -> bool:
    """True iff q x + p hits the ball for some p with every gcd(p_i, q) = 1."""
    m = ball.m
    n = np.atleast_1d(np.asarray(q)).size
    point = _as_point(x, Dims(m=m, n=n))
    qvec = _as_qvec(q, n)
    g = int(np.gcd.reduce(np.abs(qvec)))
    t = qvec @ point
    lo, hi = _candidate_range(t, ball, tol)
    counts = np.maximum(hi - lo + 1, 0)
    if np.any(counts == 0):
        return False
    _check_combo_budget(counts)
    for i in range(m):
        if not any(
            math.gcd(int(p), g) == 1 for p in range(int(lo[i]), int(hi[i]) + 1)
        ):
            return False
    return True


def measure_A_exact(q, ball: TargetBall) -> float:
    """Measure of the unconstrained hitting set: min(ball volume, 1)."""
    _as_qvec(q, np.atleast_1d(np.asarray(q)).size)
    return min(ball.volume, 1.0)


# ---------------------------------------------------------------------------
# Vectorized membership over sample batches


def _pointwise_hits(
    set_kind: SetKind,
    X: np.ndarray,
    q_pts: np.ndarray,
    ball: TargetBall,
    partition: Partition | None,
    tol: float,
) -> np.ndarray:
    """Boolean membership where each sample carries its own integer vector.

    X has shape (S, n, m) and q_pts (S, n); sample s is tested against the
    set induced by q_pts[s].
    """
    t = np.einsum("sj,sjk->sk", q_pts.astype(float), X)
    d = np.abs(((t - ball.center + 0.5) % 1.0) - 0.5)
    in_a = np.all(d <= ball.radius + tol, axis=1)
    if set_kind == "A":
        return in_a

    lo = np.ceil(ball.center - ball.radius - tol - t).astype(np.int64)
    hi = np.floor(ball.center + ball.radius + tol - t).astype(np.int64)
    ncand = np.maximum(hi - lo + 1, 0)
    per_coord_max = [int(c) for c in ncand.max(axis=0, initial=0)] if ncand.size else []

    if set_kind == "A_prime":
        g = np.gcd.reduce(np.abs(q_pts), axis=1)
        ok = np.ones(X.shape[0], dtype=bool)
        for i, cmax in enumerate(per_coord_max):
            _check_combo_budget([cmax])
            coord_ok = np.zeros(X.shape[0], dtype=bool)
            for off in range(cmax):
                valid = off < ncand[:, i]
                p = lo[:, i] + off
                coord_ok |= valid & (np.gcd(np.abs(p), g) == 1)
            ok &= coord_ok
        return ok

    if partition is None:
        raise ValueError("set kind A_pi requires a partition")
    part_gs = []
    for j in range(partition.k):
        qcols = partition.qcols(j)
        gq = (
            np.gcd.reduce(np.abs(q_pts[:, list(qcols)]), axis=1)
            if qcols
            else np.zeros(X.shape[0], dtype=np.int64)
        )
        part_gs.append((partition.pcols(j), gq))
    _check_combo_budget(per_coord_max)
    hit = np.zeros(X.shape[0], dtype=bool)
    for offsets in np.ndindex(*[max(c, 1) for c in per_coord_max]):
        offs = np.array(offsets, dtype=np.int64)
        valid = np.all(offs < ncand, axis=1)
        if not valid.any():
            continue
        p = lo + offs
        cond = valid
        for pcols, gq in part_gs:
            if pcols:
                pg = np.gcd.reduce(np.abs(p[:, list(pcols)]), axis=1)
                cond = cond & (np.gcd(pg, gq) == 1)
            else:
                cond = cond & (gq == 1)
        hit |= cond
    return hit


def _batch_hits(
    set_kind: SetKind,
    X: np.ndarray,
    qvec: np.ndarray,
    ball: TargetBall,
    partition: Partition | None,
    tol: float,
) -> np.ndarray:
    """Boolean membership of each sample matrix in X against one fixed vector."""
    q_pts = np.broadcast_to(qvec, (X.shape[0], qvec.size))
    return _pointwise_hits(set_kind, X, q_pts, ball, partition, tol)


def _run_batches(
    n_batches: int, worker: Callable[[int], object], workers: int
) -> list[object]:
    """Evaluate worker(0..n_batches-1), returning results in batch order."""
    if workers <= 1 or n_batches <= 1:
        return [worker(b) for b in range(n_batches)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(n_batches)))


def mc_measure(
    set_kind: SetKind,
    q,
    ball: TargetBall,
    region: BoxUnion,
    samples: int,
    seed: int,
    partition: Partition | None = None,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
) -> MeasureEstimate:
    """Monte Carlo estimate of the set's measure within the region.

    Samples are drawn uniformly from the region (box-volume-weighted), the
    membership indicator is averaged, and the estimate is reproducible from
    the seed alone at any worker count.
    """
    if samples < 1:
        raise ValueError("samples must be a positive integer")
    if set_kind not in ("A", "A_pi", "A_prime"):
        raise ValueError(f"unknown set kind {set_kind!r}")
    if set_kind == "A_pi" and partition is None:
        raise ValueError("set kind A_pi requires a partition")
    n = np.atleast_1d(np.asarray(q)).size
    m = ball.m
    if region.dim != n * m:
        raise ValueError(f"region dimension {region.dim} != n*m = {n * m}")
    qvec = _as_qvec(q, n)

    n_batches = -(-samples // _BATCH)

    def one_batch(b: int) -> int:
        count = _BATCH if b < n_batches - 1 else samples - _BATCH * (n_batches - 1)
        rng = np.random.default_rng((seed, b))
        pts = region.sample(rng, count).reshape(count, n, m)
        return int(
            _batch_hits(set_kind, pts, qvec, ball, partition, tol).sum()
        )

    hits = sum(_run_batches(n_batches, one_batch, workers))
    mean = hits / samples
    std_error = math.sqrt(mean * (1.0 - mean) / samples)
    return MeasureEstimate(
        mean=mean,
        std_error=std_error,
        samples=samples,
        seed=seed,
        region_volume=region.volume,
    )


def uniformity_ratio(
    set_kind: SetKind,
    partition: Partition | None,
    shell_norm: int,
    ball: TargetBall,
    region: BoxUnion,
    samples: int,
    seed: int,
    dims: Dims,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
) -> float:
    """Shell-summed localized measure against its unconstrained benchmark.

    Estimates sum over |q| = shell_norm of |set(q, ball) restricted to the
    region|, divided by the same sum for the unconstrained set, which is
    exactly shell size times min(ball volume, 1) times the region volume.
    The sampling budget is spread across the shell (at least one point per
    vector), each vector estimated independently.
    """
    if shell_norm < 1:
        raise ValueError("shell norm must be a positive integer")
    if samples < 1:
        raise ValueError("samples must be a positive integer")
    if ball.m != dims.m or region.dim != dims.n * dims.m:
        raise ValueError("ball/region dimensions must match dims")
    total_vectors = shell_count(dims.n, shell_norm)
    base_ct = max(samples // total_vectors, 1)
    remainder = max(samples - base_ct * total_vectors, 0)

    chunks = list(iter_shell(dims.n, shell_norm, chunk=4096))
    offsets = np.cumsum([0] + [c.shape[0] for c in chunks])

    def one_chunk(ci: int) -> float:
        block = chunks[ci]
        start = offsets[ci]
        counts = np.full(block.shape[0], base_ct, dtype=np.int64)
        extra = np.arange(start, start + block.shape[0]) < remainder
        counts[extra] += 1
        rng = np.random.default_rng((seed, 2, ci))
        pts = region.sample(rng, int(counts.sum())).reshape(-1, dims.n, dims.m)
        vec_idx = np.repeat(np.arange(block.shape[0]), counts)
        hits = _pointwise_hits(set_kind, pts, block[vec_idx], ball, partition, tol)
        per_vector = np.bincount(vec_idx, weights=hits, minlength=block.shape[0])
        return float(np.sum(per_vector / counts))

    estimates = _run_batches(len(chunks), one_chunk, workers)
    numerator = sum(estimates) * region.volume
    denominator = total_vectors * min(ball.volume, 1.0) * region.volume
    return numerator / denominator


def qi_ratio(
    set_kind: SetKind,
    partition: Partition | None,
    psi: BallSchedule,
    Q: int,
    samples: int,
    seed: int,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
    budget: Budget | int | None = None,
) -> float:
    """Estimated squared-mean to second-moment ratio of the hit count.

    With N(x) the number of vectors q, 1 <= |q| <= Q, whose set contains x,
    this returns (E N)^2 / E N^2 over x sampled uniformly in the cube: the
    lower bound of the divergence Borel-Cantelli inequality, since the sum of
    set measures is E N and the sum of pairwise intersection measures is
    E N^2.  Returns NaN when no set is ever hit.
    """
    if Q < 1:
        raise ValueError("Q must be a positive integer")
    if samples < 1:
        raise ValueError("samples must be a positive integer")
    dims = psi.dims
    budget = as_budget(budget)
    budget.charge(samples * ball_count(dims.n, Q))

    vectors = np.concatenate(list(iter_ball(dims.n, Q)), axis=0)
    norms = np.max(np.abs(vectors), axis=1)
    radii = psi.radius_array(norms)
    centers = psi.center_array(norms)

    if set_kind == "A_prime":
        vec_g = np.gcd.reduce(np.abs(vectors), axis=1)
        part_cols: list[tuple[tuple[int, ...], np.ndarray]] = []
    elif set_kind == "A_pi":
        if partition is None:
            raise ValueError("set kind A_pi requires a partition")
        if partition.dims != dims:
            raise ValueError("partition dims must match the schedule dims")
        vec_g = None
        part_cols = []
        for j in range(partition.k):
            qcols = partition.qcols(j)
            gq = (
                np.gcd.reduce(np.abs(vectors[:, list(qcols)]), axis=1)
                if qcols
                else np.zeros(len(vectors), dtype=np.int64)
            )
            part_cols.append((partition.pcols(j), gq))
    else:
        vec_g = None
        part_cols = []

    n_batches = -(-samples // _BATCH)
    vchunk = max(1, (1 << 22) // _BATCH)

    def one_batch(b: int) -> tuple[int, int]:
        count = _BATCH if b < n_batches - 1 else samples - _BATCH * (n_batches - 1)
        rng = np.random.default_rng((seed, 3, b))
        X = rng.random((count, dims.n, dims.m))
        N = np.zeros(count, dtype=np.int64)
        for vstart in range(0, len(vectors), vchunk):
            sl = slice(vstart, min(vstart + vchunk, len(vectors)))
            N += _schedule_hits(
                set_kind,
                X,
                vectors[sl],
                radii[sl],
                centers[sl],
                vec_g[sl] if vec_g is not None else None,
                [(pcols, gq[sl]) for pcols, gq in part_cols],
                tol,
            )
        return int(N.sum()), int((N.astype(object) ** 2).sum())

    results = _run_batches(n_batches, one_batch, workers)
    total_n = sum(r[0] for r in results)
    total_n2 = sum(r[1] for r in results)
    if total_n2 == 0:
        return float("nan")
    return (total_n / samples) ** 2 / (total_n2 / samples)


def _schedule_hits(
    set_kind: SetKind,
    X: np.ndarray,
    vecs: np.ndarray,
    radii: np.ndarray,
    centers: np.ndarray,
    vec_g: np.ndarray | None,
    part_cols: list[tuple[tuple[int, ...], np.ndarray]],
    tol: float,
) -> np.ndarray:
    """Per-sample count of schedule vectors whose set contains the sample.

    X has shape (S, n, m); vecs (V, n); radii (V,); centers (V, m).
    """
    t = np.einsum("vj,sjk->svk", vecs.astype(float), X)
    rad = radii[None, :, None]
    cen = centers[None, :, :]
    d = np.abs(((t - cen + 0.5) % 1.0) - 0.5)
    base = np.all(d <= rad + tol, axis=2)
    if set_kind == "A":
        return base.sum(axis=1).astype(np.int64)

    lo = np.ceil(cen - rad - tol - t).astype(np.int64)
    hi = np.floor(cen + rad + tol - t).astype(np.int64)
    ncand = np.maximum(hi - lo + 1, 0)
    cmax = int(ncand.max(initial=0))
    _check_combo_budget([cmax] * X.shape[2])

    if set_kind == "A_prime":
        ok = np.ones(base.shape + (X.shape[2],), dtype=bool)
        for i in range(X.shape[2]):
            coord_ok = np.zeros(base.shape, dtype=bool)
            for off in range(cmax):
                valid = off < ncand[:, :, i]
                p = lo[:, :, i] + off
                coord_ok |= valid & (np.gcd(np.abs(p), vec_g[None, :]) == 1)
            ok[:, :, i] = coord_ok
        return np.all(ok, axis=2).sum(axis=1).astype(np.int64)

    hit = np.zeros(base.shape, dtype=bool)
    for offsets in np.ndindex(*([max(cmax, 1)] * X.shape[2])):
        offs = np.array(offsets, dtype=np.int64)
        valid = np.all(offs[None, None, :] < ncand, axis=2)
        if not valid.any():
            continue
        p = lo + offs[None, None, :]
        cond = valid
        for pcols, gq in part_cols:
            if pcols:
                pg = np.gcd.reduce(np.abs(p[:, :, list(pcols)]), axis=2)
                cond = cond & (np.gcd(pg, gq[None, :]) == 1)
            else:
                cond = cond & (gq[None, :] == 1)
        hit |= cond
    return hit.sum(axis=1).astype(np.int64)
