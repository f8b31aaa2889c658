"""Approximation-function families, divergence series, and dichotomy runs.

The harness operationalizes "infinitely many solutions" as the only
desk-scale observable available: whether sampled points keep acquiring new
solution pairs in every window of a geometric checkpoint schedule.  That is
a heuristic diagnostic, not a proof; the series evaluators report the
divergence/convergence verdicts that the theory pairs with it.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .arith import BoundReport, SieveTable, _require_sieve, primitive_ball_table
from .limsup import DEFAULT_TOL, MeasureEstimate, _check_combo_budget
from .partition import Dims, Partition, has_ell
from .shells import Budget, as_budget, ball_count, iter_ball

PSI_FAMILIES = (
    "power",
    "log_boundary",
    "log_convergent",
    "sparse_nonmonotone",
    "table",
)

Mode = Literal["plain", "partition", "coprime"]


@dataclass(frozen=True)
class ApproxFunction:
    """Radius schedule psi for the target balls, plus the fixed shift y.

    psi maps the max-norm of q to a ball radius; y is the ball center (None
    means "let the experiment choose", which samples it once per run).  The
    ``table`` family can also carry per-norm centers, giving target balls
    whose centers move with the norm.
    """

    family: str
    params: tuple[float, ...]
    dims: Dims
    y: np.ndarray | None = None
    table_values: np.ndarray | None = None
    table_centers: np.ndarray | None = None

    def radius(self, s: int) -> float:
        return float(self.radius_array(np.array([s]))[0])

    def radius_array(self, norms: np.ndarray) -> np.ndarray:
        """Vectorized psi over positive integer norms."""
        s = np.asarray(norms, dtype=float)
        if np.any(s < 1):
            raise ValueError("norms must be positive")
        m, n = self.dims.m, self.dims.n
        if self.family == "power":
            c, tau = self.params
            return c * s ** (-tau)
        if self.family == "log_boundary":
            (c,) = self.params
            return c * (s**n * np.log(s + 1.0)) ** (-1.0 / m)
        if self.family == "log_convergent":
            c, exponent = self.params
            return c * (s**n * np.log(s + 1.0) ** exponent) ** (-1.0 / m)
        if self.family == "sparse_nonmonotone":
            (c,) = self.params
            si = np.asarray(norms, dtype=np.int64)
            is_pow2 = (si & (si - 1)) == 0
            k = np.where(is_pow2, np.round(np.log2(np.maximum(si, 1))), 0.0)
            return np.where(is_pow2, c * 2.0 ** (-k * (n - 1) / m), 0.0)
        if self.family == "table":
            si = np.asarray(norms, dtype=np.int64)
            vals = np.zeros(si.shape, dtype=float)
            inside = si <= len(self.table_values)
            vals[inside] = self.table_values[si[inside] - 1]
            return vals
        raise ValueError(f"unknown family {self.family!r}")

    def center_array(
        self, norms: np.ndarray, default_center: np.ndarray | None = None
    ) -> np.ndarray:
        """Ball centers per norm, shape (len(norms), m)."""
        si = np.asarray(norms, dtype=np.int64)
        if self.table_centers is not None:
            out = np.zeros((si.size, self.dims.m))
            inside = si <= len(self.table_centers)
            out[inside] = self.table_centers[si[inside] - 1]
            if default_center is not None:
                out[~inside] = default_center
            return out
        center = self.y if self.y is not None else default_center
        if center is None:
            raise ValueError("no shift y bound to this function; supply a center")
        return np.broadcast_to(center, (si.size, self.dims.m)).copy()

    def is_nonincreasing(self, probe_to: int = 4096) -> bool:
        if self.family in ("power", "log_boundary", "log_convergent"):
            return True
        if self.family == "sparse_nonmonotone":
            return False
        vals = self.radius_array(np.arange(1, probe_to + 1))
        return bool(np.all(np.diff(vals) <= 1e-15))

    def spec_string(self) -> str:
        base = ":".join([self.family] + [format(p, "g") for p in self.params])
        return base

    def describe(self) -> dict:
        out: dict = {
            "family": self.family,
            "params": list(self.params),
            "m": self.dims.m,
            "n": self.dims.n,
        }
        if self.y is not None:
            out["y"] = [float(v) for v in self.y]
        if self.table_values is not None:
            out["table_values"] = [float(v) for v in self.table_values]
        return out


def psi_make(
    family: str,
    params: Sequence[float] | None,
    dims: Dims,
    y: Sequence[float] | None = None,
    table_values: Sequence[float] | None = None,
    table_centers: np.ndarray | None = None,
) -> ApproxFunction:
    """Validate parameters and build an ApproxFunction.

    Defaults: power needs (c, tau); log families default c = 1 and the
    convergent family a squared log; the sparse family places mass
    c * 2^{-k(n-1)/m} at norms 2^k, making each series term contribute c^m.
    """
    fam = family.strip().lower().replace("-", "_")
    aliases = {
        "logboundary": "log_boundary",
        "logconvergent": "log_convergent",
        "sparse": "sparse_nonmonotone",
        "sparsenonmonotone": "sparse_nonmonotone",
    }
    fam = aliases.get(fam, fam)
    if fam not in PSI_FAMILIES:
        raise ValueError(f"unknown psi family {family!r}; choose from {PSI_FAMILIES}")
    p = tuple(float(v) for v in (params or ()))
    if fam == "power":
        if len(p) == 0:
            p = (1.0, (dims.n + 1) / dims.m)
        elif len(p) == 1:
            p = (1.0, p[0])
        elif len(p) != 2:
            raise ValueError("power family takes parameters c and tau")
        if p[0] < 0 or p[1] < 0:
            raise ValueError("power family needs c >= 0 and tau >= 0")
    elif fam == "log_boundary":
        p = p or (1.0,)
        if len(p) != 1 or p[0] < 0:
            raise ValueError("log_boundary family takes one parameter c >= 0")
    elif fam == "log_convergent":
        if len(p) == 0:
            p = (1.0, 2.0)
        elif len(p) == 1:
            p = (p[0], 2.0)
        elif len(p) != 2:
            raise ValueError("log_convergent family takes c and the log exponent")
        if p[0] < 0 or p[1] <= 1:
            raise ValueError("log_convergent needs c >= 0 and exponent > 1")
    elif fam == "sparse_nonmonotone":
        p = p or (1.0,)
        if len(p) != 1 or p[0] < 0:
            raise ValueError("sparse_nonmonotone family takes one parameter c >= 0")
    table_arr = None
    if fam == "table":
        if table_values is None:
            raise ValueError("table family needs explicit values")
        table_arr = np.asarray(list(table_values), dtype=float)
        if table_arr.ndim != 1 or np.any(table_arr < 0):
            raise ValueError("table values must be nonnegative reals")
        p = ()
    y_arr = None
    if y is not None:
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        if y_arr.shape != (dims.m,):
            raise ValueError(f"shift y must have length m = {dims.m}")
    centers = None
    if table_centers is not None:
        centers = np.asarray(table_centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != dims.m:
            raise ValueError("per-norm centers must form a (count, m) array")
    return ApproxFunction(
        family=fam,
        params=p,
        dims=dims,
        y=y_arr,
        table_values=table_arr,
        table_centers=centers,
    )


# ---------------------------------------------------------------------------
# Series evaluation


@dataclass(frozen=True)
class SeriesVerdictConfig:
    """Thresholds of the last-decade slope heuristic.

    No finite computation decides divergence; increments per decade that
    decay slower than ``diverge_ratio`` per decade look like a harmonic-type
    tail, faster than ``converge_ratio`` like a summable one.
    """

    diverge_ratio: float = 0.7
    converge_ratio: float = 0.5


@dataclass
class SeriesReport:
    """Partial sums of the two governing series on a checkpoint schedule."""

    qs: list[int]
    s_kg: list[float] | None
    s_ds: list[float] | None
    verdict: str
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for sums in (self.s_kg, self.s_ds):
            if sums is not None and any(
                b < a - 1e-12 for a, b in zip(sums, sums[1:])
            ):
                raise ValueError("partial sums must be nondecreasing")


def geometric_checkpoints(Q: int, factor: float = 2.0) -> list[int]:
    """Geometric integer checkpoints 1, ~factor, ..., ending exactly at Q."""
    ckpts = []
    x = 1.0
    while round(x) < Q:
        c = int(round(x))
        if not ckpts or c > ckpts[-1]:
            ckpts.append(c)
        x *= factor
    if not ckpts or ckpts[-1] != Q:
        ckpts.append(Q)
    return ckpts


def _slope_verdict(
    cumulative: np.ndarray, cfg: SeriesVerdictConfig
) -> str:
    Q = len(cumulative)
    total = float(cumulative[-1])
    if total <= 0:
        return "converging"
    if Q < 100:
        return "inconclusive"
    s = lambda k: float(cumulative[k - 1])
    inc_last = s(Q) - s(Q // 10)
    inc_prev = s(Q // 10) - s(Q // 100)
    if inc_last <= 0:
        return "converging"
    if inc_prev <= 0:
        return "inconclusive"
    rho = inc_last / inc_prev
    if rho >= cfg.diverge_ratio:
        return "diverging"
    if rho <= cfg.converge_ratio:
        return "converging"
    return "inconclusive"


def series_kg(
    psi: ApproxFunction,
    Q: int,
    verdict_config: SeriesVerdictConfig | None = None,
    checkpoints: list[int] | None = None,
) -> SeriesReport:
    """Partial sums of sum_q q^{n-1} psi(q)^m with a slope-test verdict."""
    if Q < 1:
        raise ValueError("Q must be a positive integer")
    cfg = verdict_config or SeriesVerdictConfig()
    m, n = psi.dims.m, psi.dims.n
    qs = np.arange(1, Q + 1)
    terms = qs.astype(float) ** (n - 1) * psi.radius_array(qs) ** m
    cumulative = np.cumsum(terms)
    ckpts = checkpoints or geometric_checkpoints(Q)
    return SeriesReport(
        qs=list(ckpts),
        s_kg=[float(cumulative[c - 1]) for c in ckpts],
        s_ds=None,
        verdict=_slope_verdict(cumulative, cfg),
        config={"series": "kg", "psi": psi.describe(), "Q": Q},
    )


def series_ds(
    psi: ApproxFunction,
    Q: int,
    sieve: SieveTable | None = None,
    verdict_config: SeriesVerdictConfig | None = None,
    checkpoints: list[int] | None = None,
) -> SeriesReport:
    """Partial sums of the coprimality-weighted series over nonzero vectors.

    Sums (phi(g) psi(|q|) / g)^m over 0 < |q| <= Q with g = gcd(q), grouping
    each shell by gcd class: the number of shell vectors with gcd d is the
    number of primitive vectors on the shell of radius |q|/d, so only
    primitive ball counts are needed.
    """
    if Q < 1:
        raise ValueError("Q must be a positive integer")
    cfg = verdict_config or SeriesVerdictConfig()
    m, n = psi.dims.m, psi.dims.n
    sieve = _require_sieve(sieve, Q)
    prim = np.asarray(primitive_ball_table(n, Q, sieve), dtype=np.int64)
    shell_prim = np.diff(prim, prepend=0)
    radii = psi.radius_array(np.arange(1, Q + 1))
    terms = np.zeros(Q, dtype=float)
    for s in range(1, Q + 1):
        psi_s = radii[s - 1]
        if psi_s == 0:
            continue
        total = 0.0
        for d in sieve.divisors(s):
            count = shell_prim[s // d]
            if count:
                total += count * (int(sieve.phi[d]) * psi_s / d) ** m
        terms[s - 1] = total
    cumulative = np.cumsum(terms)
    ckpts = checkpoints or geometric_checkpoints(Q)
    return SeriesReport(
        qs=list(ckpts),
        s_kg=None,
        s_ds=[float(cumulative[c - 1]) for c in ckpts],
        verdict=_slope_verdict(cumulative, cfg),
        config={"series": "ds", "psi": psi.describe(), "Q": Q},
    )


def combine_series(kg: SeriesReport, ds: SeriesReport, verdict_from: str = "kg") -> SeriesReport:
    """Merge kg and ds reports sharing one checkpoint schedule."""
    if kg.qs != ds.qs:
        raise ValueError("reports must share checkpoints")
    verdict = kg.verdict if verdict_from == "kg" else ds.verdict
    config = dict(kg.config)
    config["series"] = "both"
    config["verdict_from"] = verdict_from
    return SeriesReport(
        qs=kg.qs, s_kg=kg.s_kg, s_ds=ds.s_ds, verdict=verdict, config=config
    )


# ---------------------------------------------------------------------------
# Dichotomy runs


@dataclass
class DichotomyConfig:
    """Configuration of a hit-counting run over sampled points."""

    dims: Dims
    psi: ApproxFunction
    mode: Mode
    schedule: list[int]
    x_samples: int
    seed: int
    partition: Partition | None = None
    tol: float = DEFAULT_TOL
    allow_conjecture: bool = False

    def validate(self) -> None:
        if self.mode not in ("plain", "partition", "coprime"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "partition":
            if self.partition is None:
                raise ValueError("partition mode needs a partition")
            if self.partition.dims != self.dims:
                raise ValueError("partition dims disagree with run dims")
        elif self.partition is not None:
            raise ValueError(f"mode {self.mode!r} does not accept a partition")
        if self.mode == "coprime" and self.dims.n <= 2 and not self.allow_conjecture:
            raise ValueError(
                "per-coordinate coprime runs with n <= 2 probe unproven territory; "
                "pass allow_conjecture to proceed"
            )
        if not self.schedule or any(q < 1 for q in self.schedule):
            raise ValueError("schedule must list positive checkpoints")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValueError("schedule checkpoints must increase")
        if self.x_samples < 1:
            raise ValueError("x_samples must be positive")
        if self.psi.dims != self.dims:
            raise ValueError("psi dims disagree with run dims")

    def describe(self) -> dict:
        return {
            "m": self.dims.m,
            "n": self.dims.n,
            "mode": self.mode,
            "partition": self.partition.spec_string() if self.partition else None,
            "psi": self.psi.describe(),
            "schedule": list(self.schedule),
            "x_samples": self.x_samples,
            "seed": self.seed,
            "tol": self.tol,
        }


@dataclass
class ExperimentRun:
    """Results of a dichotomy run: cumulative pair counts per point and checkpoint."""

    config: DichotomyConfig
    y: np.ndarray
    hits_plain: np.ndarray
    hits_constrained: np.ndarray
    out_of_hypothesis: bool
    budget_used: int

    @property
    def schedule(self) -> list[int]:
        return list(self.config.schedule)

    @property
    def effective_hits(self) -> np.ndarray:
        return self.hits_plain if self.config.mode == "plain" else self.hits_constrained

    def new_hit_fractions(self) -> list[float]:
        """Per window: fraction of points whose count grew in that window."""
        hits = self.effective_hits
        prev = np.zeros(hits.shape[0], dtype=np.int64)
        out = []
        for i in range(hits.shape[1]):
            out.append(float(np.mean(hits[:, i] > prev)))
            prev = hits[:, i]
        return out

    def summary_rows(self) -> list[tuple[int, float, float]]:
        fracs = self.new_hit_fractions()
        hits = self.effective_hits
        return [
            (q, fracs[i], float(np.median(hits[:, i])))
            for i, q in enumerate(self.config.schedule)
        ]

    def describe(self) -> dict:
        cfg = self.config.describe()
        cfg["y"] = [float(v) for v in self.y]
        cfg["out_of_hypothesis"] = self.out_of_hypothesis
        return cfg


def _pair_counts(
    mode: Mode,
    T: np.ndarray,
    radii: np.ndarray,
    centers: np.ndarray,
    tol: float,
    vec_g: np.ndarray | None,
    part_gs: list[tuple[tuple[int, ...], np.ndarray]],
) -> tuple[np.ndarray, np.ndarray]:
    """Plain and constrained counts of valid integer translates per (x, vector).

    T holds q x values with shape (X, V, m); radii and centers are per
    vector.  Returns int64 arrays of shape (X, V).
    """
    rad = radii[None, :, None]
    cen = centers[None, :, :]
    lo = np.ceil(cen - rad - tol - T).astype(np.int64)
    hi = np.floor(cen + rad + tol - T).astype(np.int64)
    ncand = np.maximum(hi - lo + 1, 0)
    plain = np.prod(ncand, axis=2, dtype=np.int64)
    if mode == "plain":
        return plain, plain

    m = T.shape[2]
    cmax = int(ncand.max(initial=0))
    _check_combo_budget([cmax] * m)

    if mode == "coprime":
        counts = np.ones(plain.shape, dtype=np.int64)
        for i in range(m):
            coord = np.zeros(plain.shape, dtype=np.int64)
            for off in range(cmax):
                valid = off < ncand[:, :, i]
                p = lo[:, :, i] + off
                coord += (valid & (np.gcd(np.abs(p), vec_g[None, :]) == 1)).astype(
                    np.int64
                )
            counts *= coord
        return plain, counts

    counts = np.zeros(plain.shape, dtype=np.int64)
    for offsets in np.ndindex(*([max(cmax, 1)] * m)):
        offs = np.array(offsets, dtype=np.int64)
        valid = np.all(offs[None, None, :] < ncand, axis=2)
        if not valid.any():
            continue
        p = lo + offs[None, None, :]
        cond = valid
        for pcols, gq in part_gs:
            if pcols:
                pg = np.gcd.reduce(np.abs(p[:, :, list(pcols)]), axis=2)
                cond = cond & (np.gcd(pg, gq[None, :]) == 1)
            else:
                cond = cond & (gq[None, :] == 1)
        counts += cond.astype(np.int64)
    return plain, counts


def run_dichotomy(
    config: DichotomyConfig,
    budget: Budget | int | None = None,
    workers: int = 1,
) -> ExperimentRun:
    """Count solution pairs (p, q) with |q| up to each checkpoint, per point.

    For each sampled x and each vector q in the ball, the number of integer
    p with q x + p inside the radius-psi(|q|) ball around y is accumulated,
    both unconstrained and under the configured coprimality mode.  Pairs
    (p, q) and (-p, -q) count separately.  Reproducible from (seed, config)
    at any worker count.
    """
    config.validate()
    dims = config.dims
    budget = as_budget(budget)
    q_max = config.schedule[-1]
    budget.charge(config.x_samples * ball_count(dims.n, q_max))

    out_of_hypothesis = (
        config.mode == "partition"
        and not config.psi.is_nonincreasing()
        and not has_ell(config.partition)
    )

    if config.psi.y is not None:
        y = config.psi.y
    else:
        y = np.random.default_rng((config.seed, 0)).random(dims.m)
    X = np.random.default_rng((config.seed, 1)).random(
        (config.x_samples, dims.n, dims.m)
    )

    vectors = np.concatenate(list(iter_ball(dims.n, q_max)), axis=0)
    norms = np.max(np.abs(vectors), axis=1)
    order = np.argsort(norms, kind="stable")
    vectors = vectors[order]
    norms = norms[order]
    radii = config.psi.radius_array(norms)
    centers = config.psi.center_array(norms, default_center=y)
    buckets = np.searchsorted(config.schedule, norms, side="left")

    vec_g = (
        np.gcd.reduce(np.abs(vectors), axis=1) if config.mode == "coprime" else None
    )
    part_gs: list[tuple[tuple[int, ...], np.ndarray]] = []
    if config.mode == "partition":
        for j in range(config.partition.k):
            qcols = config.partition.qcols(j)
            gq = (
                np.gcd.reduce(np.abs(vectors[:, list(qcols)]), axis=1)
                if qcols
                else np.zeros(len(vectors), dtype=np.int64)
            )
            part_gs.append((config.partition.pcols(j), gq))

    n_ckpts = len(config.schedule)
    x_chunk = 16
    v_chunk = max(1, (1 << 22) // max(x_chunk * dims.m, 1))
    n_xchunks = -(-config.x_samples // x_chunk)

    def one_xchunk(ci: int) -> tuple[np.ndarray, np.ndarray]:
        xs = slice(ci * x_chunk, min((ci + 1) * x_chunk, config.x_samples))
        Xc = X[xs]
        acc_plain = np.zeros((Xc.shape[0], n_ckpts), dtype=np.int64)
        acc_constr = np.zeros((Xc.shape[0], n_ckpts), dtype=np.int64)
        for vstart in range(0, len(vectors), v_chunk):
            sl = slice(vstart, min(vstart + v_chunk, len(vectors)))
            T = np.einsum("vj,xjk->xvk", vectors[sl].astype(float), Xc)
            plain, constr = _pair_counts(
                config.mode,
                T,
                radii[sl],
                centers[sl],
                config.tol,
                vec_g[sl] if vec_g is not None else None,
                [(pcols, gq[sl]) for pcols, gq in part_gs],
            )
            local = buckets[sl]
            ub, starts = np.unique(local, return_index=True)
            acc_plain[:, ub] += np.add.reduceat(plain, starts, axis=1)
            acc_constr[:, ub] += np.add.reduceat(constr, starts, axis=1)
        return np.cumsum(acc_plain, axis=1), np.cumsum(acc_constr, axis=1)

    if workers <= 1 or n_xchunks <= 1:
        results = [one_xchunk(c) for c in range(n_xchunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_xchunk, range(n_xchunks)))
    hits_plain = np.concatenate([r[0] for r in results], axis=0)
    hits_constrained = np.concatenate([r[1] for r in results], axis=0)
    return ExperimentRun(
        config=config,
        y=y,
        hits_plain=hits_plain,
        hits_constrained=hits_constrained,
        out_of_hypothesis=out_of_hypothesis,
        budget_used=budget.used,
    )


# ---------------------------------------------------------------------------
# Report emission


@dataclass
class TableReport:
    """Uniform tabular payload: a name, columns, rows, and the resolved config."""

    name: str
    columns: list[str]
    rows: list[tuple]
    config: dict = field(default_factory=dict)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_text(value, indent: int = 0) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return "null"
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        inner = ",".join(
            f"{json.dumps(str(k))}:{_json_text(v)}" for k, v in value.items()
        )
        return "{" + inner + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_json_text(v) for v in value) + "]"
    return json.dumps(str(value))


def to_table(obj) -> TableReport:
    """Convert a known report object into the uniform tabular payload."""
    if isinstance(obj, TableReport):
        return obj
    if isinstance(obj, SeriesReport):
        rows = []
        for i, q in enumerate(obj.qs):
            rows.append(
                (
                    q,
                    obj.s_kg[i] if obj.s_kg is not None else None,
                    obj.s_ds[i] if obj.s_ds is not None else None,
                    obj.verdict,
                )
            )
        return TableReport(
            name="series",
            columns=["Q", "S_kg", "S_ds", "verdict"],
            rows=rows,
            config=dict(obj.config),
        )
    if isinstance(obj, ExperimentRun):
        rows = []
        for xi in range(obj.hits_plain.shape[0]):
            for i, q in enumerate(obj.config.schedule):
                rows.append(
                    (xi, q, int(obj.hits_plain[xi, i]), int(obj.hits_constrained[xi, i]))
                )
        return TableReport(
            name="dichotomy",
            columns=["x_index", "Q", "hits_plain", "hits_constrained"],
            rows=rows,
            config=obj.describe(),
        )
    if isinstance(obj, BoundReport):
        return TableReport(
            name="bound",
            columns=["q", "exact", "comparator"],
            rows=list(obj.values),
            config={
                "params": obj.params,
                "fitted_constant": obj.fitted_constant,
                "threshold": obj.threshold,
            },
        )
    if isinstance(obj, MeasureEstimate):
        return TableReport(
            name="measure",
            columns=["mean", "std_error", "samples", "seed", "region_volume", "measure"],
            rows=[
                (
                    obj.mean,
                    obj.std_error,
                    obj.samples,
                    obj.seed,
                    obj.region_volume,
                    obj.measure,
                )
            ],
            config={},
        )
    raise TypeError(f"cannot render a report from {type(obj).__name__}")


def summary_table(run: ExperimentRun) -> TableReport:
    """Window summary of a run: new-hit fractions and median counts."""
    return TableReport(
        name="summary",
        columns=["Q", "frac_x_with_new_hits", "median_hits"],
        rows=run.summary_rows(),
        config=run.describe(),
    )


def render_csv(table: TableReport) -> str:
    lines = [f"# {table.name}", f"# config: {_json_text(table.config)}"]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(_format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(table: TableReport) -> str:
    payload = {
        "report": table.name,
        "config": table.config,
        "columns": table.columns,
        "rows": [list(row) for row in table.rows],
    }
    return _json_text(payload) + "\n"


def emit_report(obj, format: str, destination) -> None:
    """Render a report deterministically and write it to the destination.

    Identical inputs produce byte-identical files: field order is fixed and
    floats are printed with 17 significant digits.  Files are written via a
    temporary sibling and atomically renamed, so failed runs leave no
    partial output.  destination "-" writes to stdout.
    """
    table = to_table(obj)
    if format == "csv":
        text = render_csv(table)
    elif format == "json":
        text = render_json(table)
    else:
        raise ValueError(f"unknown report format {format!r}")
    if destination == "-":
        sys.stdout.write(text)
        return
    path = Path(destination)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)
        except OSError:
            pass
        raise OSError(f"failed writing report to {path}: {exc}") from exc
