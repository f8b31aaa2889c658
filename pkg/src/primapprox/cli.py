"""Command-line surface: sieve tables, lemma-scale checks, measures, series, runs.

Exit codes: 0 success, 2 usage or validation failure, 3 resource limit,
4 I/O failure.  Identical argv and seeds produce byte-identical output files
at any parallelism degree; validation failures never leave partial files.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import arith, experiment, limsup, partition as partition_mod
from .arith import BoundReport, build_sieve, cached_sieve, lower_bound_report
from .experiment import (
    DichotomyConfig,
    TableReport,
    combine_series,
    emit_report,
    geometric_checkpoints,
    psi_make,
    run_dichotomy,
    series_ds,
    series_kg,
    summary_table,
)
from .limsup import BoxUnion, ball_at, mc_measure, qi_ratio
from .partition import Dims, full_box, parse_partition, random_box
from .shells import DEFAULT_BUDGET, Budget, ResourceLimitError

EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_IO = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ResourceLimitError as exc:
            _fail(EXIT_RESOURCE, str(exc))
        except (ValueError, TypeError) as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, str(exc))

    return wrapper


def _apply_config_file(ctx: click.Context, params: dict) -> dict:
    """Overlay values from --config for parameters left at their defaults."""
    config_path = params.pop("config", None)
    if not config_path:
        return params
    try:
        with open(config_path) as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config file {config_path}: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ValueError("config file must hold a JSON object")
    from click.core import ParameterSource

    for key, value in overrides.items():
        if key not in params:
            raise ValueError(f"config file sets unknown parameter {key!r}")
        if ctx.get_parameter_source(key) == ParameterSource.DEFAULT:
            params[key] = value
    return params


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_psi(spec: str, dims: Dims, y: np.ndarray | None):
    head, _, rest = spec.partition(":")
    family = head.strip()
    if family.lower() in ("table",):
        path = rest
        if not path:
            raise ValueError("table psi needs a file: table:<path>")
        try:
            with open(path) as fh:
                values = [float(line.strip()) for line in fh if line.strip()]
        except OSError as exc:
            raise ValueError(f"cannot read psi table {path}: {exc}") from exc
        return psi_make("table", None, dims, y=y, table_values=values)
    params = [float(tok) for tok in rest.split(":") if tok.strip() != ""] if rest else None
    return psi_make(family, params, dims, y=y)


def _parse_region(specs: tuple[str, ...], dim: int) -> BoxUnion:
    if not specs:
        return BoxUnion.full_cube(dim)
    lows, highs = [], []
    for spec in specs:
        try:
            lo_text, hi_text = spec.split(":")
            lo = _parse_floats(lo_text)
            hi = _parse_floats(hi_text)
        except ValueError as exc:
            raise ValueError(
                f"bad region box {spec!r}; expected 'l1,l2,..:h1,h2,..'"
            ) from exc
        if len(lo) != dim or len(hi) != dim:
            raise ValueError(f"region box {spec!r} must have {dim} coordinates")
        lows.append(lo)
        highs.append(hi)
    return BoxUnion(lows=np.array(lows), highs=np.array(highs))


def _resolve_mode(mode: str) -> str:
    return {"coprime-per-coordinate": "coprime"}.get(mode, mode)


_workers_option = click.option(
    "--workers",
    type=int,
    default=lambda: os.cpu_count() or 1,
    help="Parallelism degree; results are identical at any value.",
)
_out_option = click.option("--out", default="-", help="Output path, or - for stdout.")
_format_option = click.option(
    "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv"
)
_budget_option = click.option(
    "--budget", type=int, default=DEFAULT_BUDGET, show_default=True,
    help="Inner-loop operation budget.",
)
_config_option = click.option(
    "--config", type=click.Path(), default=None,
    help="JSON file of parameter defaults; explicit flags win.",
)


@click.group()
def main() -> None:
    """Primitivity-constrained approximation: counts, measures, experiments."""


@main.command()
@click.option("--limit", type=int, required=True)
@_out_option
@_format_option
@_guarded
def sieve(limit: int, out: str, fmt: str) -> None:
    """Emit the phi/mu/smallest-prime-factor table for 1..limit."""
    table = build_sieve(limit)
    rows = [
        (
            q,
            int(table.phi[q]),
            int(table.mu[q]),
            int(table.smallest_prime_factor[q]),
        )
        for q in range(1, limit + 1)
    ]
    report = TableReport(
        name="sieve",
        columns=["q", "phi", "mu", "smallest_prime_factor"],
        rows=rows,
        config={"limit": limit},
    )
    emit_report(report, fmt, out)


LEMMA_NAMES = (
    "primitive-ball",
    "coprime-shell",
    "gcd-sum",
    "dirichlet",
    "niederreiter",
    "primitive-box",
    "funny",
    "counting",
)


@main.command()
@click.argument("name")
@click.option("--d", type=int, default=2, help="Ambient dimension for vector counts.")
@click.option("--m", type=int, default=1)
@click.option("--n", type=int, default=2)
@click.option("--partition", "partition_spec", default=None)
@click.option("--q-min", type=int, default=1)
@click.option("--q-max", type=int, required=True)
@click.option("--step", type=int, default=1)
@click.option("--gamma", default="1", help="Window width as a rational, e.g. 1/2.")
@click.option(
    "--mode", type=click.Choice(["plain", "coprime_to_q"]), default="plain",
    help="Variant of the gcd sum.",
)
@click.option("--trials", type=int, default=20, help="Random placements to test.")
@click.option("--seed", type=int, default=0)
@_budget_option
@_out_option
@_format_option
@_guarded
def lemma(
    name: str,
    d: int,
    m: int,
    n: int,
    partition_spec: str | None,
    q_min: int,
    q_max: int,
    step: int,
    gamma: str,
    mode: str,
    trials: int,
    seed: int,
    budget: int,
    out: str,
    fmt: str,
) -> None:
    """Scan an asserted counting bound and report its empirical constant."""
    if name not in LEMMA_NAMES:
        raise click.UsageError(
            f"unknown lemma {name!r}; valid names: {', '.join(LEMMA_NAMES)}"
        )
    if q_max < q_min or q_min < 1 or step < 1:
        raise ValueError("need 1 <= q-min <= q-max and step >= 1")
    budget_obj = Budget(limit=budget)
    qs = list(range(q_min, q_max + 1, step))
    gamma_frac = Fraction(gamma)
    sieve_table = cached_sieve(q_max)
    report: BoundReport

    if name == "primitive-ball":
        rows = [
            (q, float(arith.count_primitive_ball(d, q)), float(q**d)) for q in qs
        ]
        report = lower_bound_report(f"d={d}", rows)
    elif name == "coprime-shell":
        rows = [
            (
                q,
                float(arith.count_coprime_shell(d, q)),
                float(sieve_table.phi[q]) if d == 1 else float(q**d),
            )
            for q in qs
        ]
        report = lower_bound_report(f"d={d}", rows)
    elif name == "gcd-sum":
        rows = [
            (
                q,
                float(arith.sum_phi_gcd_ball(d, q, mode, sieve_table)),
                float(q**d),
            )
            for q in qs
        ]
        report = lower_bound_report(f"d={d}, mode={mode}", rows)
    elif name == "dirichlet":
        rows = []
        for q in qs:
            lhs, rhs = arith.dirichlet_identity_check(q, sieve_table)
            if lhs != rhs:
                raise RuntimeError(f"identity failed at q={q}: {lhs} != {rhs}")
            rows.append((q, float(lhs), float(rhs)))
        report = lower_bound_report("divisor identity", rows)
    elif name == "niederreiter":
        report = partition_mod.niederreiter_threshold(
            gamma_frac, q_max, trials, seed=seed, sieve=sieve_table
        )
    elif name == "primitive-box":
        rng = np.random.default_rng((seed, 0x60))
        rows = []
        for q in qs:
            counts = [
                partition_mod.count_primitive_box(
                    d, random_box(d, gamma_frac, q, rng), budget_obj
                )
                for _ in range(max(trials, 1))
            ]
            rows.append((q, float(min(counts)), float(gamma_frac) ** d * q**d))
        report = lower_bound_report(f"d={d}, gamma={gamma_frac}", rows)
    elif name == "funny":
        dims = Dims(m=m, n=n)
        part = (
            parse_partition(dims, partition_spec)
            if partition_spec
            else partition_mod.trivial_partition(dims)
        )
        ell = partition_mod.has_ell(part)
        rows = []
        for q in qs:
            value = float(partition_mod.funny_sum(part, q, sieve_table, budget_obj))
            comp = (
                float(q ** (n - 1))
                if ell
                else float(q ** (n - 2)) * float(sieve_table.phi[q])
            )
            rows.append((q, value, comp))
        report = lower_bound_report(
            f"m={m}, n={n}, partition={part.spec_string()}, has_ell={ell}", rows
        )
    else:  # counting
        dims = Dims(m=m, n=n)
        part = (
            parse_partition(dims, partition_spec)
            if partition_spec
            else partition_mod.trivial_partition(dims)
        )
        ell = partition_mod.has_ell(part)
        rng = np.random.default_rng((seed, 0x61))
        alphas = None
        rows = []
        for q in qs:
            if alphas is None:
                box = random_box(m, gamma_frac, q, rng)
                alphas = box.alphas
            else:
                box = partition_mod.make_box(
                    alphas, [a + gamma_frac for a in alphas], q
                )
            value = float(
                partition_mod.counting_sum(part, q, box, sieve_table, budget_obj)
            )
            comp = float(gamma_frac) ** m * (
                float(q ** (m + n - 1))
                if ell
                else float(q ** (m + n - 2)) * float(sieve_table.phi[q])
            )
            rows.append((q, value, comp))
        report = lower_bound_report(
            f"m={m}, n={n}, partition={part.spec_string()}, gamma={gamma_frac}, "
            f"has_ell={ell}",
            rows,
        )
    emit_report(report, fmt, out)
    click.echo(f"budget used: {budget_obj.used}", err=True)


@main.command()
@click.option("--set", "set_kind", type=click.Choice(["A", "A_pi", "A_prime"]), default="A")
@click.option("--m", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--q", "q_text", required=True, help="Integer vector, comma-separated.")
@click.option("--radius", type=float, required=True)
@click.option("--center", default=None, help="Ball center, comma-separated; default 0.")
@click.option("--partition", "partition_spec", default=None)
@click.option(
    "--region-box", "region_boxes", multiple=True,
    help="Region box 'l1,..:h1,..'; repeatable; default the full cube.",
)
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--seed", type=int, default=0)
@_workers_option
@_config_option
@_out_option
@_format_option
@click.pass_context
@_guarded
def measure(
    ctx: click.Context,
    **params,
) -> None:
    """Monte Carlo measure of a hitting set within a region."""
    p = _apply_config_file(ctx, params)
    dims = Dims(m=p["m"], n=p["n"])
    qvec = _parse_ints(p["q_text"])
    if len(qvec) != dims.n:
        raise ValueError(f"--q needs {dims.n} coordinates")
    center = _parse_floats(p["center"]) if p["center"] else [0.0] * dims.m
    ball = ball_at(center, p["radius"])
    part = None
    if p["set_kind"] == "A_pi":
        if not p["partition_spec"]:
            raise ValueError("--set A_pi requires --partition")
        part = parse_partition(dims, p["partition_spec"])
    elif p["partition_spec"]:
        raise ValueError("--partition only applies to --set A_pi")
    region = _parse_region(tuple(p["region_boxes"]), dims.n * dims.m)
    est = mc_measure(
        p["set_kind"],
        qvec,
        ball,
        region,
        p["samples"],
        p["seed"],
        partition=part,
        workers=p["workers"],
    )
    exact_reference = limsup.measure_A_exact(qvec, ball)
    report = TableReport(
        name="measure",
        columns=["mean", "std_error", "measure", "exact_unconstrained", "samples"],
        rows=[(est.mean, est.std_error, est.measure, exact_reference, est.samples)],
        config={
            "set": p["set_kind"],
            "m": dims.m,
            "n": dims.n,
            "q": qvec,
            "radius": p["radius"],
            "center": center,
            "partition": part.spec_string() if part else None,
            "region_volume": region.volume,
            "samples": p["samples"],
            "seed": p["seed"],
        },
    )
    emit_report(report, p["fmt"], p["out"])


@main.command()
@click.option("--set", "set_kind", type=click.Choice(["A", "A_pi", "A_prime"]), default="A")
@click.option("--m", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--psi", "psi_spec", required=True, help="family:params, e.g. power:1:2.")
@click.option("--y", "y_text", default=None, help="Shift vector; default 0.")
@click.option("--partition", "partition_spec", default=None)
@click.option("--q-list", default="10,20,30", show_default=True)
@click.option("--samples", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0)
@_budget_option
@_workers_option
@_config_option
@_out_option
@_format_option
@click.pass_context
@_guarded
def qi(ctx: click.Context, **params) -> None:
    """Quasi-independence ratio (squared mean over second moment of hit counts)."""
    p = _apply_config_file(ctx, params)
    dims = Dims(m=p["m"], n=p["n"])
    y = _parse_floats(p["y_text"]) if p["y_text"] else [0.0] * dims.m
    psi = _parse_psi(p["psi_spec"], dims, np.array(y))
    part = None
    if p["set_kind"] == "A_pi":
        if not p["partition_spec"]:
            raise ValueError("--set A_pi requires --partition")
        part = parse_partition(dims, p["partition_spec"])
    elif p["partition_spec"]:
        raise ValueError("--partition only applies to --set A_pi")
    budget_obj = Budget(limit=p["budget"])
    rows = []
    for Q in _parse_ints(p["q_list"]):
        ratio = qi_ratio(
            p["set_kind"],
            part,
            psi,
            Q,
            p["samples"],
            p["seed"],
            workers=p["workers"],
            budget=budget_obj,
        )
        rows.append((Q, ratio))
    report = TableReport(
        name="qi",
        columns=["Q", "ratio"],
        rows=rows,
        config={
            "set": p["set_kind"],
            "m": dims.m,
            "n": dims.n,
            "psi": psi.describe(),
            "partition": part.spec_string() if part else None,
            "samples": p["samples"],
            "seed": p["seed"],
        },
    )
    emit_report(report, p["fmt"], p["out"])
    click.echo(f"budget used: {budget_obj.used}", err=True)


@main.command()
@click.option("--psi", "psi_spec", required=True)
@click.option("--m", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--q-max", type=int, required=True)
@click.option(
    "--series", "which", type=click.Choice(["kg", "ds", "both"]), default="both",
    show_default=True, help="Which sum to evaluate; verdict follows the choice "
    "(kg when both).",
)
@_config_option
@_out_option
@_format_option
@click.pass_context
@_guarded
def series(ctx: click.Context, **params) -> None:
    """Partial sums of the governing series with a divergence verdict."""
    p = _apply_config_file(ctx, params)
    dims = Dims(m=p["m"], n=p["n"])
    psi = _parse_psi(p["psi_spec"], dims, None)
    Q = p["q_max"]
    which = p["which"]
    ckpts = geometric_checkpoints(Q)
    if which == "kg":
        report = series_kg(psi, Q, checkpoints=ckpts)
    elif which == "ds":
        report = series_ds(psi, Q, checkpoints=ckpts)
    else:
        report = combine_series(
            series_kg(psi, Q, checkpoints=ckpts),
            series_ds(psi, Q, checkpoints=ckpts),
            verdict_from="kg",
        )
    emit_report(report, p["fmt"], p["out"])


@main.command()
@click.option(
    "--mode",
    type=click.Choice(["plain", "partition", "coprime-per-coordinate", "coprime"]),
    default="plain",
    show_default=True,
)
@click.option("--m", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--partition", "partition_spec", default=None)
@click.option("--psi", "psi_spec", required=True)
@click.option("--y", "y_text", default=None, help="Shift; default sampled from seed.")
@click.option("--q-max", type=int, required=True)
@click.option(
    "--schedule", "schedule_text", default=None,
    help="Explicit checkpoints; default geometric with --window-factor.",
)
@click.option("--window-factor", type=float, default=10.0, show_default=True)
@click.option("--x-samples", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--allow-conjecture", is_flag=True, default=False,
              help="Permit coprime mode with n <= 2 (conjectural regime).")
@click.option("--summary-out", default=None, help="Also write the window summary here.")
@_budget_option
@_workers_option
@_config_option
@_out_option
@_format_option
@click.pass_context
@_guarded
def run(ctx: click.Context, **params) -> None:
    """Hit-counting dichotomy run over sampled points."""
    p = _apply_config_file(ctx, params)
    dims = Dims(m=p["m"], n=p["n"])
    y = np.array(_parse_floats(p["y_text"])) if p["y_text"] else None
    psi = _parse_psi(p["psi_spec"], dims, y)
    mode = _resolve_mode(p["mode"])
    part = None
    if mode == "partition":
        if not p["partition_spec"]:
            raise ValueError("partition mode requires --partition")
        part = parse_partition(dims, p["partition_spec"])
    elif p["partition_spec"]:
        raise ValueError("--partition only applies to --mode partition")
    if p["schedule_text"]:
        schedule = _parse_ints(p["schedule_text"])
    else:
        schedule = geometric_checkpoints(p["q_max"], factor=p["window_factor"])
    config = DichotomyConfig(
        dims=dims,
        psi=psi,
        mode=mode,
        schedule=schedule,
        x_samples=p["x_samples"],
        seed=p["seed"],
        partition=part,
        allow_conjecture=p["allow_conjecture"],
    )
    config.validate()
    result = run_dichotomy(config, budget=Budget(limit=p["budget"]), workers=p["workers"])
    emit_report(result, p["fmt"], p["out"])
    if p["summary_out"]:
        emit_report(summary_table(result), p["fmt"], p["summary_out"])
    if result.out_of_hypothesis:
        click.echo(
            "note: non-monotone radii without a size-3 part touching the "
            "q-coordinates; run labeled out-of-hypothesis",
            err=True,
        )
    click.echo(f"budget used: {result.budget_used}", err=True)


if __name__ == "__main__":
    main()
