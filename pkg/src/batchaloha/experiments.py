"""Experiment orchestration: declarative sweeps, figure-reproduction
presets, and CSV emission joining analytic and simulated results.

A config file is plain ``key = value`` text (``#`` comments allowed).
Recognized keys: n, lambda_hat, r, r_grid, M, slots, warmup, seed,
replications, kind, figure, out.  ``M`` accepts ``inf``; ``r_grid``
accepts a comma list (``0.01,0.02``) or a log grid
(``geom:0.01:0.1:8``).

The CSV schema is one metric per row:

    n,lambda_hat,r,M,metric,analytic_value,analytic_corrected,sim_mean,sim_ci,seed,slots

Reals carry 10 significant digits, missing fields stay empty (never 0),
diverging analytic values render as the sentinel ``unbounded``, and M
renders as an integer or ``inf``.  Queue-distribution exports append a
documented extension column ``k`` holding the queue length of per-k rows.
Output bytes are a pure function of (spec, seed).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from . import analytic
from .analytic import NoStableRoot, UnboundedDelay
from .params import BATCH_INF, SystemParams
from .rng import derive_seed
from .sim import SimConfig, replicate
from .stats import InsufficientSamples, compare_qk, estimate_throughput, estimate_waiting

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "ExperimentSpec",
    "FIGURE_IDS",
    "ResultRow",
    "UNBOUNDED",
    "emit_csv",
    "fig3_spec",
    "fig9_spec",
    "fig11_spec",
    "fig12_spec",
    "fig13_spec",
    "figure_spec",
    "parse_config",
    "render_config",
    "render_csv",
    "run_experiment",
]

UNBOUNDED = "unbounded"
CSV_HEADER = "n,lambda_hat,r,M,metric,analytic_value,analytic_corrected,sim_mean,sim_ci,seed,slots"
FIGURE_IDS = ("fig3", "fig9", "fig11", "fig12", "fig13")
KINDS = ("analytic_point", "sim_point", "sweep", "figure")

#: Default r per batch size for the queue-start distribution preset; the
#: source grids do not pin these, so the choice is recorded in every row.
FIG9_R_DEFAULTS = {1: 0.04, 10: 0.05, BATCH_INF: 0.05}
#: Largest r simulated in the unbounded-batch delay preset; beyond it the
#: rows stay analytic-only (mixing times there are beyond desk scale).
FIG13_SIM_RMAX = 0.1

_FIGURE_DEFAULTS = {
    # figure_id: (slots, warmup, replications)
    "fig3": (1_000_000, 10_000, 1),
    "fig9": (10_000_000, 1_000_000, 1),
    "fig11": (1_000_000, 100_000, 2),
    "fig12": (1_000_000, 100_000, 2),
    "fig13": (1_000_000, 100_000, 2),
}


class ConfigError(Exception):
    """Malformed or out-of-range experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative experiment: which points to evaluate and how."""

    kind: str
    grid: tuple[SystemParams, ...]
    slots: int = 1_000_000
    warmup: int = 100_000
    seed: int = 1
    replications: int = 1
    figure_id: str | None = None
    output_path: str | None = None
    saturated: bool = False
    sim_r_max: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "figure" and self.figure_id not in FIGURE_IDS:
            raise ConfigError(f"unknown figure {self.figure_id!r}; expected one of {FIGURE_IDS}")
        if not self.grid:
            raise ConfigError("experiment grid is empty")
        if not (0 <= self.warmup < self.slots):
            raise ConfigError("warmup must satisfy 0 <= warmup < slots")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    """One metric at one grid point; missing values stay None."""

    n: int
    lambda_hat: float | None
    r: float | None
    m: float
    metric: str
    analytic_value: float | str | None = None
    analytic_corrected: float | str | None = None
    sim_mean: float | None = None
    sim_ci: float | None = None
    seed: int | None = None
    slots: int | None = None
    k: int | None = None


# ---------------------------------------------------------------------------
# Config parsing and rendering
# ---------------------------------------------------------------------------

_KEYS = ("n", "lambda_hat", "r", "r_grid", "M", "slots", "warmup", "seed",
         "replications", "kind", "figure", "out")


def _parse_keys(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r} (known: {', '.join(_KEYS)})")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _parse_int(values: dict[str, str], key: str, default: int | None = None) -> int | None:
    if key not in values:
        return default
    try:
        return int(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from exc


def _parse_float(values: dict[str, str], key: str) -> float | None:
    if key not in values:
        return None
    try:
        return float(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from exc


def _parse_batch(values: dict[str, str]) -> float | None:
    if "M" not in values:
        return None
    text = values["M"]
    if text.lower() == "inf":
        return BATCH_INF
    try:
        return float(int(text))
    except ValueError as exc:
        raise ConfigError(f"M: expected a positive integer or 'inf', got {text!r}") from exc


def _parse_r_grid(text: str) -> list[float]:
    if text.startswith("geom:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"r_grid: expected geom:lo:hi:count, got {text!r}")
        try:
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise ConfigError(f"r_grid: bad geom spec {text!r}") from exc
        if not (0.0 < lo < hi) or count < 2:
            raise ConfigError(f"r_grid: need 0 < lo < hi and count >= 2, got {text!r}")
        return [float(v) for v in np.geomspace(lo, hi, count)]
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"r_grid: bad value list {text!r}") from exc


def build_spec(values: dict[str, str], kind: str | None = None,
               figure_id: str | None = None) -> ExperimentSpec:
    """Assemble an ExperimentSpec from parsed config keys."""
    kind = kind or values.get("kind", "analytic_point")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {KINDS}")
    figure_id = figure_id or values.get("figure")
    out = values.get("out")
    seed = _parse_int(values, "seed", 1)
    slots = _parse_int(values, "slots")
    warmup = _parse_int(values, "warmup")
    replications = _parse_int(values, "replications")

    if kind == "figure":
        if figure_id is None:
            raise ConfigError("kind=figure requires a figure id (figure = fig3 ... fig13)")
        for key in ("n", "lambda_hat", "r", "r_grid", "M"):
            if key in values:
                raise ConfigError(
                    f"{key}: figure presets fix the parameter grid; "
                    f"only slots/warmup/seed/replications/out may be overridden"
                )
        return figure_spec(figure_id, slots=slots, warmup=warmup, seed=seed,
                           replications=replications, output_path=out)

    n = _parse_int(values, "n")
    lambda_hat = _parse_float(values, "lambda_hat")
    m = _parse_batch(values)
    if n is None or lambda_hat is None or m is None:
        raise ConfigError(f"kind={kind} requires n, lambda_hat and M")
    if "r" in values and "r_grid" in values:
        raise ConfigError("give either r or r_grid, not both")
    if "r" in values:
        rs = [_parse_float(values, "r")]
    elif "r_grid" in values:
        rs = _parse_r_grid(values["r_grid"])
    else:
        raise ConfigError(f"kind={kind} requires r or r_grid")
    try:
        grid = tuple(SystemParams(n=n, lambda_hat=lambda_hat, r=r, m=m) for r in rs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    slots = slots if slots is not None else 1_000_000
    warmup = warmup if warmup is not None else slots // 10
    return ExperimentSpec(
        kind=kind,
        grid=grid,
        slots=slots,
        warmup=warmup,
        seed=seed,
        replications=replications if replications is not None else 1,
        output_path=out,
    )


def parse_config(text: str) -> ExperimentSpec:
    """Parse config text into a validated ExperimentSpec."""
    return build_spec(_parse_keys(text))


def render_config(spec: ExperimentSpec) -> str:
    """Render a config-expressible spec back to config text.

    Inverse of parse_config: parse_config(render_config(spec)) == spec
    for every spec parse_config can produce.
    """
    lines = [f"kind = {spec.kind}"]
    if spec.kind == "figure":
        lines.append(f"figure = {spec.figure_id}")
    else:
        p = spec.grid[0]
        lines.append(f"n = {p.n}")
        lines.append(f"lambda_hat = {p.lambda_hat!r}")
        lines.append(f"M = {p.batch_label()}")
        if len(spec.grid) == 1:
            lines.append(f"r = {p.r!r}")
        else:
            lines.append("r_grid = " + ",".join(repr(q.r) for q in spec.grid))
    lines.append(f"slots = {spec.slots}")
    lines.append(f"warmup = {spec.warmup}")
    lines.append(f"seed = {spec.seed}")
    lines.append(f"replications = {spec.replications}")
    if spec.output_path:
        lines.append(f"out = {spec.output_path}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Figure presets
# ---------------------------------------------------------------------------

def _preset_scale(figure_id, slots, warmup, replications):
    d_slots, d_warmup, d_reps = _FIGURE_DEFAULTS[figure_id]
    slots = slots if slots is not None else d_slots
    warmup = warmup if warmup is not None else min(d_warmup, slots // 10)
    replications = replications if replications is not None else d_reps
    return slots, warmup, replications


def fig3_spec(n_values=(30, 50), m_values=(1, 2, 3, 5, BATCH_INF), r_points=15,
              slots=None, warmup=None, seed=1, replications=None,
              output_path=None) -> ExperimentSpec:
    """Saturated throughput vs r, one bell curve per batch size.

    The r grid is log-spaced around the throughput peak at r = 1/n and
    contains that point exactly.  It tops out at r = 3/n: beyond that the
    Poisson attempt model visibly departs from the exact binomial one at
    small n, which is the regime the finite-n variant exists for.
    """
    grid = []
    for n in n_values:
        base = np.geomspace(0.15 / n, min(3.0 / n, 0.9), r_points - 1)
        rs = sorted(set(float(v) for v in base) | {1.0 / n})
        for m in m_values:
            for r in rs:
                grid.append(SystemParams(n=n, lambda_hat=0.5, r=r, m=float(m)))
    slots, warmup, replications = _preset_scale("fig3", slots, warmup, replications)
    return ExperimentSpec(kind="figure", figure_id="fig3", grid=tuple(grid),
                          slots=slots, warmup=warmup, seed=seed,
                          replications=replications, output_path=output_path,
                          saturated=True)


def fig9_spec(m_values=(1, 10, BATCH_INF), n=20, lambda_hat=0.3, slots=None,
              warmup=None, seed=1, replications=None, output_path=None) -> ExperimentSpec:
    """Queue length at busy-period starts vs the geometric law."""
    grid = tuple(
        SystemParams(n=n, lambda_hat=lambda_hat, r=FIG9_R_DEFAULTS[m], m=float(m))
        for m in m_values
    )
    slots, warmup, replications = _preset_scale("fig9", slots, warmup, replications)
    return ExperimentSpec(kind="figure", figure_id="fig9", grid=grid, slots=slots,
                          warmup=warmup, seed=seed, replications=replications,
                          output_path=output_path)


def _delay_grid(n_values, lambda_values, m, sim_points):
    """Delay-figure r grid: simulated points inside the bounded-delay
    region plus analytic-only points straddling both endpoints."""
    grid = []
    for n in n_values:
        for lh in lambda_values:
            region = analytic.stable_region(n, lh, m)
            inside = np.geomspace(region.lo * 1.25, region.hi * 0.85, sim_points)
            outside = [region.lo * 0.6, region.lo * 0.9,
                       min(region.hi * 1.15, 0.95), min(region.hi * 1.5, 0.97)]
            rs = sorted(set(float(v) for v in inside) | set(outside))
            grid.extend(SystemParams(n=n, lambda_hat=lh, r=r, m=float(m)) for r in rs)
    return tuple(grid)


def fig11_spec(n_values=(30, 50), lambda_values=(0.1, 0.3), r_points=8,
               slots=None, warmup=None, seed=1, replications=None,
               output_path=None) -> ExperimentSpec:
    """Mean waiting time and bounded-delay region, single-packet batches."""
    grid = _delay_grid(n_values, lambda_values, 1, r_points)
    slots, warmup, replications = _preset_scale("fig11", slots, warmup, replications)
    return ExperimentSpec(kind="figure", figure_id="fig11", grid=grid, slots=slots,
                          warmup=warmup, seed=seed, replications=replications,
                          output_path=output_path)


def fig12_spec(n_values=(30, 50), lambda_values=(0.1, 0.3), r_points=8,
               slots=None, warmup=None, seed=1, replications=None,
               output_path=None) -> ExperimentSpec:
    """Mean waiting time and bounded-delay region, two-packet batches."""
    grid = _delay_grid(n_values, lambda_values, 2, r_points)
    slots, warmup, replications = _preset_scale("fig12", slots, warmup, replications)
    return ExperimentSpec(kind="figure", figure_id="fig12", grid=grid, slots=slots,
                          warmup=warmup, seed=seed, replications=replications,
                          output_path=output_path)


def fig13_spec(n_values=(30, 50), lambda_values=(0.1, 0.3, 0.7), sim_r_points=5,
               analytic_r=(0.15, 0.2, 0.3, 0.5), slots=None, warmup=None, seed=1,
               replications=None, output_path=None) -> ExperimentSpec:
    """Unbounded-batch mean waiting time across the whole r range.

    Points up to FIG13_SIM_RMAX are simulated; larger r stays
    analytic-only.
    """
    rs = sorted(set(float(v) for v in np.geomspace(0.01, FIG13_SIM_RMAX, sim_r_points))
                | set(analytic_r))
    grid = tuple(
        SystemParams(n=n, lambda_hat=lh, r=r, m=BATCH_INF)
        for n in n_values for lh in lambda_values for r in rs
    )
    slots, warmup, replications = _preset_scale("fig13", slots, warmup, replications)
    return ExperimentSpec(kind="figure", figure_id="fig13", grid=grid, slots=slots,
                          warmup=warmup, seed=seed, replications=replications,
                          output_path=output_path, sim_r_max=FIG13_SIM_RMAX)


def figure_spec(figure_id: str, slots=None, warmup=None, seed=None,
                replications=None, output_path=None) -> ExperimentSpec:
    """Build a figure preset by id with optional scale overrides."""
    builders = {"fig3": fig3_spec, "fig9": fig9_spec, "fig11": fig11_spec,
                "fig12": fig12_spec, "fig13": fig13_spec}
    if figure_id not in builders:
        raise ConfigError(f"unknown figure {figure_id!r}; expected one of {FIGURE_IDS}")
    return builders[figure_id](slots=slots, warmup=warmup,
                               seed=seed if seed is not None else 1,
                               replications=replications, output_path=output_path)


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

def _point_seed(spec: ExperimentSpec, index: int) -> int:
    return derive_seed(spec.seed, index)


def _sim_config(spec: ExperimentSpec, params: SystemParams, index: int,
                saturated: bool = False) -> SimConfig:
    return SimConfig(
        params=params,
        total_slots=spec.slots,
        warmup_slots=spec.warmup,
        seed=_point_seed(spec, index),
        saturated=saturated,
        replications=spec.replications,
    )


def _wait_analytics(params: SystemParams) -> tuple[float | str, float | str | None]:
    """Analytic mean wait and, for unbounded batches, its corrected form."""
    if params.infinite_batch:
        plain = analytic.mean_waiting_time_batch_inf(params, finite_n_correction=False)
        corrected = analytic.mean_waiting_time_batch_inf(params, finite_n_correction=True)
        return plain, corrected
    try:
        return analytic.mean_waiting_time(params).total_wait, None
    except (UnboundedDelay, NoStableRoot):
        return UNBOUNDED, None


def _stable_rows(grid) -> list[ResultRow]:
    rows = []
    seen = set()
    for p in grid:
        key = (p.n, p.lambda_hat, p.m)
        if key in seen:
            continue
        seen.add(key)
        region = analytic.stable_region(p.n, p.lambda_hat, p.m)
        lo = None if region.empty else region.lo
        hi = None if region.empty else region.hi
        rows.append(ResultRow(n=p.n, lambda_hat=p.lambda_hat, r=None, m=p.m,
                              metric="stable_lo", analytic_value=lo))
        rows.append(ResultRow(n=p.n, lambda_hat=p.lambda_hat, r=None, m=p.m,
                              metric="stable_hi", analytic_value=hi))
    return rows


def _wait_row(spec: ExperimentSpec, params: SystemParams, index: int,
              simulate: bool) -> ResultRow:
    value, corrected = _wait_analytics(params)
    sim_mean = sim_ci = None
    seed = slots = None
    if simulate and value != UNBOUNDED:
        seed = _point_seed(spec, index)
        slots = spec.slots
        try:
            est = estimate_waiting(replicate(_sim_config(spec, params, index)))
            sim_mean, sim_ci = est.mean, est.ci_half_width
        except InsufficientSamples:
            pass
    return ResultRow(n=params.n, lambda_hat=params.lambda_hat, r=params.r,
                     m=params.m, metric="wait_mean", analytic_value=value,
                     analytic_corrected=corrected, sim_mean=sim_mean,
                     sim_ci=sim_ci, seed=seed, slots=slots)


def _rows_points(spec: ExperimentSpec) -> list[ResultRow]:
    simulate = spec.kind == "sim_point"
    rows = _stable_rows(spec.grid) if spec.kind == "sweep" else []
    rows.extend(_wait_row(spec, p, i, simulate) for i, p in enumerate(spec.grid))
    return rows


def _rows_fig3(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for i, p in enumerate(spec.grid):
        sat = analytic.saturated_throughput(p)
        sat_n = analytic.saturated_throughput_finite_n(p)
        sim_mean = sim_ci = None
        seed = slots = None
        if not p.infinite_batch:
            seed = _point_seed(spec, i)
            slots = spec.slots
            est = estimate_throughput(replicate(_sim_config(spec, p, i, saturated=True)))
            sim_mean, sim_ci = est.mean, est.ci_half_width
        rows.append(ResultRow(n=p.n, lambda_hat=None, r=p.r, m=p.m,
                              metric="throughput_sat", analytic_value=sat,
                              analytic_corrected=sat_n, sim_mean=sim_mean,
                              sim_ci=sim_ci, seed=seed, slots=slots))
    return rows


def _rows_fig9(spec: ExperimentSpec) -> list[ResultRow]:
    rows = []
    for i, p in enumerate(spec.grid):
        sol = analytic.solve_attempt_rate(p)
        laws = analytic.queue_laws(p, sol.g)
        seed = _point_seed(spec, i)
        metrics = replicate(_sim_config(spec, p, i))
        comparison = compare_qk(metrics, laws)
        rows.append(ResultRow(n=p.n, lambda_hat=p.lambda_hat, r=p.r, m=p.m,
                              metric="qk_tv", sim_mean=comparison.tv_distance,
                              seed=seed, slots=spec.slots))
        for k in range(1, comparison.support_checked + 1):
            rows.append(ResultRow(
                n=p.n, lambda_hat=p.lambda_hat, r=p.r, m=p.m, metric="qk",
                analytic_value=float(comparison.reference[k - 1]),
                sim_mean=float(comparison.empirical[k - 1]),
                seed=seed, slots=spec.slots, k=k,
            ))
    return rows


def _rows_delay_figure(spec: ExperimentSpec) -> list[ResultRow]:
    rows = _stable_rows(spec.grid)
    for i, p in enumerate(spec.grid):
        simulate = spec.sim_r_max is None or p.r <= spec.sim_r_max
        rows.append(_wait_row(spec, p, i, simulate))
    return rows


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Evaluate every grid point of a spec into result rows.

    Rows follow grid order; solver failures become the ``unbounded``
    sentinel on the affected row instead of aborting the sweep.  Output
    is a pure function of (spec, seed).
    """
    if spec.kind == "figure":
        if spec.figure_id == "fig3":
            return _rows_fig3(spec)
        if spec.figure_id == "fig9":
            return _rows_fig9(spec)
        return _rows_delay_figure(spec)
    return _rows_points(spec)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if value == BATCH_INF:
            return "inf"
        return format(value, ".10g")
    raise TypeError(f"cannot render CSV cell {value!r}")


def _m_cell(m: float) -> str:
    return "inf" if m == BATCH_INF else str(int(m))


def render_csv(rows: list[ResultRow]) -> str:
    """Render rows to CSV text (LF endings, deterministic bytes)."""
    with_k = any(row.k is not None for row in rows)
    header = CSV_HEADER + (",k" if with_k else "")
    out = io.StringIO()
    out.write(header + "\n")
    for row in rows:
        cells = [
            str(row.n),
            _cell(row.lambda_hat),
            _cell(row.r),
            _m_cell(row.m),
            row.metric,
            _cell(row.analytic_value),
            _cell(row.analytic_corrected),
            _cell(row.sim_mean),
            _cell(row.sim_ci),
            _cell(row.seed),
            _cell(row.slots),
        ]
        if with_k:
            cells.append(_cell(row.k))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def emit_csv(rows: list[ResultRow], path: str) -> None:
    """Write rows to path; byte-identical output for identical inputs."""
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(rows))


def with_overrides(spec: ExperimentSpec, seed: int | None = None,
                   output_path: str | None = None) -> ExperimentSpec:
    """Copy a spec with CLI-level overrides applied."""
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if output_path is not None:
        changes["output_path"] = output_path
    return replace(spec, **changes) if changes else spec
