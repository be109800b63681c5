"""CSV reading and schema validation for experiment result files.

The expected schema is the experiment runner's contract:

    n,lambda_hat,r,M,metric,analytic_value,analytic_corrected,sim_mean,sim_ci,seed,slots[,k]

Empty cells mean "not computed"; analytic cells may carry the sentinel
``unbounded``; M is an integer or ``inf``; the optional trailing ``k``
column appears in queue-distribution exports.  Violations raise
SchemaError with row and column diagnostics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

__all__ = ["CSV_COLUMNS", "METRICS", "Row", "SchemaError", "read_rows", "UNBOUNDED"]

CSV_COLUMNS = ("n", "lambda_hat", "r", "M", "metric", "analytic_value",
               "analytic_corrected", "sim_mean", "sim_ci", "seed", "slots")
METRICS = {"throughput_sat", "wait_mean", "qk_tv", "qk", "stable_lo", "stable_hi"}
UNBOUNDED = "unbounded"


class SchemaError(Exception):
    """The CSV does not conform to the experiment result schema."""


@dataclass(frozen=True)
class Row:
    n: int
    lambda_hat: float | None
    r: float | None
    m: str                       # "1", "2", ... or "inf"
    metric: str
    analytic_value: float | str | None   # float, "unbounded", or None
    analytic_corrected: float | str | None
    sim_mean: float | None
    sim_ci: float | None
    seed: int | None
    slots: int | None
    k: int | None = None

    @property
    def m_sort_key(self) -> float:
        return float("inf") if self.m == "inf" else float(self.m)


def _parse_optional_float(cell: str, where: str, allow_sentinel: bool = False):
    if cell == "":
        return None
    if allow_sentinel and cell == UNBOUNDED:
        return UNBOUNDED
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(f"{where}: expected a number, got {cell!r}") from None


def _parse_optional_int(cell: str, where: str):
    if cell == "":
        return None
    try:
        return int(cell)
    except ValueError:
        raise SchemaError(f"{where}: expected an integer, got {cell!r}") from None


def read_rows(path: str) -> list[Row]:
    """Read and validate an experiment CSV; raises SchemaError on mismatch."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty (missing header)") from None
        base = list(CSV_COLUMNS)
        if header == base:
            has_k = False
        elif header == base + ["k"]:
            has_k = True
        else:
            raise SchemaError(
                f"{path}: bad header {','.join(header)!r}; expected "
                f"{','.join(CSV_COLUMNS)!r} with optional trailing ',k'"
            )
        width = len(base) + (1 if has_k else 0)

        rows: list[Row] = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != width:
                raise SchemaError(
                    f"{path}: row {lineno}: expected {width} columns, got {len(record)}"
                )
            where = f"{path}: row {lineno}"
            metric = record[4]
            if metric not in METRICS:
                raise SchemaError(f"{where}, column 'metric': unknown metric {metric!r}")
            m = record[3]
            if m != "inf":
                try:
                    int(m)
                except ValueError:
                    raise SchemaError(
                        f"{where}, column 'M': expected an integer or 'inf', got {m!r}"
                    ) from None
            try:
                n = int(record[0])
            except ValueError:
                raise SchemaError(f"{where}, column 'n': expected an integer, got {record[0]!r}") from None
            rows.append(Row(
                n=n,
                lambda_hat=_parse_optional_float(record[1], f"{where}, column 'lambda_hat'"),
                r=_parse_optional_float(record[2], f"{where}, column 'r'"),
                m=m,
                metric=metric,
                analytic_value=_parse_optional_float(
                    record[5], f"{where}, column 'analytic_value'", allow_sentinel=True),
                analytic_corrected=_parse_optional_float(
                    record[6], f"{where}, column 'analytic_corrected'", allow_sentinel=True),
                sim_mean=_parse_optional_float(record[7], f"{where}, column 'sim_mean'"),
                sim_ci=_parse_optional_float(record[8], f"{where}, column 'sim_ci'"),
                seed=_parse_optional_int(record[9], f"{where}, column 'seed'"),
                slots=_parse_optional_int(record[10], f"{where}, column 'slots'"),
                k=_parse_optional_int(record[11], f"{where}, column 'k'") if has_k else None,
            ))
    if not rows:
        raise SchemaError(f"{path}: no data rows below the header")
    return rows
