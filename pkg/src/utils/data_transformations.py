import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import polars as pl

# columns measured in nats; converted only when a table is written in bits
NAT_COLUMNS = (
    "raw", "value", "lambda_star", "integral", "standard_error", "ess_sup",
    "quantile_value", "upper_mean", "log_count",
)


def sequence_frame(sequences: Sequence) -> pl.DataFrame:
    """
    Long-format table of entropy sequences, one row per (series, n)
    """
    if not sequences:
        raise ValueError("no sequences to tabulate")
    rows = [
        {
            "series": seq.label,
            "quantity": seq.quantity,
            "normalization": seq.normalization,
            "n": sample.n,
            "raw": sample.raw,
            "value": sample.normalized,
            "coords": sample.coords_size,
        }
        for seq in sequences
        for sample in seq.samples
    ]
    return pl.DataFrame(rows).sort(["series", "normalization", "n"], maintain_order=True)


def count_frame(records: Iterable) -> pl.DataFrame:
    """
    CountRecord table; `count` is the exact integer as text, `log_count` its log in nats
    """
    rows = [
        {
            "n": r.n,
            "epsilon": r.epsilon,
            "quantity": r.quantity,
            "count": str(r.count),
            "log_count": math.log(r.count) if r.count > 0 else float("-inf"),
            "method": r.method,
            "bound_direction": r.bound_direction or "",
        }
        for r in records
    ]
    schema = {
        "n": pl.Int64, "epsilon": pl.Float64, "quantity": pl.Utf8, "count": pl.Utf8,
        "log_count": pl.Float64, "method": pl.Utf8, "bound_direction": pl.Utf8,
    }
    return pl.DataFrame(rows, schema=schema)


def scale_frame(results: Iterable) -> pl.DataFrame:
    """
    Per-scale critical exponents with their bracketing weights
    """
    rows = [
        {
            "construction": r.construction,
            "N": r.N,
            "epsilon": r.epsilon if r.epsilon is not None else float("nan"),
            "lambda_star": r.lambda_star,
            "weight_below": r.weight_below,
            "weight_above": r.weight_above,
            "saturated": r.saturated,
            "upper_bound": r.upper_bound,
        }
        for r in results
    ]
    return pl.DataFrame(rows)


def local_point_frame(records: Iterable) -> pl.DataFrame:
    rows = [
        {"point_id": point_id, "n": n, "epsilon": eps, "value": value}
        for point_id, record in enumerate(records)
        for eps, column in zip(record.epsilons, record.values)
        for n, value in enumerate(column, start=1)
    ]
    return pl.DataFrame(rows, schema={
        "point_id": pl.Int64, "n": pl.Int64, "epsilon": pl.Float64, "value": pl.Float64,
    })


def local_summary_frame(summary) -> pl.DataFrame:
    return pl.DataFrame([{
        "points": len(summary.values),
        "integral": summary.integral,
        "standard_error": summary.standard_error,
        "ess_sup": summary.ess_sup,
        "quantile": summary.quantile,
        "quantile_value": summary.quantile_value,
        "upper_mean": summary.upper_mean,
    }])


def suite_frame(result) -> pl.DataFrame:
    rows = [
        {
            "name": c.name,
            "family": c.family,
            "expected": float(c.expected),
            "observed": float(c.observed),
            "tolerance": float(c.tolerance),
            "passed": c.passed,
            "provenance": c.provenance,
        }
        for c in result.checks
    ]
    return pl.DataFrame(rows, schema={
        "name": pl.Utf8, "family": pl.Utf8, "expected": pl.Float64, "observed": pl.Float64,
        "tolerance": pl.Float64, "passed": pl.Boolean, "provenance": pl.Utf8,
    })


def point_table(fa) -> pl.DataFrame:
    """
    Points of a finite approximation with their nearest-neighbour distance
    """
    if fa.size > 1:
        zero_shift = tuple((0,) * layer.dim for layer in fa.system.layers)
        level = fa.first_difference(zero_shift, depth=fa.L).astype(np.int32)
        np.fill_diagonal(level, -1)
        nearest = np.power(2.0, -level.max(axis=1).astype(float))
    else:
        nearest = np.array([float("inf")])
    return pl.DataFrame({
        "point_id": np.arange(fa.size),
        "pattern": ["".join(str(int(s)) for s in row) for row in fa.patterns],
        "nearest": nearest,
    })


def to_units(df: pl.DataFrame, units: str = "nats") -> pl.DataFrame:
    """
    Convert entropy-valued columns from nats to bits
    """
    if units == "nats":
        return df
    if units != "bits":
        raise ValueError(f"unknown units {units!r}")
    columns = [c for c in df.columns if c in NAT_COLUMNS and df[c].dtype.is_float()]
    return df.with_columns([(pl.col(c) / math.log(2)).alias(c) for c in columns])


def write_table(df: pl.DataFrame, path: Path, fmt: str = "csv",
                header: Optional[Dict[str, Any]] = None, units: str = "nats") -> Path:
    """
    Write a table with `# key=value` provenance lines (CSV) or a meta block (JSON)
    """
    header = dict(header or {})
    header.setdefault("units", units)
    df = to_units(df, units)
    path = Path(path).with_suffix(f".{fmt}")
    path.parent.mkdir(parents=True, exist_ok=True)

    if fmt == "csv":
        lines = [f"# {key}={value}" for key, value in header.items()]
        path.write_text("\n".join(lines) + "\n" + df.write_csv())
    elif fmt == "json":
        document = {"meta": {k: str(v) for k, v in header.items()}, "rows": df.to_dicts()}
        path.write_text(json.dumps(document, indent=2, default=str) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_table(path: Path) -> pl.DataFrame:
    return pl.read_csv(path, comment_prefix="#")
