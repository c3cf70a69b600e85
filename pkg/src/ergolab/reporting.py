"""Experiment reports: canonical JSON plus fixed-column CSV series."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping


def jsonable(value: Any) -> Any:
    """Recursively convert result values to JSON-stable types.

    Fractions become "p/q" strings so reports stay exact; floats pass
    through (repr round-trips bit-exactly).
    """
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float, str)):
        return value
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if hasattr(value, "_asdict"):
        return jsonable(value._asdict())
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def render_report(report: Mapping[str, Any]) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(report: Mapping[str, Any], out_dir: Path, fmt: str = "json") -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(render_report(report))
    if fmt == "csv":
        for name, rows in iter_series(report):
            write_series_csv(out_dir / f"{name}.csv", rows)
    return path


def iter_series(report: Mapping[str, Any]):
    series = report.get("results", {}).get("series", {})
    for name, rows in series.items():
        yield name, rows


def write_series_csv(path: Path, rows) -> None:
    lines = ["n,value,error_bound"]
    for row in rows:
        n, value = row[0], row[1]
        err = row[2] if len(row) > 2 else 0.0
        lines.append(f"{n},{value!r},{err!r}")
    path.write_text("\n".join(lines) + "\n")


def series_rows(series) -> list[list[float]]:
    """SumSeries -> [[n, value, error_bound], ...]."""
    return [[int(n), float(v), float(e)] for n, v, e in series.rows()]
