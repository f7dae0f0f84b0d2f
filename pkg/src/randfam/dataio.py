"""CSV ingestion and report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from randfam.engine import RfmResult
from randfam.errors import InputFormatError
from randfam.shapiro import SwResult
from randfam.stats import PairedSample

#: Bumped whenever the report layout changes incompatibly.
REPORT_SCHEMA_VERSION = 1


def _parse_float(cell: str, line: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise InputFormatError(
            f"line {line}, column {column}: cannot parse {cell!r} as a number"
        ) from None
    if not math.isfinite(value):
        raise InputFormatError(f"line {line}, column {column}: {cell!r} is not finite")
    return value


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_paired_csv(text: str, delimiter: str = ",") -> tuple[PairedSample, bool]:
    """Parse two-column ``x,y`` CSV text.

    A first row that is not entirely numeric is taken as a header.  Returns
    the sample and whether a header was found.
    """
    rows = [
        (i, row)
        for i, row in enumerate(csv.reader(io.StringIO(text), delimiter=delimiter), 1)
        if row and any(c.strip() for c in row)
    ]
    header = bool(rows) and not all(_is_number(c.strip()) for c in rows[0][1])
    if header:
        rows = rows[1:]
    xs, ys = [], []
    for line, row in rows:
        cells = [c.strip() for c in row]
        if len(cells) != 2:
            raise InputFormatError(f"line {line}: expected 2 columns, found {len(cells)}")
        xs.append(_parse_float(cells[0], line, 1))
        ys.append(_parse_float(cells[1], line, 2))
    return PairedSample(xs, ys), header


def read_paired_csv(path: str | Path, delimiter: str = ",") -> PairedSample:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_paired_csv(text, delimiter)[0]


def format_paired_csv(s: PairedSample, header: bool = True) -> str:
    """CSV text with every value written at full (round-trip) precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(["x", "y"])
    writer.writerows((repr(float(a)), repr(float(b))) for a, b in zip(s.x, s.y))
    return buf.getvalue()


def read_values(path: str | Path) -> np.ndarray:
    """Every numeric cell of a file with one or more values per line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from exc
    values = []
    for line, row in enumerate(csv.reader(io.StringIO(text)), 1):
        for col, cell in enumerate(row, 1):
            if cell.strip():
                values.append(_parse_float(cell.strip(), line, col))
    if not values:
        raise InputFormatError(f"{path}: no values found")
    return np.array(values)


def format_grid_csv(rows: Iterable[tuple], header: tuple[str, ...]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(tuple(repr(float(v)) if isinstance(v, float) else v for v in r) for r in rows)
    return buf.getvalue()


def build_report(
    result: RfmResult,
    *,
    version: str,
    duration_seconds: float | None = None,
    histogram: bool = True,
    kde: list[tuple[float, float]] | None = None,
    kde_source: str | None = None,
    shapiro: SwResult | None = None,
) -> dict:
    """Assemble the JSON-ready report document."""
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": "randfam",
        "tool_version": version,
        "duration_seconds": duration_seconds,
        "result": result.to_dict(),
    }
    if histogram:
        fam = result.family
        report["histogram"] = {
            "edges": fam.bin_edges.tolist(),
            "counts": fam.histogram.tolist(),
        }
    if kde is not None:
        report["kde"] = {
            "source": kde_source,
            "grid": [list(p) for p in kde],
        }
    if shapiro is not None:
        report["shapiro_wilk"] = shapiro.to_dict()
    return report


def dump_report(report: dict) -> str:
    # json writes floats with repr, i.e. shortest round-trip (<= 17 digits)
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def load_report(text: str) -> dict:
    return json.loads(text)
