"""Dense CSV/TSV readers and writers for sample-by-feature and square matrices."""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import ValidationError
from .matrices import DistanceMatrix, GramMatrix, Metricity

__all__ = [
    "read_table",
    "write_matrix",
    "read_distance_matrix",
    "read_gram_matrix",
    "read_genotypes",
    "read_expression",
]


_MISSING = {"", "na", "nan", "."}


def _to_float(token: str) -> float:
    token = token.strip()
    if token.lower() in _MISSING:
        return float("nan")
    return float(token)


def _is_number(token: str) -> bool:
    try:
        _to_float(token)
    except ValueError:
        return False
    return True


def _sniff_delimiter(path: Path, text: str) -> str:
    if path.suffix.lower() in {".tsv", ".tab"}:
        return "\t"
    first = text.split("\n", 1)[0]
    return "\t" if first.count("\t") > first.count(",") else ","


def read_table(
    path: str | os.PathLike,
    *,
    id_column: bool = False,
    delimiter: str | None = None,
) -> tuple[NDArray[np.float64], list[str] | None, list[str] | None]:
    """Read a numeric table with an optional header row.

    The header is detected when any cell of the first row is non-numeric.
    With ``id_column=True`` the first column holds sample ids.

    Returns
    -------
    values, row_ids, column_names
    """
    path = Path(path)
    text = path.read_text()
    delim = delimiter or _sniff_delimiter(path, text)
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=delim) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty table")
    header = None
    first = rows[0][1:] if id_column else rows[0]
    if not all(_is_number(c) for c in first):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    ids = None
    if id_column:
        ids = [r[0].strip() for r in rows]
        rows = [r[1:] for r in rows]
        if header is not None:
            header = header[1:]
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValidationError(f"{path}: ragged rows (widths {sorted(width)})")
    try:
        values = np.array([[_to_float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})") from exc
    return values, ids, header


def write_matrix(
    path: str | os.PathLike,
    values: NDArray[np.float64],
    *,
    header: list[str] | None = None,
    row_ids: list[str] | None = None,
    delimiter: str = ",",
) -> None:
    """Write a dense matrix with full round-trip precision (``repr`` floats)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header is not None:
            w.writerow((["id"] if row_ids is not None else []) + list(header))
        for i, row in enumerate(np.asarray(values, dtype=float)):
            cells = [repr(float(x)) for x in row]
            w.writerow(([row_ids[i]] if row_ids is not None else []) + cells)


def read_distance_matrix(
    path: str | os.PathLike, metricity: Metricity | str = Metricity.UNKNOWN
) -> DistanceMatrix:
    values, _, header = read_table(path)
    return DistanceMatrix(values, Metricity(metricity), tuple(header) if header else None)


def read_gram_matrix(path: str | os.PathLike) -> GramMatrix:
    values, _, _ = read_table(path)
    return GramMatrix(values)


def read_genotypes(path: str | os.PathLike, *, id_column: bool = False):
    """Read an integer 0/1/2 genotype table (samples as rows)."""
    from .distances import GenotypeMatrix

    values, ids, _ = read_table(path, id_column=id_column)
    finite = np.isfinite(values)
    if not np.all(values[finite] == np.round(values[finite])):
        raise ValidationError(f"{path}: genotype table has non-integer entries")
    if not finite.all():
        return GenotypeMatrix(values, ids)  # raises with a count of affected rows
    return GenotypeMatrix(values.astype(np.int8), ids)


def read_expression(path: str | os.PathLike, *, id_column: bool = False):
    from .distances import RealMatrix

    values, ids, _ = read_table(path, id_column=id_column)
    return RealMatrix(values, ids)
