"""
RPTM CSV Helpers
Header-checked reading and writing of the small CSV artifacts.
"""

import csv
import io
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from .errors import FormatError, IoError


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a header line then rows, '\\n' terminated"""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror or e}") from e


def read_csv(path: Union[str, Path], header: Sequence[str]) -> List[List[str]]:
    """Data rows of a CSV whose first line must equal header"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read {path}: {e.strerror or e}") from e
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != list(header):
        raise FormatError(f"header must be '{','.join(header)}'", filename=str(path))
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(f"line {lineno}: expected {len(header)} fields, got {len(row)}",
                              filename=str(path))
        data.append(row)
    return data
