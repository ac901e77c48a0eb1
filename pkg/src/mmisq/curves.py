"""Time-indexed value series and their CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["CurveTable", "fmt", "write_csv"]


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class CurveTable:
    t: np.ndarray
    value: np.ndarray
    se: np.ndarray | None = None
    name: str = "value"

    def to_csv(self, path):
        header = ["t", self.name] + ([f"se_{self.name}"] if self.se is not None else [])
        cols = [self.t, self.value] + ([self.se] if self.se is not None else [])
        write_csv(path, header, cols)


def write_csv(path, header, columns):
    """Write equal-length columns under ``header``; floats use :func:`fmt`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [np.asarray(c) for c in columns]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([fmt(v) for v in row])
