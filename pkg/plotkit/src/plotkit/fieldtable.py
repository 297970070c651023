"""Loss-free parsing of field CSV artifacts (`x,y,class,value`).

Numeric fields are kept as their original strings alongside parsed floats,
so a parsed table re-serializes byte-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HEADER = "x,y,class,value"


class MalformedCSV(Exception):
    """CSV artifact violates the declared format."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


@dataclass(eq=False)
class FieldTable:
    """A field CSV held both as raw rows and as reshaped arrays."""

    path: str
    raw_rows: list[tuple[str, str, str, str]]
    xs: np.ndarray          # unique x coordinates, ascending
    ys: np.ndarray
    classes: np.ndarray     # (ny, nx) of 'I' | 'B' | 'E'
    values: np.ndarray      # (ny, nx) floats

    @classmethod
    def read(cls, path) -> "FieldTable":
        raw_rows = []
        with open(path, newline="") as fh:
            header = fh.readline().rstrip("\r\n")
            if header != HEADER:
                raise MalformedCSV(path, 1, f"expected header {HEADER!r}, got {header!r}")
            for line_no, line in enumerate(fh, start=2):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise MalformedCSV(path, line_no,
                                       f"expected 4 fields, got {len(parts)}")
                sx, sy, cls_tag, sv = parts
                if cls_tag not in ("I", "B", "E"):
                    raise MalformedCSV(path, line_no, f"bad class {cls_tag!r}")
                try:
                    float(sx), float(sy), float(sv)
                except ValueError as exc:
                    raise MalformedCSV(path, line_no, str(exc)) from None
                raw_rows.append((sx, sy, cls_tag, sv))
        if not raw_rows:
            raise MalformedCSV(path, 2, "no data rows")

        x = np.array([float(r[0]) for r in raw_rows])
        y = np.array([float(r[1]) for r in raw_rows])
        xs = np.unique(x)
        ys = np.unique(y)
        if len(xs) * len(ys) != len(raw_rows):
            raise MalformedCSV(path, 2, "rows do not form a full lattice")
        if not (np.array_equal(x, np.tile(xs, len(ys)))
                and np.array_equal(y, np.repeat(ys, len(xs)))):
            raise MalformedCSV(path, 2, "rows are not in row-major order")
        shape = (len(ys), len(xs))
        classes = np.array([r[2] for r in raw_rows]).reshape(shape)
        values = np.array([float(r[3]) for r in raw_rows]).reshape(shape)
        return cls(path=str(path), raw_rows=raw_rows, xs=xs, ys=ys,
                   classes=classes, values=values)

    def write(self, path) -> None:
        """Re-serialize with the original numeric strings (exact round trip)."""
        with open(path, "w", newline="") as fh:
            fh.write(HEADER + "\n")
            for row in self.raw_rows:
                fh.write(",".join(row) + "\n")

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0]) if len(self.xs) > 1 else 1.0
