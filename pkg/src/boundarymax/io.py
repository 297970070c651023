"""Deterministic CSV/JSON artifact formats shared by the CLI and consumers.

All floats are serialized with repr() (shortest round-trip form) and JSON
objects use sorted keys, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .elliptic import ScalarField, SMPReport, SolveReport, VectorField
from .errors import MalformedCSV
from .geometry import CLASS_LETTER, Grid2D, NodeClass
from .relativity import EvolutionSeries, SignatureReport


def _r(x) -> str:
    return repr(float(x))


def write_field_csv(path, field: ScalarField) -> None:
    """Rows `x,y,class,value` in row-major order (y outer, x inner)."""
    grid = field.grid
    xs, ys = grid.xs, grid.ys
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "class", "value"])
        for iy in range(grid.ny):
            for ix in range(grid.nx):
                writer.writerow([
                    _r(xs[ix]), _r(ys[iy]),
                    CLASS_LETTER[NodeClass(grid.node_class[iy, ix])],
                    _r(field.values[iy, ix]),
                ])


def write_vector_csv(path, field: VectorField) -> None:
    """Rows `x,y,class,ux,uy` in row-major order."""
    grid = field.grid
    xs, ys = grid.xs, grid.ys
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "class", "ux", "uy"])
        for iy in range(grid.ny):
            for ix in range(grid.nx):
                writer.writerow([
                    _r(xs[ix]), _r(ys[iy]),
                    CLASS_LETTER[NodeClass(grid.node_class[iy, ix])],
                    _r(field.ux[iy, ix]), _r(field.uy[iy, ix]),
                ])


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def smp_report_dict(report: SMPReport, solve: SolveReport | None = None) -> dict:
    out = {
        "interior_max": report.interior_max,
        "interior_max_xy": list(report.interior_max_xy),
        "boundary_max": report.boundary_max,
        "boundary_max_xy": list(report.boundary_max_xy),
        "margin": report.margin,
        "verdict": report.verdict,
        "residual": solve.relative_residual if solve else None,
        "iterations": solve.iterations if solve else None,
    }
    return out


def signature_report_dict(report: SignatureReport) -> dict:
    return {
        "points": [list(p) for p in report.points],
        "eigen_signs": [list(s) for s in report.eigen_signs],
        "verdict": report.verdict,
    }


def write_series(out_dir, series: EvolutionSeries, stem: str = "slice") -> list[Path]:
    """One CSV per slice (`x,P,dPdt`) plus an index JSON with times/energy/cfl."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, state in enumerate(series.slices):
        path = out_dir / f"{stem}_{k:04d}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "P", "dPdt"])
            for x, p, v in zip(state.xs, state.P, state.dPdt):
                writer.writerow([_r(x), _r(p), _r(v)])
        paths.append(path)
    index = out_dir / "index.json"
    write_json(index, {
        "times": [float(t) for t in series.times],
        "energy": [float(e) for e in series.energies],
        "cfl": float(series.cfl_number),
    })
    paths.append(index)
    return paths


def read_field_csv(path):
    """Parse a field CSV back into coordinate/class/value arrays.

    Returns (xs, ys, classes, values) with 2D arrays in row-major layout.
    Raises MalformedCSV with the offending line number.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "class", "value"]:
            raise MalformedCSV(path, 1, f"expected header x,y,class,value got {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise MalformedCSV(path, line_no, f"expected 4 fields, got {len(row)}")
            if row[2] not in ("I", "B", "E"):
                raise MalformedCSV(path, line_no, f"bad class {row[2]!r}")
            try:
                rows.append((float(row[0]), float(row[1]), row[2], float(row[3])))
            except ValueError as exc:
                raise MalformedCSV(path, line_no, str(exc)) from None
    if not rows:
        raise MalformedCSV(path, 2, "no data rows")
    xs = np.unique([r[0] for r in rows])
    ys = np.unique([r[1] for r in rows])
    if len(xs) * len(ys) != len(rows):
        raise MalformedCSV(path, 2, "rows do not form a full lattice")
    shape = (len(ys), len(xs))
    classes = np.array([r[2] for r in rows]).reshape(shape)
    values = np.array([r[3] for r in rows]).reshape(shape)
    return xs, ys, classes, values


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()
