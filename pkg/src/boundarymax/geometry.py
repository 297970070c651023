"""Convex domains, classified structured grids, and Riemannian metric sampling.

The spatial setting is a convex region discretized on a uniform grid with an
embedded (staircase) boundary.  Metrics are described by their inverse
components g^ij together with sqrt(det g_ij) and the first-order drift
coefficients of the Laplace-Beltrami operator,

    b^j = (1/sqrt(g)) d_i (sqrt(g) g^ij),

which every solver in the suite consumes in sampled form.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import (
    MalformedCSV,
    NonConvexDomain,
    NotPositiveDefinite,
    SpacingTooCoarse,
)


class NodeClass(IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    EXTERIOR = 2


CLASS_LETTER = {NodeClass.INTERIOR: "I", NodeClass.BOUNDARY: "B", NodeClass.EXTERIOR: "E"}
LETTER_CLASS = {v: k for k, v in CLASS_LETTER.items()}


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disc:
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def inside(self, x, y):
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def centroid(self):
        return self.center

    def circumradius(self):
        return self.radius


@dataclass(frozen=True)
class Superellipse:
    """|x/a|^p + |y/b|^p <= 1 around a center; p = 2 recovers an ellipse."""

    center: tuple[float, float] = (0.0, 0.0)
    a: float = 1.0
    b: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.p < 2.0:
            raise NonConvexDomain(f"superellipse exponent must be >= 2, got {self.p}")

    def inside(self, x, y):
        cx, cy = self.center
        return (np.abs((x - cx) / self.a)) ** self.p + (np.abs((y - cy) / self.b)) ** self.p <= 1.0

    def bbox(self):
        cx, cy = self.center
        return (cx - self.a, cy - self.b, cx + self.a, cy + self.b)

    def centroid(self):
        return self.center

    def circumradius(self):
        return max(self.a, self.b)


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape[0] < 3:
            raise NonConvexDomain("polygon needs at least 3 vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(np.abs(e).sum(axis=1) == 0.0):
            raise NonConvexDomain("polygon has repeated consecutive vertices")
        if np.any(cross > 0) and np.any(cross < 0):
            raise NonConvexDomain("polygon edge cross-products change sign")
        # normalize to counter-clockwise so the inside test is one-sided
        if cross.sum() < 0:
            object.__setattr__(self, "vertices", tuple(tuple(p) for p in v[::-1]))

    def inside(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        v = np.asarray(self.vertices, dtype=float)
        for i in range(len(v)):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % len(v)]
            ok &= (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) >= 0.0
        return ok if ok.shape else bool(ok)

    def bbox(self):
        v = np.asarray(self.vertices, dtype=float)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def centroid(self):
        v = np.asarray(self.vertices, dtype=float)
        return (float(v[:, 0].mean()), float(v[:, 1].mean()))

    def circumradius(self):
        cx, cy = self.centroid()
        v = np.asarray(self.vertices, dtype=float)
        return float(np.hypot(v[:, 0] - cx, v[:, 1] - cy).max())


def regular_polygon(center: tuple[float, float], circumradius: float, n_sides: int,
                    phase: float = 0.0) -> ConvexPolygon:
    """Regular convex n-gon, a convenient stand-in for 'some convex shape'."""
    cx, cy = center
    verts = tuple(
        (cx + circumradius * math.cos(phase + 2 * math.pi * k / n_sides),
         cy + circumradius * math.sin(phase + 2 * math.pi * k / n_sides))
        for k in range(n_sides)
    )
    return ConvexPolygon(verts)


Domain = Disc | Superellipse | ConvexPolygon


# ---------------------------------------------------------------------------
# Grid construction and node classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Grid2D:
    """Uniform grid covering a padded bounding box, with per-node classes."""

    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    node_class: np.ndarray  # (ny, nx) int8, values from NodeClass

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="xy")

    @property
    def interior_mask(self) -> np.ndarray:
        return self.node_class == NodeClass.INTERIOR

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.node_class == NodeClass.BOUNDARY

    @property
    def active_mask(self) -> np.ndarray:
        return self.node_class != NodeClass.EXTERIOR

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    def node_xy(self, iy: int, ix: int) -> tuple[float, float]:
        return (float(self.origin[0] + ix * self.h),
                float(self.origin[1] + iy * self.h))


def classify_nodes(domain: Domain, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Classify lattice nodes against a domain.

    A node inside the domain with all four axis neighbors inside is Interior;
    inside with at least one neighbor outside (or off-lattice) is Boundary;
    outside is Exterior.
    """
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    h_x = xs[1] - xs[0] if len(xs) > 1 else 1.0
    h_y = ys[1] - ys[0] if len(ys) > 1 else 1.0
    ins = np.asarray(domain.inside(X, Y), dtype=bool)

    def shifted(dx, dy):
        out = np.asarray(domain.inside(X + dx, Y + dy), dtype=bool)
        return out

    all_nb = (
        shifted(h_x, 0.0) & shifted(-h_x, 0.0) & shifted(0.0, h_y) & shifted(0.0, -h_y)
    )
    cls = np.full(ins.shape, NodeClass.EXTERIOR, dtype=np.int8)
    cls[ins & all_nb] = NodeClass.INTERIOR
    cls[ins & ~all_nb] = NodeClass.BOUNDARY
    return cls


def build_grid(domain: Domain, h: float, min_interior: int = 8) -> Grid2D:
    """Cover the domain's bounding box (padded by 2h) with a classified grid."""
    if h <= 0:
        raise ValueError("spacing h must be positive")
    xmin, ymin, xmax, ymax = domain.bbox()
    if (xmax - xmin) < 7 * h or (ymax - ymin) < 7 * h:
        raise SpacingTooCoarse(
            f"bounding box {(xmax - xmin):g} x {(ymax - ymin):g} has fewer than "
            f"8 nodes per side at h={h:g}"
        )
    origin = (xmin - 2 * h, ymin - 2 * h)
    nx = int(math.ceil((xmax + 2 * h - origin[0]) / h)) + 1
    ny = int(math.ceil((ymax + 2 * h - origin[1]) / h)) + 1
    xs = origin[0] + h * np.arange(nx)
    ys = origin[1] + h * np.arange(ny)
    cls = classify_nodes(domain, xs, ys)

    n_int = int((cls == NodeClass.INTERIOR).sum())
    if n_int < min_interior:
        raise SpacingTooCoarse(f"only {n_int} interior nodes at h={h:g}")

    active = cls != NodeClass.EXTERIOR
    _, n_comp = ndimage.label(active, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    if n_comp != 1:
        raise SpacingTooCoarse(
            f"active node set splits into {n_comp} components at h={h:g}"
        )
    return Grid2D(origin=origin, h=h, nx=nx, ny=ny, node_class=cls)


# ---------------------------------------------------------------------------
# Metric families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatMetric:
    """Euclidean metric: g^ij = identity."""

    kind = "Flat"
    dimension = 2
    analytic = True

    def g_inv(self, X, Y):
        one = np.ones_like(np.asarray(X, dtype=float))
        return one, np.zeros_like(one), one

    def g_inv_partials(self, X, Y):
        z = np.zeros_like(np.asarray(X, dtype=float))
        return (z, z), (z, z), (z, z)


@dataclass(frozen=True)
class ConformalMetric:
    """g^ij = Omega(x, y) * diag(1, 1) with a two-bump conformal factor.

    Omega(x, y) = scale * (exp(-(x - mu_x)^2) + exp(-(y - mu_y)^2)) + offset.
    The defaults reproduce the two-dimensional example configuration with
    mu = 2.5 on both axes.
    """

    mu_x: float = 2.5
    mu_y: float = 2.5
    scale: float = 1.0
    offset: float = 0.0

    kind = "Conformal"
    dimension = 2
    analytic = True

    def omega(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.scale * (np.exp(-((X - self.mu_x) ** 2)) + np.exp(-((Y - self.mu_y) ** 2))) + self.offset

    def omega_partials(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        dx = self.scale * -2.0 * (X - self.mu_x) * np.exp(-((X - self.mu_x) ** 2))
        dy = self.scale * -2.0 * (Y - self.mu_y) * np.exp(-((Y - self.mu_y) ** 2))
        return dx, dy

    def g_inv(self, X, Y):
        om = self.omega(X, Y)
        return om, np.zeros_like(om), om.copy()

    def g_inv_partials(self, X, Y):
        dx, dy = self.omega_partials(X, Y)
        z = np.zeros_like(dx)
        return (dx, dy), (z, z), (dx.copy(), dy.copy())


@dataclass(frozen=True)
class DiagonalMetric:
    """Anisotropic diagonal family g^ij = diag(a(x,y), d(x,y)).

    a = a0 + a1 sin(k1 x) sin(k2 y),  d = d0 + d1 cos(k1 x) cos(k2 y).
    Positive-definite whenever |a1| < a0 and |d1| < d0.
    """

    a0: float = 1.0
    a1: float = 0.0
    d0: float = 1.0
    d1: float = 0.0
    k1: float = 1.0
    k2: float = 1.0

    kind = "DiagonalAnisotropic"
    dimension = 2
    analytic = True

    def g_inv(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        a = self.a0 + self.a1 * np.sin(self.k1 * X) * np.sin(self.k2 * Y)
        d = self.d0 + self.d1 * np.cos(self.k1 * X) * np.cos(self.k2 * Y)
        return a, np.zeros_like(a), d

    def g_inv_partials(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        s1, c1 = np.sin(self.k1 * X), np.cos(self.k1 * X)
        s2, c2 = np.sin(self.k2 * Y), np.cos(self.k2 * Y)
        da = (self.a1 * self.k1 * c1 * s2, self.a1 * self.k2 * s1 * c2)
        dd = (-self.d1 * self.k1 * s1 * c2, -self.d1 * self.k2 * c1 * s2)
        z = np.zeros_like(X)
        return da, (z, z.copy()), dd


@dataclass(frozen=True, eq=False)
class SampledMetric:
    """Symmetric positive-definite metric given by per-node samples.

    Derivatives (hence the drift) come from second-order finite differences
    of the samples; the node lattice must match the grid it is used with.
    """

    xs: np.ndarray
    ys: np.ndarray
    g11: np.ndarray  # (ny, nx)
    g12: np.ndarray
    g22: np.ndarray

    kind = "SampledSPD"
    dimension = 2
    analytic = False

    @classmethod
    def from_spec(cls, spec, grid: Grid2D) -> "SampledMetric":
        X, Y = grid.meshgrid()
        a11, a12, a22 = spec.g_inv(X, Y)
        return cls(xs=grid.xs, ys=grid.ys, g11=a11, g12=a12, g22=a22)

    @classmethod
    def from_csv(cls, path) -> "SampledMetric":
        xs_seen, ys_seen, rows = [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["x", "y", "g11", "g12", "g22"]:
                raise MalformedCSV(path, 1, f"expected header x,y,g11,g12,g22 got {header}")
            for line_no, row in enumerate(reader, start=2):
                if len(row) != 5:
                    raise MalformedCSV(path, line_no, f"expected 5 fields, got {len(row)}")
                try:
                    rows.append(tuple(float(v) for v in row))
                except ValueError as exc:
                    raise MalformedCSV(path, line_no, str(exc)) from None
        if not rows:
            raise MalformedCSV(path, 2, "no data rows")
        data = np.asarray(rows)
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        if len(xs) * len(ys) != len(rows):
            raise MalformedCSV(path, 2, "rows do not form a full lattice")
        shape = (len(ys), len(xs))
        # row-major ordering contract: y outer, x inner
        expect_x = np.tile(xs, len(ys))
        expect_y = np.repeat(ys, len(xs))
        if not (np.array_equal(data[:, 0], expect_x) and np.array_equal(data[:, 1], expect_y)):
            raise MalformedCSV(path, 2, "rows are not in row-major (y outer, x inner) order")
        return cls(
            xs=xs,
            ys=ys,
            g11=data[:, 2].reshape(shape),
            g12=data[:, 3].reshape(shape),
            g22=data[:, 4].reshape(shape),
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "g11", "g12", "g22"])
            for iy, y in enumerate(self.ys):
                for ix, x in enumerate(self.xs):
                    writer.writerow([repr(float(x)), repr(float(y)),
                                     repr(float(self.g11[iy, ix])),
                                     repr(float(self.g12[iy, ix])),
                                     repr(float(self.g22[iy, ix]))])

    def matches_grid(self, grid: Grid2D, tol: float = 1e-9) -> bool:
        return (
            len(self.xs) == grid.nx
            and len(self.ys) == grid.ny
            and np.allclose(self.xs, grid.xs, atol=tol)
            and np.allclose(self.ys, grid.ys, atol=tol)
        )


MetricSpec = FlatMetric | ConformalMetric | DiagonalMetric | SampledMetric


@dataclass(frozen=True, eq=False)
class InverseMetricField:
    """Per-node inverse metric entries, volume factor, and drift vector."""

    grid: Grid2D
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    sqrt_det_g: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    kind: str = "Flat"

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.g12)

    def min_eigenvalue(self) -> np.ndarray:
        tr = self.g11 + self.g22
        det = self.g11 * self.g22 - self.g12**2
        disc = np.sqrt(np.maximum(tr**2 - 4.0 * det, 0.0))
        return 0.5 * (tr - disc)


def _drift_from_partials(a11, a12, a22, d11, d12, d22):
    """b^j = d_i A^ij - A^ij d_i(det A) / (2 det A) for A = g^ij."""
    det = a11 * a22 - a12**2
    ddet_dx = d11[0] * a22 + a11 * d22[0] - 2.0 * a12 * d12[0]
    ddet_dy = d11[1] * a22 + a11 * d22[1] - 2.0 * a12 * d12[1]
    bx = d11[0] + d12[1] - (a11 * ddet_dx + a12 * ddet_dy) / (2.0 * det)
    by = d12[0] + d22[1] - (a12 * ddet_dx + a22 * ddet_dy) / (2.0 * det)
    return bx, by


def sample_metric(spec: MetricSpec, grid: Grid2D) -> InverseMetricField:
    """Sample g^ij, sqrt(det g), and the drift coefficients on every node.

    Built-in families use analytic derivatives; sampled metrics fall back to
    central differences (second order, one-sided at the lattice edge).

    Raises NotPositiveDefinite if any node in the grid's bounding box fails
    the 2x2 trace/determinant test.
    """
    X, Y = grid.meshgrid()
    if isinstance(spec, SampledMetric):
        if not spec.matches_grid(grid):
            raise ValueError("sampled metric lattice does not match the grid")
        a11, a12, a22 = spec.g11, spec.g12, spec.g22
    else:
        a11, a12, a22 = spec.g_inv(X, Y)

    det = a11 * a22 - a12**2
    tr = a11 + a22
    bad = (det <= 0.0) | (tr <= 0.0)
    if np.any(bad):
        iy, ix = np.argwhere(bad)[0]
        raise NotPositiveDefinite(float(X[iy, ix]), float(Y[iy, ix]))

    if isinstance(spec, (FlatMetric, ConformalMetric)):
        # drift vanishes identically: sqrt(g) g^ij reduces to the identity
        bx = np.zeros_like(a11)
        by = np.zeros_like(a11)
    elif isinstance(spec, DiagonalMetric):
        d11, d12, d22 = spec.g_inv_partials(X, Y)
        bx, by = _drift_from_partials(a11, a12, a22, d11, d12, d22)
    else:
        h = grid.h
        d11 = (np.gradient(a11, h, axis=1, edge_order=2), np.gradient(a11, h, axis=0, edge_order=2))
        d12 = (np.gradient(a12, h, axis=1, edge_order=2), np.gradient(a12, h, axis=0, edge_order=2))
        d22 = (np.gradient(a22, h, axis=1, edge_order=2), np.gradient(a22, h, axis=0, edge_order=2))
        bx, by = _drift_from_partials(a11, a12, a22, d11, d12, d22)

    return InverseMetricField(
        grid=grid,
        g11=np.asarray(a11, dtype=float),
        g12=np.asarray(a12, dtype=float),
        g22=np.asarray(a22, dtype=float),
        sqrt_det_g=1.0 / np.sqrt(det),
        bx=bx,
        by=by,
        kind=spec.kind,
    )
