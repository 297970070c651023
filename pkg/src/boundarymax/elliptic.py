"""Dirichlet solver for the classicality equation and maximum-principle checks.

The equation discretized here is the condition for a vanished quantum force,

    g^ij d_i d_j P + b^j d_j P + (2m/hbar^2) C P = 0,

with the drift b^j = (1/sqrt(g)) d_i(sqrt(g) g^ij), so that the differential
part is exactly the Laplace-Beltrami operator of the sampled metric.  Interior
nodes carry second-order central stencils (with a per-node, per-axis upwind
fallback when the mesh-Peclet bound fails); boundary nodes carry Dirichlet
identity rows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EmptyInterior, NotRefining, UnsupportedMetric
from .geometry import (
    Domain,
    Grid2D,
    InverseMetricField,
    MetricSpec,
    NodeClass,
    build_grid,
    sample_metric,
)

DIRECT_SOLVER_LIMIT = 200_000


# ---------------------------------------------------------------------------
# Field containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalarField:
    """Grid-sampled scalar; exterior nodes hold an exact 0 sentinel."""

    grid: Grid2D
    values: np.ndarray  # (ny, nx)
    role: str = "Amplitude"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals[~self.grid.active_mask] = 0.0
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid2D, fn: Callable, role: str = "Amplitude") -> "ScalarField":
        X, Y = grid.meshgrid()
        return cls(grid=grid, values=np.asarray(fn(X, Y), dtype=float), role=role)

    @classmethod
    def constant(cls, grid: Grid2D, value: float, role: str = "Amplitude") -> "ScalarField":
        return cls(grid=grid, values=np.full((grid.ny, grid.nx), float(value)), role=role)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Grid-sampled contravariant 2-vector; exterior nodes hold 0 sentinels."""

    grid: Grid2D
    ux: np.ndarray
    uy: np.ndarray
    role: str = "FlowVelocity"
    mask: np.ndarray | None = None  # nodes where the components are meaningful

    def __post_init__(self):
        for name in ("ux", "uy"):
            vals = np.array(getattr(self, name), dtype=float)
            vals[~self.grid.active_mask] = 0.0
            object.__setattr__(self, name, vals)

    def norm(self) -> np.ndarray:
        return np.hypot(self.ux, self.uy)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Assembled sparse discretization with row/node bookkeeping."""

    matrix: sp.csr_matrix
    rhs_base: np.ndarray
    grid: Grid2D
    index_of: np.ndarray        # (ny, nx) row index of active nodes, -1 exterior
    rows_iy: np.ndarray         # row -> node iy
    rows_ix: np.ndarray         # row -> node ix
    interior_rows: np.ndarray
    boundary_rows: np.ndarray
    c0: float
    row_scale: np.ndarray       # per-row normalization applied to the operator
    peclet_satisfied: bool
    n_upwind_axes: int
    m_matrix_ok: bool

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[0]

    def pack(self, values: np.ndarray) -> np.ndarray:
        return values[self.rows_iy, self.rows_ix]

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros((self.grid.ny, self.grid.nx))
        out[self.rows_iy, self.rows_ix] = vec
        return out

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix action on a (ny, nx) field, returned per row."""
        return self.matrix @ self.pack(values)


def assemble_classicality(
    grid: Grid2D,
    metric: InverseMetricField,
    C: float = 0.0,
    m: float = 1.0,
    hbar: float = 1.0,
    source: np.ndarray | Callable | None = None,
) -> LinearSystem:
    """Assemble the vanished-quantum-force equation as `A P = rhs`.

    Rows are -1 times the operator so that diagonals are positive; with
    C <= 0, no cross terms, and the mesh-Peclet bound satisfied every
    interior row has M-matrix signs (checked and recorded).

    Parameters
    ----------
    source : optional forcing; the assembled right-hand side enforces
        `operator(P) = source` at interior nodes (used by manufactured-
        solution studies; the physical equation has source = 0).
    """
    if m <= 0 or hbar <= 0:
        raise ValueError("mass and hbar must be positive")
    if metric.grid is not grid and not (
        metric.grid.nx == grid.nx and metric.grid.ny == grid.ny
    ):
        raise ValueError("metric sampled on a different grid")

    h = grid.h
    c0 = 2.0 * m * C / hbar**2
    cls = grid.node_class
    active = grid.active_mask
    index_of = np.full((grid.ny, grid.nx), -1, dtype=np.int64)
    index_of[active] = np.arange(int(active.sum()))
    rows_iy, rows_ix = np.nonzero(active)

    int_iy, int_ix = np.nonzero(cls == NodeClass.INTERIOR)
    bnd_iy, bnd_ix = np.nonzero(cls == NodeClass.BOUNDARY)
    interior_rows = index_of[int_iy, int_ix]
    boundary_rows = index_of[bnd_iy, bnd_ix]

    g11 = metric.g11[int_iy, int_ix]
    g22 = metric.g22[int_iy, int_ix]
    g12 = metric.g12[int_iy, int_ix]
    bx = metric.bx[int_iy, int_ix]
    by = metric.by[int_iy, int_ix]
    lam_min = metric.min_eigenvalue()[int_iy, int_ix]

    ok_x = h * np.abs(bx) <= 2.0 * lam_min
    ok_y = h * np.abs(by) <= 2.0 * lam_min
    peclet_satisfied = bool(np.all(ok_x) and np.all(ok_y))
    if peclet_satisfied:
        ok_x = np.ones_like(ok_x)
        ok_y = np.ones_like(ok_y)
    n_upwind_axes = int((~ok_x).sum() + (~ok_y).sum())

    inv_h2 = 1.0 / h**2
    # operator coefficients (L P = 0 form); system rows are -L, normalized
    # per row by s = h^2 / (2 (g11 + g22)) so diagonals are O(1)
    row_norm = h**2 / (2.0 * (g11 + g22))
    diag = -2.0 * (g11 + g22) * inv_h2 + c0
    c_e = g11 * inv_h2
    c_w = g11 * inv_h2
    c_n = g22 * inv_h2
    c_s = g22 * inv_h2

    c_e = c_e + np.where(ok_x, bx / (2.0 * h), np.where(bx > 0, bx / h, 0.0))
    c_w = c_w - np.where(ok_x, bx / (2.0 * h), np.where(bx < 0, bx / h, 0.0))
    diag = diag - np.where(ok_x, 0.0, np.abs(bx) / h)
    c_n = c_n + np.where(ok_y, by / (2.0 * h), np.where(by > 0, by / h, 0.0))
    c_s = c_s - np.where(ok_y, by / (2.0 * h), np.where(by < 0, by / h, 0.0))
    diag = diag - np.where(ok_y, 0.0, np.abs(by) / h)

    rows = [interior_rows] * 5
    cols = [
        interior_rows,
        index_of[int_iy, int_ix + 1],
        index_of[int_iy, int_ix - 1],
        index_of[int_iy + 1, int_ix],
        index_of[int_iy - 1, int_ix],
    ]
    data = [-diag * row_norm, -c_e * row_norm, -c_w * row_norm,
            -c_n * row_norm, -c_s * row_norm]

    has_cross = bool(np.any(g12))
    if has_cross:
        # 4-corner stencil for 2 g12 Pxy; corners must be inside the domain
        c_corner = g12 / (2.0 * h**2)
        for dy, dx, sign in ((1, 1, 1.0), (-1, -1, 1.0), (1, -1, -1.0), (-1, 1, -1.0)):
            corner = index_of[int_iy + dy, int_ix + dx]
            missing = (corner < 0) & (c_corner != 0.0)
            if np.any(missing):
                k = np.argwhere(missing)[0][0]
                raise UnsupportedMetric(
                    "cross-term stencil needs the diagonal neighbor of node "
                    f"({grid.xs[int_ix[k]]}, {grid.ys[int_iy[k]]}) inside the domain"
                )
            keep = corner >= 0
            rows.append(interior_rows[keep])
            cols.append(corner[keep])
            data.append(-(sign * c_corner[keep] * row_norm[keep]))

    # Dirichlet identity rows
    rows.append(boundary_rows)
    cols.append(boundary_rows)
    data.append(np.ones(len(boundary_rows)))

    row_arr = np.concatenate(rows)
    col_arr = np.concatenate(cols)
    dat_arr = np.concatenate(data)

    # mirror interior->boundary couplings with explicit zeros so the sparsity
    # pattern is symmetric
    n = int(active.sum())
    is_boundary_col = np.zeros(n, dtype=bool)
    is_boundary_col[boundary_rows] = True
    mirror = is_boundary_col[col_arr] & (row_arr != col_arr)
    mrow, mcol = col_arr[mirror], row_arr[mirror]
    row_arr = np.concatenate([row_arr, mrow])
    col_arr = np.concatenate([col_arr, mcol])
    dat_arr = np.concatenate([dat_arr, np.zeros(len(mrow))])

    matrix = sp.coo_matrix((dat_arr, (row_arr, col_arr)), shape=(n, n)).tocsr()

    # sign check on the rows as assembled (diag > 0, off-diagonals <= 0)
    m_matrix_ok = True
    if len(interior_rows):
        pos_off = max(np.max(-c_e), np.max(-c_w), np.max(-c_n), np.max(-c_s))
        m_matrix_ok = bool(np.all(-diag > 0) and pos_off <= 0 and not has_cross)

    rhs_base = np.zeros(n)
    if source is not None:
        X, Y = grid.meshgrid()
        src = source(X, Y) if callable(source) else np.asarray(source, dtype=float)
        rhs_base[interior_rows] = -np.asarray(src)[int_iy, int_ix] * row_norm

    row_scale = np.ones(n)
    row_scale[interior_rows] = row_norm

    return LinearSystem(
        matrix=matrix,
        rhs_base=rhs_base,
        grid=grid,
        index_of=index_of,
        rows_iy=rows_iy,
        rows_ix=rows_ix,
        interior_rows=interior_rows,
        boundary_rows=boundary_rows,
        c0=c0,
        row_scale=row_scale,
        peclet_satisfied=peclet_satisfied,
        n_upwind_axes=n_upwind_axes,
        m_matrix_ok=m_matrix_ok,
    )


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveReport:
    iterations: int
    relative_residual: float
    method: str  # "Direct" | "Krylov"
    wall_time: float
    converged: bool = True
    degenerate: bool = False


def _boundary_values(grid: Grid2D, data) -> np.ndarray:
    iy, ix = np.nonzero(grid.boundary_mask)
    if isinstance(data, ScalarField):
        return data.values[iy, ix]
    if callable(data):
        return np.asarray(data(grid.xs[ix], grid.ys[iy]), dtype=float)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(len(iy), float(arr))
    if arr.shape == (grid.ny, grid.nx):
        return arr[iy, ix]
    raise ValueError("boundary data must be scalar, callable, field, or full grid array")


def solve_dirichlet(
    system: LinearSystem,
    boundary_data,
    tol: float = 1e-12,
    method: str = "auto",
    max_iterations: int = 20000,
) -> tuple[ScalarField, SolveReport]:
    """Solve the assembled system for the amplitude P.

    Uses a sparse direct factorization below DIRECT_SOLVER_LIMIT unknowns,
    a preconditioned Krylov iteration above (both deterministic).  On Krylov
    stagnation the best iterate is returned with `converged=False`.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    grid = system.grid
    t0 = time.perf_counter()

    rhs = system.rhs_base.copy()
    bvals = _boundary_values(grid, boundary_data)
    rhs[system.boundary_rows] = bvals

    if len(system.interior_rows) == 0:
        values = system.unpack(rhs)
        report = SolveReport(0, 0.0, "Direct", time.perf_counter() - t0,
                             converged=True, degenerate=True)
        return ScalarField(grid=grid, values=values, role="Amplitude"), report

    A = system.matrix
    if method == "auto":
        method = "direct" if system.n_unknowns < DIRECT_SOLVER_LIMIT else "krylov"

    if method == "direct":
        lu = spla.splu(A.tocsc())
        x = lu.solve(rhs)
        iterations = 0
        converged = True
        label = "Direct"
    elif method == "krylov":
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=30)
        M = spla.LinearOperator(A.shape, ilu.solve)
        count = {"n": 0}

        def cb(_):
            count["n"] += 1

        rhs_norm0 = float(np.linalg.norm(rhs)) or 1.0
        x = np.zeros_like(rhs)
        converged = False
        # restarted correction solves against the true residual (the recursive
        # Krylov residual drifts from it near machine precision)
        for _ in range(4):
            r = rhs - A @ x
            if float(np.linalg.norm(r)) / rhs_norm0 <= tol:
                converged = True
                break
            dx, info = spla.bicgstab(A, r, rtol=tol * 1e-2, atol=0.0,
                                     maxiter=max_iterations, M=M, callback=cb)
            x = x + dx
            if info != 0 and count["n"] >= max_iterations:
                break
        converged = converged or float(np.linalg.norm(rhs - A @ x)) / rhs_norm0 <= tol
        iterations = count["n"]
        label = "Krylov"
    else:
        raise ValueError(f"unknown method {method!r}")

    rhs_norm = float(np.linalg.norm(rhs))
    resid = float(np.linalg.norm(A @ x - rhs)) / (rhs_norm if rhs_norm > 0 else 1.0)
    converged = converged and resid <= tol
    report = SolveReport(iterations, resid, label, time.perf_counter() - t0,
                         converged=converged)
    return ScalarField(grid=grid, values=system.unpack(x), role="Amplitude"), report


# ---------------------------------------------------------------------------
# Strong-maximum-principle verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SMPReport:
    interior_max: float
    interior_max_xy: tuple[float, float]
    boundary_max: float
    boundary_max_xy: tuple[float, float]
    interior_min: float
    interior_min_xy: tuple[float, float]
    boundary_min: float
    boundary_min_xy: tuple[float, float]
    margin: float  # boundary_max - interior_max
    verdict: str   # MaxOnBoundary | ConstantField | Violation
    tol_smp: float
    tol_const: float


def _arg_extreme(values: np.ndarray, mask: np.ndarray, grid: Grid2D, largest: bool):
    work = np.where(mask, values, -np.inf if largest else np.inf)
    flat = int(np.argmax(work) if largest else np.argmin(work))
    iy, ix = np.unravel_index(flat, values.shape)
    return float(values[iy, ix]), grid.node_xy(iy, ix)


def verify_smp(
    field: ScalarField,
    tol_smp: float | None = None,
    tol_const: float | None = None,
) -> SMPReport:
    """Scan a field for interior-vs-boundary extrema.

    Ties are broken toward the first node in row-major (y outer) order.
    """
    grid = field.grid
    if grid.n_interior == 0:
        raise EmptyInterior("grid has no interior nodes")
    vals = field.values
    imax, imax_xy = _arg_extreme(vals, grid.interior_mask, grid, largest=True)
    imin, imin_xy = _arg_extreme(vals, grid.interior_mask, grid, largest=False)
    bmax, bmax_xy = _arg_extreme(vals, grid.boundary_mask, grid, largest=True)
    bmin, bmin_xy = _arg_extreme(vals, grid.boundary_mask, grid, largest=False)

    gmax, gmin = max(imax, bmax), min(imin, bmin)
    scale = max(abs(gmax), abs(gmin), 1.0)
    if tol_smp is None:
        tol_smp = 1e-9 * scale
    if tol_const is None:
        tol_const = 1e-8 * scale

    if gmax - gmin <= tol_const:
        verdict = "ConstantField"
    elif imax > bmax + tol_smp:
        verdict = "Violation"
    else:
        verdict = "MaxOnBoundary"

    return SMPReport(
        interior_max=imax, interior_max_xy=imax_xy,
        boundary_max=bmax, boundary_max_xy=bmax_xy,
        interior_min=imin, interior_min_xy=imin_xy,
        boundary_min=bmin, boundary_min_xy=bmin_xy,
        margin=bmax - imax, verdict=verdict,
        tol_smp=tol_smp, tol_const=tol_const,
    )


# ---------------------------------------------------------------------------
# Manufactured-solution convergence study
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact solution plus the forcing that makes it solve the equation."""

    domain: Domain
    metric_spec: MetricSpec
    exact: Callable            # P*(X, Y)
    source: Callable | None    # operator applied to P*, None for 0
    C: float = 0.0
    m: float = 1.0
    hbar: float = 1.0


@dataclass(frozen=True)
class ConvergenceReport:
    hs: tuple[float, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]
    order_estimate: float | None
    verdict: str  # "Refining" | "Exact"


def convergence_study(
    problem: ManufacturedProblem,
    h_list: Sequence[float],
    tol: float = 1e-12,
    exact_floor: float = 1e-11,
) -> ConvergenceReport:
    """L-infinity error against the exact solution over halved spacings."""
    hs = list(h_list)
    if len(hs) < 3:
        raise ValueError("need at least 3 spacings")
    for a, b in zip(hs, hs[1:]):
        if not math.isclose(a / b, 2.0, rel_tol=0.01):
            raise ValueError("each spacing must halve the previous one")

    errors = []
    scale = 1.0
    for h in hs:
        grid = build_grid(problem.domain, h)
        metric = sample_metric(problem.metric_spec, grid)
        system = assemble_classicality(
            grid, metric, C=problem.C, m=problem.m, hbar=problem.hbar,
            source=problem.source,
        )
        exact_field = ScalarField.from_callable(grid, problem.exact)
        solution, _ = solve_dirichlet(system, exact_field, tol=tol)
        diff = np.abs(solution.values - exact_field.values)[grid.interior_mask]
        errors.append(float(diff.max()))
        scale = max(scale, float(np.abs(exact_field.values).max()))

    if all(e <= exact_floor * scale for e in errors):
        return ConvergenceReport(tuple(hs), tuple(errors), (), None, "Exact")

    if any(e2 >= e1 for e1, e2 in zip(errors, errors[1:])):
        raise NotRefining(f"errors do not decrease: {errors}")
    orders = tuple(math.log2(e1 / e2) for e1, e2 in zip(errors, errors[1:]))
    return ConvergenceReport(tuple(hs), tuple(errors), orders,
                             float(np.mean(orders)), "Refining")


# ---------------------------------------------------------------------------
# Radial-profile diagnostic used by the boundary-concentration reproduction
# ---------------------------------------------------------------------------

def _bilinear(grid: Grid2D, values: np.ndarray, x: float, y: float):
    """Bilinear sample; None when the cell touches an exterior node."""
    fx = (x - grid.origin[0]) / grid.h
    fy = (y - grid.origin[1]) / grid.h
    ix, iy = int(math.floor(fx)), int(math.floor(fy))
    if ix < 0 or iy < 0 or ix + 1 >= grid.nx or iy + 1 >= grid.ny:
        return None
    cell = grid.node_class[iy : iy + 2, ix : ix + 2]
    if np.any(cell == NodeClass.EXTERIOR):
        return None
    tx, ty = fx - ix, fy - iy
    v = values[iy : iy + 2, ix : ix + 2]
    return float(
        v[0, 0] * (1 - tx) * (1 - ty)
        + v[0, 1] * tx * (1 - ty)
        + v[1, 0] * (1 - tx) * ty
        + v[1, 1] * tx * ty
    )


@dataclass(frozen=True)
class RayReport:
    n_rays: int
    n_monotone: int
    fraction_monotone: float


def ray_monotonicity(
    field: ScalarField,
    domain: Domain,
    n_rays: int = 72,
    square_values: bool = True,
    rtol: float = 1e-6,
) -> RayReport:
    """Fraction of centroid-to-boundary rays along which the density never
    increases when walking inward (equivalently never decreases outward)."""
    grid = field.grid
    cx, cy = domain.centroid()
    step = grid.h / 2.0
    vmax = float(np.abs(field.values[grid.active_mask]).max())
    tol = rtol * (vmax**2 if square_values else vmax)
    n_mono = 0
    for k in range(n_rays):
        th = 2.0 * math.pi * k / n_rays
        dx, dy = math.cos(th), math.sin(th)
        samples = []
        t = 0.0
        while True:
            x, y = cx + t * dx, cy + t * dy
            if not bool(domain.inside(x, y)):
                break
            v = _bilinear(grid, field.values, x, y)
            if v is None:
                break
            samples.append(v * v if square_values else v)
            t += step
        if len(samples) >= 3 and np.all(np.diff(samples) >= -tol):
            n_mono += 1
    return RayReport(n_rays=n_rays, n_monotone=n_mono,
                     fraction_monotone=n_mono / n_rays)
