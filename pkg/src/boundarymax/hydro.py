"""Quantum potential, continuity inversion, and external-force synthesis.

Given an amplitude field P (or a time-dependent density family rho), this
module computes the quantum potential Q = -(hbar^2/2m) (lap_g P)/P and its
force -grad Q, inverts the continuity equation d_t rho + div_g(rho u) = 0
for the curl-free flow velocity via a zero-flux Poisson solve, and
synthesizes the external force m (d_t u + (u . grad) u) + grad Q that pins
the prescribed density onto the hydrodynamic equations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import cumulative_trapezoid

from .elliptic import ScalarField, SolveReport, VectorField, assemble_classicality
from .errors import (
    AllMasked,
    DomainTooSmall,
    IncompatibleSource,
    UnsupportedMetric,
)
from .geometry import Grid2D, InverseMetricField, NodeClass

DEFAULT_FLOOR_FRACTION = 1e-6   # p_floor = fraction * max(P)
EVAL_DENSITY_FRACTION = 1e-3    # norms evaluated where rho >= fraction * max(rho)


# ---------------------------------------------------------------------------
# Density families
# ---------------------------------------------------------------------------

class DensityFamily:
    """Time-dependent nonnegative density with a d_t rho policy."""

    time_derivative: str = "analytic"
    fd_dt: float = 1e-4

    def rho(self, grid: Grid2D, t: float) -> np.ndarray:
        raise NotImplementedError

    def drho_dt(self, grid: Grid2D, t: float) -> np.ndarray:
        if self.time_derivative == "analytic":
            return self._drho_dt_analytic(grid, t)
        dt = self.fd_dt
        return (self.rho(grid, t + dt) - self.rho(grid, t - dt)) / (2.0 * dt)

    def _drho_dt_analytic(self, grid: Grid2D, t: float) -> np.ndarray:
        raise NotImplementedError

    def amplitude(self, grid: Grid2D, t: float) -> np.ndarray:
        return np.sqrt(np.maximum(self.rho(grid, t), 0.0))


@dataclass(eq=False)
class StaticDensity(DensityFamily):
    field: ScalarField

    def rho(self, grid, t):
        return self.field.values

    def _drho_dt_analytic(self, grid, t):
        return np.zeros((grid.ny, grid.nx))


@dataclass(eq=False)
class SolvedClassical(DensityFamily):
    """rho = P^2 for a solved classical amplitude (time-independent)."""

    amplitude_field: ScalarField

    def rho(self, grid, t):
        return self.amplitude_field.values**2

    def _drho_dt_analytic(self, grid, t):
        return np.zeros((grid.ny, grid.nx))

    def amplitude(self, grid, t):
        return self.amplitude_field.values


@dataclass(eq=False)
class BreathingGaussian(DensityFamily):
    """Normalized 2D Gaussian with oscillating width sigma(t)."""

    center: tuple[float, float] = (0.0, 0.0)
    sigma0: float = 0.1
    eps: float = 0.2
    omega: float = 1.0
    mass: float = 1.0
    time_derivative: str = "analytic"

    def sigma(self, t: float) -> float:
        return self.sigma0 * (1.0 + self.eps * math.sin(self.omega * t))

    def sigma_dot(self, t: float) -> float:
        return self.sigma0 * self.eps * self.omega * math.cos(self.omega * t)

    def _r2(self, grid):
        X, Y = grid.meshgrid()
        return (X - self.center[0]) ** 2 + (Y - self.center[1]) ** 2

    def rho(self, grid, t):
        s = self.sigma(t)
        return self.mass / (2.0 * math.pi * s * s) * np.exp(-self._r2(grid) / (2.0 * s * s))

    def _drho_dt_analytic(self, grid, t):
        s, sd = self.sigma(t), self.sigma_dot(t)
        return self.rho(grid, t) * sd * (self._r2(grid) - 2.0 * s * s) / s**3

    def radial_profile(self, t: float, r: np.ndarray):
        """(rho, d_t rho) along a radius, for quadrature oracles."""
        s, sd = self.sigma(t), self.sigma_dot(t)
        rho = self.mass / (2.0 * math.pi * s * s) * np.exp(-(r**2) / (2.0 * s * s))
        return rho, rho * sd * (r**2 - 2.0 * s * s) / s**3

    def exact_radial_velocity(self, t: float, r: np.ndarray) -> np.ndarray:
        """Self-similar breathing flow u_r = r sigma'(t)/sigma(t)."""
        return np.asarray(r) * self.sigma_dot(t) / self.sigma(t)


@dataclass(eq=False)
class TranslatingGaussian(DensityFamily):
    center0: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (1.0, 0.0)
    sigma: float = 0.1
    mass: float = 1.0
    time_derivative: str = "analytic"

    def _offsets(self, grid, t):
        X, Y = grid.meshgrid()
        dx = X - self.center0[0] - self.velocity[0] * t
        dy = Y - self.center0[1] - self.velocity[1] * t
        return dx, dy

    def rho(self, grid, t):
        dx, dy = self._offsets(grid, t)
        s = self.sigma
        return self.mass / (2.0 * math.pi * s * s) * np.exp(-(dx**2 + dy**2) / (2.0 * s * s))

    def _drho_dt_analytic(self, grid, t):
        dx, dy = self._offsets(grid, t)
        rho = self.rho(grid, t)
        return rho * (dx * self.velocity[0] + dy * self.velocity[1]) / self.sigma**2


def total_mass(family: DensityFamily, grid: Grid2D, metric: InverseMetricField,
               t: float) -> float:
    """Trapezoid mass integral with sqrt(g) h^2 node weights over active nodes."""
    w = metric.sqrt_det_g * grid.h**2
    act = grid.active_mask
    return float(np.sum(family.rho(grid, t)[act] * w[act]))


# ---------------------------------------------------------------------------
# Quantum potential and force
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuantumPotentialField:
    field: ScalarField
    mask: np.ndarray      # nodes where Q is defined
    m: float
    hbar: float
    p_floor: float
    scheme: str           # "assembly" | "independent"


def _floor_value(P: np.ndarray, active: np.ndarray, p_floor: float | None) -> float:
    pmax = float(np.abs(P[active]).max()) if np.any(active) else 0.0
    return DEFAULT_FLOOR_FRACTION * pmax if p_floor is None else p_floor


def interior_region_mask(grid: Grid2D, delta: float) -> np.ndarray:
    """Nodes at least `delta` (in length units) from the staircase boundary.

    Used to evaluate force-decay diagnostics away from the O(h)-rough
    boundary band of embedded-boundary solutions.
    """
    from scipy import ndimage

    dist = ndimage.distance_transform_edt(grid.active_mask) * grid.h
    return grid.interior_mask & (dist >= delta)


def _wide_lap(P: np.ndarray, grid: Grid2D, metric: InverseMetricField):
    """Laplace-Beltrami at doubled stencil spacing; independent truncation
    constant from the assembly operator (used to probe discrete solutions)."""
    h2 = 2.0 * grid.h
    ny, nx = P.shape
    act = grid.active_mask
    lap = np.full_like(P, np.nan)
    ok = np.zeros_like(act)
    ii = grid.interior_mask.copy()
    ii[:2, :] = False
    ii[-2:, :] = False
    ii[:, :2] = False
    ii[:, -2:] = False
    iy, ix = np.nonzero(ii)
    need = (
        act[iy, ix + 2] & act[iy, ix - 2] & act[iy + 2, ix] & act[iy - 2, ix]
    )
    if np.any(metric.g12):
        need &= (
            act[iy + 2, ix + 2] & act[iy + 2, ix - 2]
            & act[iy - 2, ix + 2] & act[iy - 2, ix - 2]
        )
    iy, ix = iy[need], ix[need]
    pxx = (P[iy, ix + 2] - 2.0 * P[iy, ix] + P[iy, ix - 2]) / h2**2
    pyy = (P[iy + 2, ix] - 2.0 * P[iy, ix] + P[iy - 2, ix]) / h2**2
    px = (P[iy, ix + 2] - P[iy, ix - 2]) / (2.0 * h2)
    py = (P[iy + 2, ix] - P[iy - 2, ix]) / (2.0 * h2)
    val = (
        metric.g11[iy, ix] * pxx
        + metric.g22[iy, ix] * pyy
        + metric.bx[iy, ix] * px
        + metric.by[iy, ix] * py
    )
    if np.any(metric.g12):
        pxy = (
            P[iy + 2, ix + 2] - P[iy + 2, ix - 2] - P[iy - 2, ix + 2] + P[iy - 2, ix - 2]
        ) / (4.0 * h2**2)
        val = val + 2.0 * metric.g12[iy, ix] * pxy
    lap[iy, ix] = val
    ok[iy, ix] = True
    return lap, ok


def quantum_potential(
    P: ScalarField,
    metric: InverseMetricField,
    m: float = 1.0,
    hbar: float = 1.0,
    p_floor: float | None = None,
    scheme: str = "assembly",
) -> QuantumPotentialField:
    """Q = -(hbar^2/2m) (lap_g P)/P on nodes with P above the floor.

    scheme="assembly" applies the same discrete operator the Dirichlet solver
    assembles, so classical solutions reproduce their constant exactly (up to
    the solver residual).  scheme="independent" re-evaluates the operator at
    doubled stencil spacing, which exposes the O(h^2) force content of a
    discrete solution instead of the solver identity.
    """
    grid = P.grid
    floor = _floor_value(P.values, grid.active_mask, p_floor)

    if scheme == "assembly":
        system = assemble_classicality(grid, metric, C=0.0, m=m, hbar=hbar)
        lap_rows = -(system.apply(P.values)) / system.row_scale  # rows of lap_g P
        lap = np.full((grid.ny, grid.nx), np.nan)
        lap[grid.interior_mask] = lap_rows[system.index_of[grid.interior_mask]]
        defined = grid.interior_mask.copy()
    elif scheme == "independent":
        lap, defined = _wide_lap(P.values, grid, metric)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    mask = defined & (P.values >= floor)
    if not np.any(mask & grid.interior_mask):
        raise AllMasked("no interior node above the amplitude floor")
    q = np.zeros((grid.ny, grid.nx))
    q[mask] = -(hbar**2 / (2.0 * m)) * lap[mask] / P.values[mask]
    field = ScalarField(grid=grid, values=q, role="QuantumPotential")
    return QuantumPotentialField(field=field, mask=mask, m=m, hbar=hbar,
                                 p_floor=floor, scheme=scheme)


def _axis_gradient(values: np.ndarray, mask: np.ndarray, h: float, axis: int):
    m_p = np.zeros_like(mask)
    m_m = np.zeros_like(mask)
    v_p = np.zeros_like(values)
    v_m = np.zeros_like(values)
    if axis == 1:
        m_p[:, :-1] = mask[:, 1:]
        v_p[:, :-1] = values[:, 1:]
        m_m[:, 1:] = mask[:, :-1]
        v_m[:, 1:] = values[:, :-1]
    else:
        m_p[:-1, :] = mask[1:, :]
        v_p[:-1, :] = values[1:, :]
        m_m[1:, :] = mask[:-1, :]
        v_m[1:, :] = values[:-1, :]
    central = mask & m_p & m_m
    fwd = mask & m_p & ~m_m
    bwd = mask & ~m_p & m_m
    g = np.zeros_like(values)
    g[central] = (v_p[central] - v_m[central]) / (2.0 * h)
    g[fwd] = (v_p[fwd] - values[fwd]) / h
    g[bwd] = (values[bwd] - v_m[bwd]) / h
    return g, central | fwd | bwd


def _masked_gradient(values: np.ndarray, mask: np.ndarray, h: float):
    """Central differences inside a mask, one-sided at its edges."""
    gx, ok_x = _axis_gradient(values, mask, h, axis=1)
    gy, ok_y = _axis_gradient(values, mask, h, axis=0)
    return gx, gy, ok_x & ok_y


def quantum_force(Q: QuantumPotentialField) -> VectorField:
    """F_Q = -grad Q, central differences with one-sided fallback at the mask edge."""
    grid = Q.field.grid
    gx, gy, ok = _masked_gradient(Q.field.values, Q.mask, grid.h)
    fx = np.where(ok, -gx, 0.0)
    fy = np.where(ok, -gy, 0.0)
    return VectorField(grid=grid, ux=fx, uy=fy, role="QuantumForce", mask=ok)


# ---------------------------------------------------------------------------
# Zero-flux Poisson inversion of the continuity equation
# ---------------------------------------------------------------------------

class _NeumannPoisson:
    """Conservative (flux-form) Laplace-Beltrami with zero-flux boundary.

    The discrete operator is div(grad) built from face fluxes; faces to
    exterior nodes carry no flux, which encodes the zero-flux condition on
    the staircase boundary and makes sqrt(g) h^2 an exact left null vector.
    """

    def __init__(self, grid: Grid2D, metric: InverseMetricField):
        if np.any(metric.g12):
            raise UnsupportedMetric("flux inversion supports diagonal metrics only")
        self.grid = grid
        self.metric = metric
        act = grid.active_mask
        self.index_of = np.full((grid.ny, grid.nx), -1, dtype=np.int64)
        self.index_of[act] = np.arange(int(act.sum()))
        self.rows_iy, self.rows_ix = np.nonzero(act)
        self.n = int(act.sum())
        self.weights = (metric.sqrt_det_g * grid.h**2)[act]

        w11 = metric.sqrt_det_g * metric.g11
        w22 = metric.sqrt_det_g * metric.g22
        iy, ix = self.rows_iy, self.rows_ix
        rows, cols, data = [], [], []
        diag = np.zeros(self.n)
        scale = 1.0 / (metric.sqrt_det_g[iy, ix] * grid.h**2)
        for dy, dx, w in ((0, 1, w11), (0, -1, w11), (1, 0, w22), (-1, 0, w22)):
            jy, jx = iy + dy, ix + dx
            inb = (jy >= 0) & (jy < grid.ny) & (jx >= 0) & (jx < grid.nx)
            nb = np.full(self.n, -1, dtype=np.int64)
            nb[inb] = self.index_of[jy[inb], jx[inb]]
            open_face = nb >= 0
            wf = np.zeros(self.n)
            wf[open_face] = 0.5 * (
                w[iy[open_face], ix[open_face]] + w[jy[open_face], jx[open_face]]
            )
            coef = wf * scale
            diag += coef
            rows.append(np.nonzero(open_face)[0])
            cols.append(nb[open_face])
            data.append(-coef[open_face])
        rows.append(np.arange(self.n))
        cols.append(np.arange(self.n))
        data.append(diag)
        self.matrix = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n),
        ).tocsr()  # equals -lap_g in flux form

    def pack(self, values: np.ndarray) -> np.ndarray:
        return values[self.rows_iy, self.rows_ix]

    def unpack(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros((self.grid.ny, self.grid.nx))
        out[self.rows_iy, self.rows_ix] = vec
        return out

    def weighted_mean(self, vec: np.ndarray) -> float:
        return float(np.sum(vec * self.weights) / np.sum(self.weights))

    def solve(self, source_rows: np.ndarray) -> tuple[np.ndarray, SolveReport]:
        """Solve lap_g phi = -source with zero-flux rows and zero-mean gauge."""
        t0 = time.perf_counter()
        rhs = source_rows - self.weighted_mean(source_rows)  # exact compatibility
        A = self.matrix.tolil()
        A[0, :] = 0.0
        A[0, 0] = 1.0
        rhs[0] = 0.0
        lu = spla.splu(A.tocsr().tocsc())
        phi = lu.solve(rhs)
        phi = phi - self.weighted_mean(phi)
        resid_vec = self.matrix @ phi - (source_rows - self.weighted_mean(source_rows))
        denom = float(np.linalg.norm(source_rows)) or 1.0
        report = SolveReport(0, float(np.linalg.norm(resid_vec)) / denom,
                             "Direct", time.perf_counter() - t0)
        return phi, report


def _node_current(phi: np.ndarray, grid: Grid2D, metric: InverseMetricField):
    """J^i = g^ij d_j phi with mask-aware differences on active nodes."""
    gx, gy, ok = _masked_gradient(phi, grid.active_mask, grid.h)
    return metric.g11 * gx, metric.g22 * gy, ok


def invert_continuity(
    family: DensityFamily,
    t: float,
    grid: Grid2D,
    metric: InverseMetricField,
    p_floor: float | None = None,
) -> tuple[VectorField, ScalarField, SolveReport]:
    """Recover the curl-free flow velocity carrying d_t rho.

    Solves lap_g phi = -d_t rho with zero-flux rows and zero-mean gauge,
    then u^i = g^ij d_j phi / max(rho, floor^2).
    """
    op = _NeumannPoisson(grid, metric)
    src = family.drho_dt(grid, t)
    src_rows = op.pack(src)
    imbalance = abs(float(np.sum(src_rows * op.weights)))
    l1 = float(np.sum(np.abs(src_rows) * op.weights))
    if l1 > 0 and imbalance > 1e-6 * l1:
        raise IncompatibleSource(
            f"net source {imbalance:g} exceeds 1e-6 of its L1 mass {l1:g}"
        )
    phi_rows, report = op.solve(src_rows)
    phi = op.unpack(phi_rows)

    rho = family.rho(grid, t)
    floor = _floor_value(family.amplitude(grid, t), grid.active_mask, p_floor)
    jx, jy, ok = _node_current(phi, grid, metric)
    denom = np.maximum(rho, floor**2)
    ux = np.where(ok, jx / denom, 0.0)
    uy = np.where(ok, jy / denom, 0.0)
    u = VectorField(grid=grid, ux=ux, uy=uy, role="FlowVelocity", mask=ok)
    phi_field = ScalarField(grid=grid, values=phi, role="PoissonPotential")
    return u, phi_field, report


def continuity_residual(
    phi: ScalarField,
    family: DensityFamily,
    t: float,
    metric: InverseMetricField,
    p_floor: float | None = None,
) -> float:
    """|| div_g(rho u) + d_t rho ||_2 / || d_t rho ||_2 on unclipped interior nodes.

    The current is the flux-form gradient of phi, so away from the floor
    rho u = J and the divergence is the same conservative operator that the
    inversion solved; the residual is therefore solver-accuracy limited.
    """
    grid = phi.grid
    op = _NeumannPoisson(grid, metric)
    src = family.drho_dt(grid, t)
    div_j = -(op.matrix @ op.pack(phi.values))  # matrix is -lap_g
    resid_rows = div_j + op.pack(src)

    rho_rows = op.pack(family.rho(grid, t))
    floor = _floor_value(family.amplitude(grid, t), grid.active_mask, p_floor)
    interior_rows = op.pack(grid.interior_mask.astype(float)) > 0.5
    keep = interior_rows & (rho_rows > floor**2)
    denom = float(np.linalg.norm(op.pack(src)[keep]))
    if denom == 0.0:
        return float(np.linalg.norm(resid_rows[keep]))
    return float(np.linalg.norm(resid_rows[keep])) / denom


# ---------------------------------------------------------------------------
# Flat-space free-space kernel oracle
# ---------------------------------------------------------------------------

def greens_flow_oracle(
    family: DensityFamily,
    t: float,
    grid: Grid2D,
    metric: InverseMetricField,
    p_floor: float | None = None,
    chunk: int = 512,
) -> VectorField:
    """Direct summation of the free-space kernel for the flow velocity.

    u = grad psi / rho with psi(x) = sum_x' d_t rho(x') G(x - x') h^2 and the
    2D kernel G = -(1/2pi) ln|x - x'|.  Flat metric only; O(N^2) on purpose,
    as an independent check of the grid inversion.
    """
    if metric.kind != "Flat":
        raise UnsupportedMetric("free-space kernel oracle requires the flat metric")
    rho = family.rho(grid, t)
    act = grid.active_mask
    rho_max = float(rho[act].max())

    # decay precondition: density negligible outside the inner half of the grid
    xs, ys = grid.xs, grid.ys
    x_lo, x_hi = xs[0] + 0.25 * (xs[-1] - xs[0]), xs[-1] - 0.25 * (xs[-1] - xs[0])
    y_lo, y_hi = ys[0] + 0.25 * (ys[-1] - ys[0]), ys[-1] - 0.25 * (ys[-1] - ys[0])
    X, Y = grid.meshgrid()
    outer = act & ~((X >= x_lo) & (X <= x_hi) & (Y >= y_lo) & (Y <= y_hi))
    if np.any(outer) and float(rho[outer].max()) > 1e-8 * rho_max:
        raise DomainTooSmall("density does not decay below 1e-8 of its max "
                             "within the inner half of the grid")

    src = family.drho_dt(grid, t)
    iy, ix = np.nonzero(act)
    px, py = X[iy, ix], Y[iy, ix]
    sval = src[iy, ix] * grid.h**2

    # the singular self cell is integrated exactly:
    # integral of ln r over a cell of side h = h^2 (ln h + C), C = -1.06117543
    g_self = -0.5 / math.pi * (math.log(grid.h) - 1.0611754268825242)
    psi_rows = np.empty(len(px))
    for start in range(0, len(px), chunk):
        sl = slice(start, min(start + chunk, len(px)))
        dx = px[sl, None] - px[None, :]
        dy = py[sl, None] - py[None, :]
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore"):
            G = -0.25 / math.pi * np.log(r2)  # = -(1/2pi) ln r
        G[r2 == 0.0] = g_self
        psi_rows[sl] = G @ sval

    psi = np.zeros((grid.ny, grid.nx))
    psi[iy, ix] = psi_rows
    gx, gy, ok = _masked_gradient(psi, act, grid.h)
    floor = _floor_value(family.amplitude(grid, t), act, p_floor)
    denom = np.maximum(rho, floor**2)
    ux = np.where(ok, gx / denom, 0.0)
    uy = np.where(ok, gy / denom, 0.0)
    return VectorField(grid=grid, ux=ux, uy=uy, role="FlowVelocity", mask=ok)


def radial_flow_oracle(family, t: float, radii: np.ndarray, n_quad: int = 4096) -> np.ndarray:
    """u_r(r) = -(1/(r rho)) integral_0^r d_t rho r' dr' by trapezoid quadrature.

    Needs a radially symmetric family exposing `radial_profile`.
    """
    radii = np.asarray(radii, dtype=float)
    r_fine = np.linspace(0.0, float(radii.max()), n_quad)
    rho_f, drho_f = family.radial_profile(t, r_fine)
    integral = cumulative_trapezoid(drho_f * r_fine, r_fine, initial=0.0)
    rho_at, _ = family.radial_profile(t, radii)
    interp = np.interp(radii, r_fine, integral)
    out = np.zeros_like(radii)
    nz = radii > 0
    out[nz] = -interp[nz] / (radii[nz] * rho_at[nz])
    return out


# ---------------------------------------------------------------------------
# External-force synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForceReport:
    max_force_norm: float
    mean_force_norm: float
    masked_fraction: float
    residual_eq12: float
    grad_q_max_norm: float  # magnitude of the potential-gradient term, reported separately


def _advective(u: VectorField, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    mask = grid.active_mask
    dxx, dxy, _ = _masked_gradient(u.ux, mask, grid.h)
    dyx, dyy, _ = _masked_gradient(u.uy, mask, grid.h)
    cx = u.ux * dxx + u.uy * dxy
    cy = u.ux * dyx + u.uy * dyy
    return cx, cy


def _grad_q(family: DensityFamily, t: float, grid: Grid2D,
            metric: InverseMetricField, m: float, hbar: float,
            p_floor: float | None, scheme: str):
    P = ScalarField(grid=grid, values=family.amplitude(grid, t), role="Amplitude")
    Q = quantum_potential(P, metric, m=m, hbar=hbar, p_floor=p_floor, scheme=scheme)
    gx, gy, ok = _masked_gradient(Q.field.values, Q.mask, grid.h)
    return gx, gy, ok


def external_force(
    family: DensityFamily,
    t: float,
    grid: Grid2D,
    metric: InverseMetricField,
    m: float = 1.0,
    hbar: float = 1.0,
    dt: float = 1e-3,
    p_floor: float | None = None,
    with_residual: bool = True,
) -> tuple[VectorField, ForceReport]:
    """F = m (d_t u + (u . grad) u) + grad Q(amplitude), all on the shared grid.

    d_t u is a central difference over dt of the inverted flow; the residual
    reported alongside re-derives the time term at dt/2 and the potential
    term with the independent stencil, so it measures discretization error
    rather than an identity.
    """
    u_m, _, _ = invert_continuity(family, t - dt, grid, metric, p_floor)
    u_0, _, _ = invert_continuity(family, t, grid, metric, p_floor)
    u_p, _, _ = invert_continuity(family, t + dt, grid, metric, p_floor)

    dudt_x = (u_p.ux - u_m.ux) / (2.0 * dt)
    dudt_y = (u_p.uy - u_m.uy) / (2.0 * dt)
    conv_x, conv_y = _advective(u_0, grid)
    gqx, gqy, gq_ok = _grad_q(family, t, grid, metric, m, hbar, p_floor, "assembly")

    fx = m * (dudt_x + conv_x) + np.where(gq_ok, gqx, 0.0)
    fy = m * (dudt_y + conv_y) + np.where(gq_ok, gqy, 0.0)

    rho = family.rho(grid, t)
    eval_mask = grid.interior_mask & (rho >= EVAL_DENSITY_FRACTION * float(rho[grid.active_mask].max()))
    force = VectorField(grid=grid, ux=fx, uy=fy, role="ExternalForce", mask=eval_mask)

    norms = force.norm()[eval_mask]
    gq_norm = np.hypot(np.where(gq_ok, gqx, 0.0), np.where(gq_ok, gqy, 0.0))[eval_mask]
    masked_fraction = 1.0 - float(eval_mask.sum()) / float(grid.interior_mask.sum())

    residual = math.nan
    if with_residual:
        um2, _, _ = invert_continuity(family, t - dt / 2.0, grid, metric, p_floor)
        up2, _, _ = invert_continuity(family, t + dt / 2.0, grid, metric, p_floor)
        dudt2_x = (up2.ux - um2.ux) / dt
        dudt2_y = (up2.uy - um2.uy) / dt
        try:
            gqx2, gqy2, gq_ok2 = _grad_q(family, t, grid, metric, m, hbar, p_floor,
                                         "independent")
        except AllMasked:
            gqx2, gqy2, gq_ok2 = gqx, gqy, gq_ok
        rx = dudt2_x + conv_x + (np.where(gq_ok2, gqx2, 0.0) - fx) / m
        ry = dudt2_y + conv_y + (np.where(gq_ok2, gqy2, 0.0) - fy) / m
        num = float(np.linalg.norm(np.hypot(rx, ry)[eval_mask & gq_ok2]))
        den = float(np.linalg.norm((force.norm() / m)[eval_mask & gq_ok2]))
        # floor at an rms force of 1e-6 (natural units): a vanishing force
        # leaves nothing for a relative residual to measure
        den = max(den, 1e-6 * math.sqrt(max(int((eval_mask & gq_ok2).sum()), 1)))
        residual = num / den

    report = ForceReport(
        max_force_norm=float(norms.max()) if norms.size else 0.0,
        mean_force_norm=float(norms.mean()) if norms.size else 0.0,
        masked_fraction=masked_fraction,
        residual_eq12=residual,
        grad_q_max_norm=float(gq_norm.max()) if gq_norm.size else 0.0,
    )
    return force, report
