"""1+1 amplitude evolution on flat and conformally flat spacetimes.

The amplitude of a spinless relativistic particle with a vanished quantum
force obeys a Klein-Gordon equation with an effective mass.  Because the
inverse spacetime metric carries mixed eigenvalue signs, the wave operator
is hyperbolic and interior spacetime maxima are possible; this module
evolves the equation, checks the signature dichotomy, and detects interior
maxima over the spacetime cylinder.

Conventions: coordinates (t, x); stored inverse metric has signature (+,-),
g^tt = 1/c^2 and g^xx = -1 for the flat case.  The evolution integrates the
amplitude equation with the mass-term sign that yields the physical
dispersion law omega^2 = c^2 k^2 + m_eff^2 c^4 / hbar^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    AllMasked,
    CFLViolation,
    DegenerateMetric,
    NumericalBlowup,
)

DEFAULT_CFL_SAFETY = 0.9
BLOWUP_FACTOR = 1e6


# ---------------------------------------------------------------------------
# Spacetime metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinkowskiSpacetime:
    c: float = 1.0

    kind = "Minkowski"

    def g_lower(self, t, x):
        """Covariant components (g_tt, g_tx, g_xx)."""
        shape = np.broadcast(np.asarray(t), np.asarray(x)).shape
        one = np.ones(shape) if shape else 1.0
        return self.c**2 * one, 0.0 * one, -1.0 * one

    def g_inv(self, t, x):
        """Contravariant components (g^tt, g^tx, g^xx)."""
        shape = np.broadcast(np.asarray(t), np.asarray(x)).shape
        one = np.ones(shape) if shape else 1.0
        return one / self.c**2, 0.0 * one, -1.0 * one

    def christoffel(self, t, x) -> np.ndarray:
        return np.zeros((2, 2, 2))

    def contracted_christoffel(self, t, x):
        """A^sigma = g^munu Gamma^sigma_munu, vectorized over x."""
        z = np.zeros_like(np.asarray(x, dtype=float))
        return z, z.copy()


@dataclass(frozen=True, eq=False)
class ConformalMinkowski:
    """g_munu = exp(2 w(t,x)) eta_munu with analytic partials of w."""

    omega: Callable
    domega_dt: Callable
    domega_dx: Callable
    c: float = 1.0

    kind = "ConformalMinkowski"

    def g_lower(self, t, x):
        f = np.exp(2.0 * self.omega(t, x))
        return self.c**2 * f, 0.0 * f, -f

    def g_inv(self, t, x):
        f = np.exp(-2.0 * self.omega(t, x))
        return f / self.c**2, 0.0 * f, -f

    def christoffel(self, t, x) -> np.ndarray:
        """Hand-derived conformal table:

        G^t_tt = w_t        G^t_tx = w_x          G^t_xx = w_t / c^2
        G^x_tt = c^2 w_x    G^x_tx = w_t          G^x_xx = w_x
        """
        wt = float(self.domega_dt(t, x))
        wx = float(self.domega_dx(t, x))
        g = np.empty((2, 2, 2))
        g[0] = [[wt, wx], [wx, wt / self.c**2]]
        g[1] = [[self.c**2 * wx, wt], [wt, wx]]
        return g

    def contracted_christoffel(self, t, x):
        """A^sigma = g^munu Gamma^sigma_munu; cancels exactly in 1+1."""
        g00, _, g11 = self.g_inv(t, x)
        wt = np.asarray(self.domega_dt(t, x), dtype=float)
        wx = np.asarray(self.domega_dx(t, x), dtype=float)
        at = g00 * wt + g11 * (wt / self.c**2)
        ax = g00 * (self.c**2 * wx) + g11 * wx
        return at, ax


SpacetimeMetric1p1 = MinkowskiSpacetime | ConformalMinkowski


def christoffel(metric: SpacetimeMetric1p1, point: tuple[float, float]) -> np.ndarray:
    """All Gamma^sigma_munu at a point, symmetric in the lower indices."""
    g = metric.christoffel(point[0], point[1])
    return 0.5 * (g + np.swapaxes(g, 1, 2))


def christoffel_fd(metric, point: tuple[float, float], step: float = 1e-3) -> np.ndarray:
    """Finite-difference Christoffel symbols from central differences of g_munu.

    Works for any object exposing g_lower/g_inv; second-order in `step`.
    """
    t, x = point

    def lower(tt, xx):
        g_tt, g_tx, g_xx = metric.g_lower(tt, xx)
        return np.array([[float(g_tt), float(g_tx)], [float(g_tx), float(g_xx)]])

    dg = np.empty((2, 2, 2))  # dg[beta] = d_beta g_munu
    dg[0] = (lower(t + step, x) - lower(t - step, x)) / (2.0 * step)
    dg[1] = (lower(t, x + step) - lower(t, x - step)) / (2.0 * step)

    g_tt, g_tx, g_xx = metric.g_inv(t, x)
    ginv = np.array([[float(g_tt), float(g_tx)], [float(g_tx), float(g_xx)]])

    gamma = np.empty((2, 2, 2))
    for s in range(2):
        for mu in range(2):
            for nu in range(2):
                total = 0.0
                for b in range(2):
                    total += ginv[s, b] * (dg[mu][b, nu] + dg[nu][b, mu] - dg[b][mu, nu])
                gamma[s, mu, nu] = 0.5 * total
    return 0.5 * (gamma + np.swapaxes(gamma, 1, 2))


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KGState:
    x0: float
    h: float
    P: np.ndarray
    dPdt: np.ndarray
    t: float
    boundary: str = "dirichlet0"  # or "absorbing"

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(len(self.P))


@dataclass(frozen=True, eq=False)
class EvolutionSeries:
    slices: tuple[KGState, ...]
    energies: tuple[float, ...]
    cfl_number: float
    dt: float
    snapshot_every: int

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(s.t for s in self.slices)


def gaussian_pulse(center: float, width: float, amplitude: float = 1.0) -> Callable:
    return lambda x: amplitude * np.exp(-((x - center) ** 2) / (2.0 * width**2))


def moving_pulse_state(
    x0: float, h: float, n: int, center: float, width: float,
    speed: float, amplitude: float = 1.0, boundary: str = "dirichlet0",
) -> KGState:
    """Initial data for a pulse translating at `speed` (d'Alembert form)."""
    xs = x0 + h * np.arange(n)
    f = gaussian_pulse(center, width, amplitude)
    P = f(xs)
    dPdt = speed * (xs - center) / width**2 * P  # -speed * f'(x)
    return KGState(x0=x0, h=h, P=P, dPdt=dPdt, t=0.0, boundary=boundary)


def superpose(a: KGState, b: KGState) -> KGState:
    return KGState(x0=a.x0, h=a.h, P=a.P + b.P, dPdt=a.dPdt + b.dPdt,
                   t=a.t, boundary=a.boundary)


def _energy(P: np.ndarray, Pt: np.ndarray, h: float, g00, g11, mu2) -> float:
    Px = np.gradient(P, h, edge_order=2)
    dens = 0.5 * (np.abs(g00) * Pt**2 + np.abs(g11) * Px**2 + mu2 * P**2)
    return float(np.sum(dens) * h)


def evolve_kg(
    metric: SpacetimeMetric1p1,
    m_eff: float,
    initial: KGState,
    dt: float,
    steps: int,
    hbar: float = 1.0,
    snapshot_every: int = 1,
) -> EvolutionSeries:
    """Leapfrog evolution of the amplitude Klein-Gordon equation.

    Refuses to run when dt exceeds the CFL bound; raises NumericalBlowup if
    max|P| passes 1e6 times its initial value.  Snapshots carry the field,
    a central-difference dPdt, and the discrete wave energy.
    """
    if m_eff < 0:
        raise ValueError("effective mass must be nonnegative")
    xs = initial.xs
    h = initial.h
    n = len(xs)
    mu2 = (m_eff * metric.c / hbar) ** 2

    g00_0, _, g11_0 = metric.g_inv(initial.t, xs)
    speed = np.sqrt(np.abs(np.asarray(g11_0) / np.asarray(g00_0)))
    max_speed = float(np.max(speed))
    cfl = max_speed * dt / h
    if dt > DEFAULT_CFL_SAFETY * h / max_speed:
        raise CFLViolation(
            f"dt={dt:g} exceeds {DEFAULT_CFL_SAFETY} h / max speed = "
            f"{DEFAULT_CFL_SAFETY * h / max_speed:g}"
        )

    def accel(P, Pdot, t):
        """d_tt P from the field equation, diagonal metric."""
        g00, _, g11 = metric.g_inv(t, xs)
        g00 = np.broadcast_to(np.asarray(g00, dtype=float), P.shape)
        g11 = np.broadcast_to(np.asarray(g11, dtype=float), P.shape)
        pxx = np.zeros_like(P)
        pxx[1:-1] = (P[2:] - 2.0 * P[1:-1] + P[:-2]) / h**2
        at, ax = metric.contracted_christoffel(t, xs)
        px = np.zeros_like(P)
        px[1:-1] = (P[2:] - P[:-2]) / (2.0 * h)
        return (-g11 * pxx + at * Pdot + ax * px - mu2 * P) / g00

    def apply_boundary(P_new, P_old, t):
        if initial.boundary == "dirichlet0":
            P_new[0] = 0.0
            P_new[-1] = 0.0
        elif initial.boundary == "absorbing":
            # first-order outflow so pulses exit the lateral boundaries
            g00, _, g11 = metric.g_inv(t, xs[np.array([0, -1])])
            sp = np.sqrt(np.abs(np.asarray(g11) / np.asarray(g00)))
            lam0 = float(np.ravel(sp)[0]) * dt / h
            lam1 = float(np.ravel(sp)[-1]) * dt / h
            P_new[0] = P_old[0] + lam0 * (P_old[1] - P_old[0])
            P_new[-1] = P_old[-1] - lam1 * (P_old[-1] - P_old[-2])
        else:
            raise ValueError(f"unknown boundary treatment {initial.boundary!r}")

    p_prev = initial.P.copy()
    v0 = initial.dPdt.copy()
    a0 = accel(p_prev, v0, initial.t)
    p_cur = p_prev + dt * v0 + 0.5 * dt**2 * a0
    apply_boundary(p_cur, p_prev, initial.t + dt)

    p_max0 = float(np.abs(p_prev).max()) or 1.0

    g00s, _, g11s = metric.g_inv(initial.t, xs)
    slices = [KGState(initial.x0, h, p_prev.copy(), v0.copy(), initial.t,
                      initial.boundary)]
    energies = [_energy(p_prev, v0, h, g00s, g11s, mu2)]

    t = initial.t + dt
    for step in range(1, steps + 1):
        v_est = (p_cur - p_prev) / dt
        a = accel(p_cur, v_est, t)
        p_next = 2.0 * p_cur - p_prev + dt**2 * a
        apply_boundary(p_next, p_cur, t + dt)

        if float(np.abs(p_next).max()) > BLOWUP_FACTOR * p_max0:
            raise NumericalBlowup(f"max|P| exceeded {BLOWUP_FACTOR:g} x initial at t={t:g}")

        if step % snapshot_every == 0:
            v_slice = (p_next - p_prev) / (2.0 * dt)
            g00s, _, g11s = metric.g_inv(t, xs)
            slices.append(KGState(initial.x0, h, p_cur.copy(), v_slice, t,
                                  initial.boundary))
            energies.append(_energy(p_cur, v_slice, h, g00s, g11s, mu2))

        p_prev, p_cur = p_cur, p_next
        t += dt

    return EvolutionSeries(
        slices=tuple(slices),
        energies=tuple(energies),
        cfl_number=cfl,
        dt=dt,
        snapshot_every=snapshot_every,
    )


# ---------------------------------------------------------------------------
# Spacetime cylinder extremum detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpacetimeExtremumReport:
    interior_max: float
    interior_max_tx: tuple[float, float]
    boundary_max: float
    boundary_max_tx: tuple[float, float]
    margin: float
    verdict: str  # MaxOnBoundary | ConstantField | Violation
    tol_smp: float
    tol_const: float


def detect_interior_max(
    series: EvolutionSeries,
    tol_smp: float | None = None,
    tol_const: float | None = None,
) -> SpacetimeExtremumReport:
    """Interior-vs-boundary comparison of |P| over the spacetime cylinder.

    Boundary = initial slice, final slice, and the lateral spatial edges of
    every slice; everything else is interior.  The default tol_smp is 1e-2
    of the field scale: node sampling of a translating extremum wobbles by
    O((h/width)^2), so only an O(1) interior excess counts as a Violation.
    """
    if len(series.slices) < 3:
        raise ValueError("need at least 3 recorded slices")
    P = np.abs(np.stack([s.P for s in series.slices]))  # (nt, nx)
    nt, nx = P.shape
    boundary = np.zeros_like(P, dtype=bool)
    boundary[0, :] = True
    boundary[-1, :] = True
    boundary[:, 0] = True
    boundary[:, -1] = True
    interior = ~boundary

    times = np.asarray(series.times)
    xs = series.slices[0].xs

    def located_max(mask):
        work = np.where(mask, P, -np.inf)
        flat = int(np.argmax(work))
        it, ix = np.unravel_index(flat, P.shape)
        return float(P[it, ix]), (float(times[it]), float(xs[ix]))

    imax, imax_tx = located_max(interior)
    bmax, bmax_tx = located_max(boundary)

    scale = max(float(P.max()), 1.0)
    if tol_smp is None:
        tol_smp = 1e-2 * scale
    if tol_const is None:
        tol_const = 1e-8 * scale

    if float(P.max()) - float(P.min()) <= tol_const:
        verdict = "ConstantField"
    elif imax > bmax + tol_smp:
        verdict = "Violation"
    else:
        verdict = "MaxOnBoundary"

    return SpacetimeExtremumReport(
        interior_max=imax, interior_max_tx=imax_tx,
        boundary_max=bmax, boundary_max_tx=bmax_tx,
        margin=bmax - imax, verdict=verdict,
        tol_smp=tol_smp, tol_const=tol_const,
    )


# ---------------------------------------------------------------------------
# Relativistic quantum-potential plateau check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialDeviationReport:
    mean_q: float
    std_q: float
    lambda_equation: float      # plateau implied by the evolved equation
    lambda_nominal: float       # m_eff c^2 reference value
    deviation_equation: float   # | |mean_q| - lambda_equation |
    deviation_nominal: float    # | |mean_q| - lambda_nominal |
    n_nodes: int
    asserted: bool              # False when m0 != m_eff (nothing claimed)


def quantum_potential_deviation(
    series: EvolutionSeries,
    metric: SpacetimeMetric1p1,
    m_eff: float,
    m0: float | None = None,
    hbar: float = 1.0,
    floor_fraction: float = 1e-3,
) -> PotentialDeviationReport:
    """Discrete spacetime quantum potential of an evolved amplitude.

    Q = -(hbar^2 / 2 m0) g^munu (d_mu d_nu P - Gamma^sigma_munu d_sigma P)/P
    on interior slices/nodes with |P| above a floor.  For solutions of the
    evolved equation the magnitude plateaus at m_eff^2 c^2 / (2 m0) up to
    O(h^2 + dt^2); the report also carries the distance to the nominal
    m_eff c^2 scale.  Sign conventions are normalized away by comparing
    magnitudes.
    """
    if m0 is None:
        m0 = m_eff
    if m0 <= 0:
        raise ValueError("m0 must be positive")
    if len(series.slices) < 3:
        raise ValueError("need at least 3 recorded slices")

    P = np.stack([s.P for s in series.slices])
    times = np.asarray(series.times)
    dts = np.diff(times)
    if not np.allclose(dts, dts[0]):
        raise ValueError("slices must be equally spaced in time")
    dt = float(dts[0])
    xs = series.slices[0].xs
    h = series.slices[0].h

    ptt = (P[2:, :] - 2.0 * P[1:-1, :] + P[:-2, :]) / dt**2
    pxx = (P[1:-1, 2:] - 2.0 * P[1:-1, 1:-1] + P[1:-1, :-2]) / h**2
    pt = (P[2:, :] - P[:-2, :]) / (2.0 * dt)
    px = (P[1:-1, 2:] - P[1:-1, :-2]) / (2.0 * h)

    P_in = P[1:-1, 1:-1]
    ptt = ptt[:, 1:-1]
    pt = pt[:, 1:-1]

    T, X = np.meshgrid(times[1:-1], xs[1:-1], indexing="ij")
    g00, _, g11 = metric.g_inv(T, X)
    g00 = np.broadcast_to(np.asarray(g00, dtype=float), P_in.shape)
    g11 = np.broadcast_to(np.asarray(g11, dtype=float), P_in.shape)

    if metric.kind == "Minkowski":
        gamma_term = 0.0
    else:
        at, ax = metric.contracted_christoffel(T, X)
        gamma_term = at * pt + ax * px

    floor = floor_fraction * float(np.abs(P).max())
    mask = np.abs(P_in) >= floor
    if not np.any(mask):
        raise AllMasked("no spacetime node above the amplitude floor")

    wave = g00 * ptt + g11 * pxx - gamma_term
    q = -(hbar**2 / (2.0 * m0)) * wave[mask] / P_in[mask]

    lam_eq = m_eff**2 * metric.c**2 / (2.0 * m0)
    lam_nom = m_eff * metric.c**2
    mean_q = float(np.mean(q))
    return PotentialDeviationReport(
        mean_q=mean_q,
        std_q=float(np.std(q)),
        lambda_equation=lam_eq,
        lambda_nominal=lam_nom,
        deviation_equation=abs(abs(mean_q) - lam_eq),
        deviation_nominal=abs(abs(mean_q) - lam_nom),
        n_nodes=int(mask.sum()),
        asserted=(m0 == m_eff),
    )


# ---------------------------------------------------------------------------
# Signature dichotomy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignatureReport:
    points: tuple[tuple[float, float], ...]
    eigen_signs: tuple[tuple[int, int], ...]
    verdict: str  # RiemannianDefinite | LorentzianMixed


def _inverse_matrix_at(metric, point) -> np.ndarray:
    # works for spacetime metrics (point = (t, x)) and Riemannian metric
    # specs (point = (x, y)) alike: both expose g_inv over two coordinates
    a, b, d = metric.g_inv(np.asarray(point[0]), np.asarray(point[1]))
    return np.array([[float(a), float(b)], [float(b), float(d)]])


def signature_check(metric, points) -> SignatureReport:
    """Eigenvalue signs of the 2x2 inverse metric at each sample point."""
    pts = [tuple(float(v) for v in p) for p in points]
    if not pts:
        raise ValueError("need at least one sample point")
    signs = []
    mixed = False
    for p in pts:
        mat = _inverse_matrix_at(metric, p)
        eig = np.linalg.eigvalsh(mat)
        if np.any(np.abs(eig) < 1e-12):
            raise DegenerateMetric(f"eigenvalue magnitude below 1e-12 at {p}")
        s = (int(np.sign(eig[0])), int(np.sign(eig[1])))
        signs.append(s)
        if s[0] != s[1]:
            mixed = True
    return SignatureReport(
        points=tuple(pts),
        eigen_signs=tuple(signs),
        verdict="LorentzianMixed" if mixed else "RiemannianDefinite",
    )
