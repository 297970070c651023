import math

import numpy as np
import pytest
from scipy import ndimage

import boundarymax as bm
from boundarymax.geometry import classify_nodes


# ---------------------------------------------------------------------------
# node classification
# ---------------------------------------------------------------------------

def test_classification_hand_example():
    # disc r=1, lattice spacing 0.5: center interior, (0.5, 0.5) boundary
    disc = bm.Disc((0.0, 0.0), 1.0)
    xs = np.arange(-2.0, 2.01, 0.5)
    cls = classify_nodes(disc, xs, xs)
    i0 = 4  # index of coordinate 0.0
    assert cls[i0, i0] == bm.NodeClass.INTERIOR
    assert cls[i0 + 1, i0 + 1] == bm.NodeClass.BOUNDARY
    # neighbor (1.0, 0.5) has norm sqrt(1.25) > 1, hence the boundary class
    assert not disc.inside(1.0, 0.5)


def test_build_grid_rejects_coarse_spacing():
    with pytest.raises(bm.SpacingTooCoarse):
        bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 0.5)


def test_exterior_outside_bbox_inset():
    grid = bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 1 / 16)
    assert grid.node_class[0, 0] == bm.NodeClass.EXTERIOR
    assert grid.node_class[-1, -1] == bm.NodeClass.EXTERIOR


def test_superellipse_p2_matches_disc():
    disc = bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 0.1)
    se = bm.build_grid(bm.Superellipse((0.0, 0.0), 1.0, 1.0, 2.0), 0.1)
    assert np.array_equal(disc.node_class, se.node_class)


@pytest.mark.parametrize("seed", range(8))
def test_grid_classification_invariants(seed):
    from boundarymax.cases import random_smp_case

    case = random_smp_case(seed)
    grid = bm.build_grid(case.domain, 1 / 32)
    cls = grid.node_class
    ny, nx = cls.shape
    X, Y = grid.meshgrid()
    inside = np.asarray(case.domain.inside(X, Y), dtype=bool)

    iy, ix = np.nonzero(cls == bm.NodeClass.INTERIOR)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        assert np.all(cls[iy + dy, ix + dx] != bm.NodeClass.EXTERIOR)

    by, bx = np.nonzero(cls == bm.NodeClass.BOUNDARY)
    assert np.all(inside[by, bx])
    has_outside_neighbor = np.zeros(len(by), dtype=bool)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        jy = np.clip(by + dy, 0, ny - 1)
        jx = np.clip(bx + dx, 0, nx - 1)
        has_outside_neighbor |= ~inside[jy, jx]
    assert np.all(has_outside_neighbor)

    active = cls != bm.NodeClass.EXTERIOR
    _, n_comp = ndimage.label(active, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    assert n_comp == 1


def test_polygon_convexity_and_membership():
    with pytest.raises(bm.NonConvexDomain):
        bm.ConvexPolygon(((0, 0), (2, 0), (1, 1), (2, 2), (0, 2)))
    with pytest.raises(bm.NonConvexDomain):
        bm.Superellipse((0, 0), 1, 1, 1.5)
    hexa = bm.regular_polygon((2.5, 2.5), 1.5, 6)
    cx, cy = hexa.centroid()
    assert hexa.inside(cx, cy)
    r2 = 2.0 * hexa.circumradius()
    for th in np.linspace(0, 2 * math.pi, 13):
        assert not hexa.inside(cx + r2 * math.cos(th), cy + r2 * math.sin(th))


# ---------------------------------------------------------------------------
# metric sampling
# ---------------------------------------------------------------------------

def test_flat_metric_samples(unit_disc_grid, flat_metric_on_disc):
    met = flat_metric_on_disc
    assert np.all(met.g11 == 1.0) and np.all(met.g22 == 1.0)
    assert not np.any(met.g12)
    assert np.all(met.sqrt_det_g == 1.0)
    assert not np.any(met.bx) and not np.any(met.by)


def test_conformal_values_at_named_points():
    spec = bm.ConformalMetric()  # mu = 2.5 on both axes
    g11, g12, g22 = spec.g_inv(2.5, 2.5)
    assert g11 == pytest.approx(2.0, abs=0) and g22 == pytest.approx(2.0, abs=0)
    assert g12 == 0.0
    g11b, _, _ = spec.g_inv(2.5, 3.5)
    assert g11b == pytest.approx(1.0 + math.exp(-1.0), rel=1e-15)


def test_conformal_field_identities():
    spec = bm.ConformalMetric()
    grid = bm.build_grid(bm.Disc((2.5, 2.5), 1.5), 1 / 32)
    met = bm.sample_metric(spec, grid)
    X, Y = grid.meshgrid()
    om = spec.omega(X, Y)
    assert np.array_equal(met.sqrt_det_g, 1.0 / om)
    assert np.abs(met.bx).max() == 0.0 and np.abs(met.by).max() == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_metric_positive_definite_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    spec = bm.DiagonalMetric(
        a0=rng.uniform(0.6, 2.0), a1=rng.uniform(-0.5, 0.5),
        d0=rng.uniform(0.6, 2.0), d1=rng.uniform(-0.5, 0.5),
        k1=rng.uniform(0.5, 3.0), k2=rng.uniform(0.5, 3.0),
    )
    # keep |a1| < a0 and |d1| < d0
    spec = bm.DiagonalMetric(a0=spec.a0, a1=min(abs(spec.a1), 0.5 * spec.a0),
                             d0=spec.d0, d1=min(abs(spec.d1), 0.5 * spec.d0),
                             k1=spec.k1, k2=spec.k2)
    grid = bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 1 / 16)
    met = bm.sample_metric(spec, grid)
    tr = met.g11 + met.g22
    det = met.g11 * met.g22 - met.g12**2
    assert np.all(tr > 0) and np.all(det > 0)
    assert np.all(met.min_eigenvalue() > 0)


def test_not_positive_definite_reports_location():
    spec = bm.DiagonalMetric(a0=1.0, a1=1.5, k1=1.0, k2=1.0)  # a goes negative
    grid = bm.build_grid(bm.Disc((0.0, 0.0), 2.0), 1 / 8)
    with pytest.raises(bm.NotPositiveDefinite) as err:
        bm.sample_metric(spec, grid)
    assert hasattr(err.value, "x") and hasattr(err.value, "y")


def test_sampled_drift_matches_analytic_at_second_order():
    spec = bm.DiagonalMetric(a0=1.0, a1=0.3, d0=1.5, d1=0.4, k1=1.3, k2=0.9)
    dom = bm.Disc((0.3, 0.2), 1.0)
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        grid = bm.build_grid(dom, h)
        exact = bm.sample_metric(spec, grid)
        fd = bm.sample_metric(bm.SampledMetric.from_spec(spec, grid), grid)
        m = grid.interior_mask
        errs.append(max(np.abs(fd.bx - exact.bx)[m].max(),
                        np.abs(fd.by - exact.by)[m].max()))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(1.8 <= p <= 2.2 for p in orders)


def test_metric_csv_round_trip(tmp_path):
    spec = bm.DiagonalMetric(a0=1.2, a1=0.2, d0=0.9, d1=0.1, k1=2.0, k2=1.5)
    grid = bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 1 / 8)
    samp = bm.SampledMetric.from_spec(spec, grid)
    path = tmp_path / "metric.csv"
    samp.to_csv(path)
    loaded = bm.SampledMetric.from_csv(path)
    assert loaded.matches_grid(grid)
    assert np.array_equal(loaded.g11, samp.g11)
    assert np.array_equal(loaded.g12, samp.g12)
    assert np.array_equal(loaded.g22, samp.g22)


def test_metric_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,g11,g22\n0,0,1,1\n")
    with pytest.raises(bm.MalformedCSV):
        bm.SampledMetric.from_csv(path)
