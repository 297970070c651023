import numpy as np
import pytest

import boundarymax as bm


@pytest.fixture(scope="session")
def unit_disc_grid():
    grid = bm.build_grid(bm.Disc((0.0, 0.0), 1.0), 1 / 32)
    return grid


@pytest.fixture(scope="session")
def flat_metric_on_disc(unit_disc_grid):
    return bm.sample_metric(bm.FlatMetric(), unit_disc_grid)


@pytest.fixture(scope="session")
def conformal_screened_solution():
    """Two-bump conformal metric on a disc, C = -0.5, unit boundary data."""
    spec = bm.ConformalMetric()
    domain = bm.Disc((2.5, 2.5), 1.5)
    grid = bm.build_grid(domain, 1 / 64)
    metric = bm.sample_metric(spec, grid)
    system = bm.assemble_classicality(grid, metric, C=-0.5)
    field, report = bm.solve_dirichlet(system, 1.0)
    return dict(spec=spec, domain=domain, grid=grid, metric=metric,
                system=system, field=field, report=report)


def relative_l2(du, ref):
    return float(np.linalg.norm(du) / np.linalg.norm(ref))
