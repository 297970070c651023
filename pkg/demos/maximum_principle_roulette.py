"""Randomized stress test of the discrete maximum principle.

Draws random metric/domain/boundary-data triples and checks that no solve
ever places its maximum strictly inside the domain.
"""

import numpy as np

import boundarymax as bm
from boundarymax.cases import random_smp_case

N_CASES = 20
H = 1 / 48

worst_margin = np.inf
violations = 0
for seed in range(N_CASES):
    case = random_smp_case(seed)
    grid = bm.build_grid(case.domain, H)
    metric = bm.sample_metric(case.metric_spec, grid)
    system = bm.assemble_classicality(grid, metric, C=0.0)
    field, _ = bm.solve_dirichlet(system, case.boundary)
    report = bm.verify_smp(field)
    worst_margin = min(worst_margin, report.margin)
    if report.verdict == "Violation":
        violations += 1
    print(f"seed {seed:2d}: {case.describe['metric']:9s} on "
          f"{case.describe['shape']:12s} -> {report.verdict:13s} "
          f"margin {report.margin:+.3e}")

print(f"\n{violations} violations in {N_CASES} cases; "
      f"worst boundary-minus-interior margin {worst_margin:+.3e}")
