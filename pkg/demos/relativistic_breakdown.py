"""Why the boundary effect dies in spacetime.

The same vanished-quantum-force logic applied to a relativistic amplitude
yields a hyperbolic (Klein-Gordon) equation.  Two colliding pulses then park
the spacetime maximum of |P| strictly inside the evolution cylinder, which
an elliptic problem could never do.  The signature check shows why.
"""

import numpy as np

import boundarymax as bm

metric = bm.MinkowskiSpacetime(c=1.0)
sig = bm.signature_check(metric, [(0.0, 0.0)])
print(f"inverse-metric eigenvalue signs: {sig.eigen_signs[0]} -> {sig.verdict}")
flat = bm.signature_check(bm.FlatMetric(), [(0.0, 0.0)])
print(f"spatial comparison:              {flat.eigen_signs[0]} -> {flat.verdict}\n")

h = 1 / 256
n = 257
right = bm.moving_pulse_state(0.0, h, n, center=0.25, width=0.05, speed=+1.0,
                              boundary="absorbing")
left = bm.moving_pulse_state(0.0, h, n, center=0.75, width=0.05, speed=-1.0,
                             boundary="absorbing")
state = bm.superpose(right, left)

dt = 0.5 * h
steps = int(round(1.0 / dt))
snap = steps // 100
series = bm.evolve_kg(metric, 0.0, state, dt, (steps // snap) * snap,
                      snapshot_every=snap)
report = bm.detect_interior_max(series)

print(f"evolved {len(series.slices)} slices at CFL {series.cfl_number}")
print(f"interior max {report.interior_max:.3f} at (t, x) = {report.interior_max_tx}")
print(f"boundary max {report.boundary_max:.3f} at (t, x) = {report.boundary_max_tx}")
print(f"verdict: {report.verdict} "
      f"(ratio {report.interior_max / report.boundary_max:.2f})")

energies = np.asarray(series.energies)
times = np.asarray(series.times)
pre_exit = times <= 0.55
print(f"energy drift before the pulses exit: "
      f"{np.abs(energies[pre_exit] - energies[0]).max() / energies[0]:.2%}")
