"""Randomized problem generation for maximum-principle sweeps.

Parameter ranges are chosen so every drawn metric is positive-definite and
satisfies the mesh-Peclet bound at the sweep spacing (h = 1/64 or finer),
keeping the all-central-difference discretization an M-matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    ConformalMetric,
    ConvexPolygon,
    DiagonalMetric,
    Disc,
    Domain,
    MetricSpec,
    Superellipse,
    regular_polygon,
)


@dataclass(frozen=True)
class RandomCase:
    seed: int
    domain: Domain
    metric_spec: MetricSpec
    boundary: Callable
    describe: dict


def random_smp_case(seed: int) -> RandomCase:
    """Draw a (metric, convex domain, nonnegative boundary data) triple."""
    rng = np.random.default_rng(seed)

    kind = rng.choice(["conformal", "diagonal"])
    if kind == "conformal":
        spec = ConformalMetric(
            mu_x=float(rng.uniform(-1.0, 4.0)),
            mu_y=float(rng.uniform(-1.0, 4.0)),
            scale=float(rng.uniform(0.5, 2.0)),
            offset=float(rng.uniform(0.0, 0.5)),
        )
    else:
        a0 = float(rng.uniform(0.6, 2.0))
        d0 = float(rng.uniform(0.6, 2.0))
        spec = DiagonalMetric(
            a0=a0,
            a1=float(rng.uniform(0.0, 0.5) * a0),
            d0=d0,
            d1=float(rng.uniform(0.0, 0.5) * d0),
            k1=float(rng.uniform(0.5, 3.0)),
            k2=float(rng.uniform(0.5, 3.0)),
        )

    shape = rng.choice(["disc", "superellipse", "polygon"])
    cx, cy = float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0))
    if shape == "disc":
        domain: Domain = Disc((cx, cy), float(rng.uniform(0.8, 1.6)))
    elif shape == "superellipse":
        domain = Superellipse(
            (cx, cy),
            a=float(rng.uniform(0.8, 1.5)),
            b=float(rng.uniform(0.8, 1.5)),
            p=float(rng.uniform(2.0, 6.0)),
        )
    else:
        domain = regular_polygon(
            (cx, cy),
            circumradius=float(rng.uniform(0.9, 1.6)),
            n_sides=int(rng.integers(3, 9)),
            phase=float(rng.uniform(0.0, math.pi)),
        )

    alpha = float(rng.uniform(0.0, 0.5))
    beta = float(rng.uniform(0.2, 1.5))
    k = float(rng.uniform(0.5, 3.0))
    theta = float(rng.uniform(0.0, 2.0 * math.pi))
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    ct, st = math.cos(theta), math.sin(theta)

    def boundary(x, y):
        return alpha + beta * 0.5 * (1.0 + np.sin(k * (x * ct + y * st) + phase))

    describe = {
        "metric": kind,
        "shape": shape,
        "boundary": {"alpha": alpha, "beta": beta, "k": k, "theta": theta,
                     "phase": phase},
    }
    return RandomCase(seed=seed, domain=domain, metric_spec=spec,
                      boundary=boundary, describe=describe)
