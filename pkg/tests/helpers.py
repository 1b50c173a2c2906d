"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from jetflow import numdiff as nd
from jetflow.geometry import metric_from_name
from jetflow.jetspace import random_jet

TOL_LAW = 1e-8          # transformation-law agreement
TOL_EXACT = 1e-12       # identities that hold to rounding


def catalog(rng: np.random.Generator, p: int, n: int, kinds=("affine", "shear", "mixed"),
            count: int = 3):
    return nd.change_catalog(rng, p, n, list(kinds), count)


def jets_in(rng: np.random.Generator, p: int, n: int, h=None, phi=None, count: int = 12,
            v_scale: float = 2.0):
    return [random_jet(rng, p, n,
                       box_t=None if h is None else h.box,
                       box_x=None if phi is None else phi.box,
                       v_scale=v_scale)
            for _ in range(count)]


def standard_metrics(p: int = 2, n: int = 2):
    """A curved temporal and a curved spatial metric of the given dimensions."""
    if p == 1:
        h = metric_from_name("exp1d")
    elif p == 2:
        h = metric_from_name("conformal2d:0.3*t1 - 0.2*t2")
    else:
        h = metric_from_name(f"euclidean:{p}", kind="temporal")
    if n == 2:
        phi = metric_from_name("sphere:2")
    else:
        phi = metric_from_name(f"euclidean:{n}")
    return h, phi


def fd_spray_gradient(s, u, eps: float = 1e-6) -> np.ndarray:
    """Centered differences of spray coefficients in the jet coordinates."""
    from jetflow.jetspace import JetPoint
    out = np.zeros((s.n, s.p, s.p, s.n, s.p))
    for k in range(s.n):
        for g in range(s.p):
            vp = u.v.copy(); vp[k, g] += eps
            vm = u.v.copy(); vm[k, g] -= eps
            plus = s.coefficients(JetPoint(u.t, u.x, vp))
            minus = s.coefficients(JetPoint(u.t, u.x, vm))
            out[:, :, :, k, g] = (plus - minus) / (2 * eps)
    return out
