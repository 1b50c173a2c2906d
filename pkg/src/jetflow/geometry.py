"""Pseudo-Riemannian metrics on the source or target factor and their
Christoffel symbols.

A Metric stores its components symbolically (Exprs over t1..tp for a
temporal metric, x1..xn for a spatial one), so first derivatives and the
pullback along a product chart change are exact.  A small named catalog
covers the standard test metrics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .exprlang import (
    Expr, add, diff, div, free_vars, mul, neg, num, parse, sub, subst, var,
)
from .numdiff import ChangeMap, jet_name, spatial_names, temporal_names

__all__ = [
    "GeometryError", "Metric", "ChristoffelField", "christoffel",
    "metric_from_name", "pullback_metric", "energy_density",
]

DET_TOL = 1e-12


class GeometryError(ValueError):
    pass


def _as_points(points: np.ndarray, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[-1] != dim:
        raise GeometryError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts


def _broadcast(value, count: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(count, float(arr))
    return arr


class Metric:
    """Symmetric nondegenerate metric with symbolic components.

    kind is "temporal" (components over t1..tp) or "spatial" (over x1..xn).
    box optionally bounds the chart domain where nondegeneracy is certified.
    """

    def __init__(self, name: str, kind: str, components: Sequence[Sequence[Expr]],
                 box: Sequence[tuple[float, float]] | None = None):
        if kind not in ("temporal", "spatial"):
            raise GeometryError(f"metric kind must be temporal or spatial, got {kind!r}")
        self.name = name
        self.kind = kind
        self.components = [list(row) for row in components]
        self.dim = len(self.components)
        self.box = None if box is None else [tuple(b) for b in box]
        allowed = set(self.variables)
        for row in self.components:
            if len(row) != self.dim:
                raise GeometryError("metric component matrix is not square")
            for e in row:
                bad = free_vars(e) - allowed
                if bad:
                    raise GeometryError(
                        f"{kind} metric component references foreign variables {sorted(bad)}")

    @property
    def variables(self) -> list[str]:
        if self.kind == "temporal":
            return temporal_names(self.dim)
        return spatial_names(self.dim)

    @cached_property
    def _dg(self) -> list[list[list[Expr]]]:
        """dg[c][a][b] = d g_ab / d coord_c."""
        names = self.variables
        return [[[diff(self.components[a][b], c) for b in range(self.dim)]
                 for a in range(self.dim)] for c in names]

    def components_at(self, point: np.ndarray) -> np.ndarray:
        env = dict(zip(self.variables, np.asarray(point, float)))
        g = np.array([[e.eval(env) for e in row] for row in self.components], dtype=float)
        return g

    def components_batch(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        env = {v: pts[:, k] for k, v in enumerate(self.variables)}
        count = pts.shape[0]
        rows = [[_broadcast(e.eval(env), count) for e in row] for row in self.components]
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    def inverse_at(self, point: np.ndarray) -> np.ndarray:
        g = self.components_at(point)
        if abs(np.linalg.det(g)) < DET_TOL:
            raise GeometryError(f"metric '{self.name}' is degenerate at {np.asarray(point)}")
        return np.linalg.inv(g)

    def inverse_batch(self, points: np.ndarray) -> np.ndarray:
        g = self.components_batch(points)
        det = np.linalg.det(g)
        if np.any(np.abs(det) < DET_TOL):
            raise GeometryError(f"metric '{self.name}' is degenerate on the point set")
        return np.linalg.inv(g)

    def inverse_components(self) -> list[list[Expr]]:
        """Symbolic inverse matrix (dim <= 3) via the adjugate formula."""
        g = self.components
        d = self.dim
        if d == 1:
            return [[div(num(1.0), g[0][0])]]
        if d == 2:
            det = sub(mul(g[0][0], g[1][1]), mul(g[0][1], g[1][0]))
            return [[div(g[1][1], det), div(neg(g[0][1]), det)],
                    [div(neg(g[1][0]), det), div(g[0][0], det)]]
        if d == 3:
            def minor(r, c):
                rows = [i for i in range(3) if i != r]
                cols = [j for j in range(3) if j != c]
                return sub(mul(g[rows[0]][cols[0]], g[rows[1]][cols[1]]),
                           mul(g[rows[0]][cols[1]], g[rows[1]][cols[0]]))
            det: Expr = num(0.0)
            for j in range(3):
                term = mul(g[0][j], minor(0, j))
                det = add(det, term) if j % 2 == 0 else sub(det, term)
            out = [[None] * 3 for _ in range(3)]
            for i in range(3):
                for j in range(3):
                    cof = minor(j, i)
                    out[i][j] = div(cof, det) if (i + j) % 2 == 0 else div(neg(cof), det)
            return out
        raise GeometryError("symbolic metric inverse implemented for dim <= 3")

    def christoffel_at(self, point: np.ndarray) -> np.ndarray:
        """Levi-Civita coefficients G[a, b, c] = Gamma^a_bc at a point."""
        return self.christoffel_batch(np.asarray(point, float)[None, :])[0]

    def christoffel_batch(self, points: np.ndarray) -> np.ndarray:
        pts = _as_points(points, self.dim)
        count, d = pts.shape
        env = {v: pts[:, k] for k, v in enumerate(self.variables)}
        dg = np.empty((count, d, d, d))
        for c in range(d):
            for a in range(d):
                for b in range(d):
                    dg[:, c, a, b] = _broadcast(self._dg[c][a][b].eval(env), count)
        ginv = self.inverse_batch(pts)
        # Gamma^a_bc = (1/2) g^{ad} (d_b g_dc + d_c g_bd - d_d g_bc)
        d_b_g_dc = dg.transpose(0, 2, 1, 3)   # [q, d, b, c] = dg[q, b, d, c]
        d_c_g_bd = dg.transpose(0, 3, 2, 1)   # [q, d, b, c] = dg[q, c, b, d]
        lowered = d_b_g_dc + d_c_g_bd - dg
        return 0.5 * np.einsum("qad,qdbc->qabc", ginv, lowered)

    def __repr__(self):
        return f"Metric({self.name!r}, kind={self.kind!r}, dim={self.dim})"


@dataclass(frozen=True)
class ChristoffelField:
    """Christoffel symbols of a metric as an evaluable field."""

    metric: Metric

    def at(self, point: np.ndarray) -> np.ndarray:
        return self.metric.christoffel_at(point)

    def batch(self, points: np.ndarray) -> np.ndarray:
        return self.metric.christoffel_batch(points)


def christoffel(metric: Metric, point: np.ndarray) -> np.ndarray:
    return metric.christoffel_at(point)


# ---------------------------------------------------------------------------
# pullback


def pullback_metric(metric: Metric, change: ChangeMap) -> Metric:
    """Express a metric in the target chart of a product change.

    g~_{cd}(u) = g_{ab}(phi^{-1}(u)) * d phi^{-1 a}/d u^c * d phi^{-1 b}/d u^d,
    built by Expr substitution, so the result is exact.
    """
    if metric.kind == "temporal":
        if change.p != metric.dim:
            raise GeometryError("temporal change dimension does not match metric")
        inv_exprs = change.inverse_t
        dinv = change._dit
        names = temporal_names(metric.dim)
    else:
        if change.n != metric.dim:
            raise GeometryError("spatial change dimension does not match metric")
        inv_exprs = change.inverse_x
        dinv = change._dix
        names = spatial_names(metric.dim)
    back = dict(zip(names, inv_exprs))
    d = metric.dim
    comp = [[subst(metric.components[a][b], back) for b in range(d)] for a in range(d)]
    out = [[num(0.0) for _ in range(d)] for _ in range(d)]
    for c in range(d):
        for e in range(d):
            acc: Expr = num(0.0)
            for a in range(d):
                for b in range(d):
                    acc = add(acc, mul(mul(comp[a][b], dinv[a][c]), dinv[b][e]))
            out[c][e] = acc
    return Metric(f"{metric.name}@{change.name}", metric.kind, out, box=None)


# ---------------------------------------------------------------------------
# catalog


def _diag(entries: Sequence[str]) -> list[list[Expr]]:
    d = len(entries)
    zero = num(0.0)
    return [[parse(entries[a]) if a == b else zero for b in range(d)] for a in range(d)]


def metric_from_name(name: str, kind: str | None = None) -> Metric:
    """Builtin metric catalog.

    euclidean:N       identity metric in N coordinates
    sphere:2          diag(1, sin(x1)^2) on x1 in (0.2, pi - 0.2)
    hyperbolic:2      diag(1/x2^2, 1/x2^2) on x2 > 0.1
    exp1d             single temporal coordinate, h11 = exp(2*t1)
    conformal2d:EXPR  exp(2*lambda(t)) * delta on two temporal coordinates
    """
    head, _, param = name.partition(":")
    if head == "euclidean":
        d = int(param)
        k = kind or "spatial"
        names = temporal_names(d) if k == "temporal" else spatial_names(d)
        comp = [[num(1.0) if a == b else num(0.0) for b in range(d)] for a in range(d)]
        return Metric(name, k, comp, box=[(-2.0, 2.0)] * d)
    if head == "sphere":
        if param != "2":
            raise GeometryError("sphere metric is 2-dimensional: use sphere:2")
        k = kind or "spatial"
        v = "x1" if k == "spatial" else "t1"
        comp = _diag(["1", f"sin({v})^2"])
        return Metric(name, k, comp, box=[(0.2, float(np.pi) - 0.2), (-3.0, 3.0)])
    if head == "hyperbolic":
        if param != "2":
            raise GeometryError("hyperbolic metric is 2-dimensional: use hyperbolic:2")
        k = kind or "spatial"
        v = "x2" if k == "spatial" else "t2"
        comp = _diag([f"1/{v}^2", f"1/{v}^2"])
        return Metric(name, k, comp, box=[(-2.0, 2.0), (0.1, 3.0)])
    if head == "exp1d":
        k = kind or "temporal"
        v = "t1" if k == "temporal" else "x1"
        return Metric(name, k, [[parse(f"exp(2*{v})")]], box=[(-1.5, 1.5)])
    if head == "conformal2d":
        k = kind or "temporal"
        lam = parse(param) if param else num(0.0)
        names = temporal_names(2) if k == "temporal" else spatial_names(2)
        bad = free_vars(lam) - set(names)
        if bad:
            raise GeometryError(f"conformal factor references foreign variables {sorted(bad)}")
        factor = parse(f"exp(2*({param or '0'}))")
        zero = num(0.0)
        comp = [[factor, zero], [zero, factor]]
        return Metric(name, k, comp, box=[(-1.5, 1.5), (-1.5, 1.5)])
    raise GeometryError(f"unknown metric '{name}'")


def energy_density(h: Metric, phi: Metric) -> Expr:
    """Energy density h^{ab}(t) phi_{ij}(x) x^i_a x^j_b as a jet-variable Expr."""
    if h.kind != "temporal" or phi.kind != "spatial":
        raise GeometryError("energy density expects a temporal and a spatial metric")
    hinv = h.inverse_components()
    p, n = h.dim, phi.dim
    acc: Expr = num(0.0)
    for a in range(p):
        for b in range(p):
            for i in range(n):
                for j in range(n):
                    term = mul(mul(hinv[a][b], phi.components[i][j]),
                               mul(var(jet_name(i + 1, a + 1)), var(jet_name(j + 1, b + 1))))
                    acc = add(acc, term)
    return acc
