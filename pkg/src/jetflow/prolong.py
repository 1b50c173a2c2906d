"""Jet prolongation of vector fields on the product of the temporal and
spatial manifolds.

A base vector field X = X^a(t,x) @/@t^a + X^i(t,x) @/@x^i prolongs to the
first jet space with vertical components

    X^{(i)}_{(a)} = D_a X^i - (D_a X^b) x^i_b,
    D_a f = @f/@t^a + x^j_a @f/@x^j,

so that the prolongation is the infinitesimal generator of the jet lift of
the flow of X.  The module also provides the flow-transport oracle used to
verify that statement numerically, the horizontal lift through a nonlinear
connection, and the vertical gap between prolongation and horizontal lift
(a d-tensor field).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exprlang import Expr, add, diff, evaluate, free_vars, mul, num, parse, subst
from .dtensor import DTensorField, IndexSignature
from .connection import NonlinearConnection
from .numdiff import ChangeMap, jet_name, spatial_names, temporal_names
from .jetspace import JetPoint, frame_size, jet_env

__all__ = [
    "ProlongError", "BaseVectorField", "JetVectorField",
    "total_derivative", "olver_prolong", "pushforward",
    "flow_point", "flow_transport", "prolongation_flow_error",
    "horizontal_lift", "vertical_gap_field",
    "adapted_t_derivative", "adapted_x_derivative",
]


class ProlongError(ValueError):
    pass


class BaseVectorField:
    """Vector field on the product manifold: p temporal and n spatial
    component expressions, each in the variables t1..tp, x1..xn."""

    def __init__(self, p: int, n: int, temporal: Sequence[Expr | str],
                 spatial: Sequence[Expr | str], name: str = "vector-field"):
        if len(temporal) != p or len(spatial) != n:
            raise ProlongError("component count does not match dimensions")
        self.p, self.n, self.name = int(p), int(n), name
        conv = lambda c: parse(c) if isinstance(c, str) else c
        self.temporal = [conv(c) for c in temporal]
        self.spatial = [conv(c) for c in spatial]
        allowed = set(temporal_names(p)) | set(spatial_names(n))
        for e in self.temporal + self.spatial:
            bad = free_vars(e) - allowed
            if bad:
                raise ProlongError(f"component references foreign variables {sorted(bad)}")

    def _env(self, t: np.ndarray, x: np.ndarray) -> dict:
        env = {name: float(t[a]) for a, name in enumerate(temporal_names(self.p))}
        env.update({name: float(x[i]) for i, name in enumerate(spatial_names(self.n))})
        return env

    def __call__(self, t: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        env = self._env(np.asarray(t, float), np.asarray(x, float))
        return (np.array([evaluate(e, env) for e in self.temporal]),
                np.array([evaluate(e, env) for e in self.spatial]))


def total_derivative(f: Expr | str, u: JetPoint) -> np.ndarray:
    """D_a f = @f/@t^a + x^j_a @f/@x^j for f a function of (t, x), as a (p,)
    array at the jet point u."""
    e = parse(f) if isinstance(f, str) else f
    p, n = u.p, u.n
    env = {name: float(u.t[a]) for a, name in enumerate(temporal_names(p))}
    env.update({name: float(u.x[i]) for i, name in enumerate(spatial_names(n))})
    dt = np.array([evaluate(diff(e, name), env) for name in temporal_names(p)])
    dx = np.array([evaluate(diff(e, name), env) for name in spatial_names(n)])
    return dt + u.v.T @ dx


@dataclass(frozen=True)
class JetVectorField:
    """Vector field on the jet space in natural components: callables for the
    temporal (p,), spatial (n,) and vertical (n, p) parts."""

    p: int
    n: int
    temporal: Callable[[JetPoint], np.ndarray]
    spatial: Callable[[JetPoint], np.ndarray]
    vertical: Callable[[JetPoint], np.ndarray]
    name: str = "jet-vector-field"

    def packed(self, u: JetPoint) -> np.ndarray:
        """Natural-frame components ordered [t, x, fused vertical i*p+a]."""
        out = np.empty(frame_size(self.p, self.n))
        out[:self.p] = self.temporal(u)
        out[self.p:self.p + self.n] = self.spatial(u)
        out[self.p + self.n:] = self.vertical(u).reshape(self.n * self.p)
        return out


def olver_prolong(X: BaseVectorField) -> JetVectorField:
    """First prolongation: vertical part D_a X^i - (D_a X^b) x^i_b."""
    p, n = X.p, X.n

    def temporal(u: JetPoint) -> np.ndarray:
        return X(u.t, u.x)[0]

    def spatial(u: JetPoint) -> np.ndarray:
        return X(u.t, u.x)[1]

    def vertical(u: JetPoint) -> np.ndarray:
        Dt = np.array([total_derivative(e, u) for e in X.temporal])   # (p, p) [b, a]
        Dx = np.array([total_derivative(e, u) for e in X.spatial])    # (n, p) [i, a]
        return Dx - u.v @ Dt

    return JetVectorField(p, n, temporal, spatial, vertical, name=f"pr1[{X.name}]")


def pushforward(X: BaseVectorField, change: ChangeMap) -> BaseVectorField:
    """The same field written in the target chart:
    X~^m = (dt~^m/dt^b) X^b and X~^k = (dx~^k/dx^i) X^i, composed with the
    inverse chart map (all symbolic)."""
    if (X.p, X.n) != (change.p, change.n):
        raise ProlongError("field and chart change live on different manifolds")
    back = dict(zip(temporal_names(X.p), change.inverse_t))
    back.update(zip(spatial_names(X.n), change.inverse_x))

    def push(rows: list[list[Expr]], comps: list[Expr]) -> list[Expr]:
        out = []
        for row in rows:
            acc: Expr = num(0.0)
            for d, comp in zip(row, comps):
                acc = add(acc, mul(d, comp))
            out.append(subst(acc, back))
        return out

    return BaseVectorField(X.p, X.n,
                           push(change._dft, X.temporal),
                           push(change._dfx, X.spatial),
                           name=f"{X.name}@{change.name}")


# ---------------------------------------------------------------------------
# flow-transport oracle


def flow_point(X: BaseVectorField, t: np.ndarray, x: np.ndarray,
               eps: float, substeps: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """RK4 integration of the flow of X from (t, x) for parameter eps."""
    y = np.concatenate([np.asarray(t, float), np.asarray(x, float)])
    p = X.p
    ds = eps / substeps

    def rhs(y: np.ndarray) -> np.ndarray:
        vt, vx = X(y[:p], y[p:])
        return np.concatenate([vt, vx])

    for _ in range(substeps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * ds * k1)
        k3 = rhs(y + 0.5 * ds * k2)
        k4 = rhs(y + ds * k3)
        y = y + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y[:p], y[p:]


def flow_transport(X: BaseVectorField, u: JetPoint, eps: float,
                   substeps: int = 16, fd_step: float = 1e-6) -> JetPoint:
    """Transport of the jet u by the time-eps flow of X: base point flows,
    and the jet matrix transports through the flow's (finite-difference)
    Jacobian as  v~ = (dPhiM/dt + dPhiM/dx v)(dPhiT/dt + dPhiT/dx v)^-1."""
    p, n = u.p, u.n
    t_new, x_new = flow_point(X, u.t, u.x, eps, substeps)
    Jtt = np.empty((p, p)); Jtx = np.empty((p, n))
    Jxt = np.empty((n, p)); Jxx = np.empty((n, n))
    for a in range(p):
        dt = np.zeros(p); dt[a] = fd_step
        tp_, xp_ = flow_point(X, u.t + dt, u.x, eps, substeps)
        tm_, xm_ = flow_point(X, u.t - dt, u.x, eps, substeps)
        Jtt[:, a] = (tp_ - tm_) / (2 * fd_step)
        Jxt[:, a] = (xp_ - xm_) / (2 * fd_step)
    for i in range(n):
        dx = np.zeros(n); dx[i] = fd_step
        tp_, xp_ = flow_point(X, u.t, u.x + dx, eps, substeps)
        tm_, xm_ = flow_point(X, u.t, u.x - dx, eps, substeps)
        Jtx[:, i] = (tp_ - tm_) / (2 * fd_step)
        Jxx[:, i] = (xp_ - xm_) / (2 * fd_step)
    denom = Jtt + Jtx @ u.v
    v_new = (Jxt + Jxx @ u.v) @ np.linalg.inv(denom)
    return JetPoint(t_new, x_new, v_new)


def prolongation_flow_error(X: BaseVectorField, jets: Sequence[JetPoint],
                            eps: float, substeps: int = 16) -> float:
    """Max abs difference between the central flow difference
    (transport(+eps) - transport(-eps)) / (2 eps) and the prolongation."""
    pr = olver_prolong(X)
    worst = 0.0
    for u in jets:
        up = flow_transport(X, u, +eps, substeps)
        um = flow_transport(X, u, -eps, substeps)
        diff_t = (up.t - um.t) / (2 * eps)
        diff_x = (up.x - um.x) / (2 * eps)
        diff_v = (up.v - um.v) / (2 * eps)
        worst = max(worst, float(np.max(np.abs(diff_t - pr.temporal(u)))))
        worst = max(worst, float(np.max(np.abs(diff_x - pr.spatial(u)))))
        worst = max(worst, float(np.max(np.abs(diff_v - pr.vertical(u)))))
    return worst


# ---------------------------------------------------------------------------
# horizontal lift and vertical gap


def horizontal_lift(X: BaseVectorField, conn: NonlinearConnection) -> JetVectorField:
    """X^H = X^a d/dt^a + X^i d/dx^i in the adapted frame of conn; vertical
    natural components -(M^{(j)}_{(b)a} X^a + N^{(j)}_{(b)i} X^i)."""
    if (X.p, X.n) != (conn.p, conn.n):
        raise ProlongError("field and connection live on different jet spaces")

    def temporal(u: JetPoint) -> np.ndarray:
        return X(u.t, u.x)[0]

    def spatial(u: JetPoint) -> np.ndarray:
        return X(u.t, u.x)[1]

    def vertical(u: JetPoint) -> np.ndarray:
        Xt, Xx = X(u.t, u.x)
        return -(np.einsum("jba,a->jb", conn.temporal(u), Xt)
                 + np.einsum("jbi,i->jb", conn.spatial(u), Xx))

    return JetVectorField(X.p, X.n, temporal, spatial, vertical,
                          name=f"horizontal[{X.name}]")


_GAP_SIG = IndexSignature.parse("U(i,a)")


def vertical_gap_field(X: BaseVectorField, conn: NonlinearConnection) -> DTensorField:
    """pr1(X) - X^H: purely vertical, and a d-tensor field."""
    pr = olver_prolong(X)
    lift = horizontal_lift(X, conn)
    p, n = X.p, X.n

    def comps(u: JetPoint) -> np.ndarray:
        return (pr.vertical(u) - lift.vertical(u)).reshape(n * p)

    rebuild = None
    if conn.rebuild is not None:
        def rebuild(change: ChangeMap) -> DTensorField:
            return vertical_gap_field(pushforward(X, change), conn.in_chart(change))

    return DTensorField(f"vertical-gap[{X.name}]", _GAP_SIG, p, n, comps,
                        rebuild=rebuild)


# ---------------------------------------------------------------------------
# adapted derivatives of jet-space functions


def adapted_t_derivative(f: Expr | str, conn: NonlinearConnection,
                         u: JetPoint) -> np.ndarray:
    """(d/dt^a) f = @f/@t^a - M^{(j)}_{(b)a} @f/@x^j_b for f a function of
    the jet coordinates, as a (p,) array."""
    e = parse(f) if isinstance(f, str) else f
    env = jet_env(u)
    p, n = conn.p, conn.n
    M = conn.temporal(u)
    dt = np.array([evaluate(diff(e, name), env) for name in temporal_names(p)])
    dv = np.array([[evaluate(diff(e, jet_name(j + 1, b + 1)), env)
                    for b in range(p)] for j in range(n)])
    return dt - np.einsum("jba,jb->a", M, dv)


def adapted_x_derivative(f: Expr | str, conn: NonlinearConnection,
                         u: JetPoint) -> np.ndarray:
    """(d/dx^i) f = @f/@x^i - N^{(j)}_{(b)i} @f/@x^j_b, as an (n,) array."""
    e = parse(f) if isinstance(f, str) else f
    env = jet_env(u)
    p, n = conn.p, conn.n
    N = conn.spatial(u)
    dx = np.array([evaluate(diff(e, name), env) for name in spatial_names(n)])
    dv = np.array([[evaluate(diff(e, jet_name(j + 1, b + 1)), env)
                    for b in range(p)] for j in range(n)])
    return dx - np.einsum("jbi,jb->i", N, dv)
