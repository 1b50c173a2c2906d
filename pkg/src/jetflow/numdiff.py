"""Finite-difference derivatives and product-form coordinate changes.

A ChangeMap is a diffeomorphism of product form t~ = t~(t), x~ = x~(x),
held symbolically (forward and inverse component Exprs) so Jacobians and
Hessians are exact.  The module also provides central-difference fallbacks
used as independent oracles for every symbolic derivative in the package,
and a seeded catalog of random chart changes whose inverses are closed
form by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .exprlang import (
    Expr, add, call, diff, div, free_vars, mul, num, sub, subst, var,
)

__all__ = [
    "EPS", "fd_partial", "fd_second", "fd_jacobian",
    "ChartError", "ChangeMap", "JacobianBlocks", "jacobian_blocks",
    "temporal_names", "spatial_names", "jet_name", "jet_names",
    "identity_change", "affine_change", "random_affine_change",
    "random_shear_change", "random_monotone_change", "random_change",
    "change_catalog",
]

EPS = float(np.finfo(float).eps)

DET_TOL = 1e-12


def temporal_names(p: int) -> list[str]:
    return [f"t{a + 1}" for a in range(p)]


def spatial_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def jet_name(i: int, a: int) -> str:
    """Name of the jet variable x^i_a (1-based indices), e.g. jet_name(2,1) == 'x2_1'."""
    return f"x{i}_{a}"


def jet_names(n: int, p: int) -> list[str]:
    """All jet variable names, spatial index major: x1_1, x1_2, ..., xn_p."""
    return [jet_name(i + 1, a + 1) for i in range(n) for a in range(p)]


# ---------------------------------------------------------------------------
# central differences


def fd_partial(f: Callable[[np.ndarray], float], point: np.ndarray, i: int) -> float:
    """Central-difference first partial with step eps^(1/3) * max(1, |p_i|)."""
    point = np.asarray(point, dtype=float)
    h = EPS ** (1.0 / 3.0) * max(1.0, abs(point[i]))
    ep = point.copy()
    em = point.copy()
    ep[i] += h
    em[i] -= h
    return (f(ep) - f(em)) / (2.0 * h)


def fd_second(f: Callable[[np.ndarray], float], point: np.ndarray, i: int, j: int) -> float:
    """Central-difference second partial with steps scaled by eps^(1/4)."""
    point = np.asarray(point, dtype=float)
    hi = EPS ** 0.25 * max(1.0, abs(point[i]))
    if i == j:
        ep = point.copy()
        em = point.copy()
        ep[i] += hi
        em[i] -= hi
        return (f(ep) - 2.0 * f(point) + f(em)) / (hi * hi)
    hj = EPS ** 0.25 * max(1.0, abs(point[j]))
    out = 0.0
    for si in (1.0, -1.0):
        for sj in (1.0, -1.0):
            q = point.copy()
            q[i] += si * hi
            q[j] += sj * hj
            out += si * sj * f(q)
    return out / (4.0 * hi * hj)


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], point: np.ndarray) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    cols = []
    for i in range(point.size):
        cols.append(fd_partial(lambda q, i=i: np.asarray(f(q), dtype=float), point, i))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# coordinate changes


class ChartError(ValueError):
    pass


def _eval_vector(exprs: Sequence[Expr], names: Sequence[str], values: np.ndarray) -> np.ndarray:
    env = dict(zip(names, values))
    return np.array([e.eval(env) for e in exprs], dtype=float)


def _eval_matrix(exprs: Sequence[Sequence[Expr]], names: Sequence[str], values: np.ndarray) -> np.ndarray:
    env = dict(zip(names, values))
    return np.array([[e.eval(env) for e in row] for row in exprs], dtype=float)


class ChangeMap:
    """Product-form chart change t~ = t~(t), x~ = x~(x) with symbolic inverse.

    forward_t / inverse_t are p Exprs over t1..tp; forward_x / inverse_x are
    n Exprs over x1..xn (the inverse components are written in the same
    variable names, read as the target chart's coordinates).  Optional
    domain boxes bound where the forward map is certified invertible.
    """

    def __init__(self, name: str, forward_t: Sequence[Expr], forward_x: Sequence[Expr],
                 inverse_t: Sequence[Expr], inverse_x: Sequence[Expr],
                 box_t: Sequence[tuple[float, float]] | None = None,
                 box_x: Sequence[tuple[float, float]] | None = None):
        self.name = name
        self.p = len(forward_t)
        self.n = len(forward_x)
        self.forward_t = list(forward_t)
        self.forward_x = list(forward_x)
        self.inverse_t = list(inverse_t)
        self.inverse_x = list(inverse_x)
        self.box_t = None if box_t is None else [tuple(b) for b in box_t]
        self.box_x = None if box_x is None else [tuple(b) for b in box_x]
        if len(inverse_t) != self.p or len(inverse_x) != self.n:
            raise ChartError("forward and inverse components disagree in dimension")
        tset, xset = set(temporal_names(self.p)), set(spatial_names(self.n))
        for e in list(forward_t) + list(inverse_t):
            bad = free_vars(e) - tset
            if bad:
                raise ChartError(f"temporal component references non-temporal variables {sorted(bad)}")
        for e in list(forward_x) + list(inverse_x):
            bad = free_vars(e) - xset
            if bad:
                raise ChartError(f"spatial component references non-spatial variables {sorted(bad)}")

    # cached symbolic derivative tables -------------------------------------

    @cached_property
    def _dft(self) -> list[list[Expr]]:
        names = temporal_names(self.p)
        return [[diff(e, v) for v in names] for e in self.forward_t]

    @cached_property
    def _dfx(self) -> list[list[Expr]]:
        names = spatial_names(self.n)
        return [[diff(e, v) for v in names] for e in self.forward_x]

    @cached_property
    def _dit(self) -> list[list[Expr]]:
        names = temporal_names(self.p)
        return [[diff(e, v) for v in names] for e in self.inverse_t]

    @cached_property
    def _dix(self) -> list[list[Expr]]:
        names = spatial_names(self.n)
        return [[diff(e, v) for v in names] for e in self.inverse_x]

    @cached_property
    def _d2ft(self) -> list[list[list[Expr]]]:
        names = temporal_names(self.p)
        return [[[diff(d, v) for v in names] for d in row] for row in self._dft]

    @cached_property
    def _d2fx(self) -> list[list[list[Expr]]]:
        names = spatial_names(self.n)
        return [[[diff(d, v) for v in names] for d in row] for row in self._dfx]

    # pointwise evaluation ---------------------------------------------------

    def forward(self, t: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (_eval_vector(self.forward_t, temporal_names(self.p), np.asarray(t, float)),
                _eval_vector(self.forward_x, spatial_names(self.n), np.asarray(x, float)))

    def inverse(self, t: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (_eval_vector(self.inverse_t, temporal_names(self.p), np.asarray(t, float)),
                _eval_vector(self.inverse_x, spatial_names(self.n), np.asarray(x, float)))

    def jacobian_t(self, t: np.ndarray) -> np.ndarray:
        """A[a, b] = d t~^a / d t^b at t."""
        return _eval_matrix(self._dft, temporal_names(self.p), np.asarray(t, float))

    def jacobian_x(self, x: np.ndarray) -> np.ndarray:
        """B[i, j] = d x~^i / d x^j at x."""
        return _eval_matrix(self._dfx, spatial_names(self.n), np.asarray(x, float))

    def inv_jacobian_t(self, t_new: np.ndarray) -> np.ndarray:
        """(A^-1)[a, b] = d t^a / d t~^b, from the inverse Exprs at the image point."""
        return _eval_matrix(self._dit, temporal_names(self.p), np.asarray(t_new, float))

    def inv_jacobian_x(self, x_new: np.ndarray) -> np.ndarray:
        return _eval_matrix(self._dix, spatial_names(self.n), np.asarray(x_new, float))

    def hessian_t(self, t: np.ndarray) -> np.ndarray:
        """H[a, b, c] = d^2 t~^a / d t^b d t^c at t."""
        env = dict(zip(temporal_names(self.p), np.asarray(t, float)))
        return np.array([[[e.eval(env) for e in row] for row in mat] for mat in self._d2ft], dtype=float)

    def hessian_x(self, x: np.ndarray) -> np.ndarray:
        env = dict(zip(spatial_names(self.n), np.asarray(x, float)))
        return np.array([[[e.eval(env) for e in row] for row in mat] for mat in self._d2fx], dtype=float)

    # structure --------------------------------------------------------------

    def inverted(self) -> "ChangeMap":
        return ChangeMap(self.name + "^-1", self.inverse_t, self.inverse_x,
                         self.forward_t, self.forward_x)

    def then(self, other: "ChangeMap") -> "ChangeMap":
        """Composition: apply self first, then other (Expr substitution)."""
        if (self.p, self.n) != (other.p, other.n):
            raise ChartError("cannot compose changes of different dimensions")
        tnames, xnames = temporal_names(self.p), spatial_names(self.n)
        fwd_t = [subst(e, dict(zip(tnames, self.forward_t))) for e in other.forward_t]
        fwd_x = [subst(e, dict(zip(xnames, self.forward_x))) for e in other.forward_x]
        inv_t = [subst(e, dict(zip(tnames, other.inverse_t))) for e in self.inverse_t]
        inv_x = [subst(e, dict(zip(xnames, other.inverse_x))) for e in self.inverse_x]
        return ChangeMap(f"{other.name}.{self.name}", fwd_t, fwd_x, inv_t, inv_x,
                         box_t=self.box_t, box_x=self.box_x)

    def contains(self, t: np.ndarray, x: np.ndarray) -> bool:
        if self.box_t is not None:
            if any(not (lo <= v <= hi) for v, (lo, hi) in zip(t, self.box_t)):
                return False
        if self.box_x is not None:
            if any(not (lo <= v <= hi) for v, (lo, hi) in zip(x, self.box_x)):
                return False
        return True

    def roundtrip_error(self, t: np.ndarray, x: np.ndarray) -> float:
        tt, xx = self.forward(t, x)
        t2, x2 = self.inverse(tt, xx)
        err = 0.0
        if self.p:
            err = max(err, float(np.max(np.abs(t2 - np.asarray(t, float)))))
        if self.n:
            err = max(err, float(np.max(np.abs(x2 - np.asarray(x, float)))))
        return err

    def __repr__(self):
        return f"ChangeMap({self.name!r}, p={self.p}, n={self.n})"


@dataclass(frozen=True)
class JacobianBlocks:
    """Forward blocks at a point plus inverse blocks at its image."""

    A: np.ndarray       # d t~ / d t,   p x p
    B: np.ndarray       # d x~ / d x,   n x n
    A_inv: np.ndarray   # d t / d t~ at the image point
    B_inv: np.ndarray


def jacobian_blocks(change: ChangeMap, t: np.ndarray, x: np.ndarray) -> JacobianBlocks:
    """Evaluate the block Jacobians of a product-form change at (t, x).

    Forward blocks are symbolic derivatives at (t, x); inverse blocks are the
    inverse components' symbolic derivatives at the image point.  A nearly
    singular block (|det| < 1e-12) raises ChartError.
    """
    A = change.jacobian_t(t)
    B = change.jacobian_x(x)
    for label, m in (("temporal", A), ("spatial", B)):
        if m.size and abs(np.linalg.det(m)) < DET_TOL:
            raise ChartError(f"invalid chart change: singular {label} block at evaluation point")
    t_new, x_new = change.forward(t, x)
    return JacobianBlocks(A=A, B=B,
                          A_inv=change.inv_jacobian_t(t_new),
                          B_inv=change.inv_jacobian_x(x_new))


# ---------------------------------------------------------------------------
# chart-change catalog.  Every family has a closed-form symbolic inverse so
# the round-trip invariant holds at machine precision.


def _linear_exprs(names: Sequence[str], A: np.ndarray, b: np.ndarray) -> list[Expr]:
    out = []
    for row, shift in zip(A, b):
        e: Expr = num(shift)
        for coeff, name in zip(row, names):
            e = add(e, mul(num(coeff), var(name)))
        out.append(e)
    return out


def identity_change(p: int, n: int) -> ChangeMap:
    return ChangeMap("identity",
                     [var(v) for v in temporal_names(p)],
                     [var(v) for v in spatial_names(n)],
                     [var(v) for v in temporal_names(p)],
                     [var(v) for v in spatial_names(n)])


def affine_change(name: str, At: np.ndarray, bt: np.ndarray,
                  Ax: np.ndarray, bx: np.ndarray, **kw) -> ChangeMap:
    At, bt = np.asarray(At, float), np.asarray(bt, float)
    Ax, bx = np.asarray(Ax, float), np.asarray(bx, float)
    for m in (At, Ax):
        if m.size and abs(np.linalg.det(m)) < DET_TOL:
            raise ChartError("affine block is singular")
    p, n = len(bt), len(bx)
    At_i, Ax_i = np.linalg.inv(At), np.linalg.inv(Ax)
    return ChangeMap(
        name,
        _linear_exprs(temporal_names(p), At, bt),
        _linear_exprs(spatial_names(n), Ax, bx),
        _linear_exprs(temporal_names(p), At_i, -At_i @ bt),
        _linear_exprs(spatial_names(n), Ax_i, -Ax_i @ bx),
        **kw,
    )


def _random_well_conditioned(rng: np.random.Generator, d: int, max_cond: float = 50.0) -> np.ndarray:
    """Random matrix with singular values in [0.5, 2], so cond <= 4 < max_cond."""
    q1, _ = np.linalg.qr(rng.normal(size=(d, d)))
    q2, _ = np.linalg.qr(rng.normal(size=(d, d)))
    s = rng.uniform(0.5, 2.0, size=d)
    m = q1 @ np.diag(s) @ q2
    assert np.linalg.cond(m) < max_cond
    return m


def _affine_block(rng: np.random.Generator, d: int) -> tuple[np.ndarray, np.ndarray]:
    return _random_well_conditioned(rng, d), rng.uniform(-0.5, 0.5, size=d)


def random_affine_change(rng: np.random.Generator, p: int, n: int, name: str = "affine") -> ChangeMap:
    At, bt = _affine_block(rng, p)
    Ax, bx = _affine_block(rng, n)
    return affine_change(name, At, bt, Ax, bx)


def _shear_exprs(rng: np.random.Generator, names: Sequence[str], eps: float) -> tuple[list[Expr], list[Expr]]:
    """Triangular sin/cos shear: coordinate k is displaced by a bounded smooth
    function of the later coordinates, so the inverse is exact back-substitution
    and the Jacobian is unit triangular."""
    d = len(names)
    fwd: list[Expr] = [var(v) for v in names]
    perturb: list[Expr | None] = [None] * d
    for k in range(d - 1):
        j = int(rng.integers(k + 1, d))
        fn = "sin" if rng.random() < 0.5 else "cos"
        freq = float(rng.uniform(0.5, 1.5))
        phase = float(rng.uniform(0.0, 2.0 * math.pi))
        amp = float(rng.uniform(0.3, 1.0) * eps)
        perturb[k] = mul(num(amp), call(fn, add(mul(num(freq), var(names[j])), num(phase))))
        fwd[k] = add(var(names[k]), perturb[k])
    inv: list[Expr] = [var(v) for v in names]
    for k in range(d - 2, -1, -1):
        if perturb[k] is None:
            continue
        solved = dict(zip(names, inv))
        inv[k] = sub(var(names[k]), subst(perturb[k], solved))
    return fwd, inv


def _monotone_1d(rng: np.random.Generator, name: str) -> tuple[list[Expr], list[Expr]]:
    """Nonlinear monotone map of a single coordinate with an elementary inverse."""
    a = float(rng.uniform(0.8, 1.2))
    b = float(rng.uniform(0.4, 0.8))
    c = float(rng.uniform(-0.3, 0.3))
    v = var(name)
    # u = a*exp(b*t) + c  with inverse  t = log((u - c)/a)/b
    fwd = [add(mul(num(a), call("exp", mul(num(b), v))), num(c))]
    inv = [div(call("log", div(sub(v, num(c)), num(a))), num(b))]
    return fwd, inv


def random_shear_change(rng: np.random.Generator, p: int, n: int, eps: float = 0.1,
                        name: str = "shear") -> ChangeMap:
    if p >= 2:
        ft, it = _shear_exprs(rng, temporal_names(p), eps)
    else:
        ft, it = _monotone_1d(rng, "t1")
    if n >= 2:
        fx, ix = _shear_exprs(rng, spatial_names(n), eps)
    else:
        fx, ix = _monotone_1d(rng, "x1")
    return ChangeMap(name, ft, fx, it, ix)


def random_monotone_change(rng: np.random.Generator, p: int, n: int, name: str = "monotone") -> ChangeMap:
    """Coordinatewise nonlinear monotone map in every single coordinate."""
    ft, it = [], []
    for v in temporal_names(p):
        f, i = _monotone_1d(rng, v)
        ft += f
        it += i
    fx, ix = [], []
    for v in spatial_names(n):
        f, i = _monotone_1d(rng, v)
        fx += f
        ix += i
    return ChangeMap(name, ft, fx, it, ix)


def random_change(rng: np.random.Generator, p: int, n: int, kind: str = "mixed") -> ChangeMap:
    if kind == "affine":
        return random_affine_change(rng, p, n)
    if kind == "shear":
        return random_shear_change(rng, p, n)
    if kind == "monotone":
        return random_monotone_change(rng, p, n)
    if kind == "mixed":
        # nonlinear shear followed by a well-conditioned affine map
        first = random_shear_change(rng, p, n)
        second = random_affine_change(rng, p, n)
        c = first.then(second)
        c.name = "mixed"
        return c
    raise ChartError(f"unknown change kind '{kind}'")


def change_catalog(rng: np.random.Generator, p: int, n: int, kinds: Sequence[str],
                   count: int) -> list[ChangeMap]:
    """Deterministic list of catalog changes: `count` draws per kind, named kind-k."""
    out = []
    for kind in kinds:
        for k in range(count):
            c = random_change(rng, p, n, kind)
            c.name = f"{kind}-{k}"
            out.append(c)
    return out
