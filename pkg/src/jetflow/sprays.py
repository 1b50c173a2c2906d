"""Temporal and spatial sprays on the first jet space.

Coefficients are stored as (n, p, p) arrays arr[j, b, a] = S^{(j)}_{(b)a}
(vertical pair (j, b), extra lower temporal index a).  Temporal sprays
transform by

    2 H~^{(k)}_{(m)g} = 2 H^{(j)}_{(b)a} (dt^a/dt~^g)(dx~^k/dx^j)(dt^b/dt~^m)
                        - (dt^a/dt~^g)(d x~^k_m / d t^a)

and spatial sprays by the analogous law with inhomogeneous term
-(dx^i/dx~^j)(d x~^k_m / d x^i) x~^j_g.  The canonical examples come from
metric Christoffel symbols:

    2 H^{(j)}_{(b)a} = -H^g_ab x^j_g          (temporal metric h)
    2 G^{(j)}_{(b)a} = gamma^j_kl x^k_a x^l_b (spatial metric phi)

The difference of two sprays of the same kind is a d-tensor; a spray is
canonical part plus d-tensor remainder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dtensor import DTensorField, IndexSignature, Verdict
from .geometry import Metric, pullback_metric
from .numdiff import ChangeMap
from .jetspace import JetPoint, mixed_jet_derivatives, transform_jet

__all__ = [
    "SprayError", "TemporalSpray", "SpatialSpray", "HSpray", "SprayPair",
    "canonical_temporal", "canonical_spatial", "canonical_pair",
    "zero_temporal", "zero_spatial",
    "transform_temporal", "transform_spatial",
    "temporal_law_error", "spatial_law_error",
    "h_trace", "spray_from_hspray",
    "combine_temporal", "combine_spatial",
    "spray_difference_field", "spray_coefficient_field", "decompose_temporal",
    "decompose_spatial",
]


class SprayError(ValueError):
    pass


@dataclass(frozen=True)
class TemporalSpray:
    p: int
    n: int
    coefficients: Callable[[JetPoint], np.ndarray]          # (n, p, p)
    jet_gradient: Callable[[JetPoint], np.ndarray] | None = None  # (n,p,p,n,p)
    rebuild: Callable[[ChangeMap], "TemporalSpray"] | None = None
    # (T, X, V) arrays of shape (q,p), (q,n), (q,n,p) -> (q,n,p,p)
    coefficients_batch: Callable[..., np.ndarray] | None = None
    name: str = "temporal-spray"

    def in_chart(self, change: ChangeMap) -> "TemporalSpray":
        if self.rebuild is None:
            raise SprayError(f"spray '{self.name}' has no chart-native form")
        return self.rebuild(change)


@dataclass(frozen=True)
class SpatialSpray:
    p: int
    n: int
    coefficients: Callable[[JetPoint], np.ndarray]
    jet_gradient: Callable[[JetPoint], np.ndarray] | None = None
    rebuild: Callable[[ChangeMap], "SpatialSpray"] | None = None
    coefficients_batch: Callable[..., np.ndarray] | None = None
    name: str = "spatial-spray"

    def in_chart(self, change: ChangeMap) -> "SpatialSpray":
        if self.rebuild is None:
            raise SprayError(f"spray '{self.name}' has no chart-native form")
        return self.rebuild(change)


@dataclass(frozen=True)
class HSpray:
    """h-trace of a spray: components G^i = h^{ab} S^{(i)}_{(a)b}."""

    p: int
    n: int
    components: Callable[[JetPoint], np.ndarray]             # (n,)
    jet_gradient: Callable[[JetPoint], np.ndarray] | None = None  # (n, n, p)
    name: str = "h-spray"


@dataclass(frozen=True)
class SprayPair:
    temporal: TemporalSpray
    spatial: SpatialSpray


# ---------------------------------------------------------------------------
# canonical sprays


def canonical_temporal(h: Metric, n: int) -> TemporalSpray:
    if h.kind != "temporal":
        raise SprayError("canonical temporal spray needs a temporal metric")
    p = h.dim

    def coeff(u: JetPoint) -> np.ndarray:
        gamma = h.christoffel_at(u.t)            # [g, a, b]
        return -0.5 * np.einsum("gab,jg->jba", gamma, u.v)

    def grad(u: JetPoint) -> np.ndarray:
        gamma = h.christoffel_at(u.t)
        return -0.5 * np.einsum("gab,jk->jbakg", gamma, np.eye(n))

    def batch(T: np.ndarray, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        gamma = h.christoffel_batch(T)
        return -0.5 * np.einsum("qgab,qjg->qjba", gamma, V)

    return TemporalSpray(p, n, coeff, jet_gradient=grad,
                         rebuild=lambda c: canonical_temporal(pullback_metric(h, c), n),
                         coefficients_batch=batch,
                         name=f"canonical-temporal[{h.name}]")


def canonical_spatial(phi: Metric, p: int) -> SpatialSpray:
    if phi.kind != "spatial":
        raise SprayError("canonical spatial spray needs a spatial metric")
    n = phi.dim

    def coeff(u: JetPoint) -> np.ndarray:
        gamma = phi.christoffel_at(u.x)          # [j, k, l]
        return 0.5 * np.einsum("jkl,ka,lb->jba", gamma, u.v, u.v)

    def grad(u: JetPoint) -> np.ndarray:
        gamma = phi.christoffel_at(u.x)
        eye_p = np.eye(p)
        t1 = np.einsum("jml,lb,ga->jbamg", gamma, u.v, eye_p)
        t2 = np.einsum("jkm,ka,gb->jbamg", gamma, u.v, eye_p)
        return 0.5 * (t1 + t2)

    def batch(T: np.ndarray, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        gamma = phi.christoffel_batch(X)
        return 0.5 * np.einsum("qjkl,qka,qlb->qjba", gamma, V, V)

    return SpatialSpray(p, n, coeff, jet_gradient=grad,
                        rebuild=lambda c: canonical_spatial(pullback_metric(phi, c), p),
                        coefficients_batch=batch,
                        name=f"canonical-spatial[{phi.name}]")


def canonical_pair(h: Metric, phi: Metric) -> SprayPair:
    return SprayPair(canonical_temporal(h, phi.dim), canonical_spatial(phi, h.dim))


def zero_temporal(p: int, n: int) -> TemporalSpray:
    return TemporalSpray(p, n, lambda u: np.zeros((n, p, p)),
                         jet_gradient=lambda u: np.zeros((n, p, p, n, p)),
                         coefficients_batch=lambda T, X, V: np.zeros((len(T), n, p, p)),
                         name="zero-temporal")


def zero_spatial(p: int, n: int) -> SpatialSpray:
    return SpatialSpray(p, n, lambda u: np.zeros((n, p, p)),
                        jet_gradient=lambda u: np.zeros((n, p, p, n, p)),
                        coefficients_batch=lambda T, X, V: np.zeros((len(T), n, p, p)),
                        name="zero-spatial")


# ---------------------------------------------------------------------------
# transformation laws


def transform_temporal(s: TemporalSpray, change: ChangeMap, u: JetPoint) -> np.ndarray:
    """Predicted target-chart coefficients at the image of u."""
    A, B, A_inv, Wt, _ = mixed_jet_derivatives(change, u)
    tensor = np.einsum("jba,ag,kj,bm->kmg", s.coefficients(u), A_inv, B, A_inv)
    return tensor - 0.5 * np.einsum("ag,kma->kmg", A_inv, Wt)


def transform_spatial(s: SpatialSpray, change: ChangeMap, u: JetPoint) -> np.ndarray:
    A, B, A_inv, _, Wx = mixed_jet_derivatives(change, u)
    B_inv = np.linalg.inv(B)
    v_new = B @ u.v @ A_inv
    tensor = np.einsum("jba,ag,kj,bm->kmg", s.coefficients(u), A_inv, B, A_inv)
    return tensor - 0.5 * np.einsum("ij,kmi,jg->kmg", B_inv, Wx, v_new)


def _law_error(s, transform, changes: Sequence[ChangeMap], jets: Sequence[JetPoint]) -> Verdict:
    worst, witness, pairs = 0.0, None, 0
    for change in changes:
        native = s.in_chart(change)
        for k, u in enumerate(jets):
            predicted = transform(s, change, u)
            actual = native.coefficients(transform_jet(change, u))
            err = float(np.max(np.abs(predicted - actual) / np.maximum(1.0, np.abs(actual))))
            pairs += 1
            if err > worst:
                worst, witness = err, (change.name, k)
    return Verdict(passed=True, max_rel_err=worst, pairs=pairs, witness=witness)


def temporal_law_error(s: TemporalSpray, changes, jets, tol: float = 1e-8) -> Verdict:
    """Compare the transformation law against the chart-native recompute."""
    v = _law_error(s, transform_temporal, changes, jets)
    return Verdict(v.max_rel_err <= tol, v.max_rel_err, v.pairs, v.witness)


def spatial_law_error(s: SpatialSpray, changes, jets, tol: float = 1e-8) -> Verdict:
    v = _law_error(s, transform_spatial, changes, jets)
    return Verdict(v.max_rel_err <= tol, v.max_rel_err, v.pairs, v.witness)


# ---------------------------------------------------------------------------
# h-trace and the one-dimensional correspondence


def h_trace(s: TemporalSpray | SpatialSpray, h: Metric) -> HSpray:
    """G^i = h^{ab} S^{(i)}_{(a)b}."""
    if h.kind != "temporal":
        raise SprayError("h_trace contracts with a temporal metric")

    def comps(u: JetPoint) -> np.ndarray:
        hinv = h.inverse_at(u.t)
        return np.einsum("ab,iab->i", hinv, s.coefficients(u))

    grad = None
    if s.jet_gradient is not None:
        def grad(u: JetPoint) -> np.ndarray:
            hinv = h.inverse_at(u.t)
            return np.einsum("ab,iabkg->ikg", hinv, s.jet_gradient(u))

    return HSpray(s.p, s.n, comps, jet_gradient=grad, name=f"h-trace[{s.name}]")


def spray_from_hspray(hs: HSpray, h: Metric) -> SpatialSpray:
    """Inverse of h_trace; only one temporal dimension admits it."""
    if hs.p != 1 or h.dim != 1:
        raise SprayError("the spray <-> h-spray correspondence holds only for "
                         "one temporal dimension")

    def coeff(u: JetPoint) -> np.ndarray:
        h11 = h.components_at(u.t)[0, 0]
        return (h11 * hs.components(u)).reshape(hs.n, 1, 1)

    grad = None
    if hs.jet_gradient is not None:
        def grad(u: JetPoint) -> np.ndarray:
            h11 = h.components_at(u.t)[0, 0]
            return (h11 * hs.jet_gradient(u)).reshape(hs.n, 1, 1, hs.n, 1)

    return SpatialSpray(1, hs.n, coeff, jet_gradient=grad,
                        name=f"from-h-spray[{hs.name}]")


# ---------------------------------------------------------------------------
# affine structure


def _combine(cls, sprays, weights):
    if not sprays:
        raise SprayError("nothing to combine")
    w = [float(c) for c in weights]
    if abs(sum(w) - 1.0) > 1e-12:
        raise SprayError("affine combination weights must sum to 1")
    p, n = sprays[0].p, sprays[0].n

    def coeff(u: JetPoint) -> np.ndarray:
        return sum(c * s.coefficients(u) for c, s in zip(w, sprays))

    grad = None
    if all(s.jet_gradient is not None for s in sprays):
        def grad(u: JetPoint) -> np.ndarray:
            return sum(c * s.jet_gradient(u) for c, s in zip(w, sprays))

    rebuild = None
    if all(s.rebuild is not None for s in sprays):
        def rebuild(change: ChangeMap):
            return _combine(cls, [s.rebuild(change) for s in sprays], w)

    batch = None
    if all(s.coefficients_batch is not None for s in sprays):
        def batch(T, X, V):
            return sum(c * s.coefficients_batch(T, X, V) for c, s in zip(w, sprays))

    return cls(p, n, coeff, jet_gradient=grad, rebuild=rebuild,
               coefficients_batch=batch, name="affine-combination")


def combine_temporal(sprays: Sequence[TemporalSpray], weights: Sequence[float]) -> TemporalSpray:
    """Affine combination (weights summing to 1), which is again a spray."""
    return _combine(TemporalSpray, list(sprays), weights)


def combine_spatial(sprays: Sequence[SpatialSpray], weights: Sequence[float]) -> SpatialSpray:
    return _combine(SpatialSpray, list(sprays), weights)


# ---------------------------------------------------------------------------
# sprays vs d-tensors


_SPRAY_SIG = IndexSignature.parse("U(j,b);L(a)")


def spray_difference_field(s1, s2, name: str | None = None) -> DTensorField:
    """The difference of two sprays of the same kind, as a d-tensor field."""
    if (s1.p, s1.n) != (s2.p, s2.n):
        raise SprayError("sprays live on different jet spaces")
    p, n = s1.p, s1.n

    def comps(u: JetPoint) -> np.ndarray:
        return (s1.coefficients(u) - s2.coefficients(u)).reshape(n * p, p)

    rebuild = None
    if s1.rebuild is not None and s2.rebuild is not None:
        def rebuild(change: ChangeMap) -> DTensorField:
            return spray_difference_field(s1.rebuild(change), s2.rebuild(change), name)

    return DTensorField(name or f"{s1.name}-minus-{s2.name}", _SPRAY_SIG, p, n,
                        comps, rebuild=rebuild)


def spray_coefficient_field(s, name: str | None = None) -> DTensorField:
    """Spray coefficients wrapped as a candidate d-tensor (a negative
    control: the inhomogeneous term makes is_dtensor fail)."""
    p, n = s.p, s.n

    def comps(u: JetPoint) -> np.ndarray:
        return s.coefficients(u).reshape(n * p, p)

    rebuild = None
    if s.rebuild is not None:
        def rebuild(change: ChangeMap) -> DTensorField:
            return spray_coefficient_field(s.rebuild(change), name)

    return DTensorField(name or f"coefficients[{s.name}]", _SPRAY_SIG, p, n,
                        comps, rebuild=rebuild)


def decompose_temporal(s: TemporalSpray, h: Metric) -> tuple[TemporalSpray, DTensorField]:
    """Split s into the canonical temporal spray of h plus a d-tensor remainder."""
    base = canonical_temporal(h, s.n)
    return base, spray_difference_field(s, base, name=f"remainder[{s.name}]")


def decompose_spatial(s: SpatialSpray, phi: Metric) -> tuple[SpatialSpray, DTensorField]:
    base = canonical_spatial(phi, s.p)
    return base, spray_difference_field(s, base, name=f"remainder[{s.name}]")
