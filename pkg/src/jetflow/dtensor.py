"""Distinguished tensor fields on the first jet space.

A d-tensor field has components indexed by temporal slots, spatial slots,
and vertical slots; a vertical slot is a paired (spatial, temporal) index
stored as one fused axis of size n*p with flat index i*p + a.  Components
transform with one Jacobian-block factor per slot, nothing else.

Index signatures are strings such as "U(i,a);L(b);L(j)": terms are
separated by ';', U/L marks the variance, a parenthesized pair is a
vertical slot (named spatial index first), and a single index is temporal
or spatial according to its first letter (a..h temporal, i..z spatial, the
usual alphabet conventions).  For a vertical pair the variance letter
refers to the spatial member: "U(i,a)" is the kind with upper spatial and
lower temporal index (the Liouville field's slot), "L(i,a)" the dual kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exprlang import Expr, diff
from .geometry import Metric, pullback_metric
from .numdiff import ChangeMap, jacobian_blocks, jet_name
from .jetspace import JetPoint, jet_env, jet_pullback, transform_jet

__all__ = [
    "SignatureError", "IndexSignature", "DTensorField", "Verdict",
    "transform_components", "is_dtensor",
    "liouville_c", "liouville_c_field", "liouville_l", "liouville_l_field",
    "normalization_j", "normalization_j_field",
    "lagrangian_metric", "lagrangian_metric_field",
]

# slot kind codes
T_UP, T_LO, S_UP, S_LO, V_UP, V_LO = "T+", "T-", "S+", "S-", "V+", "V-"

_TEMPORAL_LETTERS = set("abcdefgh")


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class IndexSignature:
    """Ordered slot kinds of a d-tensor and the display names of the indices."""

    slots: tuple[str, ...]
    names: tuple[str, ...]

    @staticmethod
    def parse(text: str) -> "IndexSignature":
        slots: list[str] = []
        names: list[str] = []
        for raw in text.split(";"):
            term = raw.strip()
            if len(term) < 2 or term[0] not in "UL" or term[1] != "(" or not term.endswith(")"):
                raise SignatureError(f"malformed signature term {term!r}")
            upper = term[0] == "U"
            inner = [s.strip() for s in term[2:-1].split(",")]
            if len(inner) == 1:
                name = inner[0]
                if not name or not name[0].isalpha():
                    raise SignatureError(f"malformed index name {name!r}")
                temporal = name[0].lower() in _TEMPORAL_LETTERS
                if temporal:
                    slots.append(T_UP if upper else T_LO)
                else:
                    slots.append(S_UP if upper else S_LO)
                names.append(name)
            elif len(inner) == 2:
                slots.append(V_UP if upper else V_LO)
                names.append(f"({inner[0]},{inner[1]})")
            else:
                raise SignatureError(f"malformed signature term {term!r}")
        if not slots:
            raise SignatureError("empty signature")
        return IndexSignature(tuple(slots), tuple(names))

    def shape(self, p: int, n: int) -> tuple[int, ...]:
        size = {T_UP: p, T_LO: p, S_UP: n, S_LO: n, V_UP: n * p, V_LO: n * p}
        return tuple(size[s] for s in self.slots)

    def __str__(self) -> str:
        out = []
        for slot, name in zip(self.slots, self.names):
            upper = slot in (T_UP, S_UP, V_UP)
            label = name if name.startswith("(") else f"({name})"
            out.append(("U" if upper else "L") + label)
        return ";".join(out)


def _slot_factors(sig: IndexSignature, blocks) -> list[np.ndarray]:
    """Per-slot transformation matrices M with new = M @ old on that axis."""
    A, B = blocks.A, blocks.B
    A_inv, B_inv = blocks.A_inv, blocks.B_inv
    table = {
        T_UP: A,
        T_LO: A_inv.T,
        S_UP: B,
        S_LO: B_inv.T,
        V_UP: np.kron(B, A_inv.T),
        V_LO: np.kron(B_inv.T, A),
    }
    return [table[s] for s in sig.slots]


@dataclass(frozen=True)
class DTensorField:
    """Component field of a candidate d-tensor.

    `components` evaluates the chart-native components at a jet point.  When
    the defining formula involves chart-dependent ingredients (a metric, a
    Lagrangian), `rebuild` produces the native field of the target chart of
    a change; fields whose formula reads the same in every chart leave it
    None.
    """

    name: str
    signature: IndexSignature
    p: int
    n: int
    components: Callable[[JetPoint], np.ndarray]
    rebuild: Callable[[ChangeMap], "DTensorField"] | None = None

    def in_chart(self, change: ChangeMap) -> "DTensorField":
        if self.rebuild is None:
            return self
        return self.rebuild(change)

    def __call__(self, u: JetPoint) -> np.ndarray:
        arr = np.asarray(self.components(u), dtype=float)
        want = self.signature.shape(self.p, self.n)
        if arr.shape != want:
            raise SignatureError(
                f"field '{self.name}' produced shape {arr.shape}, signature wants {want}")
        return arr


def transform_components(f: DTensorField, change: ChangeMap, u: JetPoint) -> np.ndarray:
    """Tensorially transformed components of f at the image of u."""
    blocks = jacobian_blocks(change, u.t, u.x)
    arr = f(u)
    for axis, M in enumerate(_slot_factors(f.signature, blocks)):
        arr = np.moveaxis(np.tensordot(M, arr, axes=(1, axis)), 0, axis)
    return arr


@dataclass(frozen=True)
class Verdict:
    passed: bool
    max_rel_err: float
    pairs: int
    witness: tuple[str, int] | None = None   # (change name, jet index) at the max error


def is_dtensor(f: DTensorField, changes: Sequence[ChangeMap], jets: Sequence[JetPoint],
               tol: float = 1e-8) -> Verdict:
    """Numeric verdict: do the components obey the d-tensor law?

    For each (change, jet) pair the tensorially transformed components are
    compared against the native components in the target chart; the relative
    error uses denominator max(1, |native component|).
    """
    worst = 0.0
    witness = None
    pairs = 0
    for change in changes:
        native_field = f.in_chart(change)
        for k, u in enumerate(jets):
            predicted = transform_components(f, change, u)
            native = native_field(transform_jet(change, u))
            err = float(np.max(np.abs(predicted - native) / np.maximum(1.0, np.abs(native))))
            pairs += 1
            if err > worst:
                worst = err
                witness = (change.name, k)
    return Verdict(passed=bool(worst <= tol), max_rel_err=worst, pairs=pairs,
                   witness=witness)


# ---------------------------------------------------------------------------
# canonical d-tensors


def liouville_c(u: JetPoint) -> np.ndarray:
    """Components C^{(i)}_{(a)} = x^i_a, fused vertical axis."""
    return u.v.reshape(u.n * u.p).copy()


def liouville_c_field(p: int, n: int) -> DTensorField:
    return DTensorField("liouville-c", IndexSignature.parse("U(i,a)"), p, n,
                        liouville_c)


def liouville_l(h: Metric, u: JetPoint) -> np.ndarray:
    """Components L^{(i)}_{(a)bc} = h_bc x^i_a."""
    hm = h.components_at(u.t)
    return np.einsum("ia,bc->iabc", u.v, hm).reshape(u.n * u.p, u.p, u.p)


def liouville_l_field(h: Metric, n: int) -> DTensorField:
    if h.kind != "temporal":
        raise SignatureError("liouville_l expects a temporal metric")
    return DTensorField(
        "liouville-l", IndexSignature.parse("U(i,a);L(b);L(c)"), h.dim, n,
        lambda u: liouville_l(h, u),
        rebuild=lambda c: liouville_l_field(pullback_metric(h, c), n))


def normalization_j(h: Metric, n: int, u: JetPoint) -> np.ndarray:
    """Components J^{(i)}_{(a)bj} = h_ab delta^i_j."""
    hm = h.components_at(u.t)
    p = h.dim
    return np.einsum("ab,ij->iabj", hm, np.eye(n)).reshape(n * p, p, n)


def normalization_j_field(h: Metric, n: int) -> DTensorField:
    if h.kind != "temporal":
        raise SignatureError("normalization_j expects a temporal metric")
    return DTensorField(
        "h-normalization-j", IndexSignature.parse("U(i,a);L(b);L(j)"), h.dim, n,
        lambda u: normalization_j(h, n, u),
        rebuild=lambda c: normalization_j_field(pullback_metric(h, c), n))


def _hessian_exprs(L: Expr, p: int, n: int) -> list[list[Expr]]:
    names = [jet_name(i + 1, a + 1) for i in range(n) for a in range(p)]
    first = [diff(L, v) for v in names]
    return [[diff(fi, vj) for vj in names] for fi in first]


def lagrangian_metric(L: Expr, p: int, n: int, u: JetPoint) -> np.ndarray:
    """Vertical metric G_{(i)(j)}^{(a)(b)} = (1/2) d^2 L / dx^i_a dx^j_b."""
    d2 = _hessian_exprs(L, p, n)
    env = jet_env(u)
    size = n * p
    out = np.empty((size, size))
    for r in range(size):
        for c in range(size):
            out[r, c] = d2[r][c].eval(env)
    return 0.5 * out


def lagrangian_metric_field(L: Expr, p: int, n: int, name: str = "lagrangian-metric") -> DTensorField:
    d2 = _hessian_exprs(L, p, n)
    size = n * p

    def comps(u: JetPoint) -> np.ndarray:
        env = jet_env(u)
        out = np.empty((size, size))
        for r in range(size):
            for c in range(size):
                out[r, c] = d2[r][c].eval(env)
        return 0.5 * out

    return DTensorField(
        name, IndexSignature.parse("L(i,a);L(j,b)"), p, n, comps,
        rebuild=lambda c: lagrangian_metric_field(jet_pullback(L, c, p, n), p, n, name))
