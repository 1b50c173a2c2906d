"""Prolongation of vector fields, flow transport, horizontal lift."""

import numpy as np
import pytest

from jetflow import numdiff as nd
from jetflow.connection import canonical_connection
from jetflow.dtensor import is_dtensor
from jetflow.jetspace import (JetPoint, jet_env, natural_frame_change,
                              random_jet, transform_jet)
from jetflow.prolong import (
    BaseVectorField,
    ProlongError,
    adapted_t_derivative,
    adapted_x_derivative,
    flow_transport,
    horizontal_lift,
    olver_prolong,
    prolongation_flow_error,
    pushforward,
    total_derivative,
    vertical_gap_field,
)

from helpers import catalog, jets_in, standard_metrics


# --- total derivative ----------------------------------------------------------


def test_total_derivative_chain_rule():
    """D_a f along the lift of a curve equals d/dt^a of the composite."""
    u = JetPoint(np.array([0.3, -0.2]), np.array([0.7, 1.1]),
                 np.array([[0.5, -1.0], [2.0, 0.25]]))
    D = total_derivative("sin(x1)*t2 + x2^2", u)
    # by hand: @f/@t = (0, sin(x1)); @f/@x = (t2 cos(x1), 2 x2)
    dft = np.array([0.0, np.sin(0.7)])
    dfx = np.array([-0.2 * np.cos(0.7), 2 * 1.1])
    want = dft + u.v.T @ dfx
    assert np.max(np.abs(D - want)) < 1e-14


def test_total_derivative_of_base_function_is_plain_gradient():
    u = JetPoint(np.array([0.4]), np.array([1.0]), np.array([[0.0]]))
    assert abs(total_derivative("t1^2", u)[0] - 0.8) < 1e-15


# --- prolongation components -----------------------------------------------------


def test_prolongation_of_purely_vertical_quantities():
    """For X = f(t,x) @/@x^i the vertical part is D_a f for that row."""
    X = BaseVectorField(2, 2, ["0", "0"], ["sin(t1)*x2", "0"])
    pr = olver_prolong(X)
    u = random_jet(np.random.default_rng(91), 2, 2)
    vert = pr.vertical(u)
    want_row0 = total_derivative("sin(t1)*x2", u)
    assert np.max(np.abs(vert[0] - want_row0)) < 1e-13
    assert np.max(np.abs(vert[1])) < 1e-15


def test_prolongation_of_temporal_field_drags_jets():
    """For X = g(t) @/@t^b the vertical part is -(D_a g) x^i_b."""
    X = BaseVectorField(1, 2, ["t1^2"], ["0", "0"])
    pr = olver_prolong(X)
    u = JetPoint(np.array([0.5]), np.array([1.0, -1.0]),
                 np.array([[0.7], [-0.2]]))
    vert = pr.vertical(u)
    want = -u.v * (2 * 0.5)
    assert np.max(np.abs(vert - want)) < 1e-14


def test_packed_layout():
    X = BaseVectorField(1, 2, ["1"], ["x1", "x2"])
    pr = olver_prolong(X)
    u = JetPoint(np.array([0.0]), np.array([2.0, 3.0]),
                 np.array([[0.1], [0.2]]))
    z = pr.packed(u)
    assert z.shape == (1 + 2 + 2,)
    assert z[0] == 1.0 and z[1] == 2.0 and z[2] == 3.0
    assert np.max(np.abs(z[3:] - pr.vertical(u).reshape(-1))) < 1e-15


# --- flow-transport oracle ---------------------------------------------------------


def test_constant_field_flow_transport_is_exact():
    X = BaseVectorField(2, 2, ["0.3", "-0.1"], ["0.7", "0.2"])
    jets = jets_in(np.random.default_rng(92), 2, 2, count=4)
    assert prolongation_flow_error(X, jets, eps=0.05) < 1e-8


def test_flow_difference_converges_at_second_order():
    """Central transport differences converge to pr1(X) with the halving
    ratio 4 (error ~ eps^2)."""
    X = BaseVectorField(1, 2, ["0.25*t1^2 + 0.1*x1"],
                        ["sin(x1) + 0.2*t1*x2", "0.3*x2^2 + 0.1*t1"])
    jets = jets_in(np.random.default_rng(93), 1, 2, count=4)
    e1 = prolongation_flow_error(X, jets, eps=0.04)
    e2 = prolongation_flow_error(X, jets, eps=0.02)
    assert 3.5 < e1 / e2 < 4.5
    assert e1 < 1e-2


def test_flow_transport_matches_jet_lift_of_flowed_graph():
    """Transporting the jet of a graph map must agree with the jet of the
    transported graph: check against the transport of a second nearby jet."""
    X = BaseVectorField(1, 1, ["0.2*t1 + 0.1"], ["0.5*x1"])
    u = JetPoint(np.array([0.3]), np.array([0.8]), np.array([[1.2]]))
    w = flow_transport(X, u, eps=0.3)
    # linear field: flow is exactly expressible, d/deps of transport at
    # eps = 0 equals the prolongation; integrate the vertical part along
    # the flow with small steps as an independent check
    steps = 256
    pr = olver_prolong(X)
    q = u
    for _ in range(steps):
        z = pr.packed(q)
        q = JetPoint(q.t + (0.3 / steps) * z[:1],
                     q.x + (0.3 / steps) * z[1:2],
                     q.v + (0.3 / steps) * z[2:].reshape(1, 1))
    assert np.max(np.abs(w.t - q.t)) < 1e-3
    assert np.max(np.abs(w.x - q.x)) < 1e-3
    assert np.max(np.abs(w.v - q.v)) < 1e-3


# --- equivariance ---------------------------------------------------------------------


def test_prolongation_commutes_with_chart_changes():
    """pr1(pushforward X) at the image jet = S^T pr1(X) at the source jet."""
    rng = np.random.default_rng(94)
    X = BaseVectorField(2, 2, ["0.2*t2", "0.1*t1^2"],
                        ["sin(x2)", "0.3*x1*x2"])
    for c in catalog(rng, 2, 2, count=1):
        pushed = pushforward(X, c)
        pr_source = olver_prolong(X)
        pr_target = olver_prolong(pushed)
        for u in jets_in(rng, 2, 2, count=3):
            S = natural_frame_change(c, u)
            want = S.T @ pr_source.packed(u)
            got = pr_target.packed(transform_jet(c, u))
            assert np.max(np.abs(got - want)) < 1e-9, c.name


def test_pushforward_round_trip():
    rng = np.random.default_rng(95)
    X = BaseVectorField(1, 2, ["0.5"], ["x2", "sin(x1)"])
    c = nd.random_change(rng, 1, 2, "mixed")
    back = pushforward(pushforward(X, c), c.inverted())
    t, x = np.array([0.2]), np.array([0.4, -0.6])
    Xt, Xx = X(t, x)
    Bt, Bx = back(t, x)
    assert np.max(np.abs(Xt - Bt)) < 1e-10
    assert np.max(np.abs(Xx - Bx)) < 1e-10


def test_pushforward_dimension_check():
    X = BaseVectorField(1, 2, ["1"], ["0", "0"])
    with pytest.raises(ProlongError):
        pushforward(X, nd.identity_change(2, 2))


# --- horizontal lift and vertical gap ---------------------------------------------------


def test_horizontal_lift_vertical_components():
    h, phi = standard_metrics(2, 2)
    conn = canonical_connection(h, phi)
    X = BaseVectorField(2, 2, ["1", "0"], ["0", "1"])
    lift = horizontal_lift(X, conn)
    u = jets_in(np.random.default_rng(96), 2, 2, h=h, phi=phi, count=1)[0]
    want = -(conn.temporal(u)[:, :, 0] + conn.spatial(u)[:, :, 1])
    assert np.max(np.abs(lift.vertical(u) - want)) < 1e-13
    assert np.array_equal(lift.temporal(u), np.array([1.0, 0.0]))


def test_vertical_gap_is_a_dtensor():
    rng = np.random.default_rng(97)
    h, phi = standard_metrics(2, 2)
    conn = canonical_connection(h, phi)
    X = BaseVectorField(2, 2, ["0.2*t2", "0.1*t1"], ["sin(x2)", "0.3*x1"])
    gap = vertical_gap_field(X, conn)
    v = is_dtensor(gap, catalog(rng, 2, 2, count=2),
                   jets_in(rng, 2, 2, h=h, phi=phi, count=5))
    assert v.passed, v.max_rel_err


def test_horizontal_lift_dimension_check():
    h, phi = standard_metrics(2, 2)
    conn = canonical_connection(h, phi)
    X = BaseVectorField(1, 2, ["1"], ["0", "0"])
    with pytest.raises(ProlongError):
        horizontal_lift(X, conn)


# --- adapted derivatives ------------------------------------------------------------------


def test_adapted_derivatives_kill_horizontal_directions():
    """For f depending only on base coordinates the adapted derivatives are
    the plain partials (no vertical correction applies)."""
    h, phi = standard_metrics(2, 2)
    conn = canonical_connection(h, phi)
    u = jets_in(np.random.default_rng(98), 2, 2, h=h, phi=phi, count=1)[0]
    dt = adapted_t_derivative("t1*t2", conn, u)
    assert np.max(np.abs(dt - np.array([u.t[1], u.t[0]]))) < 1e-13
    dx = adapted_x_derivative("x1^2", conn, u)
    assert np.max(np.abs(dx - np.array([2 * u.x[0], 0.0]))) < 1e-13


def test_adapted_derivative_subtracts_connection_terms():
    h, phi = standard_metrics(2, 2)
    conn = canonical_connection(h, phi)
    u = jets_in(np.random.default_rng(99), 2, 2, h=h, phi=phi, count=1)[0]
    # f = x1_1: @f/@x^j_b = delta(j,0)delta(b,0)
    dt = adapted_t_derivative("x1_1", conn, u)
    assert np.max(np.abs(dt - (-conn.temporal(u)[0, 0, :]))) < 1e-13
    dx = adapted_x_derivative("x1_1", conn, u)
    assert np.max(np.abs(dx - (-conn.spatial(u)[0, 0, :]))) < 1e-13


# --- validation -----------------------------------------------------------------------------


def test_base_field_validation():
    with pytest.raises(ProlongError, match="component count"):
        BaseVectorField(2, 2, ["1"], ["0", "0"])
    with pytest.raises(ProlongError, match="foreign variables"):
        BaseVectorField(1, 1, ["x2"], ["0"])
    with pytest.raises(ProlongError):
        BaseVectorField(1, 1, ["x1_1"], ["0"])
