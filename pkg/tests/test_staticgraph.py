import numpy as np
import pytest

from spacelike.errors import DimensionError, NonSpacelikeError, SignatureError
from spacelike.mesh import Axis, ParamMesh
from spacelike.staticgraph import (
    GraphFunction,
    StaticModel,
    conformal_laplacian_tau,
    conformal_volume_integral,
    graph_immersion,
    graph_mean_curvature,
    graph_operator,
    hyperbolic_angle,
    laplacian_tau,
    spacelike_check,
    staggered_margin,
    unit_normal,
)
from spacelike.util import admissible_graph_noise


def torus_model(n, h="1 + 0.3*sin(2*pi*x1)"):
    mesh = ParamMesh((Axis(n, 1.0), Axis(n, 1.0)))
    return StaticModel(mesh, [["1", "0"], ["0", "1"]], h)


def test_constant_graph_margin():
    g = GraphFunction.from_expr(torus_model(16), "0.7")
    ok, margin = spacelike_check(g)
    assert ok and margin == 1.0
    assert np.max(np.abs(hyperbolic_angle(g) - 1.0)) == 0.0


def test_flat_null_graph_rejected():
    mesh = ParamMesh((Axis(16, 1.0, periodic=False),), names=("x1",))
    model = StaticModel(mesh, [["1"]], "1")
    g = GraphFunction.from_expr(model, "x1")
    ok, margin = spacelike_check(g)
    assert not ok and margin < 1e-6
    with pytest.raises(NonSpacelikeError):
        hyperbolic_angle(g)


def test_half_slope_margin():
    mesh = ParamMesh((Axis(16, 1.0, periodic=False),), names=("x1",))
    model = StaticModel(mesh, [["1"]], "1")
    g = GraphFunction.from_expr(model, "0.5*x1")
    ok, margin = spacelike_check(g)
    assert ok and margin == pytest.approx(0.75, abs=1e-12)


def test_hyperbolic_angle_value():
    # h = 1 and |grad u|^2 = 1/2 gives cosh(theta) = sqrt(2).
    mesh = ParamMesh((Axis(16, 1.0, periodic=False),), names=("x1",))
    model = StaticModel(mesh, [["1"]], "1")
    g = GraphFunction.from_expr(model, f"{np.sqrt(0.5)}*x1")
    angle = hyperbolic_angle(g)
    assert np.max(np.abs(angle - np.sqrt(2.0))) < 1e-12


def test_unit_normal_is_unit_and_orthogonal():
    model = torus_model(32)
    g = GraphFunction.from_expr(model, "0.05*sin(2*pi*x1) + 0.04*cos(2*pi*x2)")
    N = unit_normal(g)
    imm = graph_immersion(g)
    q = np.einsum("...a,...ab,...b->...", N, imm.ambient_metric, N)
    assert np.max(np.abs(q + 1.0)) < 1e-9
    orth = np.einsum("...a,...ab,...ib->...i", N, imm.ambient_metric, imm.tangents)
    assert np.max(np.abs(orth)) < 1e-9
    # Future pointing: negative pairing against the static observer.
    fut = np.zeros_like(N)
    fut[..., 0] = 1.0
    assert np.max(np.einsum("...a,...ab,...b->...", N, imm.ambient_metric, fut)) < 0


def test_constant_graph_extremal():
    g = GraphFunction.from_expr(torus_model(16), "0.3")
    assert np.max(np.abs(graph_mean_curvature(g))) == 0.0
    g2 = GraphFunction.from_expr(torus_model(16, h="exp(x1)"), "0.3")
    assert np.max(np.abs(graph_mean_curvature(g2))) == 0.0


def test_linearized_operator_is_laplacian():
    model = torus_model(64, h="1")
    eps = 1e-3
    g = GraphFunction.from_expr(model, f"{eps}*sin(2*pi*x1)")
    H = graph_mean_curvature(g)
    predicted = -((2 * np.pi) ** 2) * g.u
    rel = np.max(np.abs(H - predicted)) / np.max(np.abs(predicted))
    assert rel < 2e-3  # O(h^2) + O(eps^2)


def test_graph_matches_immersion_mean_curvature():
    sups = []
    for n in (32, 64):
        model = torus_model(n)
        g = GraphFunction.from_expr(model, "0.05*sin(2*pi*x1) + 0.04*cos(2*pi*x2)")
        imm = graph_immersion(g)
        N = unit_normal(g)
        them = np.einsum(
            "...a,...ab,...b->...", imm.mean_curvature(), imm.ambient_metric, N
        )
        sups.append(np.max(np.abs(graph_mean_curvature(g) - them)))
    assert 2.8 <= sups[0] / sups[1] <= 5.5


def test_staggered_margin_sees_checkerboard():
    model = torus_model(16, h="1")
    cb = 0.02 * (-1.0) ** (np.add.outer(np.arange(16), np.arange(16)))
    g = GraphFunction(model, cb)
    assert g.margin.min() == pytest.approx(1.0)  # node-central misses it
    assert staggered_margin(model, cb) < 0.7     # flux points see it


def test_laplacian_tau_constant_slice():
    model = torus_model(16)
    imm = graph_immersion(GraphFunction.from_expr(model, "0.4"))
    lhs, rhs = laplacian_tau(model, imm)
    assert np.max(np.abs(lhs)) < 1e-12
    assert np.max(np.abs(rhs)) < 1e-12


def test_laplacian_tau_second_order():
    sups = []
    for n in (16, 32):
        model = torus_model(n)
        rng = np.random.default_rng(3)
        u = admissible_graph_noise(rng, model, amplitude=0.05)
        lhs, rhs = laplacian_tau(model, graph_immersion(GraphFunction(model, u)))
        sups.append(np.max(np.abs(lhs - rhs)))
    assert 2.4 <= sups[0] / sups[1] <= 6.5


def test_laplacian_tau_codimension_two():
    # Closed curve in a 3D static model: tau identity holds at order 2.
    from spacelike.immersion import ImmersedSubmanifold

    sups = []
    for n in (64, 128):
        mesh1 = ParamMesh((Axis(n, 1.0),), names=("s",))
        modeln = torus_model(16)
        curve = ImmersedSubmanifold.from_exprs(
            mesh1, modeln.ambient,
            ("0.05*sin(2*pi*s)", "0.5 + 0.2*cos(2*pi*s)", "0.5 + 0.2*sin(2*pi*s)"),
        )
        lhs, rhs = laplacian_tau(modeln, curve)
        sups.append(np.max(np.abs(lhs - rhs)))
    assert 2.8 <= sups[0] / sups[1] <= 5.5


def test_conformal_laplacian_requires_dim_three():
    model = torus_model(16)
    imm = graph_immersion(GraphFunction.from_expr(model, "0.1"))
    with pytest.raises(DimensionError, match="dimension >= 3"):
        conformal_laplacian_tau(model, imm)


def model3(n, h="1 + 0.2*sin(2*pi*x1)"):
    mesh = ParamMesh((Axis(n, 1.0), Axis(n, 1.0), Axis(n, 1.0)))
    return StaticModel(mesh, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]], h)


def test_conformal_laplacian_flat_warp_reduces_to_plain():
    model = model3(12, h="1")
    rng = np.random.default_rng(1)
    u = admissible_graph_noise(rng, model, amplitude=0.04)
    imm = graph_immersion(GraphFunction(model, u))
    lhs_c, rhs_c = conformal_laplacian_tau(model, imm)
    lhs_p, rhs_p = laplacian_tau(model, imm)
    assert np.max(np.abs(lhs_c - lhs_p)) < 1e-12
    assert np.max(np.abs(rhs_c - rhs_p)) < 1e-12


def test_conformal_laplacian_second_order():
    sups = []
    for n in (12, 24):
        model = model3(n)
        rng = np.random.default_rng(2)
        u = admissible_graph_noise(rng, model, amplitude=0.04)
        lhs, rhs = conformal_laplacian_tau(model, graph_immersion(GraphFunction(model, u)))
        sups.append(np.max(np.abs(lhs - rhs)))
    assert 2.4 <= sups[0] / sups[1] <= 6.5


def test_conformal_rhs_integrates_to_zero_on_closed_graphs():
    # The rigidity mechanism: the conformal Laplacian of tau integrates to
    # zero over a closed graph, up to discretization; a one-signed time
    # flux therefore forces containment in a slice.
    vals = []
    for n in (12, 24):
        model = model3(n)
        rng = np.random.default_rng(4)
        u = admissible_graph_noise(rng, model, amplitude=0.04)
        imm = graph_immersion(GraphFunction(model, u))
        _, rhs = conformal_laplacian_tau(model, imm)
        vals.append(abs(conformal_volume_integral(model, imm, rhs)))
    assert vals[1] < 5e-3
    assert 2.5 <= vals[0] / vals[1] <= 6.0


def test_positive_warp_required():
    mesh = ParamMesh((Axis(16, 1.0), Axis(16, 1.0)))
    model = StaticModel(mesh, [["1", "0"], ["0", "1"]], "sin(2*pi*x1)")
    with pytest.raises(SignatureError, match="positive"):
        model.node_data
