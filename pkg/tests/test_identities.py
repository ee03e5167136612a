import numpy as np
import pytest

from spacelike.chart import VectorField
from spacelike.errors import MeshError
from spacelike.identities import (
    div_S,
    div_S_rotated,
    divergence_residual,
    tangential_divergence,
    verify_integral_formula,
)
from spacelike.immersion import ImmersedSubmanifold
from spacelike.mesh import Axis, ParamMesh
from spacelike.spacetime import minkowski, standard_static

MINK4 = minkowski(4)


def torus_mesh(n):
    return ParamMesh((Axis(n, 1.0), Axis(n, 1.0)))


def wavy_torus(n, model=None, a1=0.03, a2=0.05):
    return ImmersedSubmanifold.from_exprs(
        torus_mesh(n), model or MINK4,
        (f"{a1}*sin(2*pi*x1)*cos(2*pi*x2)", "x1", "x2", f"{a2}*cos(2*pi*(x1 + x2))"),
    )


def revolution_torus(n, eps=0.02):
    return ImmersedSubmanifold.from_exprs(
        torus_mesh(n), MINK4,
        (
            f"{eps}*sin(2*pi*x1)",
            "(0.25 + 0.1*cos(2*pi*x2))*cos(2*pi*x1)",
            "(0.25 + 0.1*cos(2*pi*x2))*sin(2*pi*x1)",
            "0.1*sin(2*pi*x2)",
        ),
    )


def test_killing_div_vanishes():
    static = standard_static(("x1", "x2"), [["1", "0"], ["0", "1"]], "1 + 0.3*sin(2*pi*x1)")
    imm = ImmersedSubmanifold.from_exprs(
        torus_mesh(24), static, ("0.02*sin(2*pi*x1)", "x1", "x2")
    )
    assert np.max(np.abs(div_S(imm, VectorField(("1", "0", "0"))))) < 1e-12


def test_homothety_div_equals_dimension():
    K = VectorField(("t", "x1", "x2", "x3"))
    imm = wavy_torus(24)
    assert np.max(np.abs(div_S(imm, K) - 2.0)) < 1e-12


def test_position_field_in_flat_slice():
    # Spatial position field restricted to a slice torus: div_S = n exactly
    # (conformal identity with unit factor on the slice directions).
    imm = revolution_torus(24, eps=0.0)
    X = VectorField(("0", "x1", "x2", "x3"))
    assert np.max(np.abs(div_S(imm, X) - 2.0)) < 1e-12


def test_frame_independence():
    imm = wavy_torus(16)
    X = VectorField(("0.2*t + x1", "x2*x3", "1 - x1", "x1*x2"))
    base = div_S(imm, X)
    for seed in range(3):
        rot = div_S_rotated(imm, X, np.random.default_rng(seed))
        assert np.max(np.abs(base - rot)) < 1e-9


def test_tangential_divergence_of_normal_field_vanishes():
    # The future normal of the flat slice is dt; its projection is zero.
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    out = tangential_divergence(imm, VectorField(("1", "0", "0", "0")))
    assert np.max(np.abs(out)) < 1e-12


def test_tangential_divergence_rotational_field():
    # Divergence-free tangent field on the flat torus chart.
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    X = VectorField(("0", "sin(2*pi*x2)", "cos(2*pi*x1)", "0"))
    assert np.max(np.abs(tangential_divergence(imm, X))) < 1e-10


def test_divergence_identity_second_order():
    X = VectorField((
        "0.3 + 0.2*t - 0.4*x1*x2",
        "0.1 - 0.3*x2 + 0.2*x1*x1",
        "0.5*x1 - 0.2*x3",
        "0.4*x2*x3 - 0.1",
    ))
    sups = []
    for n in (16, 32, 64):
        sups.append(float(np.max(np.abs(divergence_residual(revolution_torus(n), X)))))
    assert 2.8 <= sups[0] / sups[1] <= 5.5
    assert 2.8 <= sups[1] / sups[2] <= 5.5


def test_integral_formula_refines():
    X = VectorField((
        "0.4 + 0.5*sin(2*pi*x1)*cos(2*pi*x2) + 0.2*t",
        "0.8*cos(2*pi*x1) + 0.3*t + 0.1*x3",
        "-0.6*sin(2*pi*x2)*sin(2*pi*x1) + 0.3*t",
        "0.5*x3 + 0.4*sin(2*pi*x1)*cos(2*pi*x2)",
    ))
    vals = [abs(verify_integral_formula(wavy_torus(n), X).integral_value) for n in (32, 64)]
    assert 3.0 <= vals[0] / vals[1] <= 5.0


def test_integral_formula_requires_closed():
    mesh = ParamMesh((Axis(16, 1.0, periodic=False), Axis(16, 1.0)))
    imm = ImmersedSubmanifold.from_exprs(mesh, MINK4, ("0", "0.3*x1", "x2", "0.5"))
    with pytest.raises(MeshError, match="closed"):
        verify_integral_formula(imm, VectorField(("1", "0", "0", "0")))


def test_killing_on_extremal_slice_integrand_vanishes():
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    rep = verify_integral_formula(imm, VectorField(("1", "0", "0", "0")))
    assert abs(rep.integral_value) < 1e-12
    assert not rep.witness


def test_homothety_witness_on_flat_quotient_torus():
    # The chart homothety is not single-valued on the quotient torus; the
    # nonzero integral gap n * Vol is the non-existence witness.
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    K = VectorField(("t", "x1", "x2", "x3"))
    rep = verify_integral_formula(imm, K)
    assert rep.integral_value == pytest.approx(2.0, abs=1e-12)  # n * Vol(torus)
    assert rep.witness
    assert rep.witness_gap_fraction == pytest.approx(1.0, abs=1e-12)
