import numpy as np
import pytest

from oracles import curve_acceleration_norm, frw_null_expansions
from spacelike.errors import NonSpacelikeError
from spacelike.immersion import ImmersedSubmanifold, classify_tags
from spacelike.mesh import Axis, ParamMesh
from spacelike.spacetime import CausalClass, minkowski, orthogonal_splitted, standard_static

MINK4 = minkowski(4)
MINK3 = minkowski(3)


def torus_mesh(n):
    return ParamMesh((Axis(n, 1.0), Axis(n, 1.0)))


def test_flat_torus_slice_identity_metric():
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    assert np.max(np.abs(imm.metric - np.eye(2))) == 0.0
    assert np.max(np.abs(imm.density - 1.0)) == 0.0


def test_tilted_graph_induced_metric():
    mesh = ParamMesh((Axis(16, 1.0, periodic=False),), names=("s",))
    imm = ImmersedSubmanifold.from_exprs(mesh, MINK3, ("0.3*s", "s", "0"))
    assert np.max(np.abs(imm.metric[..., 0, 0] - 0.91)) < 1e-12


def test_null_direction_rejected():
    mesh = ParamMesh((Axis(16, 1.0, periodic=False),), names=("s",))
    with pytest.raises(NonSpacelikeError, match="node"):
        ImmersedSubmanifold.from_exprs(mesh, MINK3, ("s", "s", "0"))


def test_totally_geodesic_slices_have_zero_ii():
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    assert np.max(np.abs(imm.second_fundamental_form)) < 1e-12
    static = standard_static(("x1", "x2"), [["1", "0"], ["0", "1"]], "1 + 0.4*sin(2*pi*x1)")
    imm2 = ImmersedSubmanifold.from_exprs(torus_mesh(16), static, ("0.7", "x1", "x2"))
    assert np.max(np.abs(imm2.second_fundamental_form)) < 1e-12


def test_circle_ii_matches_acceleration_oracle():
    r = 0.5
    mesh = ParamMesh((Axis(128, 1.0),), names=("s",))
    imm = ImmersedSubmanifold.from_exprs(
        mesh, MINK3, ("0", f"{r}*cos(2*pi*s)", f"{r}*sin(2*pi*s)")
    )
    II = imm.second_fundamental_form
    g = imm.metric
    norm_ii = np.sqrt(np.einsum("...a,...a->...", II[..., 0, 0, 1:], II[..., 0, 0, 1:])) / g[..., 0, 0]
    oracle = curve_acceleration_norm(imm.map_values[:, 1:])
    assert np.max(np.abs(norm_ii - oracle)) < 1e-10
    assert np.max(np.abs(oracle - 1.0 / r)) < 5e-3
    # II points inward: against the radial direction.
    radial = imm.map_values[:, 1:] / r
    dots = np.einsum("...a,...a->...", II[:, 0, 0, 1:], radial)
    assert np.max(dots) < 0


def test_ii_orthogonal_to_tangents():
    imm = ImmersedSubmanifold.from_exprs(
        torus_mesh(24), MINK4,
        ("0.03*sin(2*pi*x1)", "x1", "x2", "0.05*cos(2*pi*(x1 + x2))"),
    )
    orth = np.einsum(
        "...ija,...ab,...kb->...ijk",
        imm.second_fundamental_form, imm.ambient_metric, imm.tangents,
    )
    assert np.max(np.abs(orth)) < 1e-8


def test_great_sphere_in_einstein_static_is_extremal():
    from spacelike.spacetime import custom_model

    einstein = custom_model(
        ("t", "chi", "th", "ph"),
        [
            ["-1", "0", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "sin(chi)^2", "0"],
            ["0", "0", "0", "sin(chi)^2*sin(th)^2"],
        ],
        ("1", "0", "0", "0"),
    )
    mesh = ParamMesh(
        (Axis(24, np.pi - 0.6, periodic=False, start=0.3), Axis(24, 2 * np.pi)),
        names=("u", "v"),
    )
    great = ImmersedSubmanifold.from_exprs(mesh, einstein, ("0", f"{np.pi/2}", "u", "v"))
    assert np.max(np.abs(great.second_fundamental_form)) < 1e-10
    assert great.mean_curvature_report().global_tag == "extremal"


def test_flat_torus_extremal():
    imm = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, ("0", "x1", "x2", "0"))
    rep = imm.mean_curvature_report()
    assert rep.global_tag == "extremal"
    assert np.max(np.abs(rep.H)) == 0.0


def test_round_sphere_norm_and_outward():
    r = 0.8
    mesh = ParamMesh(
        (Axis(64, np.pi - 0.4, periodic=False, start=0.2), Axis(64, 2 * np.pi)),
        names=("th", "ph"),
    )
    imm = ImmersedSubmanifold.from_exprs(
        mesh, MINK4,
        ("0", f"{r}*sin(th)*cos(ph)", f"{r}*sin(th)*sin(ph)", f"{r}*cos(th)"),
    )
    rep = imm.mean_curvature_report()
    assert rep.global_tag == "mixed"
    norm = np.sqrt(rep.norm_squared)
    assert np.max(np.abs(norm - 2.0 / r)) / (2.0 / r) < 5e-3
    # Spec sign convention: the mean curvature vector points outward, so
    # minus it points along the inward normal.
    radial = imm.map_values[..., 1:] / r
    assert np.min(np.einsum("...a,...a->...", rep.H[..., 1:], radial)) > 0


def test_circle_curvature_second_order_convergence():
    r = 0.5
    errs = []
    for n in (32, 64, 128):
        mesh = ParamMesh((Axis(n, 1.0),), names=("s",))
        imm = ImmersedSubmanifold.from_exprs(
            mesh, MINK3, ("0", f"{r}*cos(2*pi*s)", f"{r}*sin(2*pi*s)")
        )
        norm = np.sqrt(imm.mean_curvature_report().norm_squared)
        errs.append(np.max(np.abs(norm - 1.0 / r)))
    assert 0.9 * 4 <= errs[0] / errs[1] <= 1.1 * 4
    assert 0.9 * 4 <= errs[1] / errs[2] <= 1.1 * 4


def test_isometry_invariance_of_norm():
    base = ("0.02*sin(2*pi*x1)", "x1", "x2", "0.04*cos(2*pi*x2)")
    shifted = ("0.02*sin(2*pi*x1)", "x1 + 0.37", "x2 - 1.4", "0.04*cos(2*pi*x2) + 2.0")
    a = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, base)
    b = ImmersedSubmanifold.from_exprs(torus_mesh(16), MINK4, shifted)
    na = a.mean_curvature_report().norm_squared
    nb = b.mean_curvature_report().norm_squared
    assert np.max(np.abs(na - nb)) < 1e-10


def test_expanding_model_trapped_threshold():
    warped = orthogonal_splitted(
        ("x", "y", "z"),
        [["exp(2*t)", "0", "0"], ["0", "exp(2*t)", "0"], ["0", "0", "exp(2*t)"]],
        "1",
    )
    mesh = ParamMesh(
        (Axis(32, np.pi - 0.4, periodic=False, start=0.2), Axis(32, 2 * np.pi)),
        names=("th", "ph"),
    )
    for r, expected in ((1.6, "past_trapped"), (0.5, "mixed")):
        theta_out, theta_in = frw_null_expansions(hubble=1.0, scale=1.0, radius=r)
        assert (theta_out > 0 and theta_in > 0) == (expected == "past_trapped")
        imm = ImmersedSubmanifold.from_exprs(
            mesh, warped,
            ("0", f"{r}*sin(th)*cos(ph)", f"{r}*sin(th)*sin(ph)", f"{r}*cos(th)"),
        )
        rep = imm.mean_curvature_report()
        assert rep.global_tag == expected
        scale = 4.0 / r**2 + 4.0
        assert np.max(np.abs(rep.norm_squared - (4.0 / r**2 - 4.0))) < 0.02 * scale


def test_winding_must_be_constant():
    mesh = ParamMesh((Axis(16, 1.0),), names=("s",))
    with pytest.raises(Exception, match="close up"):
        ImmersedSubmanifold.from_exprs(mesh, MINK3, ("0", "s*s", "0.2"))


@pytest.mark.parametrize(
    "classes,tag",
    [
        ([CausalClass.ZERO] * 4, "extremal"),
        ([CausalClass.FUTURE_TIMELIKE] * 4, "future_trapped"),
        ([CausalClass.PAST_TIMELIKE] * 4, "past_trapped"),
        ([CausalClass.FUTURE_TIMELIKE, CausalClass.FUTURE_LIGHTLIKE], "nearly_future_trapped"),
        ([CausalClass.FUTURE_TIMELIKE, CausalClass.ZERO], "nearly_future_trapped"),
        ([CausalClass.FUTURE_LIGHTLIKE, CausalClass.ZERO], "marginally_future_trapped"),
        ([CausalClass.FUTURE_LIGHTLIKE] * 3, "marginally_future_trapped"),
        ([CausalClass.PAST_LIGHTLIKE, CausalClass.ZERO], "marginally_past_trapped"),
        ([CausalClass.FUTURE_TIMELIKE, CausalClass.PAST_TIMELIKE], "mixed"),
        ([CausalClass.SPACELIKE, CausalClass.FUTURE_TIMELIKE], "mixed"),
        ([CausalClass.SPACELIKE] * 2, "mixed"),
    ],
)
def test_classification_tags(classes, tag):
    assert classify_tags(classes) == tag


def test_reclassify_with_tolerance():
    # A tiny timelike mean curvature collapses to zero under a huge tolerance.
    warped = orthogonal_splitted(
        ("x", "y"), [["exp(2*t)", "0"], ["0", "exp(2*t)"]], "1"
    )
    imm = ImmersedSubmanifold.from_exprs(
        torus_mesh(16), warped, ("0", "x1", "x2")
    )
    rep = imm.mean_curvature_report()
    assert rep.global_tag == "past_trapped"  # expanding slice: H = -2 dt
    loose = rep.reclassify(tol=10.0)
    assert loose.global_tag == "extremal"
