"""Constraint checks, stationarity obstructions and normal-flow margins
for initial data sets (S, g, A) of the Einstein equation.

Everything expression-defined is evaluated with exact symbolic derivatives,
so the constraint residuals vanish to round-off on closed-form families.
The normal-flow margins integrate the geodesic flow of the slice normal
through an analytic development, transporting the Weingarten tensor of the
flow with its Riccati equation W' + W^2 + R(., v)v = 0 in a parallel
orthonormal frame; the extended operator -W is the canonical extension of
the shape operator by the flow, and the margins are the largest parameter
intervals on which it stays definite of its initial sign (sampled minima,
reported as such, never a claimed infimum).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .chart import MetricChart, VectorField
from .errors import MeshError, SignatureError
from .exprs import differentiate, eval_expr, parse_expr
from .immersion import ImmersedSubmanifold
from .mesh import ParamMesh
from .spacetime import MetricModel, RiemannianSpace


@dataclass(frozen=True)
class InitialDataSet:
    """Riemannian metric g, shape-operator field A (as A^i_j), sources phi, X."""

    mesh: ParamMesh
    g: tuple
    A: tuple
    phi: object = "0"
    X: VectorField = None

    def __post_init__(self):
        n = self.mesh.ndim
        g_rows = tuple(tuple(parse_expr(self.g[i][j]) for j in range(n)) for i in range(n))
        a_rows = tuple(tuple(parse_expr(self.A[i][j]) for j in range(n)) for i in range(n))
        object.__setattr__(self, "g", g_rows)
        object.__setattr__(self, "A", a_rows)
        object.__setattr__(self, "phi", parse_expr(self.phi))
        X = self.X if self.X is not None else VectorField(("0",) * n)
        if not isinstance(X, VectorField):
            X = VectorField(tuple(X))
        object.__setattr__(self, "X", X)
        self._validate()

    @property
    def n(self):
        return self.mesh.ndim

    @property
    def coords(self):
        return self.mesh.names

    @cached_property
    def chart(self) -> MetricChart:
        return MetricChart(self.coords, [[str(e) for e in row] for row in self.g])

    @cached_property
    def space(self) -> RiemannianSpace:
        return RiemannianSpace(self.chart)

    @cached_property
    def points(self):
        grids = self.mesh.grids
        out = np.empty(self.mesh.shape + (self.n,))
        for i, grid in enumerate(grids):
            out[..., i] = grid
        return out

    def a_values(self, points=None):
        """A^i_j evaluated at points (default: all mesh nodes)."""
        points = self.points if points is None else points
        binds = {c: points[..., i] for i, c in enumerate(self.coords)}
        out = np.empty(points.shape[:-1] + (self.n, self.n))
        for i in range(self.n):
            for j in range(self.n):
                out[..., i, j] = eval_expr(self.A[i][j], binds)
        return out

    def _validate(self):
        gval = self.space.metric_at(self.points)  # positive definite or raises
        aval = self.a_values()
        B = np.einsum("...ik,...kj->...ij", gval, aval)
        asym = np.max(np.abs(B - np.swapaxes(B, -1, -2)))
        scale = max(float(np.max(np.abs(B))), 1e-30)
        if asym > 1e-10 * scale:
            raise SignatureError(
                f"A is not self-adjoint w.r.t. g: max |gA - (gA)^T| = {asym}"
            )


# -- gridded data ----------------------------------------------------------------


@dataclass(frozen=True)
class GriddedInitialData:
    """Initial data supplied as node tables instead of expressions.

    Derivatives fall back to mesh finite differences, so the constraint
    residuals are exact only to O(spacing^2) even on closed-form families.
    Fields: g and A as (..., n, n) arrays, phi (...,), X (..., n).
    """

    mesh: ParamMesh
    g: np.ndarray
    A: np.ndarray
    phi: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        n = self.mesh.ndim
        shape = self.mesh.shape
        g = np.asarray(self.g, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if g.shape != shape + (n, n) or A.shape != shape + (n, n):
            raise MeshError("gridded g and A must have shape mesh + (n, n)")
        eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
        if np.min(eig) <= 0:
            raise SignatureError("gridded metric must be positive definite")
        object.__setattr__(self, "g", 0.5 * (g + np.swapaxes(g, -1, -2)))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "phi", np.broadcast_to(np.asarray(self.phi, dtype=float), shape).copy())
        X = np.zeros(shape + (n,)) if self.X is None else np.asarray(self.X, dtype=float)
        object.__setattr__(self, "X", X)
        B = np.einsum("...ik,...kj->...ij", self.g, A)
        asym = np.max(np.abs(B - np.swapaxes(B, -1, -2)))
        if asym > 1e-8 * max(float(np.max(np.abs(B))), 1e-30):
            raise SignatureError("gridded A is not self-adjoint w.r.t. g")


def _gridded_christoffel(mesh, g):
    from .mesh import fd_partial

    n = mesh.ndim
    dg = np.stack([fd_partial(g, mesh, c) for c in range(n)], axis=-3)  # [c,a,b]
    ginv = np.linalg.inv(g)
    term = (
        np.einsum("...bdc->...dbc", dg)
        + np.einsum("...cdb->...dbc", dg)
        - np.einsum("...dbc->...dbc", dg)
    )
    return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, term), ginv


def constraint_residuals_gridded(data: GriddedInitialData):
    """Finite-difference constraint residuals for node-table data.

    Same contracts as constraint_residuals, O(spacing^2) accuracy: the
    scalar curvature comes from differenced Christoffel symbols of the
    gridded metric, the divergence of A from differenced components.
    """
    from .mesh import fd_partial

    mesh = data.mesh
    n = mesh.ndim
    gamma, ginv = _gridded_christoffel(mesh, data.g)
    dgamma = np.stack([fd_partial(gamma, mesh, c) for c in range(n)], axis=-4)  # [c,a,d,b]
    rie = (
        np.einsum("...cadb->...abcd", dgamma)
        - np.einsum("...dacb->...abcd", dgamma)
        + np.einsum("...ace,...edb->...abcd", gamma, gamma)
        - np.einsum("...ade,...ecb->...abcd", gamma, gamma)
    )
    ric = np.einsum("...abad->...bd", rie)
    R = np.einsum("...bd,...bd->...", ginv, ric)
    trA = np.einsum("...ii->...", data.A)
    trA2 = np.einsum("...ij,...ji->...", data.A, data.A)
    res1 = R - trA2 + trA**2 - data.phi
    dA = np.stack([fd_partial(data.A, mesh, c) for c in range(n)], axis=-3)  # [i,a,b]
    div_A = (
        np.einsum("...iij->...j", dA)
        + np.einsum("...iik,...kj->...j", gamma, data.A)
        - np.einsum("...kij,...ik->...j", gamma, data.A)
    )
    dtrA = np.stack([fd_partial(trA, mesh, c) for c in range(n)], axis=-1)
    X_low = np.einsum("...jk,...k->...j", data.g, data.X)
    res2 = div_A - dtrA - X_low
    return res1, res2


# -- constraint equations -------------------------------------------------------


def constraint_residuals(data: InitialDataSet):
    """res1 = R(g) - trace(A^2) + trace(A)^2 - phi;
    res2_j = (div A)_j - d_j trace(A) - g_jk X^k, with (div A)_j = nabla_i A^i_j.

    All derivatives symbolic; expression-defined data hits round-off.
    """
    pts = data.points
    binds = {c: pts[..., i] for i, c in enumerate(data.coords)}
    n = data.n
    R = data.chart.scalar_curvature(pts)
    aval = data.a_values()
    trA = np.einsum("...ii->...", aval)
    trA2 = np.einsum("...ij,...ji->...", aval, aval)
    phi = np.broadcast_to(np.asarray(eval_expr(data.phi, binds), dtype=float), data.mesh.shape)
    res1 = R - trA2 + trA**2 - phi

    gamma = data.chart.christoffel(pts)
    # Exact coordinate derivatives of A and of trace(A).
    dA = np.empty(data.mesh.shape + (n, n, n))  # [i, a, b] = d_i A^a_b
    for i, c in enumerate(data.coords):
        for a in range(n):
            for b in range(n):
                dA[..., i, a, b] = eval_expr(differentiate(data.A[a][b], c), binds)
    div_A = (
        np.einsum("...iij->...j", dA)
        + np.einsum("...iik,...kj->...j", gamma, aval)
        - np.einsum("...kij,...ik->...j", gamma, aval)
    )
    dtrA = np.empty(data.mesh.shape + (n,))
    for j, c in enumerate(data.coords):
        acc = np.zeros(data.mesh.shape)
        for a in range(n):
            acc += np.broadcast_to(
                np.asarray(eval_expr(differentiate(data.A[a][a], c), binds), dtype=float),
                data.mesh.shape,
            )
        dtrA[..., j] = acc
    gval = data.chart.metric(pts)
    Xv = data.chart.vector_values(data.X, pts)
    X_low = np.einsum("...jk,...k->...j", gval, Xv)
    res2 = div_A - dtrA - X_low
    return res1, res2


# -- definiteness ---------------------------------------------------------------


def eigenvalues_in_g_frame(data: InitialDataSet, points=None):
    """Eigenvalues of A against a g-orthonormal frame (real; A self-adjoint)."""
    points = data.points if points is None else points
    gval = data.space.metric_at(points)
    aval = data.a_values(points)
    B = np.einsum("...ik,...kj->...ij", gval, aval)
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    L = np.linalg.cholesky(gval)
    Linv = np.linalg.inv(L)
    M = np.einsum("...ik,...kl,...jl->...ij", Linv, B, Linv)
    return np.linalg.eigvalsh(M)


def definiteness_report(data, eps_rel=1e-9):
    """Per-node and global definiteness classification of A.

    Accepts expression-defined or gridded data.  Tolerance is eps_rel times
    the largest sampled |eigenvalue|.  A field that vanishes identically is
    both semi-definite classes; it is tagged positive_semidefinite with
    degenerate_zero set.
    """
    if isinstance(data, GriddedInitialData):
        B = np.einsum("...ik,...kj->...ij", data.g, data.A)
        B = 0.5 * (B + np.swapaxes(B, -1, -2))
        L = np.linalg.cholesky(data.g)
        Linv = np.linalg.inv(L)
        lam = np.linalg.eigvalsh(np.einsum("...ik,...kl,...jl->...ij", Linv, B, Linv))
    else:
        lam = eigenvalues_in_g_frame(data)
    scale = max(float(np.max(np.abs(lam))), 1e-30)
    eps = eps_rel * scale
    lmin, lmax = lam[..., 0], lam[..., -1]
    node_nd = lmax < -eps
    node_pd = lmin > eps
    node_nsd = lmax <= eps
    node_psd = lmin >= -eps

    def node_tag(k):
        if node_nd[k]:
            return "negative_definite"
        if node_pd[k]:
            return "positive_definite"
        if node_nsd[k] and node_psd[k]:
            return "positive_semidefinite"  # identically-zero node
        if node_nsd[k]:
            return "negative_semidefinite"
        if node_psd[k]:
            return "positive_semidefinite"
        return "indefinite"

    if bool(np.all(node_nd)):
        tag = "negative_definite"
    elif bool(np.all(node_pd)):
        tag = "positive_definite"
    elif bool(np.all(node_nsd)) and bool(np.all(node_psd)):
        tag = "positive_semidefinite"
    elif bool(np.all(node_nsd)):
        tag = "negative_semidefinite"
    elif bool(np.all(node_psd)):
        tag = "positive_semidefinite"
    else:
        tag = "indefinite"
    return {
        "global_tag": tag,
        "degenerate_zero": bool(np.max(np.abs(lam)) <= eps),
        "eps": eps,
        "eig_min": float(np.min(lam)),
        "eig_max": float(np.max(lam)),
        "node_tags_sample": [node_tag(k) for k in list(np.ndindex(*data.mesh.shape))[:8]],
        "all_negative_semidefinite": bool(np.all(node_nsd)),
        "all_positive_semidefinite": bool(np.all(node_psd)),
    }


# -- stationarity obstruction ----------------------------------------------------


@dataclass(frozen=True)
class ObstructionReport:
    h_norm: np.ndarray
    trace_A: np.ndarray
    non_minimal: bool
    inequality_everywhere: bool
    conclusion: str
    min_gap: float
    causal_tags: object = None
    development_consistency: float = None

    def to_dict(self):
        out = {
            "conclusion": self.conclusion,
            "non_minimal": self.non_minimal,
            "inequality_everywhere": self.inequality_everywhere,
            "min_gap": self.min_gap,
            "h_norm_max": float(np.max(self.h_norm)),
            "h_norm_min": float(np.min(self.h_norm)),
            "trace_A_absmin": float(np.min(np.abs(self.trace_A))),
        }
        if self.causal_tags is not None:
            counts = {}
            for c in self.causal_tags.ravel():
                counts[c.value] = counts.get(c.value, 0) + 1
            out["development_causal_counts"] = dict(sorted(counts.items()))
        if self.development_consistency is not None:
            out["development_consistency"] = self.development_consistency
        return out


def trace_over_submanifold(data: InitialDataSet, P: ImmersedSubmanifold):
    """trace_P A = sum_i g(A E_i, E_i) over an orthonormal frame of P in S.

    Frame-independent (trace of the restriction); the suite re-checks with
    randomized frames.
    """
    aval = data.a_values(P.map_values)
    E = P.orthonormal_frame()
    AE = np.einsum("...ab,...ib->...ia", aval, E)
    return np.einsum("...ab,...ia,...ib->...", P.ambient_metric, AE, E)


def stationarity_obstruction(
    data: InitialDataSet, P: ImmersedSubmanifold, development: MetricModel = None
) -> ObstructionReport:
    """Check the pointwise obstruction |h| < |trace_P A| on a compact P in S.

    P must be immersed in the Riemannian space of the data set.  The
    conclusion excludes a stationary development only when P is non-minimal
    and the strict inequality holds at every node; a minimal P documents
    why the inequality alone is insufficient.  When a development model is
    supplied (with S as its {t=0} slice and future normal dt/sqrt(beta)),
    the assembled H = h + (trace_P A) N is classified causally there.
    """
    if getattr(P.ambient, "is_lorentzian", True):
        raise MeshError("P must be immersed in the Riemannian space of the data set")
    hvec = P.mean_curvature()
    h_norm = np.sqrt(np.einsum("...a,...ab,...b->...", hvec, P.ambient_metric, hvec))
    trA = trace_over_submanifold(data, P)
    eps_min = 1e-8 * max(1.0, float(np.max(np.abs(trA))))
    non_minimal = bool(np.max(h_norm) > eps_min)
    inequality = bool(np.all(h_norm < np.abs(trA)))
    min_gap = float(np.min(np.abs(trA) - h_norm))
    conclusion = (
        "excludes_stationary_development"
        if (non_minimal and inequality)
        else "no_conclusion"
    )
    causal_tags = None
    consistency = None
    if development is not None:
        m = development.dim
        if m != data.n + 1:
            raise MeshError("development dimension must be n + 1")
        amb_pts = np.zeros(P.map_values.shape[:-1] + (m,))
        amb_pts[..., 1:] = P.map_values
        g_dev = development.metric_at(amb_pts)
        beta = -g_dev[..., 0, 0]
        H_amb = np.zeros_like(amb_pts)
        H_amb[..., 0] = trA / np.sqrt(beta)
        H_amb[..., 1:] = hvec
        causal_tags = development.classify_vectors(amb_pts, H_amb)
        consistency = float(
            np.max(np.abs(g_dev[..., 1:, 1:] - data.space.metric_at(P.map_values)))
        )
    return ObstructionReport(
        h_norm=h_norm,
        trace_A=trA,
        non_minimal=non_minimal,
        inequality_everywhere=inequality,
        conclusion=conclusion,
        min_gap=min_gap,
        causal_tags=causal_tags,
        development_consistency=consistency,
    )


# -- normal flow margins ----------------------------------------------------------


def _slice_unit_normal(development: MetricModel, imm: ImmersedSubmanifold, pts_idx):
    """Future unit normal of the slice immersion at selected nodes."""
    pts = imm.map_values.reshape(-1, development.dim)[pts_idx]
    g = development.metric_at(pts)
    fut = development.future_at(pts)
    T = imm.tangents.reshape(-1, imm.mesh.ndim, development.dim)[pts_idx]
    gram = np.einsum("...ia,...ab,...jb->...ij", T, g, T)
    rhs = np.einsum("...a,...ab,...ib->...i", fut, g, T)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    N = fut - np.einsum("...i,...ia->...a", coef, T)
    qn = np.einsum("...a,...ab,...b->...", N, g, N)
    if np.any(qn >= 0):
        raise SignatureError("slice normal is not timelike; declared future field may be tangent")
    return pts, T, N / np.sqrt(-qn)[..., None]


def normal_flow_margin(
    data: InitialDataSet,
    development: MetricModel,
    slice_imm: ImmersedSubmanifold,
    t_range=(1.0, 1.0),
    steps=64,
    max_samples=8,
    eps_def=1e-10,
):
    """Margins (sigma1, sigma2) of definiteness of the flow-extended operator.

    From each sampled slice point, integrate the unit-normal geodesic
    backwards and forwards (classic RK4), transport an orthonormal tangent
    frame in parallel, and evolve the Weingarten block W by its Riccati
    equation; the extension of the shape operator is -W, with W(0) = -A.
    The reported margins are minima over the sample, capped by t_range, so
    enlarging the sample can only shrink them.
    """
    n = data.n
    total = int(np.prod(slice_imm.mesh.shape))
    stride = max(1, total // max_samples)
    idx = np.arange(0, total, stride)[:max_samples]
    pts, T, N = _slice_unit_normal(development, slice_imm, idx)
    nsamp = pts.shape[0]

    # Initial orthonormal tangent frame from Gram-Schmidt on the tangents.
    g0 = development.metric_at(pts)
    E = np.empty((nsamp, n, development.dim))
    for i in range(n):
        v = T[:, i, :].copy()
        for j in range(i):
            proj = np.einsum("...a,...ab,...b->...", v, g0, E[:, j, :])
            v -= proj[..., None] * E[:, j, :]
        norm = np.sqrt(np.einsum("...a,...ab,...b->...", v, g0, v))
        E[:, i, :] = v / norm[..., None]

    # W(0)_ij = g(grad_{e_i} N, e_j) = -g(A e_i, e_j) in the frame.
    base_pts = pts[..., 1:]
    aval = data.a_values(base_pts)
    A_frame = np.einsum(
        "...ab,...bc,...ic,...ja->...ij",
        data.space.metric_at(base_pts),
        aval,
        E[..., 1:],
        E[..., 1:],
    )
    lam0 = np.linalg.eigvalsh(0.5 * (A_frame + np.swapaxes(A_frame, -1, -2)))
    scale0 = max(float(np.max(np.abs(lam0))), 1e-30)
    if np.all(lam0 < -eps_def * scale0):
        sign = -1.0
    elif np.all(lam0 > eps_def * scale0):
        sign = 1.0
    else:
        return {
            "sigma1": 0.0,
            "sigma2": 0.0,
            "degenerate": True,
            "initial_sign": "indefinite_or_zero",
            "n_samples": int(nsamp),
        }

    chart = development.chart

    def rhs(state):
        x, v, Ef, W = state
        gamma = chart.christoffel(x)
        rie = chart.riemann(x)
        gval = chart.metric(x)
        dx = v
        dv = -np.einsum("...abc,...b,...c->...a", gamma, v, v)
        dE = -np.einsum("...abc,...b,...ic->...ia", gamma, v, Ef)
        # R_bar_ij = g(R(E_i, v)v, E_j)
        rv = np.einsum("...abcd,...ic,...d,...b->...ia", rie, Ef, v, v)
        Rbar = np.einsum("...ia,...ab,...jb->...ij", rv, gval, Ef)
        dW = -np.einsum("...ik,...kj->...ij", W, W) - Rbar
        return dx, dv, dE, dW

    def rk4(state, dt):
        k1 = rhs(state)
        s2 = tuple(s + 0.5 * dt * k for s, k in zip(state, k1))
        k2 = rhs(s2)
        s3 = tuple(s + 0.5 * dt * k for s, k in zip(state, k2))
        k3 = rhs(s3)
        s4 = tuple(s + dt * k for s, k in zip(state, k3))
        k4 = rhs(s4)
        return tuple(
            s + dt / 6.0 * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )

    def march(direction, horizon):
        state = (pts.copy(), N.copy(), E.copy(), (-A_frame).copy())
        dt = direction * horizon / steps
        last_ok = 0.0
        for k in range(steps):
            state = rk4(state, dt)
            W = state[3]
            Abar = -0.5 * (W + np.swapaxes(W, -1, -2))
            lam = np.linalg.eigvalsh(sign * Abar)
            if np.min(lam) <= eps_def * scale0:
                return last_ok, False
            last_ok = abs((k + 1) * dt)
        return last_ok, True

    sigma1, cap1 = march(-1.0, float(t_range[0]))
    sigma2, cap2 = march(+1.0, float(t_range[1]))
    return {
        "sigma1": float(sigma1),
        "sigma2": float(sigma2),
        "capped_backward": bool(cap1),
        "capped_forward": bool(cap2),
        "degenerate": False,
        "initial_sign": "negative_definite" if sign < 0 else "positive_definite",
        "n_samples": int(nsamp),
        "step": float((t_range[0] + t_range[1]) / (2 * steps)),
    }
