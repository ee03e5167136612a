"""Graphs over the base of a standard static spacetime -h dt^2 + g0.

Carries the spacelike margin 1 - h |grad0 u|^2, the hyperbolic angle
against the unit static observer, the mean curvature of the graph in
divergence form, and the two tau-Laplacian identities used by the
rigidity arguments.

Sign and power conventions (all verified by the lhs/rhs residual tests,
which are the arbiter):

* future unit normal N = (grad0 u + (1/h) dt) / sqrt(1/h - |grad0 u|^2);
  g(N, N) = -1 and g(N, tangent) = 0 hold to round-off.
* the scalar H below is the ambient divergence of N, so the mean curvature
  vector of the graph is -H N.
* with the -h dt^2 convention the Laplacian of tau on any spacelike
  submanifold is (1/h^2) dt_tan(h) + (1/h) g(H_vec, dt), and the conformal
  metric that removes the gradient term is h^(2/(n-2)) g, under which the
  Laplacian becomes h^(-n/(n-2)) g(H_vec, dt).  (Under a -h^2 dt^2 reading
  the same identities carry powers 2/h^3, n/h^2 and exponent 4/(n-2); the
  residual test selects the first reading.)
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, NonSpacelikeError, SignatureError
from .exprs import differentiate, eval_expr, parse_expr
from .immersion import ImmersedSubmanifold
from .mesh import ParamMesh, fd_partial, integrate
from .spacetime import MetricModel, standard_static

DELTA_MARGIN = 1e-6


@dataclass(frozen=True)
class StaticModel:
    """Base mesh, base metric expressions and warp h of a static spacetime."""

    mesh: ParamMesh
    g0: tuple
    h: object
    time_coord: str = "t"

    def __post_init__(self):
        object.__setattr__(self, "h", parse_expr(self.h))
        n = self.mesh.ndim
        rows = tuple(tuple(parse_expr(self.g0[i][j]) for j in range(n)) for i in range(n))
        object.__setattr__(self, "g0", rows)

    @property
    def n(self):
        return self.mesh.ndim

    @property
    def base_coords(self):
        return self.mesh.names

    @cached_property
    def ambient(self) -> MetricModel:
        g0_strs = [[str(self.g0[i][j]) for j in range(self.n)] for i in range(self.n)]
        return standard_static(self.base_coords, g0_strs, str(self.h), self.time_coord)

    @cached_property
    def node_data(self):
        """h, dh/dx_i, g0, inverse, sqrt(det g0) at every base node."""
        binds = self.mesh.bindings()
        shape = self.mesh.shape
        n = self.n
        h = np.broadcast_to(np.asarray(eval_expr(self.h, binds), dtype=float), shape).copy()
        if np.min(h) <= 0.0:
            raise SignatureError(f"warp h must be positive, min = {np.min(h)}")
        dh = np.empty(shape + (n,))
        for i, c in enumerate(self.base_coords):
            dh[..., i] = eval_expr(differentiate(self.h, c), binds)
        g0 = np.empty(shape + (n, n))
        for i in range(n):
            for j in range(n):
                g0[..., i, j] = eval_expr(self.g0[i][j], binds)
        eig = np.linalg.eigvalsh(g0)
        if np.min(eig) <= 0.0:
            raise SignatureError("base metric g0 must be positive definite")
        return h, dh, g0, np.linalg.inv(g0), np.sqrt(np.linalg.det(g0))


@dataclass(frozen=True)
class GraphFunction:
    """Node values of u plus derived gradient and spacelike margin."""

    model: StaticModel
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != self.model.mesh.shape:
            raise SignatureError(f"u shape {u.shape} != mesh shape {self.model.mesh.shape}")
        object.__setattr__(self, "u", u)

    @classmethod
    def from_expr(cls, model, expr):
        vals = eval_expr(parse_expr(expr), model.mesh.bindings())
        return cls(model, np.broadcast_to(np.asarray(vals, dtype=float), model.mesh.shape).copy())

    @cached_property
    def du(self):
        """Covariant components d_i u."""
        mesh = self.model.mesh
        out = np.empty(mesh.shape + (mesh.ndim,))
        for i in range(mesh.ndim):
            out[..., i] = fd_partial(self.u, mesh, i)
        return out

    @cached_property
    def grad_up(self):
        """(grad0 u)^i = g0^{ij} d_j u."""
        _, _, _, g0inv, _ = self.model.node_data
        return np.einsum("...ij,...j->...i", g0inv, self.du)

    @cached_property
    def grad_norm_sq(self):
        return np.einsum("...i,...i->...", self.du, self.grad_up)

    @cached_property
    def margin(self):
        h = self.model.node_data[0]
        return 1.0 - h * self.grad_norm_sq


def spacelike_check(graph: GraphFunction, delta=DELTA_MARGIN):
    """True iff the graph clears the spacelike margin everywhere."""
    mmin = float(np.min(graph.margin))
    return bool(mmin > delta), mmin


def hyperbolic_angle(graph: GraphFunction):
    """cosh(theta) against the unit observer dt/sqrt(h); >= 1, = 1 at critical points."""
    ok, mmin = spacelike_check(graph)
    if not ok:
        raise NonSpacelikeError(f"graph is not spacelike, min margin {mmin}")
    return 1.0 / np.sqrt(graph.margin)


def unit_normal(graph: GraphFunction):
    """Future unit normal, ambient components (t first)."""
    ok, mmin = spacelike_check(graph)
    if not ok:
        raise NonSpacelikeError(f"graph is not spacelike, min margin {mmin}")
    h = graph.model.node_data[0]
    W = np.sqrt(1.0 / h - graph.grad_norm_sq)
    n = graph.model.n
    N = np.empty(graph.model.mesh.shape + (n + 1,))
    N[..., 0] = (1.0 / h) / W
    N[..., 1:] = graph.grad_up / W[..., None]
    return N


def _half_node_data(model: StaticModel, axis: int):
    """h, g0 inverse and sqrt(h det g0) evaluated at the axis half-nodes.

    Periodic axes keep the full node count (half-node k sits between nodes
    k and k+1, wrapping); non-periodic axes drop to nodes-1 intervals.
    """
    mesh = model.mesh
    ax = mesh.axes[axis]
    binds = {}
    for j, name in enumerate(mesh.names):
        grid = mesh.grids[j]
        if not ax.periodic:
            sl = [slice(None)] * mesh.ndim
            sl[axis] = slice(None, -1)
            grid = grid[tuple(sl)]
        binds[name] = grid + (0.5 * ax.spacing if j == axis else 0.0)
    shape = binds[mesh.names[axis]].shape
    n = model.n
    h = np.broadcast_to(np.asarray(eval_expr(model.h, binds), dtype=float), shape).copy()
    g0 = np.empty(shape + (n, n))
    for i in range(n):
        for j in range(n):
            g0[..., i, j] = eval_expr(model.g0[i][j], binds)
    return h, np.linalg.inv(g0), np.sqrt(h * np.linalg.det(g0))


def _diff_half(u, mesh, axis):
    """(u_{k+1} - u_k) / spacing, living on the axis half-nodes."""
    ax = mesh.axes[axis]
    if ax.periodic:
        return (np.roll(u, -1, axis=axis) - u) / ax.spacing
    lo = [slice(None)] * mesh.ndim
    hi = [slice(None)] * mesh.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return (u[tuple(hi)] - u[tuple(lo)]) / ax.spacing


def _average_to_half(f, mesh, axis):
    ax = mesh.axes[axis]
    if ax.periodic:
        return 0.5 * (f + np.roll(f, -1, axis=axis))
    lo = [slice(None)] * mesh.ndim
    hi = [slice(None)] * mesh.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (f[tuple(lo)] + f[tuple(hi)])


def staggered_margin(model: StaticModel, u) -> float:
    """Smallest spacelike margin 1 - h |grad0 u|^2 over all flux points.

    The staggered gradient resolves grid-scale oscillation that node-central
    differences cancel, so this is the guard the solver trusts.
    """
    mesh = model.mesh
    n = model.n
    u = np.asarray(u, dtype=float)
    du_nodes = np.empty(mesh.shape + (n,))
    for j in range(n):
        du_nodes[..., j] = fd_partial(u, mesh, j)
    mmin = np.inf
    for i in range(n):
        h_half, g0inv_half, _ = _half_node_data(model, i)
        du_half = np.empty(h_half.shape + (n,))
        for j in range(n):
            if j == i:
                du_half[..., j] = _diff_half(u, mesh, i)
            else:
                du_half[..., j] = _average_to_half(du_nodes[..., j], mesh, i)
        norm_sq = np.einsum("...ij,...j,...i->...", g0inv_half, du_half, du_half)
        mmin = min(mmin, float(np.min(1.0 - h_half * norm_sq)))
    return mmin


def graph_operator(model: StaticModel, u):
    """Conservative staggered discretization of the graph operator.

    Q(u) = div0(F) + g0(F, grad0 log h / 2), F = grad0 u / sqrt(1/h - |grad0 u|^2),
    assembled in the equivalent flux form (1/(sqrt(h) sqrt(det g0)))
    d_i (sqrt(h) sqrt(det g0) F^i) with fluxes at half-nodes.  The compact
    stencil leaves only constants in the discrete kernel (no checkerboard
    modes) and makes the weighted integral of Q over a closed base vanish
    identically, so the solvability obstruction is exact discretely.

    Boundary rows of non-periodic axes carry a first-order one-sided flux
    difference, for reporting only; Dirichlet systems replace those rows.
    """
    mesh = model.mesh
    n = model.n
    u = np.asarray(u, dtype=float)
    h_nodes, _, _, _, sqrtg0_nodes = model.node_data
    weight_nodes = np.sqrt(h_nodes) * sqrtg0_nodes
    # Central derivatives at nodes, used for transverse components of fluxes.
    du_nodes = np.empty(mesh.shape + (n,))
    for j in range(n):
        du_nodes[..., j] = fd_partial(u, mesh, j)
    out = np.zeros(mesh.shape)
    for i in range(n):
        ax = mesh.axes[i]
        h_half, g0inv_half, weight_half = _half_node_data(model, i)
        du_half = np.empty(h_half.shape + (n,))
        for j in range(n):
            if j == i:
                du_half[..., j] = _diff_half(u, mesh, i)
            else:
                du_half[..., j] = _average_to_half(du_nodes[..., j], mesh, i)
        grad_up = np.einsum("...ij,...j->...i", g0inv_half, du_half)
        norm_sq = np.einsum("...j,...j->...", du_half, grad_up)
        Wsq = 1.0 / h_half - norm_sq
        if np.min(Wsq) <= 0.0:
            raise NonSpacelikeError(
                f"spacelike condition fails at a flux point: min(1/h - |grad u|^2) = {np.min(Wsq)}"
            )
        flux = weight_half * grad_up[..., i] / np.sqrt(Wsq)
        if ax.periodic:
            out += (flux - np.roll(flux, 1, axis=i)) / ax.spacing
        else:
            inner = [slice(None)] * mesh.ndim
            inner[i] = slice(1, -1)
            fhi = [slice(None)] * mesh.ndim
            fhi[i] = slice(1, None)
            flo = [slice(None)] * mesh.ndim
            flo[i] = slice(None, -1)
            contrib = np.zeros(mesh.shape)
            contrib[tuple(inner)] = (flux[tuple(fhi)] - flux[tuple(flo)]) / ax.spacing
            # One-sided linear flux extrapolation at the two boundary rows
            # (reporting only; Dirichlet systems replace these rows).
            first = [slice(None)] * mesh.ndim
            first[i] = 0
            second = [slice(None)] * mesh.ndim
            second[i] = 1
            flux0 = [slice(None)] * mesh.ndim
            flux0[i] = 0
            flux1 = [slice(None)] * mesh.ndim
            flux1[i] = 1
            contrib[tuple(first)] = (flux[tuple(flux0)] - (2 * flux[tuple(flux0)] - flux[tuple(flux1)])) / ax.spacing
            last = [slice(None)] * mesh.ndim
            last[i] = -1
            fluxm1 = [slice(None)] * mesh.ndim
            fluxm1[i] = -1
            fluxm2 = [slice(None)] * mesh.ndim
            fluxm2[i] = -2
            contrib[tuple(last)] = ((2 * flux[tuple(fluxm1)] - flux[tuple(fluxm2)]) - flux[tuple(fluxm1)]) / ax.spacing
            out += contrib
    return out / weight_nodes


def graph_mean_curvature(graph: GraphFunction):
    """H = div0(F) + g0(F, grad0 log h / 2) with F = grad0 u / sqrt(1/h - |grad0 u|^2).

    Equals the ambient divergence of the future unit normal; the mean
    curvature vector of the graph is -H N (checked against the immersion
    module to O(spacing^2)).  Uses the conservative staggered form shared
    with the solver.
    """
    ok, mmin = spacelike_check(graph)
    if not ok:
        raise NonSpacelikeError(f"graph is not spacelike, min margin {mmin}")
    return graph_operator(graph.model, graph.u)


def graph_immersion(graph: GraphFunction) -> ImmersedSubmanifold:
    """The graph as an immersed hypersurface of the assembled static model."""
    model = graph.model
    mesh = model.mesh
    m = model.n + 1
    mv = np.empty(mesh.shape + (m,))
    mv[..., 0] = graph.u
    for i, grid in enumerate(mesh.grids):
        mv[..., i + 1] = grid
    winding = np.zeros((mesh.ndim, m))
    for i, ax in enumerate(mesh.axes):
        if ax.periodic:
            winding[i, i + 1] = ax.length
    return ImmersedSubmanifold.from_values(mesh, model.ambient, mv, winding)


# -- tau Laplacians ------------------------------------------------------------


def _h_on_submanifold(model: StaticModel, imm: ImmersedSubmanifold):
    """h and its ambient gradient components evaluated along the immersion."""
    coords = imm.ambient.coords
    binds = {c: imm.map_values[..., i] for i, c in enumerate(coords)}
    h = np.broadcast_to(np.asarray(eval_expr(model.h, binds), dtype=float), imm.mesh.shape).copy()
    dh = np.zeros(imm.mesh.shape + (len(coords),))
    for a, c in enumerate(coords):
        d = differentiate(model.h, c)
        dh[..., a] = np.broadcast_to(np.asarray(eval_expr(d, binds), dtype=float), imm.mesh.shape)
    return h, dh


def _laplace_beltrami(imm: ImmersedSubmanifold, f, conformal_factor=None):
    """Discrete Laplace-Beltrami of a node field on (S, g) or (S, phi g)."""
    g, ginv, rho = imm.metric, imm.inverse_metric, imm.density
    mesh = imm.mesh
    n = mesh.ndim
    df = np.empty(mesh.shape + (n,))
    for j in range(n):
        df[..., j] = fd_partial(f, mesh, j)
    grad = np.einsum("...ij,...j->...i", ginv, df)
    if conformal_factor is None:
        weight, inv_weight = rho, 1.0 / rho
    else:
        phi = conformal_factor
        weight = phi ** (n / 2.0 - 1.0) * rho
        inv_weight = 1.0 / (phi ** (n / 2.0) * rho)
    out = np.zeros(mesh.shape)
    for i in range(n):
        out += fd_partial(weight * grad[..., i], mesh, i)
    return out * inv_weight


def laplacian_tau(model: StaticModel, imm: ImmersedSubmanifold):
    """lhs/rhs of the tau-Laplacian identity on a spacelike submanifold.

    lhs: discrete Laplace-Beltrami of tau = t on (S, induced g).
    rhs: (1/h^2) dt_tan(h) + (1/h) g(H_vec, dt), with dt_tan the tangential
    part of the static Killing field (equivalently -h grad tau).
    """
    tau = imm.map_values[..., 0]
    lhs = _laplace_beltrami(imm, tau)
    h, dh = _h_on_submanifold(model, imm)
    m = imm.ambient.dim
    e0 = np.zeros(imm.mesh.shape + (m,))
    e0[..., 0] = 1.0
    coef = imm.tangent_projection_coefficients(e0)
    dt_tan = np.einsum("...i,...ia->...a", coef, imm.tangents)
    dt_tan_h = np.einsum("...a,...a->...", dt_tan, dh)
    H = imm.mean_curvature()
    g_H_dt = np.einsum("...a,...ab,...b->...", H, imm.ambient_metric, e0)
    rhs = dt_tan_h / h**2 + g_H_dt / h
    return lhs, rhs


def conformal_laplacian_tau(model: StaticModel, imm: ImmersedSubmanifold):
    """lhs/rhs of the tau-Laplacian under the conformal metric h^(2/(n-2)) g.

    Requires dim S >= 3: in two dimensions no conformal power of h can
    absorb the gradient term, so the operation is rejected.
    """
    n = imm.mesh.ndim
    if n < 3:
        raise DimensionError(
            "conformal tau-Laplacian needs submanifold dimension >= 3; "
            "the two-dimensional case admits no such conformal metric"
        )
    tau = imm.map_values[..., 0]
    h, _ = _h_on_submanifold(model, imm)
    phi = h ** (2.0 / (n - 2.0))
    lhs = _laplace_beltrami(imm, tau, conformal_factor=phi)
    m = imm.ambient.dim
    e0 = np.zeros(imm.mesh.shape + (m,))
    e0[..., 0] = 1.0
    H = imm.mean_curvature()
    g_H_dt = np.einsum("...a,...ab,...b->...", H, imm.ambient_metric, e0)
    rhs = h ** (-n / (n - 2.0)) * g_H_dt
    return lhs, rhs


def conformal_volume_integral(model: StaticModel, imm: ImmersedSubmanifold, f):
    """Integral of a node field against the conformal volume of (S, h^(2/(n-2)) g)."""
    n = imm.mesh.ndim
    h, _ = _h_on_submanifold(model, imm)
    phi = h ** (2.0 / (n - 2.0))
    return integrate(f, imm.mesh, imm.density * phi ** (n / 2.0))
