"""Coordinate-chart tensor engine shared by Lorentzian and Riemannian metrics.

All derivatives of metric components and vector fields are exact symbolic
trees (no finite differencing of the metric), so Christoffel symbols,
curvature and Lie derivatives are evaluated to round-off at any point.
Points are numpy arrays whose last axis runs over the chart coordinates;
arbitrary batch shapes are supported.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SignatureError
from .exprs import FieldExpr, differentiate, eval_expr, parse_expr


def _as_expr_matrix(components, m):
    rows = []
    for a in range(m):
        row = []
        for b in range(m):
            row.append(parse_expr(components[a][b]))
        rows.append(tuple(row))
    return tuple(rows)


@dataclass(frozen=True)
class VectorField:
    """Analytic vector field; one component expression per chart coordinate."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "components", tuple(parse_expr(c) for c in self.components)
        )

    @property
    def dim(self):
        return len(self.components)

    def free_vars(self):
        out = frozenset()
        for c in self.components:
            out |= c.free_vars()
        return out


class MetricChart:
    """Symmetric metric component matrix over named coordinates."""

    def __init__(self, coords, components):
        self.coords = tuple(coords)
        m = len(self.coords)
        if len(components) != m or any(len(r) != m for r in components):
            raise SignatureError(f"component matrix must be {m}x{m}")
        g = _as_expr_matrix(components, m)
        # Symmetrize: keep the upper triangle as authoritative.
        sym = []
        for a in range(m):
            row = []
            for b in range(m):
                row.append(g[a][b] if a <= b else g[b][a])
            sym.append(tuple(row))
        self.g = tuple(sym)
        self.dim = m

    @cached_property
    def _dg(self):
        # [c][a][b] = d g_ab / d coord_c
        return tuple(
            tuple(tuple(differentiate(self.g[a][b], c) for b in range(self.dim)) for a in range(self.dim))
            for c in self.coords
        )

    @cached_property
    def _ddg(self):
        # [c][d][a][b] = d^2 g_ab / (d coord_c d coord_d)
        return tuple(
            tuple(
                tuple(tuple(differentiate(self._dg[ci][a][b], cd) for b in range(self.dim)) for a in range(self.dim))
                for cd in self.coords
            )
            for ci in range(self.dim)
        )

    # -- evaluation helpers -------------------------------------------------

    def bindings(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise SignatureError(
                f"points last axis {points.shape[-1]} != chart dim {self.dim}"
            )
        return {name: points[..., i] for i, name in enumerate(self.coords)}, points.shape[:-1]

    def _eval_table(self, table, points, shape_suffix):
        ctx, batch = self.bindings(points)
        out = np.empty(batch + shape_suffix, dtype=float)
        # table is a nested tuple of FieldExpr with shape shape_suffix
        def fill(node, idx):
            if isinstance(node, FieldExpr):
                out[(...,) + idx] = eval_expr(node, ctx)
            else:
                for k, sub in enumerate(node):
                    fill(sub, idx + (k,))
        fill(table, ())
        return out

    def metric(self, points):
        return self._eval_table(self.g, points, (self.dim, self.dim))

    def dmetric(self, points):
        return self._eval_table(self._dg, points, (self.dim, self.dim, self.dim))

    def ddmetric(self, points):
        return self._eval_table(self._ddg, points, (self.dim,) * 4)

    def inverse_metric(self, points, gval=None):
        gval = self.metric(points) if gval is None else gval
        det = np.linalg.det(gval)
        if np.any(np.abs(det) < 1e-300):
            raise SignatureError("singular metric encountered")
        return np.linalg.inv(gval)

    def christoffel(self, points, gval=None, dg=None):
        """Levi-Civita symbols G[..., a, b, c] = Gamma^a_{bc}."""
        dg = self.dmetric(points) if dg is None else dg
        ginv = self.inverse_metric(points, gval)
        # dg indices: [c, a, b] = d_c g_ab
        term = (
            np.einsum("...bdc->...dbc", dg[..., :, :, :])  # d_b g_dc
            + np.einsum("...cdb->...dbc", dg)              # d_c g_db
            - np.einsum("...dbc->...dbc", dg)              # d_d g_bc
        )
        return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, term)

    def riemann(self, points):
        """Curvature R[..., a, b, c, d] = R^a_{bcd} with the convention

        R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                    + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}.

        Uses exact second derivatives of the metric; no finite differences.
        """
        gval = self.metric(points)
        ginv = self.inverse_metric(points, gval)
        dg = self.dmetric(points)
        ddg = self.ddmetric(points)
        gamma = self.christoffel(points, gval, dg)
        # d_c g^{ae} = -g^{af} (d_c g_fh) g^{he}
        dginv = -np.einsum("...af,...cfh,...he->...cae", ginv, dg, ginv)
        # S[d, e, b] = d_d g_eb + d_b g_ed - d_e g_db  (the bracket in Gamma)
        S = (
            np.einsum("...deb->...deb", dg)
            + np.einsum("...bed->...deb", dg)
            - np.einsum("...edb->...deb", dg)
        )
        # dS[c, d, e, b] = d_c S[d, e, b]
        dS = (
            np.einsum("...cdeb->...cdeb", ddg)
            + np.einsum("...cbed->...cdeb", ddg)
            - np.einsum("...cedb->...cdeb", ddg)
        )
        # d_c Gamma^a_{db}
        dgamma = 0.5 * (
            np.einsum("...cae,...deb->...cadb", dginv, S)
            + np.einsum("...ae,...cdeb->...cadb", ginv, dS)
        )
        rie = (
            np.einsum("...cadb->...abcd", dgamma)
            - np.einsum("...dacb->...abcd", dgamma)
            + np.einsum("...ace,...edb->...abcd", gamma, gamma)
            - np.einsum("...ade,...ecb->...abcd", gamma, gamma)
        )
        return rie

    def ricci(self, points):
        rie = self.riemann(points)
        return np.einsum("...abad->...bd", rie)

    def scalar_curvature(self, points):
        ric = self.ricci(points)
        ginv = self.inverse_metric(points)
        return np.einsum("...bd,...bd->...", ginv, ric)

    # -- vector fields ------------------------------------------------------

    def vector_values(self, X: VectorField, points):
        ctx, batch = self.bindings(points)
        out = np.empty(batch + (self.dim,), dtype=float)
        for a, comp in enumerate(X.components):
            out[..., a] = eval_expr(comp, ctx)
        return out

    def vector_jacobian(self, X: VectorField, points):
        """J[..., a, b] = d_b X^a, exact."""
        ctx, batch = self.bindings(points)
        out = np.empty(batch + (self.dim, self.dim), dtype=float)
        for a, comp in enumerate(X.components):
            for b, cb in enumerate(self.coords):
                out[..., a, b] = eval_expr(differentiate(comp, cb), ctx)
        return out

    def covariant_jacobian(self, X: VectorField, points):
        """nabla_b X^a = d_b X^a + Gamma^a_{bc} X^c."""
        J = self.vector_jacobian(X, points)
        gamma = self.christoffel(points)
        Xv = self.vector_values(X, points)
        return J + np.einsum("...abc,...c->...ab", gamma, Xv)

    def lie_derivative_metric(self, X: VectorField, points):
        """(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c, exact."""
        gval = self.metric(points)
        dg = self.dmetric(points)
        J = self.vector_jacobian(X, points)
        Xv = self.vector_values(X, points)
        t1 = np.einsum("...c,...cab->...ab", Xv, dg)
        t2 = np.einsum("...cb,...ca->...ab", gval, J)
        t3 = np.einsum("...ac,...cb->...ab", gval, J)
        return t1 + t2 + t3
