"""Discretized spacelike immersions and their extrinsic geometry.

An immersion is a parameter mesh plus per-node ambient coordinates.
Tangents and second derivatives come from the mesh finite differences
(winding-aware across periodic seams when the ambient chart is identified),
ambient Christoffel symbols are exact, and the mean curvature vector uses
the relativists' sign: H = - trace_g II, so the round sphere in a flat
slice has H pointing outward.

Curves (one-dimensional meshes) are admitted; their mean curvature is
minus the geodesic acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonSpacelikeError, MeshError
from .exprs import eval_expr, parse_expr
from .mesh import ParamMesh, fd_partial, fd_second
from .spacetime import CAUSAL_FUTURE, CAUSAL_PAST, CausalClass, EPS_CAUSAL


@dataclass(frozen=True)
class ImmersedSubmanifold:
    mesh: ParamMesh
    ambient: object  # MetricModel or RiemannianSpace
    map_values: np.ndarray  # mesh.shape + (m,)
    winding: np.ndarray  # (n, m): ambient offset per wrap of each periodic axis
    map_exprs: tuple = None

    def __post_init__(self):
        mv = np.asarray(self.map_values, dtype=float)
        m = self.ambient.dim
        if not self.mesh.ndim < m:
            raise MeshError(
                f"submanifold dimension {self.mesh.ndim} must be below ambient {m}"
            )
        if mv.shape != self.mesh.shape + (m,):
            raise MeshError(
                f"map shape {mv.shape} != mesh shape {self.mesh.shape} + ({m},)"
            )
        object.__setattr__(self, "map_values", mv)
        w = np.zeros((self.mesh.ndim, m)) if self.winding is None else np.asarray(
            self.winding, dtype=float
        )
        if w.shape != (self.mesh.ndim, m):
            raise MeshError(f"winding shape {w.shape} != ({self.mesh.ndim}, {m})")
        object.__setattr__(self, "winding", w)
        self.induced_metric()  # spacelike check at construction

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_exprs(cls, mesh, ambient, exprs, winding=None):
        """Sample an analytic map given as one expression per ambient coordinate.

        Parameters are the mesh axis names.  For periodic axes the winding
        (constant ambient offset per wrap) is measured from the expressions
        and checked for constancy, unless given explicitly.
        """
        exprs = tuple(parse_expr(e) for e in exprs)
        if len(exprs) != ambient.dim:
            raise MeshError("one map expression per ambient coordinate required")
        binds = mesh.bindings()
        mv = np.empty(mesh.shape + (ambient.dim,))
        for a, e in enumerate(exprs):
            mv[..., a] = eval_expr(e, binds)
        if winding is None:
            winding = np.zeros((mesh.ndim, ambient.dim))
            for i, ax in enumerate(mesh.axes):
                if not ax.periodic:
                    continue
                shifted = dict(binds)
                shifted[mesh.names[i]] = binds[mesh.names[i]] + ax.length
                for a, e in enumerate(exprs):
                    delta = np.asarray(eval_expr(e, shifted) - mv[..., a])
                    jump = float(np.mean(delta))
                    if np.max(np.abs(delta - jump)) > 1e-9 * (1.0 + abs(jump)):
                        raise MeshError(
                            f"map component {a} does not close up along axis {i}: "
                            "offset across the seam is not constant"
                        )
                    winding[i, a] = jump
        return cls(mesh, ambient, mv, np.asarray(winding, dtype=float), exprs)

    @classmethod
    def from_values(cls, mesh, ambient, values, winding=None):
        return cls(mesh, ambient, np.asarray(values, dtype=float), winding)

    # -- first-order geometry --------------------------------------------------

    @cached_property
    def tangents(self):
        """T[..., i, a] = d map^a / d parameter_i (second order FD)."""
        n, m = self.mesh.ndim, self.ambient.dim
        T = np.empty(self.mesh.shape + (n, m))
        for i in range(n):
            T[..., i, :] = fd_partial(self.map_values, self.mesh, i, jump=self.winding[i])
        return T

    @cached_property
    def ambient_metric(self):
        return self.ambient.metric_at(self.map_values)

    def induced_metric(self):
        """Induced g_ij, its inverse and density sqrt(det g); spacelike enforced."""
        g = np.einsum("...ia,...ab,...jb->...ij", self.tangents, self.ambient_metric, self.tangents)
        eig = np.linalg.eigvalsh(g)
        if np.min(eig) <= 0.0:
            flat = np.argwhere(eig[..., 0] <= 0.0)
            idx = tuple(int(k) for k in flat[0])
            raise NonSpacelikeError(
                f"induced metric not positive definite at node {idx}: eigenvalues {eig[idx]}"
            )
        return g

    @cached_property
    def _induced(self):
        g = self.induced_metric()
        ginv = np.linalg.inv(g)
        density = np.sqrt(np.linalg.det(g))
        return g, ginv, density

    @property
    def metric(self):
        return self._induced[0]

    @property
    def inverse_metric(self):
        return self._induced[1]

    @property
    def density(self):
        return self._induced[2]

    # -- second-order geometry ---------------------------------------------------

    @cached_property
    def second_derivatives(self):
        """D[..., i, j, a] = d^2 map^a / (d p_i d p_j)."""
        n, m = self.mesh.ndim, self.ambient.dim
        D = np.empty(self.mesh.shape + (n, n, m))
        for i in range(n):
            D[..., i, i, :] = fd_second(self.map_values, self.mesh, i, jump=self.winding[i])
            for j in range(i + 1, n):
                # Tangent fields are single-valued on the torus, plain wrap.
                mixed = fd_partial(self.tangents[..., j, :], self.mesh, i)
                D[..., i, j, :] = mixed
                D[..., j, i, :] = mixed
        return D

    @cached_property
    def second_fundamental_form(self):
        """II[..., i, j, a]: normal part of the covariant Hessian of the map.

        II_ij = d_i d_j x + Gamma(dx_i, dx_j) minus the tangential part from
        the Gram system; orthogonal to every tangent within discretization
        error (the suite checks 1e-8).
        """
        gamma = self.ambient.christoffel_at(self.map_values)
        dfull = self.second_derivatives + np.einsum(
            "...abc,...ib,...jc->...ija", gamma, self.tangents, self.tangents
        )
        # Tangential coefficients: g_kl c^l_ij = <D_ij, T_k>.
        rhs = np.einsum(
            "...ija,...ab,...kb->...ijk", dfull, self.ambient_metric, self.tangents
        )
        n = self.mesh.ndim
        batch = rhs.shape[:-3]
        B = np.swapaxes(rhs.reshape(batch + (n * n, n)), -1, -2)
        X = np.linalg.solve(self.metric, B)
        coef = np.swapaxes(X, -1, -2).reshape(batch + (n, n, n))
        return dfull - np.einsum("...ijl,...la->...ija", coef, self.tangents)

    def mean_curvature(self):
        """H[..., a] = - g^{ij} II_ij^a (trace with the minus convention)."""
        return -np.einsum("...ij,...ija->...a", self.inverse_metric, self.second_fundamental_form)

    def tangent_projection_coefficients(self, ambient_vectors):
        """Components c^i of the tangential part of an ambient vector field."""
        rhs = np.einsum(
            "...a,...ab,...kb->...k", ambient_vectors, self.ambient_metric, self.tangents
        )
        return np.linalg.solve(self.metric, rhs[..., None])[..., 0]

    def orthonormal_frame(self):
        """Gram-Schmidt frame E[..., i, a] in mesh axis order."""
        n = self.mesh.ndim
        g = self.ambient_metric
        E = np.empty_like(self.tangents)
        for i in range(n):
            v = self.tangents[..., i, :].copy()
            for j in range(i):
                proj = np.einsum("...a,...ab,...b->...", v, g, E[..., j, :])
                v -= proj[..., None] * E[..., j, :]
            norm = np.sqrt(np.einsum("...a,...ab,...b->...", v, g, v))
            E[..., i, :] = v / norm[..., None]
        return E

    # -- causal classification ------------------------------------------------

    def mean_curvature_report(self, tol=EPS_CAUSAL):
        """Per-node mean curvature vector with causal classes and a global tag."""
        if not getattr(self.ambient, "is_lorentzian", False):
            raise MeshError("causal classification needs a Lorentzian ambient model")
        H = self.mean_curvature()
        classes = self.ambient.classify_vectors(self.map_values, H, tol)
        tag = classify_tags(classes.ravel())
        norm_sq = np.einsum("...a,...ab,...b->...", H, self.ambient_metric, H)
        return MeanCurvatureReport(
            immersion=self,
            H=H,
            classes=classes,
            global_tag=tag,
            tol=tol,
            norm_squared=norm_sq,
        )


def classify_tags(classes):
    """Global trapped tag from per-node causal classes.

    The returned tag is the most specific applicable one.  Note that the
    'weakly' classes coincide with the union of 'nearly' and 'marginally'
    (a causal field with a timelike point is nearly trapped, one without is
    marginally trapped), so 'weakly_*' never wins over those; it is kept
    for completeness of the vocabulary.
    """
    cset = set(classes)
    n_zero = sum(1 for c in classes if c is CausalClass.ZERO)
    if n_zero == len(list(classes)):
        return "extremal"
    if cset == {CausalClass.FUTURE_TIMELIKE}:
        return "future_trapped"
    if cset == {CausalClass.PAST_TIMELIKE}:
        return "past_trapped"
    if cset <= CAUSAL_FUTURE:
        if CausalClass.FUTURE_TIMELIKE in cset:
            return "nearly_future_trapped"
        if CausalClass.FUTURE_LIGHTLIKE in cset:
            return "marginally_future_trapped"
        return "weakly_future_trapped"
    if cset <= CAUSAL_PAST:
        if CausalClass.PAST_TIMELIKE in cset:
            return "nearly_past_trapped"
        if CausalClass.PAST_LIGHTLIKE in cset:
            return "marginally_past_trapped"
        return "weakly_past_trapped"
    return "mixed"


@dataclass(frozen=True)
class MeanCurvatureReport:
    immersion: ImmersedSubmanifold
    H: np.ndarray
    classes: np.ndarray
    global_tag: str
    tol: float
    norm_squared: np.ndarray

    def reclassify(self, tol):
        """Deterministic re-tagging with an overriding tolerance."""
        classes = self.immersion.ambient.classify_vectors(
            self.immersion.map_values, self.H, tol
        )
        return MeanCurvatureReport(
            immersion=self.immersion,
            H=self.H,
            classes=classes,
            global_tag=classify_tags(classes.ravel()),
            tol=tol,
            norm_squared=self.norm_squared,
        )

    def class_counts(self):
        out = {}
        for c in self.classes.ravel():
            out[c.value] = out.get(c.value, 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self):
        q = self.norm_squared
        return {
            "global_tag": self.global_tag,
            "tolerance": self.tol,
            "class_counts": self.class_counts(),
            "n_nodes": int(np.prod(self.classes.shape)),
            "norm_squared_min": float(np.min(q)),
            "norm_squared_max": float(np.max(q)),
            "H_sup_norm": float(np.max(np.abs(self.H))),
        }
