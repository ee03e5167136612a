"""Lorentzian metric models with declared time orientation.

Conventions, stated in every report that depends on them:

* signature (-, +, ..., +), one negative eigenvalue;
* R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
  + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb};
* sectional curvature K(u, v) = g(R(u,v)v, u) / (g(u,u) g(v,v) - g(u,v)^2);
* two causal vectors lie in the same time cone iff their inner product is
  negative; the zero vector is treated as causal (future and past), never
  timelike or spacelike.

The standard static form is g = -h dt^2 + g0 with h > 0 and g0 independent
of t; the orthogonal-splitted form is g = -beta dt^2 + g_t with beta > 0.
The time coordinate is the first chart coordinate by convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .chart import MetricChart, VectorField
from .errors import SignatureError
from .exprs import parse_expr

CONVENTIONS = {
    "signature": "(-,+,...,+)",
    "riemann": "R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb",
    "sectional": "K = g(R(u,v)v,u) / (g(u,u) g(v,v) - g(u,v)^2)",
    "mean_curvature": "H = - trace_g II (no division by dimension)",
    "static_metric": "-h dt^2 + g0",
}

EPS_CAUSAL = 1e-8


class CausalClass(enum.Enum):
    FUTURE_TIMELIKE = "future_timelike"
    PAST_TIMELIKE = "past_timelike"
    FUTURE_LIGHTLIKE = "future_lightlike"
    PAST_LIGHTLIKE = "past_lightlike"
    ZERO = "zero"
    SPACELIKE = "spacelike"


CAUSAL_FUTURE = frozenset(
    {CausalClass.FUTURE_TIMELIKE, CausalClass.FUTURE_LIGHTLIKE, CausalClass.ZERO}
)
CAUSAL_PAST = frozenset(
    {CausalClass.PAST_TIMELIKE, CausalClass.PAST_LIGHTLIKE, CausalClass.ZERO}
)


@dataclass(frozen=True)
class RiemannianSpace:
    """Positive-definite metric over a chart; ambient for intra-S immersions."""

    chart: MetricChart

    @property
    def dim(self):
        return self.chart.dim

    @property
    def coords(self):
        return self.chart.coords

    def metric_at(self, points):
        g = self.chart.metric(points)
        eig = np.linalg.eigvalsh(g)
        if np.min(eig) <= 0:
            bad = np.unravel_index(int(np.argmin(eig[..., 0])), eig[..., 0].shape)
            raise SignatureError(
                f"metric not positive definite, eigenvalues {eig[bad]} at batch index {bad}"
            )
        return g

    def christoffel_at(self, points):
        return self.chart.christoffel(points)

    @property
    def is_lorentzian(self):
        return False


@dataclass(frozen=True)
class MetricModel:
    """Analytic Lorentzian metric with kind tag and future orientation."""

    kind: str
    chart: MetricChart
    future_field: VectorField
    meta: dict = field(default_factory=dict)

    KINDS = ("minkowski", "standard_static", "orthogonal_splitted", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise SignatureError(f"unknown model kind '{self.kind}'")
        if self.future_field.dim != self.chart.dim:
            raise SignatureError("future_field dimension mismatch")

    @property
    def dim(self):
        return self.chart.dim

    @property
    def coords(self):
        return self.chart.coords

    @property
    def is_lorentzian(self):
        return True

    # -- pointwise tensors ---------------------------------------------------

    def metric_at(self, points):
        """Metric components with the Lorentzian signature enforced."""
        g = self.chart.metric(points)
        eig = np.linalg.eigvalsh(g)
        neg = np.sum(eig < 0, axis=-1)
        scale = np.max(np.abs(g), axis=(-2, -1))
        degenerate = np.min(np.abs(eig), axis=-1) <= 1e-12 * scale
        if np.any(neg != 1) or np.any(degenerate):
            flat = np.argwhere((neg != 1) | degenerate)
            idx = tuple(flat[0])
            raise SignatureError(
                f"signature violation at batch index {idx}: eigenvalues {eig[idx]}"
            )
        return g

    def christoffel_at(self, points):
        return self.chart.christoffel(points)

    def riemann_at(self, points):
        return self.chart.riemann(points)

    def lie_derivative_metric(self, X: VectorField, points):
        return self.chart.lie_derivative_metric(X, points)

    def future_at(self, points):
        return self.chart.vector_values(self.future_field, points)

    # -- causal classification ------------------------------------------------

    def classify_vectors(self, points, vectors, tol=EPS_CAUSAL):
        """Vectorized causal classification; returns an object array of CausalClass.

        A vector counts as zero when its sup-norm is below tol times the local
        metric scale; timelike/lightlike/spacelike are separated by
        tol * scale * |v|^2.  Orientation comes from the sign of g(v, future
        field); if that pairing is degenerate (v parallel to a lightlike
        future field) the coordinate dot product decides.
        """
        points = np.asarray(points, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        g = self.chart.metric(points)
        fut = self.future_at(points)
        scale = np.max(np.abs(g), axis=(-2, -1))
        vmax = np.max(np.abs(vectors), axis=-1)
        q = np.einsum("...a,...ab,...b->...", vectors, g, vectors)
        f = np.einsum("...a,...ab,...b->...", vectors, g, fut)
        qtol = tol * scale * vmax * vmax
        fmax = np.maximum(1.0, np.max(np.abs(fut), axis=-1))
        ftol = tol * scale * vmax * fmax
        dot = np.einsum("...a,...a->...", vectors, fut)
        toward_future = np.where(
            f < -ftol, True, np.where(f > ftol, False, dot > 0.0)
        )
        out = np.empty(np.shape(q), dtype=object)
        zero = vmax < tol * scale
        spacelike = (q > qtol) & ~zero
        timelike = (q < -qtol) & ~zero
        lightlike = ~zero & ~spacelike & ~timelike
        out[zero] = CausalClass.ZERO
        out[spacelike] = CausalClass.SPACELIKE
        out[timelike & toward_future] = CausalClass.FUTURE_TIMELIKE
        out[timelike & ~toward_future] = CausalClass.PAST_TIMELIKE
        out[lightlike & toward_future] = CausalClass.FUTURE_LIGHTLIKE
        out[lightlike & ~toward_future] = CausalClass.PAST_LIGHTLIKE
        return out

    def causal_character(self, point, v, tol=EPS_CAUSAL) -> CausalClass:
        out = self.classify_vectors(
            np.asarray(point, dtype=float)[None, :], np.asarray(v, dtype=float)[None, :], tol
        )
        return out[0]

    # -- sectional curvature ---------------------------------------------------

    def sectional_curvature(self, point, u, v):
        point = np.asarray(point, dtype=float)
        g = self.metric_at(point)
        rie = self.riemann_at(point)
        # g(R(u,v)v, u): R(u,v)v = R^a_{bcd} u^c v^d v^b
        rvec = np.einsum("abcd,c,d,b->a", rie, u, v, v)
        num = float(u @ g @ rvec)
        gu, gv, guv = float(u @ g @ u), float(v @ g @ v), float(u @ g @ v)
        den = gu * gv - guv * guv
        if abs(den) < 1e-14 * max(1.0, abs(gu) * abs(gv)):
            raise SignatureError("degenerate plane: zero area element")
        return num / den

    def timelike_sectional_range(self, sample_points, sample_planes):
        """Sampled min/max sectional curvature over declared timelike planes.

        Each plane is (u, v) with u timelike and v spacelike.  Evidence only:
        the report is tagged 'sampled, not certified'.
        """
        if len(sample_points) == 0:
            raise SignatureError("need at least one sample point")
        values = []
        for point, (u, v) in zip(sample_points, sample_planes):
            ku = self.causal_character(point, np.asarray(u, float))
            if ku not in (CausalClass.FUTURE_TIMELIKE, CausalClass.PAST_TIMELIKE):
                raise SignatureError("plane spanner u must be timelike")
            values.append(self.sectional_curvature(point, np.asarray(u, float), np.asarray(v, float)))
        return {
            "min": min(values),
            "max": max(values),
            "n_samples": len(values),
            "certification": "sampled, not certified",
            "sign_convention": CONVENTIONS["sectional"],
        }


# -- constructors -------------------------------------------------------------


def minkowski(dim=4, coords=None) -> MetricModel:
    coords = coords or ("t",) + tuple(f"x{i}" for i in range(1, dim))
    comps = [["0"] * dim for _ in range(dim)]
    comps[0][0] = "-1"
    for i in range(1, dim):
        comps[i][i] = "1"
    chart = MetricChart(coords, comps)
    fut = VectorField(("1",) + ("0",) * (dim - 1))
    return MetricModel("minkowski", chart, fut)


def standard_static(base_coords, g0, h, time_coord="t") -> MetricModel:
    """g = -h dt^2 + g0 with h > 0 on the base, g0 t-independent."""
    from .exprs import neg as _neg

    n = len(base_coords)
    h_expr = parse_expr(h)
    coords = (time_coord,) + tuple(base_coords)
    if time_coord in h_expr.free_vars():
        raise SignatureError("static warp h must not depend on the time coordinate")
    comps = [[parse_expr("0")] * (n + 1) for _ in range(n + 1)]
    comps[0][0] = _neg(h_expr)
    for i in range(n):
        for j in range(n):
            e = parse_expr(g0[i][j])
            if time_coord in e.free_vars():
                raise SignatureError("static base metric must be t-independent")
            comps[i + 1][j + 1] = e
    chart = MetricChart(coords, comps)
    fut = VectorField(("1",) + ("0",) * n)
    return MetricModel("standard_static", chart, fut, meta={"h": h_expr, "base_coords": tuple(base_coords)})


def orthogonal_splitted(base_coords, g_t, beta, time_coord="t") -> MetricModel:
    """g = -beta dt^2 + g_t with beta > 0; g_t may depend on t."""
    n = len(base_coords)
    coords = (time_coord,) + tuple(base_coords)
    comps = [["0"] * (n + 1) for _ in range(n + 1)]
    comps[0][0] = parse_expr(f"-({beta})")
    for i in range(n):
        for j in range(n):
            comps[i + 1][j + 1] = parse_expr(g_t[i][j])
    chart = MetricChart(coords, comps)
    fut = VectorField(("1",) + ("0",) * n)
    return MetricModel(
        "orthogonal_splitted", chart, fut, meta={"beta": parse_expr(beta), "base_coords": tuple(base_coords)}
    )


def custom_model(coords, components, future_field) -> MetricModel:
    chart = MetricChart(coords, components)
    return MetricModel("custom", chart, VectorField(tuple(future_field)))


def riemannian(coords, components) -> RiemannianSpace:
    return RiemannianSpace(MetricChart(coords, components))
