"""Killing/conformal/homothetic analysis of a vector field over a region,
and the non-existence verdicts its properties support.

Definiteness of L_X g on spacelike vectors is not decidable from finitely
many samples, so every verdict carries a certification string recording the
sample sizes; the deterministic orthogonal-complement probes run first and
random sampling can only downgrade a verdict, never upgrade it.  Since the
expression layer performs no algebraic simplification, a tensor that
vanishes at every probe to round-off is certified as "sampled-zero", not
as a symbolic identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import VectorField
from .errors import ConfigError
from .exprs import differentiate, eval_expr
from .spacetime import CausalClass, MetricModel

_FUTURE = (CausalClass.FUTURE_TIMELIKE, CausalClass.FUTURE_LIGHTLIKE)
_PAST = (CausalClass.PAST_TIMELIKE, CausalClass.PAST_LIGHTLIKE)


def sample_region(model: MetricModel, region: dict, n_points: int, rng) -> np.ndarray:
    """Uniform sample of a coordinate box; every model coordinate needs bounds."""
    missing = [c for c in model.coords if c not in region]
    if missing:
        raise ConfigError(f"region bounds missing for coordinates {missing}")
    pts = np.empty((n_points, model.dim))
    for i, c in enumerate(model.coords):
        lo, hi = region[c]
        pts[:, i] = rng.uniform(float(lo), float(hi), size=n_points)
    return pts


@dataclass(frozen=True)
class SymmetryReport:
    classification: str  # killing | homothetic | conformal | none
    rho_mean: float
    rho_min: float
    rho_max: float
    conformal_residual: float
    lie_sup: float
    causal_everywhere: bool
    strictly_causal: bool
    orientation: str  # future | past | mixed | undetermined
    sign_on_spacelike: str  # psd | nsd | indefinite | zero
    has_definite_point: bool
    definite_point_sign: str
    witness_index: int
    certification: str
    n_points: int
    model_kind: str
    split_data: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "classification": self.classification,
            "rho": {"mean": self.rho_mean, "min": self.rho_min, "max": self.rho_max},
            "conformal_residual": self.conformal_residual,
            "lie_sup": self.lie_sup,
            "causal_everywhere": self.causal_everywhere,
            "strictly_causal": self.strictly_causal,
            "orientation": self.orientation,
            "sign_on_spacelike": self.sign_on_spacelike,
            "has_definite_point": self.has_definite_point,
            "definite_point_sign": self.definite_point_sign,
            "certification": self.certification,
            "n_points": self.n_points,
            "model_kind": self.model_kind,
            "split_data": self.split_data,
        }


def _spacelike_probe_vectors(model, point, g, n_random, rng):
    """Deterministic complement-of-future probes first, then random spacelike."""
    m = model.dim
    fut = model.future_at(point)
    qf = float(fut @ g @ fut)
    probes = []
    eye = np.eye(m)
    if qf < -1e-12 * np.max(np.abs(g)):
        for a in range(m):
            v = eye[a] - (float(eye[a] @ g @ fut) / qf) * fut
            if float(v @ g @ v) > 1e-10 * np.max(np.abs(g)):
                probes.append(v / np.sqrt(float(v @ g @ v)))
    else:
        # Lightlike future field: the complement is degenerate, keep any
        # coordinate directions and pair sums that are genuinely spacelike.
        cands = [eye[a] for a in range(m)]
        cands += [eye[a] + eye[b] for a in range(m) for b in range(a + 1, m)]
        for v in cands:
            q = float(v @ g @ v)
            if q > 1e-10 * np.max(np.abs(g)):
                probes.append(v / np.sqrt(q))
    n_det = len(probes)
    tries = 0
    while len(probes) - n_det < n_random and tries < 50 * n_random:
        tries += 1
        v = rng.standard_normal(m)
        q = float(v @ g @ v)
        if q > 1e-10 * np.max(np.abs(g)):
            probes.append(v / np.sqrt(q))
    return probes, n_det


def analyze_vector_field(
    model: MetricModel,
    X: VectorField,
    region: dict,
    n_points: int = 128,
    n_random_vectors: int = 200,
    seed: int = 0,
) -> SymmetryReport:
    """Sampled classification of X and sign analysis of L_X g on spacelike vectors."""
    if n_points < 100:
        raise ConfigError("at least 100 sample points are required")
    rng = np.random.default_rng(seed)
    pts = sample_region(model, region, n_points, rng)
    g = model.metric_at(pts)
    L = model.lie_derivative_metric(X, pts)
    ginv = np.linalg.inv(g)
    m = model.dim
    g_scale = float(np.max(np.abs(g)))
    lie_sup = float(np.max(np.abs(L)))

    rho = np.einsum("...ab,...ab->...", ginv, L) / (2.0 * m)
    conf_res = float(np.max(np.abs(L - 2.0 * rho[..., None, None] * g)))
    is_conformal = conf_res <= 1e-8 * g_scale
    rho_mean = float(np.mean(rho))
    if lie_sup <= 1e-10 * max(1.0, g_scale):
        classification = "killing"
    elif is_conformal and np.max(np.abs(rho - rho_mean)) <= 1e-8 * (1.0 + abs(rho_mean)):
        classification = "homothetic"
    elif is_conformal:
        classification = "conformal"
    else:
        classification = "none"

    classes = model.classify_vectors(pts, model.chart.vector_values(X, pts))
    causal_everywhere = all(c is not CausalClass.SPACELIKE for c in classes)
    strictly_causal = causal_everywhere and all(c is not CausalClass.ZERO for c in classes)
    has_future = any(c in _FUTURE for c in classes)
    has_past = any(c in _PAST for c in classes)
    if causal_everywhere and has_future and not has_past:
        orientation = "future"
    elif causal_everywhere and has_past and not has_future:
        orientation = "past"
    elif causal_everywhere and (has_future or has_past):
        orientation = "mixed"
    else:
        orientation = "undetermined"

    # Sign of L(v, v) over unit spacelike probes.
    eps_sign = 1e-10 * max(1.0, lie_sup)
    has_pos = has_neg = False
    witness_index = -1
    definite_sign = "none"
    n_probe_total = 0
    for k in range(n_points):
        probes, _ = _spacelike_probe_vectors(model, pts[k], g[k], n_random_vectors, rng)
        n_probe_total += len(probes)
        qs = np.array([float(v @ L[k] @ v) for v in probes])
        if np.any(qs > eps_sign):
            has_pos = True
        if np.any(qs < -eps_sign):
            has_neg = True
        if witness_index < 0:
            if np.all(qs > eps_sign):
                witness_index, definite_sign = k, "positive"
            elif np.all(qs < -eps_sign):
                witness_index, definite_sign = k, "negative"
    if has_pos and has_neg:
        sign_verdict = "indefinite"
    elif has_pos:
        sign_verdict = "psd"
    elif has_neg:
        sign_verdict = "nsd"
    else:
        sign_verdict = "zero"

    if lie_sup <= 1e-12 * max(1.0, g_scale):
        certification = f"sampled-zero({n_points} points)"
    else:
        certification = f"sampled({n_points} points, {n_probe_total} spacelike probes)"

    split_data = {}
    if model.kind == "orthogonal_splitted":
        beta = model.meta["beta"]
        tcoord = model.coords[0]
        binds = {c: pts[:, i] for i, c in enumerate(model.coords)}
        dbeta = np.broadcast_to(
            np.asarray(eval_expr(differentiate(beta, tcoord), binds), dtype=float),
            (n_points,),
        )
        dgt = np.empty((n_points, m - 1, m - 1))
        for i in range(1, m):
            for j in range(1, m):
                dgt[:, i - 1, j - 1] = eval_expr(
                    differentiate(model.chart.g[i][j], tcoord), binds
                )
        spatial_eigs = np.linalg.eigvalsh(0.5 * (dgt + np.swapaxes(dgt, -1, -2)))
        tol = 1e-10 * max(1.0, g_scale)
        split_data = {
            "non_contracting": bool(np.max(dbeta) <= tol and np.min(spatial_eigs) >= -tol),
            "non_expanding": bool(np.min(dbeta) >= -tol and np.max(spatial_eigs) <= tol),
            "dbeta_max": float(np.max(dbeta)),
            "dgt_eig_min": float(np.min(spatial_eigs)),
        }

    return SymmetryReport(
        classification=classification,
        rho_mean=rho_mean,
        rho_min=float(np.min(rho)),
        rho_max=float(np.max(rho)),
        conformal_residual=conf_res,
        lie_sup=lie_sup,
        causal_everywhere=causal_everywhere,
        strictly_causal=strictly_causal,
        orientation=orientation,
        sign_on_spacelike=sign_verdict,
        has_definite_point=witness_index >= 0,
        definite_point_sign=definite_sign,
        witness_index=witness_index,
        certification=certification,
        n_points=n_points,
        model_kind=model.kind,
        split_data=split_data,
    )


def theorem_applicability(report: SymmetryReport):
    """Structured verdicts: which non-existence statements the sampled
    properties support, each with its hypothesis flags and excluded class.

    A past-oriented field is folded onto the future branch by the sign flip
    of its Lie derivative (the statements for -X).
    """
    # Canonicalize to a future-oriented field.
    if report.orientation == "past":
        flip = {"psd": "nsd", "nsd": "psd", "indefinite": "indefinite", "zero": "zero"}
        sign = flip[report.sign_on_spacelike]
        def_sign = {"positive": "negative", "negative": "positive", "none": "none"}[
            report.definite_point_sign
        ]
        oriented_future = True
    elif report.orientation == "future":
        sign = report.sign_on_spacelike
        def_sign = report.definite_point_sign
        oriented_future = True
    else:
        sign = report.sign_on_spacelike
        def_sign = report.definite_point_sign
        oriented_future = False

    verdicts = []

    def add(name, applies, hyps, excluded):
        verdicts.append(
            {
                "theorem": name,
                "applies": bool(applies),
                "hypotheses": hyps,
                "excluded_class": excluded if applies else None,
                "certification": report.certification,
            }
        )

    semidef_ok = sign in ("psd", "zero")
    semidef_neg_ok = sign in ("nsd", "zero")
    hyps_a = {
        "future_causal": oriented_future and report.causal_everywhere,
        "lie_semidefinite": semidef_ok,
        "definite_at_point": def_sign == "positive",
    }
    add(
        "causal_semidefinite_with_definite_point(a)",
        all(hyps_a.values()),
        hyps_a,
        "compact spacelike submanifolds with future causal mean curvature, extremal included",
    )
    hyps_a_past = {
        "future_causal": oriented_future and report.causal_everywhere,
        "lie_semidefinite_negative": semidef_neg_ok,
        "definite_at_point": def_sign == "negative",
    }
    add(
        "causal_semidefinite_with_definite_point(a,past)",
        all(hyps_a_past.values()),
        hyps_a_past,
        "compact spacelike submanifolds with past causal mean curvature, extremal included",
    )
    hyps_b = {
        "strictly_causal": report.strictly_causal and oriented_future,
        "lie_semidefinite": semidef_ok,
    }
    add(
        "strictly_causal_semidefinite(b)",
        all(hyps_b.values()),
        hyps_b,
        "compact spacelike submanifolds with future causal mean curvature not identically zero",
    )
    hyps_b_past = {
        "strictly_causal": report.strictly_causal and oriented_future,
        "lie_semidefinite_negative": semidef_neg_ok,
    }
    add(
        "strictly_causal_semidefinite(b,past)",
        all(hyps_b_past.values()),
        hyps_b_past,
        "compact spacelike submanifolds with past causal mean curvature not identically zero",
    )
    hyps_k = {
        "killing": report.classification == "killing",
        "strictly_causal": report.strictly_causal,
    }
    add(
        "strictly_causal_killing",
        all(hyps_k.values()),
        hyps_k,
        "compact spacelike submanifolds with time-oriented causal mean curvature, except identically zero",
    )
    conformal_like = report.classification in ("conformal", "homothetic", "killing")
    rho_tol = 1e-10 * (1.0 + abs(report.rho_mean))
    hyps_c1 = {
        "conformal": conformal_like,
        "strictly_causal_future": report.strictly_causal and report.orientation == "future",
        "rho_nonnegative": report.rho_min >= -rho_tol,
    }
    add(
        "conformal_signed_factor",
        all(hyps_c1.values()),
        hyps_c1,
        "compact spacelike submanifolds with future time-oriented causal mean curvature, except identically zero",
    )
    hyps_c2 = dict(hyps_c1)
    hyps_c2["rho_not_identically_zero"] = report.rho_max > rho_tol
    add(
        "conformal_signed_nonzero_factor",
        all(hyps_c2.values()),
        hyps_c2,
        "compact spacelike submanifolds with future causal mean curvature, extremal included",
    )
    if report.split_data:
        hyps_s = {
            "orthogonal_splitted": True,
            "non_contracting": report.split_data.get("non_contracting", False),
        }
        add(
            "orthogonal_splitted_non_contracting",
            all(hyps_s.values()),
            hyps_s,
            "compact spacelike submanifolds with future causal mean curvature not identically zero",
        )
        hyps_se = {
            "orthogonal_splitted": True,
            "non_expanding": report.split_data.get("non_expanding", False),
        }
        add(
            "orthogonal_splitted_non_expanding",
            all(hyps_se.values()),
            hyps_se,
            "compact spacelike submanifolds with past causal mean curvature not identically zero",
        )
    return verdicts
