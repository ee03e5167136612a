"""Independent numerical oracles used by the tests.

These deliberately avoid the package's symbolic-derivative machinery:
Christoffel symbols and curvature come from central finite differences of
the metric components, curve curvature from raw second differences of the
embedding, thresholds from closed forms derived by hand.
"""

import numpy as np


def metric_fd(model, point, step=1e-5):
    """Finite-difference first derivatives of the metric components."""
    m = model.dim
    dg = np.zeros((m, m, m))
    for c in range(m):
        p_plus = np.array(point, dtype=float)
        p_minus = np.array(point, dtype=float)
        p_plus[c] += step
        p_minus[c] -= step
        dg[c] = (model.chart.metric(p_plus) - model.chart.metric(p_minus)) / (2 * step)
    return dg


def christoffel_fd(model, point, step=1e-5):
    """Levi-Civita symbols from finite-differenced metric derivatives."""
    g = model.chart.metric(np.asarray(point, dtype=float))
    ginv = np.linalg.inv(g)
    dg = metric_fd(model, point, step)
    m = model.dim
    gamma = np.zeros((m, m, m))
    for a in range(m):
        for b in range(m):
            for c in range(m):
                s = 0.0
                for d in range(m):
                    s += ginv[a, d] * (dg[b, d, c] + dg[c, d, b] - dg[d, b, c])
                gamma[a, b, c] = 0.5 * s
    return gamma


def riemann_fd(model, point, step=1e-4):
    """Curvature from finite differences of the Christoffel symbols."""
    m = model.dim
    dgamma = np.zeros((m, m, m, m))  # [c, a, d, b] = d_c Gamma^a_db
    for c in range(m):
        p_plus = np.array(point, dtype=float)
        p_minus = np.array(point, dtype=float)
        p_plus[c] += step
        p_minus[c] -= step
        dgamma[c] = (christoffel_fd(model, p_plus, step) - christoffel_fd(model, p_minus, step)) / (
            2 * step
        )
    gamma = christoffel_fd(model, point, step)
    rie = np.zeros((m, m, m, m))
    for a in range(m):
        for b in range(m):
            for c in range(m):
                for d in range(m):
                    val = dgamma[c, a, d, b] - dgamma[d, a, c, b]
                    for e in range(m):
                        val += gamma[a, c, e] * gamma[e, d, b] - gamma[a, d, e] * gamma[e, c, b]
                    rie[a, b, c, d] = val
    return rie


def curve_acceleration_norm(points_2d):
    """|second difference| / spacing^2 of a closed planar polyline, per node.

    For a round circle sampled uniformly this tends to 1/r as the mesh
    refines (classical curvature of the circle).
    """
    n = points_2d.shape[0]
    h = 1.0 / n
    acc = (np.roll(points_2d, -1, axis=0) - 2 * points_2d + np.roll(points_2d, 1, axis=0)) / h**2
    speed_sq = np.sum(
        ((np.roll(points_2d, -1, axis=0) - np.roll(points_2d, 1, axis=0)) / (2 * h)) ** 2, axis=1
    )
    return np.linalg.norm(acc, axis=1) / speed_sq


def frw_null_expansions(hubble, scale, radius):
    """Null expansions of a coordinate sphere in a scale-factor model.

    theta_pm proportional to (hubble +- 1/(scale * radius)); the inner one
    changes sign at radius = 1/(scale*hubble), the trapping threshold.
    """
    return 2.0 * (hubble + 1.0 / (scale * radius)), 2.0 * (hubble - 1.0 / (scale * radius))


def central_difference(fn, x, step):
    return (fn(x + step) - fn(x - step)) / (2.0 * step)
