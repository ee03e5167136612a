"""Small shared helpers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .mesh import fd_partial


def parallel_map(fn, items, threads=1):
    """Map preserving order; results are independent of the thread count.

    Work items must be pure; results are collected in submission order so a
    pool of any size yields the identical list.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def smooth_periodic_noise(rng, mesh, kmax=2):
    """Random low-mode trigonometric field on an all-periodic mesh, sup-norm 1."""
    s = np.zeros(mesh.shape)
    grids = mesh.grids
    for k in range(1, kmax + 1):
        for i, g in enumerate(grids):
            L = mesh.axes[i].length
            a, b = rng.normal(size=2)
            s += a * np.sin(2 * np.pi * k * g / L) + b * np.cos(2 * np.pi * k * g / L)
        if mesh.ndim >= 2:
            a = rng.normal()
            s += a * np.sin(2 * np.pi * k * (grids[0] / mesh.axes[0].length + grids[1] / mesh.axes[1].length))
    return s / max(1e-30, float(np.max(np.abs(s))))


def admissible_graph_noise(rng, model, amplitude=0.1, margin_target=0.25, kmax=2):
    """Random smooth graph data scaled to clear the spacelike margin.

    The amplitude cap keeps sup|u| <= amplitude; the gradient cap keeps
    h |grad0 u|^2 <= margin_target at nodes, leaving headroom for the
    staggered flux points.
    """
    mesh = model.mesh
    s = smooth_periodic_noise(rng, mesh, kmax)
    h = model.node_data[0]
    grads = np.stack([fd_partial(s, mesh, i) for i in range(mesh.ndim)], axis=-1)
    gn = np.sqrt(np.max(np.sum(grads**2, axis=-1) * np.max(h)))
    scale = min(amplitude, np.sqrt(margin_target) / max(gn, 1e-30))
    return scale * s
