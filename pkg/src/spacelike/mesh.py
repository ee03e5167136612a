"""Structured parameter meshes: flat tori and boxes with boundary.

Provides second-order finite differences (periodic wrap or one-sided at
boundaries), winding-aware stencils for maps into identified ambient
coordinates, and metric-weighted quadrature with exactly-rounded
(compensated) summation so reductions are reproducible regardless of
evaluation order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import MeshError


@dataclass(frozen=True)
class Axis:
    nodes: int
    length: float
    periodic: bool = True
    start: float = 0.0

    def __post_init__(self):
        if self.nodes < 8 or self.nodes % 2 != 0:
            raise MeshError(f"node count must be even and >= 8, got {self.nodes}")
        if not self.length > 0:
            raise MeshError(f"axis length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.nodes if self.periodic else self.length / (self.nodes - 1)

    def coords(self) -> np.ndarray:
        return self.start + self.spacing * np.arange(self.nodes)


@dataclass(frozen=True)
class ParamMesh:
    """Tensor-product mesh; all-periodic means compact without boundary."""

    axes: tuple
    names: tuple = field(default=None)

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        names = self.names or tuple(f"x{i+1}" for i in range(len(axes)))
        if len(names) != len(axes):
            raise MeshError("one name per axis required")
        object.__setattr__(self, "names", tuple(names))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(ax.nodes for ax in self.axes)

    @property
    def spacings(self) -> tuple:
        return tuple(ax.spacing for ax in self.axes)

    @property
    def closed(self) -> bool:
        return all(ax.periodic for ax in self.axes)

    @cached_property
    def grids(self) -> tuple:
        return tuple(np.meshgrid(*(ax.coords() for ax in self.axes), indexing="ij"))

    def bindings(self) -> dict:
        return dict(zip(self.names, self.grids))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for i, ax in enumerate(self.axes):
            if not ax.periodic:
                sl = [slice(None)] * self.ndim
                sl[i] = 0
                mask[tuple(sl)] = True
                sl[i] = -1
                mask[tuple(sl)] = True
        return mask

    def refine(self) -> "ParamMesh":
        return ParamMesh(
            tuple(Axis(2 * ax.nodes, ax.length, ax.periodic, ax.start) for ax in self.axes),
            self.names,
        )


def _shift(f, axis, step, jump=None):
    """Neighbor values along a periodic axis, adding `jump` on wraparound.

    `jump` is the constant ambient offset picked up when the parameter
    wraps once around the axis (winding); None means plain wrap.
    """
    out = np.roll(f, -step, axis=axis)
    if jump is not None:
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(-step, None) if step > 0 else slice(None, -step)
        out[tuple(sl)] = out[tuple(sl)] + (jump if step > 0 else -jump)
    return out


def fd_partial(f, mesh: ParamMesh, axis: int, jump=None):
    """Second-order partial derivative along a mesh axis.

    Central differences with periodic wrap; one-sided 2nd-order stencils at
    the ends of non-periodic axes.  `f` may carry trailing component axes.
    `jump` (optional, periodic axes) is the winding offset added across the
    seam, broadcastable against the component axes.
    """
    ax = mesh.axes[axis]
    h = ax.spacing
    if ax.periodic:
        fp = _shift(np.asarray(f), axis, +1, jump)
        fm = _shift(np.asarray(f), axis, -1, jump)
        return (fp - fm) / (2.0 * h)
    f = np.asarray(f)
    out = np.empty_like(f, dtype=float)
    inner = [slice(None)] * f.ndim
    lo = [slice(None)] * f.ndim
    hi = [slice(None)] * f.ndim

    def at(sl_axis):
        s = [slice(None)] * f.ndim
        s[axis] = sl_axis
        return tuple(s)

    inner[axis] = slice(1, -1)
    out[tuple(inner)] = (f[at(slice(2, None))] - f[at(slice(None, -2))]) / (2.0 * h)
    lo[axis] = 0
    out[tuple(lo)] = (-3.0 * f[at(0)] + 4.0 * f[at(1)] - f[at(2)]) / (2.0 * h)
    hi[axis] = -1
    out[tuple(hi)] = (3.0 * f[at(-1)] - 4.0 * f[at(-2)] + f[at(-3)]) / (2.0 * h)
    return out


def fd_second(f, mesh: ParamMesh, axis: int, jump=None):
    """Second-order pure second derivative along one axis."""
    ax = mesh.axes[axis]
    h2 = ax.spacing ** 2
    if ax.periodic:
        fp = _shift(np.asarray(f), axis, +1, jump)
        fm = _shift(np.asarray(f), axis, -1, jump)
        return (fp - 2.0 * np.asarray(f) + fm) / h2
    f = np.asarray(f)
    out = np.empty_like(f, dtype=float)

    def at(i):
        s = [slice(None)] * f.ndim
        s[axis] = i
        return tuple(s)

    out[at(slice(1, -1))] = (
        f[at(slice(2, None))] - 2.0 * f[at(slice(1, -1))] + f[at(slice(None, -2))]
    ) / h2
    out[at(0)] = (2.0 * f[at(0)] - 5.0 * f[at(1)] + 4.0 * f[at(2)] - f[at(3)]) / h2
    out[at(-1)] = (2.0 * f[at(-1)] - 5.0 * f[at(-2)] + 4.0 * f[at(-3)] - f[at(-4)]) / h2
    return out


def quadrature_weights(mesh: ParamMesh) -> np.ndarray:
    w = np.ones(mesh.shape)
    for i, ax in enumerate(mesh.axes):
        wi = np.full(ax.nodes, ax.spacing)
        if not ax.periodic:
            wi[0] *= 0.5
            wi[-1] *= 0.5
        shape = [1] * mesh.ndim
        shape[i] = ax.nodes
        w = w * wi.reshape(shape)
    return w


def integrate(f, mesh: ParamMesh, density=None) -> float:
    """Quadrature of f * density over the mesh.

    Rectangle rule on periodic axes, trapezoid weights on boundary axes.
    Summation uses math.fsum, which is exactly rounded and therefore
    independent of accumulation order.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != mesh.shape:
        raise MeshError(f"field shape {f.shape} does not match mesh {mesh.shape}")
    if density is None:
        density = np.ones(mesh.shape)
    density = np.asarray(density, dtype=float)
    if np.min(density) <= 0.0:
        raise MeshError(f"density must be positive, min = {np.min(density)}")
    vals = f * density * quadrature_weights(mesh)
    return math.fsum(vals.ravel(order="C").tolist())
