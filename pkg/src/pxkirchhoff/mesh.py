"""Uniform grids on intervals/rectangles with Navier boundary handling.

Fields live on every node of the grid (boundary included).  The Navier
conditions u = Δu = Δ²u = 0 are encoded by point-reflection ghost layers:
the ghost value beyond a boundary node b is ``2*u_b - u_mirror``.  For a
field with u_b = 0 that is the odd reflection u(-h) = -u(h); every even
derivative of an odd extension vanishes on the boundary, so applying the
Laplacian stencil twice leaves zero traces.

All stencils are stored as sparse matrices acting on the C-ordered flat
node vector so the composed operator ∇Δ has an exact discrete adjoint.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BadGridSpec, GridMismatch

MIN_NODES = 9


@dataclass(frozen=True)
class Grid:
    dim: int
    extents: tuple
    nodes_per_axis: int

    @property
    def shape(self):
        return (self.nodes_per_axis,) * self.dim

    @property
    def size(self):
        return self.nodes_per_axis**self.dim

    @property
    def spacing(self):
        return tuple(L / (self.nodes_per_axis - 1) for L in self.extents)

    @cached_property
    def axes(self):
        return [np.linspace(0.0, L, self.nodes_per_axis) for L in self.extents]

    @cached_property
    def coords(self):
        """Tuple of coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def weights(self):
        """Tensor-product trapezoidal quadrature weights."""
        w = None
        for h in self.spacing:
            w1 = np.full(self.nodes_per_axis, h)
            w1[0] = w1[-1] = 0.5 * h
            w = w1 if w is None else np.multiply.outer(w, w1)
        return w

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    @cached_property
    def interior_index(self):
        return np.flatnonzero(~self.boundary_mask.ravel())

    @property
    def measure(self):
        return float(np.prod(self.extents))

    # -- stencils -------------------------------------------------------
    def _axis_ops(self, ax):
        n = self.nodes_per_axis
        h = self.spacing[ax]
        main = np.full(n, -2.0)
        d2 = sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1], format="lil")
        # boundary rows vanish under point reflection about the trace
        d2[0, :] = 0.0
        d2[n - 1, :] = 0.0
        d2 = d2.tocsr() / h**2

        d1 = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], format="lil") / (2 * h)
        d1[0, 0], d1[0, 1] = -1.0 / h, 1.0 / h
        d1[n - 1, n - 2], d1[n - 1, n - 1] = -1.0 / h, 1.0 / h
        return d2, d1.tocsr()

    def _embed(self, op, ax):
        eye = sp.identity(self.nodes_per_axis, format="csr")
        mats = [eye] * self.dim
        mats[ax] = op
        out = mats[0]
        for m in mats[1:]:
            out = sp.kron(out, m, format="csr")
        return out

    @cached_property
    def laplacian_matrix(self):
        lap = sum(self._embed(self._axis_ops(ax)[0], ax) for ax in range(self.dim))
        keep = sp.diags((~self.boundary_mask.ravel()).astype(float))
        return (keep @ lap).tocsr()

    @cached_property
    def gradient_matrices(self):
        return [self._embed(self._axis_ops(ax)[1], ax) for ax in range(self.dim)]

    @cached_property
    def grad_laplacian_matrix(self):
        """Stacked ``(dim*size, size)`` matrix of the composed ∇Δ stencil."""
        lap = self.laplacian_matrix
        return sp.vstack([d @ lap for d in self.gradient_matrices]).tocsr()

    @cached_property
    def stiffness(self):
        """Gram matrix of ∫∇Δu·∇Δv on interior unknowns (the p=2 X inner product)."""
        g = self.grad_laplacian_matrix[:, self.interior_index]
        w = sp.diags(np.tile(self.weights.ravel(), self.dim))
        return (g.T @ w @ g).tocsc()

    @cached_property
    def stiffness_solver(self):
        return spla.splu(self.stiffness)

    def riesz(self, dual):
        """Map a nodal dual vector to its representer in the X inner product."""
        dual = np.asarray(dual).reshape(self.shape)
        out = np.zeros(self.size)
        out[self.interior_index] = self.stiffness_solver.solve(
            dual.ravel()[self.interior_index]
        )
        return out.reshape(self.shape)

    def dual_norm(self, dual):
        """Norm of a nodal dual vector against the p=2 X inner product."""
        rep = self.riesz(dual)
        return float(np.sqrt(max(np.vdot(np.asarray(dual).ravel(), rep.ravel()), 0.0)))


def build_grid(dim, extents, nodes):
    if dim not in (1, 2):
        raise BadGridSpec(f"dim must be 1 or 2, got {dim}")
    extents = tuple(float(e) for e in np.atleast_1d(extents))
    if len(extents) != dim:
        raise BadGridSpec(f"expected {dim} extents, got {len(extents)}")
    if any(not np.isfinite(e) or e <= 0 for e in extents):
        raise BadGridSpec("extents must be positive")
    if int(nodes) != nodes or nodes < MIN_NODES:
        raise BadGridSpec(f"need at least {MIN_NODES} nodes per axis, got {nodes}")
    return Grid(dim, extents, int(nodes))


class GridFunction:
    """Real field sampled on every node of a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            if values.size == grid.size:
                values = values.reshape(grid.shape)
            else:
                raise GridMismatch(f"values of shape {values.shape} on grid {grid.shape}")
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.broadcast_to(fn(*grid.coords), grid.shape).copy())

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def copy(self):
        return GridFunction(self.grid, self.values.copy())

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, t):
        return GridFunction(self.grid, self.values * float(t))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def dot(self, other):
        """Euclidean nodal pairing (used with nodal residual vectors)."""
        self._check(other)
        return float(np.vdot(self.values.ravel(), other.values.ravel()))

    def to_csv(self):
        return gridfunction_to_csv(self)

    def __repr__(self):
        return f"GridFunction(shape={self.grid.shape}, max|u|={np.abs(self.values).max():.3g})"


@dataclass
class VectorField:
    grid: Grid
    components: tuple

    def magnitude(self):
        return GridFunction(
            self.grid, np.sqrt(sum(c.values**2 for c in self.components))
        )


def check_same_grid(*fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


def laplacian(u):
    g = u.grid
    return GridFunction(g, g.laplacian_matrix @ u.values.ravel())


def grad_laplacian(u):
    g = u.grid
    lap = g.laplacian_matrix @ u.values.ravel()
    comps = tuple(GridFunction(g, d @ lap) for d in g.gradient_matrices)
    return VectorField(g, comps)


def apply_navier_bc(u):
    """Return a copy with u = 0 on ∂Ω; Δu and Δ²u traces then vanish by reflection."""
    out = u.values.copy()
    out[u.grid.boundary_mask] = 0.0
    return GridFunction(u.grid, out)


def integrate(w):
    return float(np.sum(w.grid.weights * w.values))


def x_norm(u, p, tol=1e-10):
    """Luxemburg norm of |∇Δu| with exponent ``p``: the working norm on X."""
    from .varx import luxemburg_norm

    return luxemburg_norm(grad_laplacian(u).magnitude(), p, tol=tol).value


def gridfunction_to_csv(u):
    g = u.grid
    names = ["x", "y"][: g.dim]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["value"])
    cols = [c.ravel() for c in g.coords] + [u.values.ravel()]
    for row in zip(*cols):
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def gridfunction_from_csv(text, grid):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[-1] != "value" or len(header) != grid.dim + 1:
        raise GridMismatch(f"unexpected CSV header {header}")
    vals = np.array([float(r[-1]) for r in body])
    return GridFunction(grid, vals)
