"""Named analytic weight profiles and box masks."""

from __future__ import annotations

import numpy as np

from .mesh import GridFunction


def box_mask(grid, box):
    """Boolean mask of nodes strictly inside ``box`` = (lo0, hi0[, lo1, hi1])."""
    mask = np.ones(grid.shape, dtype=bool)
    for ax, x in enumerate(grid.coords):
        lo, hi = box[2 * ax], box[2 * ax + 1]
        mask &= (x > lo) & (x < hi)
    return mask


def bump(grid, box, amplitude=1.0):
    """C^∞ bump with peak ``amplitude``, positive exactly on the open box."""
    vals = np.full(grid.shape, float(amplitude))
    for ax, x in enumerate(grid.coords):
        lo, hi = box[2 * ax], box[2 * ax + 1]
        t = (2 * x - lo - hi) / (hi - lo)
        inside = np.abs(t) < 1
        psi = np.zeros_like(x)
        psi[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        vals = vals * psi
    return GridFunction(grid, vals)


def sine(grid, amplitude=1.0, k=1):
    """amplitude · Π sin(kπx_i/L_i); sign-changing for k ≥ 2."""
    vals = np.full(grid.shape, float(amplitude))
    for x, L in zip(grid.coords, grid.extents):
        vals = vals * np.sin(k * np.pi * x / L)
    return GridFunction(grid, vals)


def constant(grid, value=0.0):
    return GridFunction(grid, np.full(grid.shape, float(value)))
