"""Kirchhoff coefficient, energy functional, and its exact discrete gradient.

    J(u) = a s - b s^{γ+1}/(γ+1) - λ∫f|u|^q/q - ∫g|u|^r/r - ∫h u,
    s    = ∫|∇Δu|^{p(x)}/p(x)

The nodal residual r_i = <J'(u), e_i> is assembled with the transpose of
the same sparse ∇Δ matrix used by the energy, so <r, v> equals the
directional derivative of the discrete J for any Navier-compliant v.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields

import numpy as np

from .errors import GridMismatch
from .mesh import GridFunction


@dataclass(frozen=True)
class KirchhoffCoefficients:
    a: float
    b: float
    gamma: float

    def __post_init__(self):
        for name in ("a", "b", "gamma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def degeneracy_point(self):
        return (self.a / self.b) ** (1.0 / self.gamma)


@dataclass
class ProblemData:
    kirchhoff: KirchhoffCoefficients
    lam: float
    p: object
    q: object
    r: object
    f: GridFunction
    g: GridFunction
    h: GridFunction
    omega0_mask: np.ndarray
    eta: float = 0.01
    mu: float = 0.01
    mode: str = "theorem1"

    def __post_init__(self):
        grid = self.f.grid
        if self.g.grid != grid or self.h.grid != grid:
            raise GridMismatch("weights f, g, h live on different grids")
        for e in (self.p, self.q, self.r):
            if np.shape(e.values) != grid.shape:
                raise GridMismatch("exponent does not match the weight grid")
        self.omega0_mask = np.asarray(self.omega0_mask, dtype=bool).reshape(grid.shape)

    @property
    def grid(self):
        return self.f.grid


@dataclass
class EnergyBreakdown:
    s: float
    kirchhoff_part: float
    f_part: float
    g_part: float
    h_part: float
    total: float

    def to_csv_row(self):
        return ",".join(f"{getattr(self, f.name):.17g}" for f in fields(self))

    @staticmethod
    def csv_header():
        return ",".join(f.name for f in fields(EnergyBreakdown))


def energy_rows_to_csv(rows):
    buf = io.StringIO()
    buf.write(EnergyBreakdown.csv_header() + "\n")
    for r in rows:
        buf.write(r.to_csv_row() + "\n")
    return buf.getvalue()


def kirchhoff_M(s, k):
    if s < 0:
        raise ValueError("s must be nonnegative")
    return k.a - k.b * s**k.gamma


def kirchhoff_part(s, k):
    return k.a * s - k.b * s ** (k.gamma + 1) / (k.gamma + 1)


def kirchhoff_cap(k):
    """Maximum over s ≥ 0 of a s - b s^{γ+1}/(γ+1), attained at (a/b)^{1/γ}."""
    g = k.gamma
    return g * k.a ** ((g + 1) / g) / ((g + 1) * k.b ** (1 / g))


def _signed_power(u, e):
    """|u|^{e-1} u with the value 0 at u = 0 (the limit for e > 1)."""
    a = np.abs(u)
    out = np.zeros_like(u)
    nz = a > 0
    out[nz] = np.sign(u[nz]) * a[nz] ** (e[nz] - 1.0)
    return out


def _abs_power(u, e):
    a = np.abs(u)
    out = np.zeros_like(u)
    nz = a > 0
    out[nz] = a[nz] ** e[nz]
    return out


def _check(u, prob):
    if u.grid != prob.grid:
        raise GridMismatch("field and problem live on different grids")


def _grad_components(vals, grid):
    return (grid.grad_laplacian_matrix @ vals.ravel()).reshape(grid.dim, -1)


def _principal(vals, prob):
    grid = prob.grid
    comps = _grad_components(vals, grid)
    mag = np.sqrt(np.sum(comps**2, axis=0))
    pv = np.asarray(prob.p.values).ravel()
    w = grid.weights.ravel()
    s = float(np.sum(w * _abs_power(mag, pv) / pv))
    return s, comps, mag, pv, w


def _lower_parts(vals, prob):
    w = prob.grid.weights
    qv, rv = np.asarray(prob.q.values), np.asarray(prob.r.values)
    fp = float(np.sum(w * prob.f.values * _abs_power(vals, qv) / qv))
    gp = float(np.sum(w * prob.g.values * _abs_power(vals, rv) / rv))
    hp = float(np.sum(w * prob.h.values * vals))
    return fp, gp, hp


def energy_values(vals, prob):
    s, *_ = _principal(vals, prob)
    kp = kirchhoff_part(s, prob.kirchhoff)
    fp, gp, hp = _lower_parts(vals, prob)
    total = kp - prob.lam * fp - gp - hp
    return EnergyBreakdown(s, kp, fp, gp, hp, total)


def energy_J(u, prob):
    _check(u, prob)
    return energy_values(u.values, prob)


def potential_phi(u, prob):
    _check(u, prob)
    fp, gp, hp = _lower_parts(u.values, prob)
    return prob.lam * fp + gp + hp


def residual_values(vals, prob):
    grid = prob.grid
    s, comps, mag, pv, w = _principal(vals, prob)
    k = prob.kirchhoff
    scale = np.zeros_like(mag)
    nz = mag > 0
    scale[nz] = mag[nz] ** (pv[nz] - 2.0)
    flux = (comps * (w * scale)).ravel()
    principal = grid.grad_laplacian_matrix.T @ flux
    qv, rv = np.asarray(prob.q.values), np.asarray(prob.r.values)
    load = (
        prob.lam * prob.f.values * _signed_power(vals, qv)
        + prob.g.values * _signed_power(vals, rv)
        + prob.h.values
    )
    res = kirchhoff_M(s, k) * principal.reshape(grid.shape) - grid.weights * load
    res[grid.boundary_mask] = 0.0
    return res


def residual(u, prob):
    _check(u, prob)
    return GridFunction(u.grid, residual_values(u.values, prob))


def residual_norm(res):
    """Dual norm of a nodal residual against the quadratic X inner product."""
    return res.grid.dual_norm(res.values)


def central_difference(u, v, prob, h):
    """(J(u+hv) - J(u-hv)) / 2h with the line's integrands differenced nodewise.

    ∇Δ(u ± hv) is formed as ∇Δu ± h∇Δv so the 1/h³ stencil cancellation in
    ∇Δu is shared by both evaluations, and every integral is summed after
    subtracting, not before.
    """
    _check(u, prob)
    grid = prob.grid
    k = prob.kirchhoff
    w = grid.weights.ravel()
    pv = np.asarray(prob.p.values).ravel()
    gu = _grad_components(u.values, grid)
    gv = _grad_components(v.values, grid)
    phi_p = _abs_power(np.sqrt(np.sum((gu + h * gv) ** 2, axis=0)), pv) / pv
    phi_m = _abs_power(np.sqrt(np.sum((gu - h * gv) ** 2, axis=0)), pv) / pv
    s_p, s_m = float(np.sum(w * phi_p)), float(np.sum(w * phi_m))
    ds = float(np.sum(w * (phi_p - phi_m)))
    g1 = k.gamma + 1
    dk = k.a * ds - k.b * (s_p**g1 - s_m**g1) / g1

    up, um = u.values + h * v.values, u.values - h * v.values
    wq = grid.weights
    qv, rv = np.asarray(prob.q.values), np.asarray(prob.r.values)
    df = float(np.sum(wq * prob.f.values * (_abs_power(up, qv) - _abs_power(um, qv)) / qv))
    dg = float(np.sum(wq * prob.g.values * (_abs_power(up, rv) - _abs_power(um, rv)) / rv))
    dh = float(np.sum(wq * prob.h.values * 2 * h * v.values))
    return (dk - prob.lam * df - dg - dh) / (2 * h)


def directional_derivative_check(u, v, prob, h=1e-5):
    """Relative gap between <residual(u), v> and the central difference of J."""
    if not np.any(v.values):
        return 0.0
    analytic = residual(u, prob).dot(v)
    fd = central_difference(u, v, prob, h)
    denom = max(abs(analytic), abs(fd))
    return abs(analytic - fd) / denom if denom > 0 else 0.0
