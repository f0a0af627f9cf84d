"""Variable-exponent Lebesgue machinery on a grid.

The modular ρ(u) = ∫|u|^{p(x)} and the Luxemburg norm
|u| = inf{μ > 0 : ρ(u/μ) ≤ 1} are evaluated with the grid's trapezoidal
weights; since the weights are positive, the discrete ρ is itself a modular
and every norm-modular relation holds exactly at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonConvergence
from .mesh import GridFunction, x_norm

BISECTION_RTOL = 1e-10
MAX_BISECTIONS = 200
MAX_BRACKET_STEPS = 2000


@dataclass(frozen=True)
class ModularValue:
    value: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class LuxemburgNorm:
    value: float
    iterations: int
    residual: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class EmbeddingConstants:
    C1: float
    C2: float
    C3: float
    probe_count: int
    safety_factor: float
    embedding: float


def _exponent_values(u, p):
    pv = np.asarray(p.values, dtype=float)
    if pv.ndim == 0:
        pv = np.full(u.grid.shape, float(pv))
    if pv.shape != u.grid.shape:
        raise GridMismatch(f"exponent of shape {pv.shape} on grid {u.grid.shape}")
    return pv


def _modular_array(values, weights, pv):
    a = np.abs(values)
    nz = a > 0
    return float(np.sum(weights[nz] * a[nz] ** pv[nz]))


def modular(u, p):
    pv = _exponent_values(u, p)
    return ModularValue(_modular_array(u.values, u.grid.weights, pv))


def luxemburg_norm(u, p, tol=BISECTION_RTOL):
    """Bracket by doubling/halving from μ = 1, then bisect on μ ↦ ρ(u/μ)."""
    pv = _exponent_values(u, p)
    a = np.abs(u.values)
    nz = a > 0
    if not nz.any():
        return LuxemburgNorm(0.0, 0, 0.0)
    w, a, pv = u.grid.weights[nz], a[nz], pv[nz]
    loga = np.log(a)

    def rho(mu):
        return float(np.sum(w * np.exp(pv * (loga - np.log(mu)))))

    lo = hi = 1.0
    steps = 0
    if rho(1.0) > 1.0:
        while rho(hi) > 1.0:
            lo, hi = hi, hi * 2.0
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise NonConvergence("could not bracket Luxemburg norm from above")
    else:
        while rho(lo) <= 1.0:
            hi, lo = lo, lo * 0.5
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise NonConvergence("could not bracket Luxemburg norm from below")
    # invariant: rho(lo) > 1 >= rho(hi)
    it = 0
    rtol = min(tol, BISECTION_RTOL)
    while hi - lo > rtol * hi and it < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        it += 1
    mu = 0.5 * (lo + hi)
    return LuxemburgNorm(mu, it, abs(rho(mu) - 1.0))


def conjugate(p):
    from .exponents import _from_values

    pv = np.asarray(p.values, dtype=float)
    return _from_values(pv / (pv - 1.0), p.analysis_dim)


@dataclass
class RelationReport:
    norm: float
    modular: float
    p_minus: float
    p_plus: float
    item1: bool
    item2: bool
    trichotomy: bool
    branch: str

    @property
    def passed(self):
        return self.item1 and self.item2 and self.trichotomy


def verify_norm_modular_relations(u, p, tol=1e-8):
    """Check the three pointwise norm-modular relations for a single field.

    Items are vacuously true when their hypothesis (|u| > 1 or |u| < 1)
    fails.  ``tol`` is the relative slack used for inequalities and for
    deciding the equality branch of the trichotomy.
    """
    nrm = luxemburg_norm(u, p).value
    rho = modular(u, p).value
    pm, pp = p.p_minus, p.p_plus
    lo_ok = lambda a, b: a <= b * (1 + tol) + tol  # noqa: E731
    item1 = item2 = True
    if nrm > 1 + tol:
        item1 = lo_ok(nrm**pm, rho) and lo_ok(rho, nrm**pp)
    if nrm < 1 - tol:
        item2 = lo_ok(nrm**pp, rho) and lo_ok(rho, nrm**pm)
    # the equality band for ρ is widened by p₊ since ρ(u/μ) moves like μ^{-p}
    if abs(nrm - 1) <= tol:
        branch, tri = "=", abs(rho - 1) <= pp * tol * 10
    elif nrm < 1:
        branch, tri = "<", rho < 1
    else:
        branch, tri = ">", rho > 1
    return RelationReport(nrm, rho, pm, pp, item1, item2, tri, branch)


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    holds: bool


def holder_bound(u, v, p):
    if u.grid != v.grid:
        raise GridMismatch("fields live on different grids")
    q = conjugate(p)
    lhs = abs(float(np.sum(u.grid.weights * u.values * v.values)))
    rhs = 2.0 * luxemburg_norm(u, p).value * luxemburg_norm(v, q).value
    return HolderReport(lhs, rhs, lhs <= rhs * (1 + 1e-12) + 1e-300)


def random_navier_field(grid, rng, modes=12, decay=None):
    """Smooth random field from a sine series; each mode satisfies the Navier traces.

    The coefficient decay exponent is itself random so the probe family mixes
    smooth and comparatively rough shapes.
    """
    if decay is None:
        decay = rng.uniform(1.0, 4.0)
    modes = min(modes, grid.nodes_per_axis - 2)
    ks = np.arange(1, modes + 1)
    if grid.dim == 1:
        (L,) = grid.extents
        c = rng.standard_normal(modes) / ks**decay
        basis = np.sin(np.pi * np.outer(ks, grid.axes[0]) / L)
        vals = c @ basis
    else:
        Lx, Ly = grid.extents
        kk = np.add.outer(ks**2, ks**2).astype(float)
        c = rng.standard_normal((modes, modes)) / kk ** (decay / 2)
        bx = np.sin(np.pi * np.outer(ks, grid.axes[0]) / Lx)
        by = np.sin(np.pi * np.outer(ks, grid.axes[1]) / Ly)
        vals = bx.T @ c @ by
    vals = vals.reshape(grid.shape)
    vals[grid.boundary_mask] = 0.0
    return GridFunction(grid, vals)


def probe_fields(grid, probes, seed):
    """Deterministic probe stream: the first k fields never depend on ``probes``."""
    rng = np.random.default_rng(seed)
    return [random_navier_field(grid, rng) for _ in range(probes)]


def embedding_ratio(u, p, s):
    return luxemburg_norm(u, s).value / x_norm(u, p)


def estimate_embedding_constant(grid, p, s, probes=512, seed=0, safety=1.2, fields=None):
    """Empirical bound for |u|_{s(·)} ≤ C ‖u‖_X over a seeded probe family."""
    fields = probe_fields(grid, probes, seed) if fields is None else list(fields)
    best = 0.0
    for u in fields:
        if not np.any(u.values):
            continue
        best = max(best, embedding_ratio(u, p, s))
    return safety * best


def embedding_constants(grid, p, q, r, probes=512, seed=0, safety=1.2):
    """C₁, C₂, C₃ for the three lower-order bounds, built from one embedding constant.

    With S the constant of X ↪ L^{p*(·)}, Hölder with the factor 2 and
    ||u|^t|_{p*/t} ≤ max(|u|_{p*}^{t₊}, |u|_{p*}^{t₋}) give
    C₁ = 2 max(S^{q₊}, S^{q₋}), C₂ = 2 max(S^{r₊}, S^{r₋}), C₃ = 2 S.
    """
    from .exponents import critical_exponent

    S = estimate_embedding_constant(grid, p, critical_exponent(p), probes, seed, safety)
    C1 = 2.0 * max(S**q.p_plus, S**q.p_minus)
    C2 = 2.0 * max(S**r.p_plus, S**r.p_minus)
    C3 = 2.0 * S
    return EmbeddingConstants(C1, C2, C3, probes, safety, S)
