"""Hypothesis checks and the mountain-pass geometry of J.

The constants are the closed forms of the sphere lower bound
J(u) ≥ C_ρ ρ^{p₊} - (λ C₁/q₋)|f|ρ^{q₋} - C₃C_ε|h|^{p₊/(p₊-1)} on ‖u‖ = ρ,
with ρ picked from a dyadic ladder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import energy_values
from .errors import NoAdmissibleRho, NoDescentFound, NotApplicable, PositivityNotFound
from .exponents import HypothesisReport, Violation, derived_exponents
from .mesh import GridFunction, x_norm
from .profiles import bump
from .varx import EmbeddingConstants, luxemburg_norm, random_navier_field

DEFAULT_RHO_GRID = tuple(2.0**-k for k in range(1, 61))
RAY_SCHEDULE = tuple(2.0**k for k in range(0, 61))
SMALL_T_SCHEDULE = tuple(2.0**-k for k in range(1, 61))


@dataclass(frozen=True)
class WeightNorms:
    f: float
    g: float
    h: float
    h_sup: float


def weight_norms(prob):
    d = derived_exponents(prob.p, prob.q, prob.r)
    return WeightNorms(
        luxemburg_norm(prob.f, d.q0).value,
        luxemburg_norm(prob.g, d.r0).value,
        luxemburg_norm(prob.h, d.p_star_conjugate).value,
        float(np.abs(prob.h.values).max()),
    )


def check_H2(prob, mode="H2"):
    """Sign and integrability conditions on the weights.

    On a finite grid every field has finite variable-exponent norms, so the
    integrability part reduces to a finiteness check; η and μ are metadata.
    """
    if mode not in ("H2", "H2prime"):
        raise ValueError(f"unknown mode {mode!r}")
    violations = []
    g = prob.g.values
    if np.any(g < 0):
        loc = tuple(int(i) for i in np.argwhere(g < 0)[0])
        violations.append(Violation("0 <= g", loc, (float(g[loc]),)))
    for name, w in (("f", prob.f), ("g", prob.g), ("h", prob.h)):
        if not np.all(np.isfinite(w.values)):
            violations.append(Violation(f"{name} finite", (), ()))
    if not violations:
        norms = weight_norms(prob)
        for name, v in (("|f|_q0", norms.f), ("|g|_r0", norms.g), ("|h|_p*'", norms.h)):
            if not np.isfinite(v):
                violations.append(Violation(f"{name} finite", (), (v,)))
    if mode == "H2prime":
        if np.any(prob.h.values != 0):
            loc = tuple(int(i) for i in np.argwhere(prob.h.values != 0)[0])
            violations.append(Violation("h(x) == 0", loc, (float(prob.h.values[loc]),)))
        mask = prob.omega0_mask
        if not mask.any():
            violations.append(Violation("non-empty open domain Omega_0", (), ()))
        elif np.any(g[mask] <= 0):
            loc = tuple(int(i) for i in np.argwhere(mask & (g <= 0))[0])
            violations.append(Violation("g > 0 in Omega_0", loc, (float(g[loc]),)))
    return HypothesisReport.from_violations(violations)


@dataclass(frozen=True)
class GeometryConstants:
    rho: float
    epsilon: float
    C_epsilon: float
    C_rho: float
    lambda_bar: float
    delta: float
    alpha: float
    constants: EmbeddingConstants
    norms: WeightNorms


def c_rho(rho, a, b, gamma, p_minus, p_plus, r_minus, C2, g_norm):
    return (
        a / (2 * p_plus)
        - b / (p_minus ** (gamma + 1) * (gamma + 1)) * rho ** (p_minus * (gamma + 1) - p_plus)
        - C2 / r_minus * g_norm * rho ** (r_minus - p_plus)
    )


def young_constant(eps, s):
    """C_ε in xy ≤ ε x^s + C_ε y^{s'}, 1/s + 1/s' = 1."""
    sp = s / (s - 1.0)
    return (1.0 / sp) * (eps * s) ** (-sp / s)


def mountain_pass_constants(prob, constants, rho_grid=DEFAULT_RHO_GRID, norms=None):
    k = prob.kirchhoff
    a, b, gamma = k.a, k.b, k.gamma
    pm, pp = prob.p.p_minus, prob.p.p_plus
    qm, rm = prob.q.p_minus, prob.r.p_minus
    norms = weight_norms(prob) if norms is None else norms
    C1, C2, C3 = constants.C1, constants.C2, constants.C3

    threshold = a / (4 * pp)
    admissible = [
        rho
        for rho in rho_grid
        if c_rho(rho, a, b, gamma, pm, pp, rm, C2, norms.g) >= threshold
    ]
    if not admissible:
        raise NoAdmissibleRho(f"no rho in the grid reaches C_rho >= a/(4 p_plus) = {threshold}")
    rho = max(admissible)
    Cr = c_rho(rho, a, b, gamma, pm, pp, rm, C2, norms.g)
    eps = a / (2 * pp * C3)
    Ceps = young_constant(eps, pp)
    if norms.f > 0:
        lam_bar = Cr * qm / (2 * C1 * norms.f * rho ** (qm - pp))
    else:
        lam_bar = np.inf
    delta = 0.5 * (Cr * rho**pp / (2 * C3 * Ceps)) ** (pp / (pp - 1))
    alpha = 0.25 * Cr * rho**pp
    return GeometryConstants(rho, eps, Ceps, Cr, lam_bar, delta, alpha, constants, norms)


def regime_violations(prob, geo, require_h_gate=True):
    out = []
    # λ = 0 only removes a term, so it is allowed here; configs still demand λ > 0
    if not 0 <= prob.lam < geo.lambda_bar:
        out.append(Violation("lambda in (0, lambda_bar)", (), (prob.lam, geo.lambda_bar)))
    if require_h_gate and not geo.norms.h < geo.delta:
        out.append(Violation("|h|_p*' < delta", (), (geo.norms.h, geo.delta)))
    return out


@dataclass
class SphereReport(HypothesisReport):
    min_J: float = np.inf
    samples: int = 0


def _on_sphere(u, prob, rho):
    n = x_norm(u, prob.p)
    if n == 0:
        raise ValueError("cannot place the zero field on a sphere")
    return u * (rho / n)


def verify_sphere_lower_bound(prob, geo, samples=512, seed=0, fields=None, rtol=1e-8):
    """Sample J on ‖u‖_X = ρ and compare against α.

    Explicit ``fields`` must already lie on the sphere; random samples are
    projected there by homogeneity of the norm.
    """
    violations = regime_violations(prob, geo, require_h_gate=prob.mode != "theorem2")
    if fields is None:
        rng = np.random.default_rng(seed)
        fields = [_on_sphere(random_navier_field(prob.grid, rng), prob, geo.rho) for _ in range(samples)]
    else:
        fields = list(fields)
        for u in fields:
            n = x_norm(u, prob.p)
            if abs(n - geo.rho) > rtol * geo.rho:
                raise ValueError(f"sample has norm {n}, expected rho = {geo.rho}")
    values = [energy_values(u.values, prob).total for u in fields]
    for i, J in enumerate(values):
        if J < geo.alpha:
            violations.append(Violation("J >= alpha on sphere", (i,), (J, geo.alpha)))
    return SphereReport(
        not violations, violations, min(values) if values else np.inf, len(fields)
    )


def omega0_box(prob):
    """Bounding box of the Ω₀ nodes widened by one spacing (clipped to the domain)."""
    mask = prob.omega0_mask
    if not mask.any():
        raise ValueError("Omega_0 is empty")
    box = []
    for x, h, L in zip(prob.grid.coords, prob.grid.spacing, prob.grid.extents):
        box += [max(float(x[mask].min()) - h, 0.0), min(float(x[mask].max()) + h, L)]
    return tuple(box)


def box_eigenfunction(grid, box):
    """First Navier eigenfunction of ``box``; raised to the 4th power (C³ at the
    box edges) when the box is a strict subset of the domain. Zero outside."""
    full = all(
        np.isclose(box[2 * ax], 0.0) and np.isclose(box[2 * ax + 1], L)
        for ax, L in enumerate(grid.extents)
    )
    vals = np.ones(grid.shape)
    for ax, x in enumerate(grid.coords):
        lo, hi = box[2 * ax], box[2 * ax + 1]
        inside = (x > lo) & (x < hi)
        vals = vals * np.where(inside, np.sin(np.pi * (x - lo) / (hi - lo)), 0.0)
    vals = vals if full else vals**4
    vals[grid.boundary_mask] = 0.0
    return GridFunction(grid, vals)


def default_phi0(prob):
    """Unit-norm positive ray direction supported in Ω₀."""
    phi = box_eigenfunction(prob.grid, omega0_box(prob))
    phi.values[~prob.omega0_mask] = 0.0
    return phi * (1.0 / x_norm(phi, prob.p))


def default_psi0(prob):
    """Representer of the load h in the X inner product: ∫hψ₀ = ‖h‖²_{X*} > 0."""
    grid = prob.grid
    psi = GridFunction(grid, grid.riesz(grid.weights * prob.h.values))
    n = x_norm(psi, prob.p)
    return psi * (1.0 / n) if n > 0 else psi


def default_concave_psi0(prob):
    """Bump on a box around the maximum of f, shrunk until f > 0 on the box."""
    grid = prob.grid
    f = prob.f.values
    if f.max() <= 0:
        raise ValueError("f has no positive part")
    centre = [x[np.unravel_index(np.argmax(f), f.shape)] for x in grid.coords]
    half = min(grid.extents) / 4
    while True:
        box = []
        for c, L in zip(centre, grid.extents):
            box += [max(c - half, 0.0), min(c + half, L)]
        phi = bump(grid, box)
        if np.all(f[phi.values > 0] > 0) and phi.values.any():
            break
        half /= 2
        if half < min(grid.spacing):
            raise ValueError("cannot isolate a region with f > 0")
    return phi * (1.0 / x_norm(phi, prob.p))


@dataclass
class RayResult:
    e: GridFunction
    J_e: float
    t0: float
    tail_decreasing: bool
    trace: list = field(default_factory=list)


def find_divergence_ray(prob, phi0, geo, t_schedule=RAY_SCHEDULE):
    if not np.any(phi0.values):
        raise ValueError("phi0 must be nonzero")
    outside = np.abs(phi0.values[~prob.omega0_mask])
    if outside.size and outside.max() > 0:
        raise ValueError("phi0 must be supported in Omega_0")
    trace = []
    n0 = x_norm(phi0, prob.p)
    schedule = list(t_schedule)
    for i, t in enumerate(schedule):
        J = energy_values(t * phi0.values, prob).total
        trace.append((t, J))
        if J < 0 and t * n0 > geo.rho:
            # tail evidence: J at t and the next two scheduled points keeps falling
            tail = [J] + [energy_values(s * phi0.values, prob).total for s in schedule[i + 1 : i + 3]]
            dec = len(tail) == 3 and tail[0] > tail[1] > tail[2]
            return RayResult(phi0 * t, J, t, dec, trace + list(zip(schedule[i + 1 : i + 3], tail[1:])))
    raise NoDescentFound("J(t phi0) stayed nonnegative along the schedule")


@dataclass
class SmallTResult:
    t: float
    J_t: float
    start: GridFunction


def _small_t_scan(prob, psi0, geo, t_schedule):
    n0 = x_norm(psi0, prob.p)
    for t in t_schedule:
        if not 0 < t < 1:
            continue
        J = energy_values(t * psi0.values, prob).total
        if J < 0 and t * n0 < geo.rho:
            return SmallTResult(t, J, psi0 * t)
    raise PositivityNotFound("no scheduled t gave J(t psi0) < 0 inside the ball")


def verify_small_t_negative(prob, psi0, geo, t_schedule=SMALL_T_SCHEDULE):
    """First scheduled t in (0, 1) with J(tψ₀) < 0 and ‖tψ₀‖ < ρ, driven by -t∫hψ₀."""
    if not np.any(prob.h.values):
        raise NotApplicable("h == 0: use the concave-term starter instead")
    load = float(np.sum(prob.grid.weights * prob.h.values * psi0.values))
    if load <= 0:
        raise ValueError(f"need ∫h psi0 > 0, got {load}")
    return _small_t_scan(prob, psi0, geo, t_schedule)


def verify_small_t_negative_concave(prob, psi0, geo, t_schedule=SMALL_T_SCHEDULE):
    """h ≡ 0 analogue: the -λ t^q ∫f|ψ₀|^q/q term dominates as t → 0."""
    qv = np.asarray(prob.q.values)
    weight = float(np.sum(prob.grid.weights * prob.f.values * np.abs(psi0.values) ** qv / qv))
    if weight <= 0:
        raise ValueError(f"need ∫f|psi0|^q > 0, got {weight}")
    return _small_t_scan(prob, psi0, geo, t_schedule)
