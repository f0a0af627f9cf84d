"""Constructive critical points: mountain-pass saddle and ball minimizer.

Descent directions are Sobolev gradients: the nodal residual mapped through
the Riesz map of the quadratic X inner product ∫∇Δu·∇Δv.  The plain
Euclidean residual is useless for a sixth-order operator (its conditioning
grows like h⁻⁶), whereas the preconditioned operator is a compact
perturbation of M(s)·I.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import NoConvergence, minimize_scalar, newton_krylov

from .energy import (
    energy_values,
    kirchhoff_cap,
    kirchhoff_M,
    residual_values,
)
from .errors import (
    BoundaryTrap,
    CapExceeded,
    CertificationFailed,
    IterationLimit,
    NoAdmissibleRho,
    NoDescentFound,
    PositivityNotFound,
)
from .exponents import check_H1
from .geometry import (
    check_H2,
    default_concave_psi0,
    default_phi0,
    default_psi0,
    find_divergence_ray,
    mountain_pass_constants,
    regime_violations,
    verify_small_t_negative,
    verify_small_t_negative_concave,
    verify_sphere_lower_bound,
)
from .mesh import GridFunction, x_norm
from .varx import embedding_constants, random_navier_field

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
DESCENT_SLACK = 1e-15
DEGENERACY_TOL = 1e-6
MP_STEP_FRACTION = 0.5
STALL_RTOL = 1e-9
POLISH_LEVEL_RTOL = 1e-2
EK_SETTLE_RTOL = 1e-10


@dataclass
class SolverParams:
    max_iters: int = 2000
    grad_tol: float = 1e-6
    step_init: float = 1.0
    path_points: int = 21
    backtrack_factor: float = 0.5
    theta: float | None = None
    seed: int = 7
    ps_bound: float = 1e6
    max_backtracks: int = 60
    polish: bool = True
    stall_window: int = 25
    polish_iters: int = 50

    def __post_init__(self):
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.path_points < 3:
            raise ValueError("a path needs at least 3 points")
        if self.grad_tol <= 0 or self.max_iters <= 0:
            raise ValueError("grad_tol and max_iters must be positive")


def theta_window(prob):
    """Admissible interval (p₊, min{r₋, p₋^{γ+1}(γ+1)/p₊^γ}) for the PS parameter θ."""
    g = prob.kirchhoff.gamma
    pm, pp = prob.p.p_minus, prob.p.p_plus
    upper = min(prob.r.p_minus, pm ** (g + 1) * (g + 1) / pp**g)
    return pp, upper


def resolve_theta(prob, params):
    lo, hi = theta_window(prob)
    if not lo < hi:
        raise ValueError(f"empty theta window ({lo}, {hi})")
    if params.theta is None:
        return 0.5 * (lo + hi)
    if not lo < params.theta < hi:
        raise ValueError(f"theta = {params.theta} outside ({lo}, {hi})")
    return params.theta


@dataclass
class PSReport:
    level_c: float
    cap: float
    below_cap: bool
    degeneracy_gap: float
    bounded_flag: bool
    near_degenerate: bool = False
    sup_norm: float = 0.0


def ps_monitor(history, prob, params):
    """Palais–Smale diagnostics for a sequence of iterates (GridFunctions)."""
    if not history:
        raise ValueError("empty history")
    last = energy_values(history[-1].values, prob)
    k = prob.kirchhoff
    cap = kirchhoff_cap(k)
    gap = kirchhoff_M(last.s, k)
    sup = max(x_norm(u, prob.p) for u in history)
    return PSReport(
        level_c=last.total,
        cap=cap,
        below_cap=last.total < cap,
        degeneracy_gap=gap,
        bounded_flag=sup < params.ps_bound,
        near_degenerate=abs(gap) < DEGENERACY_TOL,
        sup_norm=sup,
    )


@dataclass
class IterRecord:
    solver: str
    iter: int
    J: float
    residual_norm: float
    x_norm: float
    degeneracy_gap: float
    accepted_decrease: float = 0.0


class _Model:
    """Flat-array view of J, its residual and Sobolev gradient."""

    def __init__(self, prob):
        self.prob = prob
        self.grid = prob.grid

    def J(self, v):
        return energy_values(v, self.prob).total

    def breakdown(self, v):
        return energy_values(v, self.prob)

    def residual(self, v):
        return residual_values(v, self.prob)

    def sobolev(self, res):
        return self.grid.riesz(res)

    def norm(self, v):
        return x_norm(GridFunction(self.grid, v), self.prob.p)

    def record(self, solver, it, v, rn, dec=0.0):
        b = self.breakdown(v)
        gap = kirchhoff_M(b.s, self.prob.kirchhoff)
        return IterRecord(solver, it, b.total, rn, self.norm(v), gap, dec)


def _armijo(model, v, J0, res, d, tau, params, project=None):
    """Backtracking on J along ``d``; returns (new point, J, tau) or None."""
    slope = float(np.vdot(res.ravel(), d.ravel()))
    for _ in range(params.max_backtracks):
        trial = v + tau * d
        if project is not None:
            trial = project(trial)
        Jt = model.J(trial)
        if Jt <= J0 + ARMIJO_C * tau * slope + DESCENT_SLACK * abs(J0):
            return trial, Jt, tau
        tau *= params.backtrack_factor
    return None


def _newton_polish(model, v, params):
    """Newton-Krylov on the Riesz-preconditioned residual u ↦ K⁻¹J'(u).

    Returns (point, dual residual norm, iterations) or None.  The
    preconditioned map is M(s)·I plus a compact term, so Krylov solves are short.
    """
    grid = model.grid
    idx = grid.interior_index
    shape = grid.shape

    def embed(x):
        out = np.zeros(grid.size)
        out[idx] = x
        return out.reshape(shape)

    def F(x):
        return model.sobolev(model.residual(embed(x))).ravel()[idx]

    count = [0]

    def tick(x, f):
        count[0] += 1

    try:
        x = newton_krylov(F, v.ravel()[idx], f_tol=params.grad_tol * 1e-3, method="lgmres",
                          maxiter=params.polish_iters, callback=tick)
    except (NoConvergence, ValueError, FloatingPointError) as exc:
        log.info("newton polish failed: %s", exc)
        return None
    w = embed(x)
    if not np.all(np.isfinite(w)):
        return None
    return w, grid.dual_norm(model.residual(w)), count[0]


def _stalled(levels, window):
    if len(levels) <= window:
        return False
    old, new = levels[-window - 1], levels[-1]
    return old - new <= STALL_RTOL * (1 + abs(old))


@dataclass
class SolveResult:
    u: GridFunction
    report: PSReport
    history: list = field(default_factory=list)
    log: list = field(default_factory=list)
    residual_norm: float = np.inf
    touches_boundary: bool = False


def ekeland_ball_descent(prob, geo, start, params):
    """Monotone projected Sobolev-gradient descent inside {‖u‖_X ≤ ρ}."""
    model = _Model(prob)
    rho = geo.rho
    cap = kirchhoff_cap(prob.kirchhoff)

    def project(v):
        n = model.norm(v)
        return v * (rho / n) if n > rho else v

    v = project(start.values.copy())
    J = model.J(v)
    history, records = [GridFunction(prob.grid, v)], []
    levels = [J]
    rn = np.inf
    for it in range(params.max_iters):
        res = model.residual(v)
        rn = prob.grid.dual_norm(res)
        records.append(model.record("ekeland", it, v, rn))
        if rn == 0.0:
            break
        d = -model.sobolev(res)
        step = _armijo(model, v, J, res, d, params.step_init / (1 + rn), params, project)
        if step is None:
            log.info("ekeland: line search stalled at iteration %d (res %.3e)", it, rn)
            break
        # near u = 0 every field has a tiny residual, so a small residual only
        # counts once a further step no longer lowers J appreciably
        if rn <= params.grad_tol and J - step[1] <= EK_SETTLE_RTOL * abs(J):
            break
        v, Jn, _ = step
        records[-1].accepted_decrease = J - Jn
        J = Jn
        history.append(GridFunction(prob.grid, v))
        levels.append(J)
        if params.polish and _stalled(levels, params.stall_window):
            break
    if rn > params.grad_tol and params.polish:
        polished = _newton_polish(model, v, params)
        if polished is not None:
            w, rw, n_it = polished
            Jw = model.J(w)
            # accept only a critical point inside the ball at or below the descent level
            if rw <= params.grad_tol and model.norm(w) < rho and Jw <= J + POLISH_LEVEL_RTOL * (1 + abs(J)):
                log.info("ekeland: newton polish converged in %d steps", n_it)
                v, rn = w, rw
                records.append(model.record("ekeland", len(records), v, rn, J - Jw))
                history.append(GridFunction(prob.grid, v))
    u = GridFunction(prob.grid, v)
    report = ps_monitor(history, prob, params)
    on_sphere = model.norm(v) >= rho * (1 - 1e-9)
    result = SolveResult(u, report, history, records, rn, on_sphere)
    if rn > params.grad_tol:
        if on_sphere:
            raise BoundaryTrap("descent stalled on the sphere ‖u‖ = rho", result, report)
        raise IterationLimit(f"ekeland descent stopped at residual {rn:.3e}", result, report, history)
    if on_sphere:
        raise BoundaryTrap("minimizer sits on the sphere ‖u‖ = rho", result, report)
    if report.level_c >= cap:
        raise CapExceeded("ball minimizer level above the Kirchhoff cap")
    return result


def _segments(model, path):
    grid = model.grid
    K = grid.stiffness
    idx = grid.interior_index
    seg = []
    for a, b in zip(path[:-1], path[1:]):
        d = (b - a).ravel()[idx]
        seg.append(np.sqrt(max(d @ (K @ d), 0.0)))
    return seg


def _spacing(model, path):
    return sum(_segments(model, path)) / (len(path) - 1)


def _retension(model, path):
    """Redistribute interior path points to equal X-arclength (endpoints fixed)."""
    seg = _segments(model, path)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] == 0:
        return path
    targets = np.linspace(0.0, arc[-1], len(path))
    out = [path[0]]
    for t in targets[1:-1]:
        j = min(np.searchsorted(arc, t, side="right") - 1, len(seg) - 1)
        frac = (t - arc[j]) / seg[j] if seg[j] > 0 else 0.0
        out.append(path[j] + frac * (path[j + 1] - path[j]))
    out.append(path[-1])
    return out


def _refine_max(model, path, values, k):
    """Maximize J along the two polyline segments adjacent to node k."""
    wk, wl, wr = path[k], path[k - 1], path[k + 1]

    def point(sig):
        return wk + sig * (wr - wk) if sig >= 0 else wk - sig * (wl - wk)

    opt = minimize_scalar(lambda s: -model.J(point(s)), bounds=(-1.0, 1.0), method="bounded",
                          options={"xatol": 1e-10})
    if -opt.fun > values[k]:
        return point(opt.x), -opt.fun
    return wk, values[k]


def mountain_pass_solve(prob, geo, e, params):
    """Path minimax: descend the path maximizer, re-tension, repeat.

    The path runs from 0 to ``e`` (J(e) < 0, ‖e‖ > ρ).  Termination is on the
    dual residual norm at the current path maximizer.
    """
    model = _Model(prob)
    cap = kirchhoff_cap(prob.kirchhoff)
    m = params.path_points - 1
    path = [e.values * (j / m) for j in range(m + 1)]
    values = [model.J(w) for w in path]
    history, records, levels = [], [], []
    rn = np.inf
    for it in range(params.max_iters):
        k = 1 + int(np.argmax(values[1:-1]))
        path[k], values[k] = _refine_max(model, path, values, k)
        level = values[k]
        levels.append(level)
        if level > cap:
            raise CapExceeded(f"minimax level {level:.6g} above Kirchhoff cap {cap:.6g}")
        v = path[k]
        history.append(GridFunction(prob.grid, v))
        res = model.residual(v)
        rn = prob.grid.dual_norm(res)
        records.append(model.record("mountain_pass", it, v, rn))
        if rn <= params.grad_tol:
            break
        d = -model.sobolev(res)
        dn = np.sqrt(max(-np.vdot(res.ravel(), d.ravel()), 0.0))
        tau = min(params.step_init / (1 + rn), MP_STEP_FRACTION * _spacing(model, path) / dn)
        step = _armijo(model, v, level, res, d, tau, params)
        if step is None:
            log.info("mountain pass: line search stalled at iteration %d (res %.3e)", it, rn)
            break
        path[k], values[k], _ = step
        records[-1].accepted_decrease = level - values[k]
        path = _retension(model, path)
        values = [model.J(w) for w in path]
        if params.polish and _stalled(levels, params.stall_window):
            log.info("mountain pass: level stalled at iteration %d (res %.3e)", it, rn)
            break
    if rn > params.grad_tol and params.polish:
        v = history[-1].values
        polished = _newton_polish(model, v, params)
        if polished is not None:
            w, rw, n_it = polished
            Jw = model.J(w)
            level = levels[-1]
            if rw <= params.grad_tol and abs(Jw - level) <= POLISH_LEVEL_RTOL * (1 + abs(level)):
                log.info("mountain pass: newton polish converged in %d steps", n_it)
                rn = rw
                records.append(model.record("mountain_pass", len(records), w, rn, level - Jw))
                history.append(GridFunction(prob.grid, w))
                levels.append(Jw)
    u = history[-1]
    report = ps_monitor(history, prob, params)
    result = SolveResult(u, report, history, records, rn)
    result.levels = levels
    result.path = [GridFunction(prob.grid, w) for w in path]
    if rn > params.grad_tol:
        raise IterationLimit(f"mountain pass stopped at residual {rn:.3e}", result, report, history)
    return result


WEAK_CHECK_DIRECTIONS = 50
WEAK_CHECK_MARGIN = 10.0


@dataclass
class SolutionPair:
    u1: GridFunction
    J1: float
    res1: float
    u2: GridFunction
    J2: float
    res2: float
    ps1: PSReport
    ps2: PSReport
    geometry: object = None
    sphere: object = None
    ray: object = None
    start: object = None
    mountain: SolveResult | None = None
    ball: SolveResult | None = None


def weak_residual_check(u, prob, tol, directions=WEAK_CHECK_DIRECTIONS, seed=0,
                        margin=WEAK_CHECK_MARGIN):
    """Largest ratio |<J'(u), v>| / (tol·‖v‖_X) over random test directions; ≤ margin passes."""
    rng = np.random.default_rng(seed)
    res = residual_values(u.values, prob)
    worst = 0.0
    for _ in range(directions):
        v = random_navier_field(prob.grid, rng)
        worst = max(worst, abs(float(np.vdot(res.ravel(), v.values.ravel()))) / (tol * x_norm(v, prob.p)))
    return worst, worst <= margin


def _gate(report, clause):
    if not report.passed:
        first = report.first()
        raise CertificationFailed(clause, f"{first.condition} at {first.location}: {first.values}")


def solve_pair(prob, params=None, constants=None, probes=512, seed=0, sphere_samples=512,
               stages=None):
    """Full pipeline: hypotheses, geometry, both solvers, certification.

    Mode "theorem1" needs a small load h; mode "theorem2" needs h ≡ 0 and
    drives the ball descent from the concave f-term instead.  Solver errors
    propagate; every refused gate raises CertificationFailed naming the clause.
    Intermediate results are stored in ``stages`` (if given) as they appear,
    so a caller can report partial progress after a failure.
    """
    params = SolverParams() if params is None else params
    stages = {} if stages is None else stages
    theorem2 = prob.mode == "theorem2"
    _gate(check_H1(prob.p, prob.q, prob.r, prob.kirchhoff.gamma), "H1")
    _gate(check_H2(prob, "H2prime" if theorem2 else "H2"), "H2'" if theorem2 else "H2")
    try:
        resolve_theta(prob, params)
    except ValueError as exc:
        raise CertificationFailed("theta window", str(exc)) from exc

    if constants is None:
        constants = embedding_constants(prob.grid, prob.p, prob.q, prob.r, probes, seed)
    try:
        geo = mountain_pass_constants(prob, constants)
    except NoAdmissibleRho as exc:
        raise CertificationFailed("rho", str(exc)) from exc
    stages["geometry"] = geo
    bad = regime_violations(prob, geo, require_h_gate=not theorem2)
    if bad:
        raise CertificationFailed(bad[0].condition, f"values {bad[0].values}")

    sphere = stages["sphere"] = verify_sphere_lower_bound(prob, geo, sphere_samples, seed)
    if not sphere.passed:
        raise CertificationFailed("J >= alpha on sphere", f"min J {sphere.min_J} < alpha {geo.alpha}")
    try:
        ray = stages["ray"] = find_divergence_ray(prob, default_phi0(prob), geo)
        if theorem2:
            start = verify_small_t_negative_concave(prob, default_concave_psi0(prob), geo)
        else:
            start = verify_small_t_negative(prob, default_psi0(prob), geo)
    except (NoDescentFound, PositivityNotFound, ValueError) as exc:
        raise CertificationFailed("geometry", str(exc)) from exc

    stages["start"] = start
    try:
        ball = stages["ball"] = ekeland_ball_descent(prob, geo, start.start, params)
    except (IterationLimit, BoundaryTrap) as exc:
        stages["ball"] = exc.best
        raise
    try:
        mountain = stages["mountain"] = mountain_pass_solve(prob, geo, ray.e, params)
    except IterationLimit as exc:
        stages["mountain"] = exc.best
        raise

    pair = SolutionPair(
        mountain.u, mountain.report.level_c, mountain.residual_norm,
        ball.u, ball.report.level_c, ball.residual_norm,
        mountain.report, ball.report, geo, sphere, ray, start, mountain, ball,
    )
    certify(pair, prob, params)
    return pair


def certify(pair, prob, params):
    """Raise CertificationFailed on the first violated invariant of a solution pair."""
    geo = pair.geometry
    cap = kirchhoff_cap(prob.kirchhoff)
    clauses = [
        ("res1 <= grad_tol", pair.res1 <= params.grad_tol),
        ("res2 <= grad_tol", pair.res2 <= params.grad_tol),
        ("J1 >= alpha", pair.J1 >= geo.alpha),
        ("J2 < 0", pair.J2 < 0),
        ("x_norm(u2) < rho", x_norm(pair.u2, prob.p) < geo.rho),
        ("J1 < cap", pair.J1 < cap),
        ("J2 < cap", pair.J2 < cap),
        ("weak form u1", weak_residual_check(pair.u1, prob, params.grad_tol, seed=params.seed)[1]),
        ("weak form u2", weak_residual_check(pair.u2, prob, params.grad_tol, seed=params.seed)[1]),
    ]
    for clause, ok in clauses:
        if not ok:
            raise CertificationFailed(clause)
    return True
