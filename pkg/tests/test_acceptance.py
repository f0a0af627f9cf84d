"""Acceptance criteria, each checked against oracles written here.

Every test prints a single ``criterion N ... PASS|FAIL`` line (also
collected in the terminal summary).  The oracles deliberately avoid the
library's own verification helpers: Luxemburg norms come from a log-space
root find, the energy of the p ≡ 2 instances is rewritten with numpy, and
the Kirchhoff maximum comes from a dense scan plus golden-section search.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import logsumexp

from pxkirchhoff.energy import KirchhoffCoefficients, kirchhoff_cap, residual
from pxkirchhoff.exponents import build_exponent_field
from pxkirchhoff.geometry import (
    default_phi0,
    default_psi0,
    find_divergence_ray,
    mountain_pass_constants,
    verify_small_t_negative,
    verify_sphere_lower_bound,
)
from pxkirchhoff.mesh import GridFunction, build_grid, grad_laplacian, integrate
from pxkirchhoff.solvers import solve_pair
from pxkirchhoff.varx import embedding_constants, holder_bound, luxemburg_norm, modular
from pxkirchhoff.verification import canonical_problem

SEED = 20261016


# ---------------------------------------------------------------- oracles

def lux_oracle(vals, weights, p):
    """Luxemburg norm by root-finding log ρ(u/μ) = 0 in t = log μ."""
    a = np.abs(vals).ravel()
    p = np.broadcast_to(p, vals.shape).ravel()
    w = weights.ravel()
    keep = a > 0
    if not keep.any():
        return 0.0
    m = a.max()
    la, p, w = np.log(a[keep] / m), p[keep], w[keep]

    def F(t):
        return logsumexp(p * (la - t), b=w)

    return m * np.exp(brentq(F, -60.0, 60.0, xtol=1e-15, rtol=1e-15))


def random_field(grid, rng):
    vals = rng.standard_normal(grid.shape) * 10.0 ** rng.uniform(-3, 3)
    return GridFunction(grid, vals)


def random_exponent(grid, rng):
    x = grid.axes[0]
    base = rng.uniform(1.2, 3.8)
    amp = rng.uniform(0, min(base - 1.1, 4.0 - base))
    return build_exponent_field(base + amp * np.cos(2 * np.pi * (rng.uniform() + x)), grid, 7.0, principal=False)


def sine_series(grid, rng, modes=10):
    x = grid.axes[0]
    k = np.arange(1, modes + 1)
    c = rng.standard_normal(modes) / k ** rng.uniform(1.5, 3.5)
    return c @ np.sin(np.pi * np.outer(k, x))


def third_derivative(vals, grid):
    return grad_laplacian(GridFunction(grid, vals)).components[0].values


def energy_p2(vals, prob):
    """J for constant p = 2 written out term by term."""
    grid = prob.grid
    k = prob.kirchhoff
    q, r = prob.q.values, prob.r.values
    s = 0.5 * np.sum(grid.weights * third_derivative(vals, grid) ** 2)
    au = np.abs(vals)
    return (k.a * s - k.b * s ** (k.gamma + 1) / (k.gamma + 1)
            - prob.lam * np.sum(grid.weights * prob.f.values * au**q / q)
            - np.sum(grid.weights * prob.g.values * au**r / r)
            - np.sum(grid.weights * prob.h.values * vals))


def fd_directional(u, v, prob, h):
    """Central difference of J along v with the integrands subtracted nodewise."""
    grid, k = prob.grid, prob.kirchhoff
    w = grid.weights
    gu, gv = third_derivative(u, grid), third_derivative(v, grid)
    s = 0.5 * np.sum(w * gu**2)
    ds = np.sum(w * 2 * h * gu * gv)  # s(u+hv) - s(u-hv), exact for p = 2
    sp, sm = s + h * h * 0.5 * np.sum(w * gv**2) + ds / 2, s + h * h * 0.5 * np.sum(w * gv**2) - ds / 2
    g1 = k.gamma + 1
    dk = k.a * ds - k.b * (sp**g1 - sm**g1) / g1
    up, um = np.abs(u + h * v), np.abs(u - h * v)
    q, r = prob.q.values, prob.r.values
    df = np.sum(w * prob.f.values * (up**q - um**q) / q)
    dg = np.sum(w * prob.g.values * (up**r - um**r) / r)
    dh = np.sum(w * prob.h.values * 2 * h * v)
    return (dk - prob.lam * df - dg - dh) / (2 * h)


def derivative_p2(u, v, prob):
    """<J'(u), v> from the closed-form first variation at p = 2."""
    grid, k = prob.grid, prob.kirchhoff
    w = grid.weights
    gu, gv = third_derivative(u, grid), third_derivative(v, grid)
    s = 0.5 * np.sum(w * gu**2)
    m = k.a - k.b * s**k.gamma
    q, r = prob.q.values, prob.r.values
    au, sg = np.abs(u), np.sign(u)
    return (m * np.sum(w * gu * gv)
            - prob.lam * np.sum(w * prob.f.values * sg * au ** (q - 1) * v)
            - np.sum(w * prob.g.values * sg * au ** (r - 1) * v)
            - np.sum(w * prob.h.values * v))


def x_norm_p2(vals, grid):
    return float(np.sqrt(np.sum(grid.weights * third_derivative(vals, grid) ** 2)))


def golden_max(f, lo, hi, iters=200):
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        if b - a <= 1e-15 * hi:
            break
    x = (a + b) / 2
    return f(x), x


# ---------------------------------------------------------------- criteria

def test_criterion_01_luxemburg_constant_exponent(verdict):
    start = time.perf_counter()
    grid = build_grid(1, [1.0], 65)
    rng = np.random.default_rng([SEED, 1])
    worst = worst_root = 0.0
    for i in range(500):
        p = (1.5, 2.0, 3.0)[i % 3]
        u = random_field(grid, rng)
        pe = build_exponent_field(p, grid, 7.0, principal=False)
        closed = np.sum(grid.weights * np.abs(u.values) ** p) ** (1 / p)
        got = luxemburg_norm(u, pe).value
        worst = max(worst, abs(got - closed) / closed)
        worst_root = max(worst_root, abs(lux_oracle(u.values, grid.weights, p) - closed) / closed)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and worst_root <= 1e-10 and elapsed < 10
    verdict(1, "luxemburg_oracle", ok, f"max_rel_err={worst:.2e} oracle_self={worst_root:.2e} t={elapsed:.1f}s")


def test_criterion_02_norm_modular_relations(verdict):
    start = time.perf_counter()
    grid = build_grid(1, [1.0], 65)
    rng = np.random.default_rng([SEED, 2])
    tol = 1e-8
    bad = {"gt1": 0, "lt1": 0, "trichotomy": 0, "unit": 0, "norm": 0}
    for _ in range(1000):
        u, p = random_field(grid, rng), random_exponent(grid, rng)
        n = luxemburg_norm(u, p).value
        rho = np.sum(grid.weights * np.abs(u.values) ** p.values)
        pm, pp = p.values.min(), p.values.max()
        bad["norm"] += abs(n - lux_oracle(u.values, grid.weights, p.values)) > tol * n
        if n > 1:
            bad["gt1"] += not (n**pm <= rho * (1 + tol) and rho <= n**pp * (1 + tol))
        if n < 1:
            bad["lt1"] += not (n**pp <= rho * (1 + tol) and rho <= n**pm * (1 + tol))
        bad["trichotomy"] += (n < 1) != (rho < 1) if abs(n - 1) > tol else abs(rho - 1) > 10 * pp * tol
        unit = np.sum(grid.weights * np.abs(u.values / n) ** p.values)
        bad["unit"] += abs(unit - 1) > tol
    # sequences: u_n = u/2^k → 0, u·2^k → ∞, and u_n - u = w/2^k → 0
    seq_bad = 0
    for _ in range(20):
        u, w, p = random_field(grid, rng), random_field(grid, rng), random_exponent(grid, rng)
        for base, sign in ((u, -1), (u, 1), (w, -1)):
            fields = [base * 2.0 ** (sign * k) for k in range(0, 80, 8)]
            norms = np.array([luxemburg_norm(f, p).value for f in fields])
            mods = np.array([modular(f, p).value for f in fields])
            if sign < 0:
                ok = norms[-1] < 1e-12 * norms[0] and mods[-1] < 1e-12 * mods[0] and np.all(np.diff(mods) < 0)
            else:
                ok = norms[-1] > 1e12 * norms[0] and mods[-1] > 1e12 * mods[0] and np.all(np.diff(mods) > 0)
            seq_bad += not ok
    elapsed = time.perf_counter() - start
    ok = sum(bad.values()) == 0 and seq_bad == 0 and elapsed < 30
    detail = " ".join(f"{k}={v}" for k, v in bad.items())
    verdict(2, "norm_modular_relations", ok, f"{detail} seq={seq_bad} t={elapsed:.1f}s")


def test_criterion_03_holder(verdict):
    grid = build_grid(1, [1.0], 65)
    rng = np.random.default_rng([SEED, 3])
    violations = disagreements = 0
    worst = 0.0
    for _ in range(1000):
        u, v, p = random_field(grid, rng), random_field(grid, rng), random_exponent(grid, rng)
        pc = p.values / (p.values - 1)
        lhs = abs(np.sum(grid.weights * u.values * v.values))
        rhs = 2 * lux_oracle(u.values, grid.weights, p.values) * lux_oracle(v.values, grid.weights, pc)
        violations += lhs > rhs
        worst = max(worst, lhs / rhs)
        disagreements += holder_bound(u, v, p).holds != (lhs <= rhs)
    ok = violations == 0 and disagreements == 0
    verdict(3, "holder_inequality", ok, f"violations={violations} library_disagree={disagreements} max_ratio={worst:.3f}")


def test_criterion_04_gradient_consistency(verdict):
    _, prob = canonical_problem("theorem1")
    grid = prob.grid
    rng = np.random.default_rng([SEED, 4])
    x = grid.axes[0]
    worst_fd = worst_formula = 0.0
    slopes = []
    for i in range(50):
        # positive interior base point: |u|^q with q < 2 has no second derivative at zeros
        u = np.sin(np.pi * x) * np.exp(0.5 * np.tanh(sine_series(grid, rng)))
        u[grid.boundary_mask] = 0.0
        u *= rng.uniform(0.1, 1.5) / x_norm_p2(u, grid)
        v = sine_series(grid, rng)
        v /= x_norm_p2(v, grid)
        analytic = residual(GridFunction(grid, u), prob).dot(GridFunction(grid, v))
        formula = derivative_p2(u, v, prob)
        worst_formula = max(worst_formula, abs(analytic - formula) / abs(formula))
        worst_fd = max(worst_fd, abs(fd_directional(u, v, prob, 1e-5) - analytic) / abs(analytic))
        if i < 5:
            errs = [abs(fd_directional(u, v, prob, h) - analytic) for h in (1e-2, 5e-3, 2.5e-3)]
            slopes.extend(np.log2(np.array(errs[:-1]) / np.array(errs[1:])))
    lo, hi = min(slopes), max(slopes)
    ok = worst_fd <= 1e-5 and worst_formula <= 1e-10 and 1.8 <= lo and hi <= 2.2
    verdict(4, "gradient_consistency", ok,
            f"max_rel_err={worst_fd:.2e} formula_gap={worst_formula:.2e} slopes=[{lo:.3f},{hi:.3f}]")


def test_criterion_05_kirchhoff_cap(verdict):
    rng = np.random.default_rng([SEED, 5])
    worst_val = worst_arg = 0.0
    for _ in range(200):
        a, b = 10.0 ** rng.uniform(-1, 1, size=2)
        gamma = 10.0 ** rng.uniform(-0.7, 0.6)

        def f(s):
            return a * s - b * s ** (gamma + 1) / (gamma + 1)

        top = ((gamma + 1) * a / b) ** (1 / gamma)  # positive root of f
        s = np.linspace(0, top, 200001)
        j = int(np.argmax(f(s)))
        val, arg = golden_max(f, s[max(j - 1, 0)], s[min(j + 1, s.size - 1)])
        k = KirchhoffCoefficients(a, b, gamma)
        worst_val = max(worst_val, abs(kirchhoff_cap(k) - val) / val)
        worst_arg = max(worst_arg, abs(arg - (a / b) ** (1 / gamma)) / (a / b) ** (1 / gamma))
    ok = worst_val <= 1e-8 and worst_arg <= 1e-6
    verdict(5, "kirchhoff_cap", ok, f"max_rel_err={worst_val:.2e} max_arg_err={worst_arg:.2e}")


def test_criterion_06_mountain_pass_geometry(verdict):
    start = time.perf_counter()
    spec, prob = canonical_problem("theorem1")
    grid = prob.grid
    consts = embedding_constants(grid, prob.p, prob.q, prob.r, spec.probes, spec.constants_seed)
    geo = mountain_pass_constants(prob, consts)
    library_sphere = verify_sphere_lower_bound(prob, geo, 512, seed=0)
    # our own 512 sphere points, scaled with the hand-written norm
    rng = np.random.default_rng([SEED, 6])
    sphere_J = []
    for _ in range(512):
        u = sine_series(grid, rng)
        u *= geo.rho / x_norm_p2(u, grid)
        sphere_J.append(energy_p2(u, prob))
    ray = find_divergence_ray(prob, default_phi0(prob), geo)
    small = verify_small_t_negative(prob, default_psi0(prob), geo)
    e, st = ray.e.values, small.start.values
    checks = {
        "C_rho>0": geo.C_rho > 0,
        "sphere": min(sphere_J) >= geo.alpha and library_sphere.min_J >= geo.alpha,
        "ray_norm": x_norm_p2(e, grid) > geo.rho,
        "ray_J": energy_p2(e, prob) < 0 and ray.J_e < 0,
        "small_J": energy_p2(st, prob) < 0 and small.J_t < 0,
        "small_norm": x_norm_p2(st, grid) < geo.rho,
    }
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 120
    failed = [k for k, v in checks.items() if not v]
    verdict(6, "mountain_pass_geometry", ok,
            f"rho={geo.rho:.3g} alpha={geo.alpha:.4e} min_J={min(sphere_J):.4e} "
            f"J_e={ray.J_e:.4e} J_t={small.J_t:.3e} failed={failed} t={elapsed:.1f}s")


def _certify_independently(prob, pair, rng):
    """Re-derive the certified-pair invariants with the hand-written energy."""
    grid, geo = prob.grid, pair.geometry
    k = prob.kirchhoff
    cap = k.gamma * k.a ** ((k.gamma + 1) / k.gamma) / ((k.gamma + 1) * k.b ** (1 / k.gamma))
    J1, J2 = energy_p2(pair.u1.values, prob), energy_p2(pair.u2.values, prob)
    # random-direction weak form: |<J'(u), v>| / ‖v‖ stays at residual level
    weak = 0.0
    for u in (pair.u1.values, pair.u2.values):
        for _ in range(20):
            v = sine_series(grid, rng)
            weak = max(weak, abs(derivative_p2(u, v, prob)) / x_norm_p2(v, grid))
    checks = {
        "residual": max(pair.res1, pair.res2) <= 1e-6,
        "weak_form": weak <= 1e-6,
        "energies_agree": abs(J1 - pair.J1) <= 1e-9 * (1 + abs(J1)) and abs(J2 - pair.J2) <= 1e-12,
        "J1>=alpha>0": J1 >= geo.alpha > 0,
        "J2<0": J2 < 0,
        "u2_in_ball": x_norm_p2(pair.u2.values, grid) < geo.rho,
        "below_cap": max(J1, J2) < cap,
    }
    return checks, cap, weak


def test_criterion_07_two_solutions_with_load(verdict):
    start = time.perf_counter()
    spec, prob = canonical_problem("theorem1")
    pair = solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed,
                      sphere_samples=spec.sphere_samples)
    geo = pair.geometry
    checks, cap, weak = _certify_independently(prob, pair, np.random.default_rng([SEED, 7]))
    checks["instance"] = (
        np.all(prob.p.values == 2) and np.all(prob.q.values == 1.5) and np.all(prob.r.values == 5)
        and prob.grid.shape == (129,) and prob.p.analysis_dim == 7
        and prob.lam < geo.lambda_bar and geo.norms.h < geo.delta and np.any(prob.h.values)
    )
    checks["cap_is_half"] = cap == 0.5
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 300
    failed = [k for k, v in checks.items() if not v]
    verdict(7, "two_solutions_with_load", ok,
            f"J1={pair.J1:.6f} J2={pair.J2:.3e} alpha={geo.alpha:.3e} "
            f"res={max(pair.res1, pair.res2):.1e} weak={weak:.1e} failed={failed} t={elapsed:.1f}s")


def test_criterion_08_two_solutions_without_load(verdict):
    start = time.perf_counter()
    spec, prob = canonical_problem("theorem2")
    pair = solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed,
                      sphere_samples=spec.sphere_samples)
    checks, _, weak = _certify_independently(prob, pair, np.random.default_rng([SEED, 8]))
    inner = prob.omega0_mask & ~prob.grid.boundary_mask
    checks["instance"] = (
        not np.any(prob.h.values)
        and prob.f.values.min() < 0 < prob.f.values.max()
        and prob.g.values.min() >= 0 and np.all(prob.g.values[inner] > 0)
        and prob.mode == "theorem2"
    )
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 300
    failed = [k for k, v in checks.items() if not v]
    verdict(8, "two_solutions_without_load", ok,
            f"J1={pair.J1:.6f} J2={pair.J2:.3e} res={max(pair.res1, pair.res2):.1e} "
            f"weak={weak:.1e} failed={failed} t={elapsed:.1f}s")


def test_criterion_09_stencil_convergence(verdict):
    errs = []
    for n in (65, 129, 257):
        grid = build_grid(1, [1.0], n)
        x = grid.axes[0]
        got = third_derivative(np.sin(np.pi * x), grid)
        errs.append(np.abs(got + np.pi**3 * np.cos(np.pi * x)).max())
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    grid = build_grid(1, [1.0], 257)
    w = (np.pi**3 * np.cos(np.pi * grid.axes[0])) ** 2
    exact = np.pi**6 / 2
    rel = abs(integrate(GridFunction(grid, w)) - exact) / exact
    rel_np = abs(np.trapezoid(w, grid.axes[0]) - exact) / exact
    ok = slopes.min() >= 1.9 and rel <= 1e-2 and abs(rel - rel_np) <= 1e-12
    verdict(9, "stencil_convergence", ok,
            f"slopes={np.round(slopes, 3).tolist()} integral_rel_err={rel:.2e}")


@pytest.mark.parametrize("seed", [7])
def test_criterion_10_determinism(verdict, seed):
    cmd = [sys.executable, "-m", "pxkirchhoff", "verify", "--seed", str(seed)]
    first = subprocess.run(cmd, capture_output=True, check=False)
    second = subprocess.run(cmd, capture_output=True, check=False)
    table = first.stdout.decode()
    ok = (first.returncode == second.returncode == 0 and first.stdout == second.stdout
          and table.splitlines()[-1].split()[1] == "PASS")
    verdict(10, "determinism", ok,
            f"bytes={len(first.stdout)} identical={first.stdout == second.stdout} exit={first.returncode}")
