"""Seeded property battery behind the ``verify`` command.

Each check returns a CheckResult whose detail string uses fixed-width
scientific formatting, so two runs with the same seed print identical
tables.  ``hooks`` lets a test swap a library function for a corrupted
one (mutation testing); the only hook consumed today is ``kirchhoff_cap``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .config import ExperimentSpec, Profile, build_problem
from .energy import KirchhoffCoefficients, directional_derivative_check, kirchhoff_cap
from .errors import PxKirchhoffError
from .exponents import _from_values
from .geometry import (
    default_phi0,
    default_psi0,
    find_divergence_ray,
    mountain_pass_constants,
    verify_small_t_negative,
    verify_sphere_lower_bound,
)
from .mesh import GridFunction, build_grid, grad_laplacian, integrate, x_norm
from .profiles import sine
from .solvers import solve_pair
from .varx import (
    embedding_constants,
    holder_bound,
    luxemburg_norm,
    modular,
    random_navier_field,
    verify_norm_modular_relations,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))


def _e(x):
    return f"{x:.3e}"


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


def _random_field(grid, rng):
    scale = 10.0 ** rng.uniform(-3, 3)
    vals = rng.standard_normal(grid.shape) * scale
    return GridFunction(grid, vals)


def _random_exponent(grid, rng, lo=1.1, hi=4.0):
    """Smooth random exponent with range inside [lo, hi]."""
    x = grid.coords[0] / grid.extents[0]
    base = rng.uniform(lo, hi)
    amp = rng.uniform(0, min(base - lo, hi - base))
    vals = base + amp * np.sin(2 * np.pi * (x + rng.uniform()))
    return _from_values(vals, 7.0)


def check_luxemburg(seed, hooks, fields=500):
    grid = build_grid(1, [1.0], 65)
    rng = _rng(seed, 1)
    worst = 0.0
    for i in range(fields):
        p = (1.5, 2.0, 3.0)[i % 3]
        u = _random_field(grid, rng)
        pe = _from_values(np.full(grid.shape, p), 7.0)
        oracle = float(np.sum(grid.weights * np.abs(u.values) ** p)) ** (1 / p)
        worst = max(worst, abs(luxemburg_norm(u, pe).value - oracle) / oracle)
    return CheckResult("luxemburg_oracle", worst <= 1e-8, f"fields={fields} max_rel_err={_e(worst)}")


def check_norm_modular(seed, hooks, fields=1000):
    grid = build_grid(1, [1.0], 65)
    rng = _rng(seed, 2)
    failures, worst_norm = 0, 0.0
    for _ in range(fields):
        u = _random_field(grid, rng)
        p = _random_exponent(grid, rng)
        rep = verify_norm_modular_relations(u, p)
        failures += not rep.passed
        worst_norm = max(worst_norm, abs(modular(u * (1 / rep.norm), p).value - 1))
    seq_fail = 0
    for _ in range(20):
        u = _random_field(grid, rng)
        w = _random_field(grid, rng)
        p = _random_exponent(grid, rng)
        small = [u * 2.0**-k for k in range(0, 80, 8)]
        large = [u * 2.0**k for k in range(0, 80, 8)]
        near = [w * 2.0**-k for k in range(0, 80, 8)]  # (u + w·2^-k) - u
        for seq, to_zero in ((small, True), (large, False), (near, True)):
            n = [luxemburg_norm(v, p).value for v in seq]
            m = [modular(v, p).value for v in seq]
            if to_zero:
                ok = n[-1] < 1e-12 * n[0] + 1e-300 and m[-1] < 1e-12 * m[0] + 1e-300
            else:
                ok = n[-1] > 1e12 * n[0] and m[-1] > 1e12 * m[0]
            mono = all(np.diff(m) < 0) if to_zero else all(np.diff(m) > 0)
            seq_fail += not (ok and mono)
    passed = failures == 0 and worst_norm <= 1e-8 and seq_fail == 0
    return CheckResult(
        "norm_modular_relations",
        passed,
        f"fields={fields} failures={failures} max_norm_err={_e(worst_norm)} seq_failures={seq_fail}",
    )


def check_holder(seed, hooks, pairs=1000):
    grid = build_grid(1, [1.0], 65)
    rng = _rng(seed, 3)
    violations, worst = 0, 0.0
    for _ in range(pairs):
        u, v = _random_field(grid, rng), _random_field(grid, rng)
        rep = holder_bound(u, v, _random_exponent(grid, rng))
        violations += not rep.holds
        worst = max(worst, rep.lhs / rep.rhs)
    return CheckResult("holder_inequality", violations == 0, f"pairs={pairs} violations={violations} max_ratio={_e(worst)}")


def canonical_problem(mode="theorem1"):
    spec = ExperimentSpec()
    if mode == "theorem2":
        spec = ExperimentSpec(lam=2.0, f=Profile("sine", (1.0, 2.0)), h=Profile("constant", (0.0,)),
                              mode="theorem2")
    return spec, build_problem(spec)


def positive_field(grid, rng):
    """Interior-positive Navier field sin(πx/L)·exp(smooth noise).

    |u|^q with q < 2 is not twice differentiable where u crosses zero, so
    finite-difference error models need base points without sign changes.
    """
    noise = random_navier_field(grid, rng)
    noise = noise * (0.5 / max(np.abs(noise.values).max(), 1e-300))
    vals = sine(grid).values * np.exp(noise.values)
    vals[grid.boundary_mask] = 0.0
    return GridFunction(grid, vals)


def check_gradient(seed, hooks, pairs=50, h=1e-5):
    _, prob = canonical_problem()
    rng = _rng(seed, 4)
    worst = 0.0
    slopes = []
    for i in range(pairs):
        u = positive_field(prob.grid, rng)
        u = u * (rng.uniform(0.1, 1.5) / x_norm(u, prob.p))
        v = random_navier_field(prob.grid, rng)
        v = v * (1 / x_norm(v, prob.p))
        worst = max(worst, directional_derivative_check(u, v, prob, h))
        if i < 5:
            errs = [directional_derivative_check(u, v, prob, hh) for hh in (1e-2, 5e-3, 2.5e-3)]
            slopes.append(float(np.mean(np.log2(np.array(errs[:-1]) / np.array(errs[1:])))))
    slope = min(slopes)
    passed = worst <= 1e-5 and 1.8 <= slope <= 2.2
    return CheckResult("gradient_consistency", passed, f"pairs={pairs} max_rel_err={_e(worst)} min_slope={slope:.3f}")


def _brute_max(a, b, gamma):
    """Dense-grid maximum of a·s - b·s^{γ+1}/(γ+1), refined on the best cell."""
    def f(s):
        return a * s - b * s ** (gamma + 1) / (gamma + 1)

    # the maximizer lies below the positive root ((γ+1)a/b)^{1/γ}
    top = ((gamma + 1) * a / b) ** (1 / gamma)
    s = np.linspace(0.0, top, 20001)
    k = int(np.argmax(f(s)))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, s.size - 1)]
    opt = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14 * top})
    return -opt.fun, opt.x


def check_cap(seed, hooks, trials=200):
    cap_fn = hooks.get("kirchhoff_cap", kirchhoff_cap)
    rng = _rng(seed, 5)
    worst_val, worst_arg = 0.0, 0.0
    for _ in range(trials):
        a, b = 10.0 ** rng.uniform(-1, 1, size=2)
        gamma = 10.0 ** rng.uniform(-0.7, 0.6)
        k = KirchhoffCoefficients(a, b, gamma)
        val, arg = _brute_max(a, b, gamma)
        worst_val = max(worst_val, abs(cap_fn(k) - val) / abs(val))
        worst_arg = max(worst_arg, abs(arg - k.degeneracy_point) / k.degeneracy_point)
    passed = worst_val <= 1e-8 and worst_arg <= 1e-6
    return CheckResult("kirchhoff_cap", passed, f"trials={trials} max_rel_err={_e(worst_val)} max_arg_err={_e(worst_arg)}")


def check_geometry(seed, hooks):
    spec, prob = canonical_problem()
    consts = embedding_constants(prob.grid, prob.p, prob.q, prob.r, spec.probes, spec.constants_seed)
    geo = mountain_pass_constants(prob, consts)
    sphere = verify_sphere_lower_bound(prob, geo, 512, seed)
    ray = find_divergence_ray(prob, default_phi0(prob), geo)
    st = verify_small_t_negative(prob, default_psi0(prob), geo)
    ray_ok = x_norm(ray.e, prob.p) > geo.rho and ray.J_e < 0
    small_ok = st.J_t < 0 and x_norm(st.start, prob.p) < geo.rho
    passed = geo.C_rho > 0 and sphere.passed and ray_ok and small_ok
    return CheckResult(
        "mountain_pass_geometry",
        passed,
        f"rho={_e(geo.rho)} alpha={_e(geo.alpha)} min_sphere_J={_e(sphere.min_J)} J_e={_e(ray.J_e)} J_t={_e(st.J_t)}",
    )


def _pair_check(name, mode, seed):
    spec, prob = canonical_problem(mode)
    try:
        pair = solve_pair(prob, spec.solver, probes=spec.probes, seed=spec.constants_seed,
                          sphere_samples=spec.sphere_samples)
    except PxKirchhoffError as exc:
        return CheckResult(name, False, f"error={type(exc).__name__}: {exc}")
    alpha = pair.geometry.alpha
    cap = kirchhoff_cap(prob.kirchhoff)
    passed = (
        max(pair.res1, pair.res2) <= 1e-6 and pair.J1 >= alpha > 0 > pair.J2 and max(pair.J1, pair.J2) < cap
    )
    return CheckResult(
        name,
        passed,
        f"J1={_e(pair.J1)} J2={_e(pair.J2)} alpha={_e(alpha)} res={_e(max(pair.res1, pair.res2))}",
    )


def check_pair_with_load(seed, hooks):
    return _pair_check("two_solutions_with_load", "theorem1", seed)


def check_pair_without_load(seed, hooks):
    return _pair_check("two_solutions_without_load", "theorem2", seed)


def stencil_errors(ns=(65, 129, 257)):
    errs = []
    for n in ns:
        grid = build_grid(1, [1.0], n)
        u = sine(grid)
        exact = -np.pi**3 * np.cos(np.pi * grid.axes[0])
        errs.append(float(np.abs(grad_laplacian(u).components[0].values - exact).max()))
    return errs


def check_stencil(seed, hooks):
    errs = stencil_errors()
    slope = float(min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    grid = build_grid(1, [1.0], 257)
    w = GridFunction(grid, (np.pi**3 * np.cos(np.pi * grid.axes[0])) ** 2)
    rel = abs(integrate(w) - np.pi**6 / 2) / (np.pi**6 / 2)
    passed = slope >= 1.9 and rel <= 1e-2
    return CheckResult("stencil_convergence", passed, f"min_slope={slope:.3f} integral_rel_err={_e(rel)}")


CHECKS = (
    check_luxemburg,
    check_norm_modular,
    check_holder,
    check_gradient,
    check_cap,
    check_geometry,
    check_pair_with_load,
    check_pair_without_load,
    check_stencil,
)


def run_checks(seed, hooks=None):
    hooks = {} if hooks is None else hooks
    out = []
    for check in CHECKS:
        try:
            out.append(check(seed, hooks))
        except PxKirchhoffError as exc:
            out.append(CheckResult(check.__name__[6:], False, f"error={type(exc).__name__}: {exc}"))
    return out


def format_table(results, seed):
    width = max(len(r.name) for r in results)
    lines = [f"verify seed={seed}"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    n_ok = sum(r.passed for r in results)
    lines.append(f"{'overall':<{width}}  {'PASS' if n_ok == len(results) else 'FAIL'}  {n_ok}/{len(results)}")
    return "\n".join(lines) + "\n"


def verify_suite(seed, hooks=None, stream=None):
    """Run the battery, print the table, return exit status 0 iff every check passed."""
    results = run_checks(seed, hooks)
    table = format_table(results, seed)
    if stream is not None:
        stream.write(table)
    return (0 if all(r.passed for r in results) else 1), table
